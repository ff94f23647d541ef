use num_complex::Complex64 as C;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::decay::{AngularStructure, SpectralProfile};
use crate::error::{Error, Result};
use crate::spectral::{h2_norm_sq, leray_project_in_place, FourierGrid, SpectralTensorField, SpectralVectorField};

/// `j` is the representative of the pair `{j, -j}` if its first nonzero
/// entry is positive.
fn is_representative(j: [i64; 3]) -> bool {
    j.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0)
}

/// Stream id for lattice index `j`, independent of the grid size.
fn stream_key(j: [i64; 3]) -> u64 {
    let enc = |x: i64| (x + (1 << 20)) as u64 & 0x1f_ffff;
    (enc(j[0]) << 42) | (enc(j[1]) << 21) | enc(j[2])
}

/// Random solenoidal velocity and trace-free stress supported on the shell
/// `k_lo ≤ |k| ≤ k_hi`, each scaled to `H²` norm `amplitude/√2`.
///
/// Each coefficient is drawn from its own seeded stream keyed by the lattice
/// index, so the same band on a finer grid of the same box gets the same
/// coefficients.
pub fn random_band(
    grid: &FourierGrid,
    k_lo: f64,
    k_hi: f64,
    amplitude: f64,
    seed: u64,
) -> Result<(SpectralVectorField, SpectralTensorField)> {
    if !(k_lo.is_finite() && k_lo >= 0.0) {
        return Err(Error::param("k_lo", format!("must be nonnegative, got {k_lo}")));
    }
    if !(k_hi.is_finite() && k_hi > k_lo) {
        return Err(Error::param("k_hi", format!("must exceed k_lo = {k_lo}, got {k_hi}")));
    }
    if k_hi > grid.k_max_retained() {
        return Err(Error::param(
            "k_hi",
            format!("{k_hi} exceeds the largest retained wavenumber {}", grid.k_max_retained()),
        ));
    }
    if !(amplitude.is_finite() && amplitude > 0.0) {
        return Err(Error::param("amplitude", format!("must be positive, got {amplitude}")));
    }
    let draws: Vec<(usize, [C; 9])> = (0..grid.len())
        .into_par_iter()
        .filter_map(|i| {
            let j = grid.signed_index(i);
            let k = grid.kmag2(i).sqrt();
            if !grid.is_retained(i) || !is_representative(j) || k < k_lo || k > k_hi {
                return None;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream_key(j));
            let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
            Some((i, std::array::from_fn(|_| C::new(normal(), normal()))))
        })
        .collect();
    if draws.is_empty() {
        return Err(Error::param("k_lo", format!("no retained modes with {k_lo} <= |k| <= {k_hi}")));
    }
    let mut u = SpectralVectorField::zeros(grid);
    let mut tau = SpectralTensorField::zeros(grid);
    for (i, z) in &draws {
        let m = grid.mirror(*i);
        let uv = [z[0], z[1], z[2]];
        let tv = [z[3], z[4], z[5], z[6], z[7], z[8]];
        u.set_mode(*i, uv);
        u.set_mode(m, uv.map(|x| x.conj()));
        tau.set_mode(*i, tv);
        tau.set_mode(m, tv.map(|x| x.conj()));
    }
    leray_project_in_place(&mut u);
    remove_trace(&mut tau);
    let target = amplitude / 2f64.sqrt();
    let (nu, nt) = (h2_norm_sq(&u).sqrt(), h2_norm_sq(&tau).sqrt());
    if nu == 0.0 || nt == 0.0 {
        return Err(Error::param("k_lo", "band carries no admissible modes"));
    }
    u.scale(target / nu);
    tau.scale(target / nt);
    Ok((u, tau))
}

/// Subtract a third of the trace from each diagonal entry.
pub fn remove_trace(tau: &mut SpectralTensorField) {
    let tr = tau.trace();
    for c in 0..3 {
        for (v, t) in tau.component_mut(c).iter_mut().zip(&tr) {
            *v -= t / 3.0;
        }
    }
}

/// Sample continuum profiles on the lattice: `c_k = v̂(k)/sqrt(M³·V)`, so
/// that box norms approximate the whole-space norms. The `k = 0` mode and
/// modes outside the dealias mask are left at zero.
pub fn profile_fields(
    grid: &FourierGrid,
    u: Option<&SpectralProfile>,
    tau: Option<&SpectralProfile>,
) -> Result<(SpectralVectorField, SpectralTensorField)> {
    for (name, p) in [("u", u), ("tau", tau)] {
        if let Some(p) = p {
            if p.dimension() != 3 {
                return Err(Error::param(
                    name,
                    format!("profile must be three-dimensional, got d = {}", p.dimension()),
                ));
            }
        }
    }
    if let Some(p) = u {
        if !matches!(p.angular(), AngularStructure::Solenoidal { .. }) {
            return Err(Error::param("u", "velocity profile needs a solenoidal angular structure"));
        }
    }
    if let Some(p) = tau {
        if !matches!(p.angular(), AngularStructure::Tensor { .. }) {
            return Err(Error::param("tau", "stress profile needs a tensor angular structure"));
        }
    }
    let m = grid.box_scale();
    let norm = 1.0 / (m.powi(3) * grid.volume()).sqrt();
    let mut uf = SpectralVectorField::zeros(grid);
    let mut tf = SpectralTensorField::zeros(grid);
    for i in 0..grid.len() {
        if !grid.is_retained(i) || grid.kmag2(i) == 0.0 {
            continue;
        }
        let k = grid.wavevector(i);
        let s = grid.kmag2(i).sqrt();
        let n = k.map(|x| x / s);
        if let Some(p) = u {
            if let AngularStructure::Solenoidal { direction: e } = p.angular() {
                let f = norm * p.radial(s);
                let ne = n[0] * e[0] + n[1] * e[1] + n[2] * e[2];
                uf.set_mode(i, std::array::from_fn(|j| C::new(f * (e[j] - ne * n[j]), 0.0)));
            }
        }
        if let Some(p) = tau {
            if let AngularStructure::Tensor { pattern } = p.angular() {
                let f = norm * p.radial(s);
                tf.set_mode(i, std::array::from_fn(|c| C::new(f * pattern[c], 0.0)));
            }
        }
    }
    Ok((uf, tf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectralField;

    #[test]
    fn band_is_admissible_and_normalized() {
        let g = FourierGrid::new(16, 4.0).unwrap();
        let (u, tau) = random_band(&g, 0.25, 1.0, 1e-2, 7).unwrap();
        assert!(u.max_divergence_relative() < 1e-14);
        assert!(tau.trace().iter().all(|t| t.norm() < 1e-15));
        assert_eq!(u.hermitian_defect(), 0.0);
        assert_eq!(tau.hermitian_defect(), 0.0);
        let total = h2_norm_sq(&u) + h2_norm_sq(&tau);
        assert!((total.sqrt() - 1e-2).abs() < 1e-15);
    }

    #[test]
    fn band_coefficients_do_not_depend_on_grid_size() {
        let a = FourierGrid::new(16, 4.0).unwrap();
        let b = FourierGrid::new(24, 4.0).unwrap();
        let (ua, _) = random_band(&a, 0.25, 1.0, 1e-2, 3).unwrap();
        let (ub, _) = random_band(&b, 0.25, 1.0, 1e-2, 3).unwrap();
        for i in 0..a.len() {
            let j = a.signed_index(i);
            let ib = b.index_of(j).unwrap();
            for c in 0..3 {
                assert!((ua.component(c)[i] - ub.component(c)[ib]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn band_rejects_unresolved_shell() {
        let g = FourierGrid::new(16, 1.0).unwrap();
        assert!(random_band(&g, 1.0, 6.0, 1e-2, 0).is_err());
        assert!(random_band(&g, 2.0, 1.0, 1e-2, 0).is_err());
    }
}

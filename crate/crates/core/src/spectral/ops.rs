//! Differential operators, the Leray projector and pseudo-spectral products.

use num_complex::Complex64;
use rayon::prelude::*;

use super::fft::Fft3;
use super::field::{
    deterministic_sum, sym_index, AntisymmetricTensorField, SpectralField, SpectralTensorField, SpectralVectorField,
    SYM_PAIRS,
};
use super::grid::FourierGrid;
use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Helmholtz–Leray projection `(δ_jl - k_j k_l/|k|²) v̂_l`; the mean mode
/// passes through unchanged.
pub fn leray_project(v: &SpectralVectorField) -> SpectralVectorField {
    let mut out = v.clone();
    leray_project_in_place(&mut out);
    out
}

pub fn leray_project_in_place(v: &mut SpectralVectorField) {
    let g = v.grid().clone();
    let [c0, c1, c2] = v.components_mut() else { unreachable!() };
    c0.par_iter_mut().zip(c1.par_iter_mut()).zip(c2.par_iter_mut()).enumerate().for_each(|(i, ((a, b), c))| {
        let k2 = g.kmag2(i);
        if k2 == 0.0 {
            return;
        }
        let k = g.wavevector(i);
        let dot = (k[0] * *a + k[1] * *b + k[2] * *c) / k2;
        *a -= k[0] * dot;
        *b -= k[1] * dot;
        *c -= k[2] * dot;
    });
}

/// Velocity gradient `G[j][l] = ∂_l u_j`, i.e. `i k_l û_j` per mode.
pub fn velocity_gradient(u: &SpectralVectorField) -> [[Vec<Complex64>; 3]; 3] {
    let g = u.grid();
    std::array::from_fn(|j| {
        std::array::from_fn(|l| {
            let uj = u.component(j);
            (0..g.len()).into_par_iter().map(|i| I * g.wavevector(i)[l] * uj[i]).collect()
        })
    })
}

/// Deformation tensor `D(u) = ½(∇u + ∇uᵀ)`.
pub fn deformation(u: &SpectralVectorField) -> SpectralTensorField {
    let g = u.grid();
    let comps = SYM_PAIRS.map(|(j, l)| {
        let (uj, ul) = (u.component(j), u.component(l));
        (0..g.len())
            .into_par_iter()
            .map(|i| {
                let k = g.wavevector(i);
                0.5 * I * (k[j] * ul[i] + k[l] * uj[i])
            })
            .collect()
    });
    SpectralTensorField::from_components(g, comps).expect("sizes match grid")
}

/// Vorticity tensor `W(u) = ½(∇u - ∇uᵀ)`, upper triangle.
pub fn vorticity_tensor(u: &SpectralVectorField) -> AntisymmetricTensorField {
    let g = u.grid();
    let comps = super::field::ANTISYM_PAIRS.map(|(j, l)| {
        let (uj, ul) = (u.component(j), u.component(l));
        (0..g.len())
            .into_par_iter()
            .map(|i| {
                let k = g.wavevector(i);
                0.5 * I * (k[l] * uj[i] - k[j] * ul[i])
            })
            .collect()
    });
    AntisymmetricTensorField::from_components(g, comps).expect("sizes match grid")
}

/// `(div τ)_j = i k_l τ̂_lj`.
pub fn tensor_divergence(tau: &SpectralTensorField) -> SpectralVectorField {
    let g = tau.grid();
    let comps = std::array::from_fn(|j| {
        (0..g.len())
            .into_par_iter()
            .map(|i| {
                let k = g.wavevector(i);
                I * (0..3).map(|l| k[l] * tau.component(sym_index(l, j))[i]).sum::<Complex64>()
            })
            .collect()
    });
    SpectralVectorField::from_components(g, comps).expect("sizes match grid")
}

/// Squared homogeneous Sobolev seminorm `‖∇ᵏ f‖²_{L²}` over the box, from
/// Parseval on the retained modes.
pub fn sobolev_seminorm_sq<F: SpectralField>(f: &F, order: u32) -> Result<f64> {
    if order > 2 {
        return Err(Error::param("order", format!("derivative order must be 0, 1 or 2, got {order}")));
    }
    let g = f.grid();
    let comps = f.components();
    let mult = f.multiplicities();
    let sum = deterministic_sum(g.len(), |i| {
        if !g.is_retained(i) {
            return 0.0;
        }
        let w = g.kmag2(i).powi(order as i32);
        if w == 0.0 && order > 0 {
            return 0.0;
        }
        w * comps.iter().zip(mult).map(|(c, m)| m * c[i].norm_sqr()).sum::<f64>()
    });
    Ok(g.volume() * sum)
}

/// `‖f‖²_{H²} = Σ_{k≤2} ‖∇ᵏ f‖²`.
pub fn h2_norm_sq<F: SpectralField>(f: &F) -> f64 {
    (0..=2).map(|k| sobolev_seminorm_sq(f, k).expect("order in range")).sum()
}

/// Velocity and its gradient sampled on the physical grid.
#[derive(Debug, Clone)]
pub struct PhysicalVelocity {
    pub u: [Vec<f64>; 3],
    /// `grad[j][l] = ∂_l u_j`
    pub grad: [[Vec<f64>; 3]; 3],
}

impl PhysicalVelocity {
    /// Advective CFL rate `max|u|·k_max + max|∇u|`.
    pub fn cfl_rate(&self, k_max: f64) -> f64 {
        let n = self.u[0].len();
        let (umax, gmax) = (0..n)
            .into_par_iter()
            .map(|p| {
                let speed = (0..3).map(|j| self.u[j][p].powi(2)).sum::<f64>().sqrt();
                let grad = (0..3)
                    .flat_map(|j| (0..3).map(move |l| (j, l)))
                    .map(|(j, l)| self.grad[j][l][p].powi(2))
                    .sum::<f64>()
                    .sqrt();
                (speed, grad)
            })
            .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
        umax * k_max + gmax
    }
}

/// FFT workspace bound to one grid; evaluates quadratic nonlinearities in
/// physical space and returns dealiased coefficients.
#[derive(Debug, Clone)]
pub struct PseudoSpectral {
    grid: FourierGrid,
    fft: Fft3,
}

impl PseudoSpectral {
    pub fn new(grid: &FourierGrid) -> Self {
        Self { grid: grid.clone(), fft: Fft3::new(grid.n_per_axis()) }
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    fn check(&self, g: &FourierGrid) -> Result<()> {
        if g == &self.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Synthesize real physical fields from Hermitian coefficient arrays,
    /// two per complex transform.
    pub fn to_physical(&self, comps: &[&[Complex64]]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(comps.len());
        for pair in comps.chunks(2) {
            let mut z: Vec<Complex64> = match pair {
                [a, b] => a.par_iter().zip(b.par_iter()).map(|(x, y)| x + I * y).collect(),
                [a] => a.to_vec(),
                _ => unreachable!(),
            };
            self.fft.inverse(&mut z);
            out.push(z.par_iter().map(|c| c.re).collect());
            if pair.len() == 2 {
                out.push(z.par_iter().map(|c| c.im).collect());
            }
        }
        out
    }

    /// Analyse real physical fields, two per complex transform, and apply the
    /// dealias mask. Outputs are exactly Hermitian.
    pub fn to_spectral(&self, fields: &[&[f64]]) -> Vec<Vec<Complex64>> {
        let g = &self.grid;
        let mut out = Vec::with_capacity(fields.len());
        for pair in fields.chunks(2) {
            let mut z: Vec<Complex64> = match pair {
                [a, b] => a.par_iter().zip(b.par_iter()).map(|(&x, &y)| Complex64::new(x, y)).collect(),
                [a] => a.par_iter().map(|&x| Complex64::new(x, 0.0)).collect(),
                _ => unreachable!(),
            };
            self.fft.forward(&mut z);
            let first: Vec<Complex64> = (0..z.len())
                .into_par_iter()
                .map(|i| if g.is_retained(i) { 0.5 * (z[i] + z[g.mirror(i)].conj()) } else { Complex64::default() })
                .collect();
            if pair.len() == 2 {
                let second: Vec<Complex64> = (0..z.len())
                    .into_par_iter()
                    .map(|i| {
                        if g.is_retained(i) {
                            -0.5 * I * (z[i] - z[g.mirror(i)].conj())
                        } else {
                            Complex64::default()
                        }
                    })
                    .collect();
                out.push(first);
                out.push(second);
            } else {
                out.push(first);
            }
        }
        out
    }

    fn gradient_physical(&self, c: &[Complex64]) -> [Vec<f64>; 3] {
        let g = &self.grid;
        let d: [Vec<Complex64>; 3] =
            std::array::from_fn(|l| (0..g.len()).into_par_iter().map(|i| I * g.wavevector(i)[l] * c[i]).collect());
        let mut phys = self.to_physical(&[&d[0], &d[1], &d[2]]).into_iter();
        std::array::from_fn(|_| phys.next().expect("three fields"))
    }

    pub fn velocity(&self, u: &SpectralVectorField) -> Result<PhysicalVelocity> {
        self.check(u.grid())?;
        let grad_hat = velocity_gradient(u);
        let mut refs: Vec<&[Complex64]> = (0..3).map(|j| u.component(j)).collect();
        for row in &grad_hat {
            for c in row {
                refs.push(c);
            }
        }
        let mut phys = self.to_physical(&refs).into_iter();
        let uu = std::array::from_fn(|_| phys.next().expect("velocity"));
        let grad = std::array::from_fn(|_| std::array::from_fn(|_| phys.next().expect("gradient")));
        Ok(PhysicalVelocity { u: uu, grad })
    }

    /// Physical-space `(u·∇) c` for each coefficient array in `comps`.
    pub fn advect_physical(&self, vel: &PhysicalVelocity, comps: &[Vec<Complex64>]) -> Vec<Vec<f64>> {
        comps
            .iter()
            .map(|c| {
                let grad = self.gradient_physical(c);
                (0..vel.u[0].len())
                    .into_par_iter()
                    .map(|p| vel.u[0][p] * grad[0][p] + vel.u[1][p] * grad[1][p] + vel.u[2][p] * grad[2][p])
                    .collect()
            })
            .collect()
    }

    /// Physical-space `g_a(τ, ∇u) = τW - Wτ - a(Dτ + τD)` in symmetric storage.
    pub fn g_a_physical(&self, vel: &PhysicalVelocity, tau: &[Vec<f64>], a: f64) -> [Vec<f64>; 6] {
        let npts = vel.u[0].len();
        let values: Vec<[f64; 6]> = (0..npts)
            .into_par_iter()
            .map(|p| {
                let t: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| tau[sym_index(i, j)][p]));
                let gm: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| vel.grad[i][j][p]));
                let d: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (gm[i][j] + gm[j][i])));
                let w: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (gm[i][j] - gm[j][i])));
                SYM_PAIRS.map(|(i, j)| {
                    let mut s = 0.0;
                    for m in 0..3 {
                        s += t[i][m] * w[m][j] - w[i][m] * t[m][j] - a * (d[i][m] * t[m][j] + t[i][m] * d[m][j]);
                    }
                    s
                })
            })
            .collect();
        std::array::from_fn(|c| values.iter().map(|v| v[c]).collect())
    }

    pub fn advect<F: SpectralField + Clone>(&self, u: &SpectralVectorField, f: &F) -> Result<F> {
        self.check(u.grid())?;
        self.check(f.grid())?;
        let vel = self.velocity(u)?;
        let phys = self.advect_physical(&vel, f.components());
        let refs: Vec<&[f64]> = phys.iter().map(|v| v.as_slice()).collect();
        let spec = self.to_spectral(&refs);
        let mut out = f.clone();
        for (dst, src) in out.components_mut().iter_mut().zip(spec) {
            *dst = src;
        }
        Ok(out)
    }

    pub fn g_a_term(&self, tau: &SpectralTensorField, u: &SpectralVectorField, a: f64) -> Result<SpectralTensorField> {
        self.check(u.grid())?;
        self.check(tau.grid())?;
        let vel = self.velocity(u)?;
        let refs: Vec<&[Complex64]> = tau.components().iter().map(|c| c.as_slice()).collect();
        let tau_phys = self.to_physical(&refs);
        let g = self.g_a_physical(&vel, &tau_phys, a);
        let spec = self.to_spectral(&[&g[0], &g[1], &g[2], &g[3], &g[4], &g[5]]);
        let comps: [Vec<Complex64>; 6] = spec.try_into().expect("six components");
        SpectralTensorField::from_components(&self.grid, comps)
    }
}

/// Pseudo-spectral `(u·∇) f`, dealiased.
pub fn advect<F: SpectralField + Clone>(u: &SpectralVectorField, f: &F) -> Result<F> {
    if u.grid() != f.grid() {
        return Err(Error::GridMismatch);
    }
    PseudoSpectral::new(u.grid()).advect(u, f)
}

/// Pseudo-spectral `g_a(τ, ∇u)`, dealiased.
pub fn g_a_term(tau: &SpectralTensorField, u: &SpectralVectorField, a: f64) -> Result<SpectralTensorField> {
    if u.grid() != tau.grid() {
        return Err(Error::GridMismatch);
    }
    PseudoSpectral::new(u.grid()).g_a_term(tau, u, a)
}

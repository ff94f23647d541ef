//! Exact linearized semigroup, kernel bounds and continuum energy curves.
//!
//! The unit-coefficient linear system
//! `∂t u = (1-ω)Δu + ℙ div τ`, `∂t τ = -τ + 2ωD(u)` is solved mode by mode
//! through the kernels 𝒜, ℬ, 𝒞 built from the roots of
//! `λ² + (1 + (1-ω)s²)λ + s²`, `s = |ξ|`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::decay::{AngularStructure, SpectralProfile};
use crate::error::{Error, Result};
use crate::quadrature::{sphere_area, RadialQuadrature, SphereRule};
use crate::rates::TimeSeries;
use crate::spectral::{FluidParams, SYM_PAIRS};

type C = Complex64;

/// Relative eigenvalue gap below which the confluent kernel formulas are used.
pub const CONFLUENT_WINDOW: f64 = 1e-6;

/// Roots `λ₊`, `λ₋` (`Re λ₊ ≥ Re λ₋`) together with the shifted roots
/// `λ± + 1`, which are formed without cancellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair {
    pub lambda_plus: C,
    pub lambda_minus: C,
    plus_one: C,
    minus_one: C,
}

impl EigenPair {
    /// `λ₊ + 1`
    pub fn plus_shifted(&self) -> C {
        self.plus_one
    }
    /// `λ₋ + 1`
    pub fn minus_shifted(&self) -> C {
        self.minus_one
    }
}

pub fn eigenvalues(xi_mag: f64, omega: f64) -> EigenPair {
    let s2 = xi_mag * xi_mag;
    let b = 1.0 + (1.0 - omega) * s2;
    let disc = (b - 2.0 * xi_mag) * (b + 2.0 * xi_mag);
    let (lp, lm) = if disc >= 0.0 {
        let lm = -0.5 * (b + disc.sqrt());
        (C::new(s2 / lm, 0.0), C::new(lm, 0.0))
    } else {
        let im = 0.5 * (-disc).sqrt();
        (C::new(-0.5 * b, im), C::new(-0.5 * b, -im))
    };
    // (λ₊+1)(λ₋+1) = ωs²; take the larger-magnitude shift directly
    let (p, m) = (lp + 1.0, lm + 1.0);
    let ws2 = omega * s2;
    let (plus_one, minus_one) =
        if p.norm() >= m.norm() { (p, if p == C::default() { m } else { ws2 / p }) } else { (ws2 / m, m) };
    EigenPair { lambda_plus: lp, lambda_minus: lm, plus_one, minus_one }
}

/// Values of 𝒜, ℬ, 𝒞 at one `(|ξ|, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelTriple {
    pub a_val: C,
    pub b_val: C,
    pub c_val: C,
}

/// `e^z - 1` for complex `z` without cancellation near 0.
fn expm1_c(z: C) -> C {
    let half = (0.5 * z.im).sin();
    C::new(z.re.exp_m1() * z.im.cos() - 2.0 * half * half, z.re.exp() * z.im.sin())
}

pub fn kernel_triple(xi_mag: f64, t: f64, omega: f64) -> KernelTriple {
    kernels_from(&eigenvalues(xi_mag, omega), t)
}

fn kernels_from(ev: &EigenPair, t: f64) -> KernelTriple {
    // the kernels are real; dropping rounding residue keeps propagated
    // fields exactly Hermitian
    let k = kernels_complex(ev, t);
    KernelTriple { a_val: C::new(k.a_val.re, 0.0), b_val: C::new(k.b_val.re, 0.0), c_val: C::new(k.c_val.re, 0.0) }
}

fn kernels_complex(ev: &EigenPair, t: f64) -> KernelTriple {
    if t == 0.0 {
        return KernelTriple { a_val: C::new(0.0, 0.0), b_val: C::new(1.0, 0.0), c_val: C::new(-1.0, 0.0) };
    }
    let (lp, lm) = (ev.lambda_plus, ev.lambda_minus);
    let (p, m) = (ev.plus_one, ev.minus_one);
    let delta = lp - lm;
    let scale = lp.norm().max(1.0);
    if delta.norm() < CONFLUENT_WINDOW * scale {
        // t e^{λt}, (1 + (λ+1)t) e^{λt}, ((λ+1)t - 1) e^{λt} at the double root,
        // carried to second order in the gap
        let z = 0.5 * delta * t;
        let a_val = t * (0.5 * (lp + lm) * t).exp() * (1.0 + z * z / 6.0);
        let ep = (lp * t).exp();
        return KernelTriple { a_val, b_val: m * a_val + ep, c_val: p * a_val - ep };
    }
    let ep = (lp * t).exp();
    let a_val = -ep * expm1_c(-delta * t) / delta;
    if delta.norm() >= 0.25 * scale {
        let em = (lm * t).exp();
        KernelTriple { a_val, b_val: (p * ep - m * em) / delta, c_val: (m * ep - p * em) / delta }
    } else {
        KernelTriple { a_val, b_val: m * a_val + ep, c_val: p * a_val - ep }
    }
}

/// Mode state: velocity coefficients and symmetric stress in `SYM_PAIRS` order.
pub type ModeState = ([C; 3], [C; 6]);

/// Propagate one Fourier mode of the unit-coefficient linear system by `t`.
pub fn propagate_mode(u0: &[C; 3], tau0: &[C; 6], xi: [f64; 3], t: f64, omega: f64) -> ModeState {
    let s = norm3(xi);
    if s == 0.0 {
        return (*u0, tau0.map(|x| x * (-t).exp()));
    }
    propagate_with(&kernel_triple(s, t, omega), (-t).exp(), u0, tau0, xi, omega)
}

/// Propagation with precomputed kernels at `|ξ| > 0`; `decay = e^{-t}`.
pub fn propagate_with(k: &KernelTriple, decay: f64, u0: &[C; 3], tau0: &[C; 6], xi: [f64; 3], omega: f64) -> ModeState {
    let s = norm3(xi);
    let n = xi.map(|x| x / s);
    let tau = sym_matrix(tau0);
    let tn: [C; 3] = std::array::from_fn(|j| tau[j][0] * n[0] + tau[j][1] * n[1] + tau[j][2] * n[2]);
    let ntn = tn[0] * n[0] + tn[1] * n[1] + tn[2] * n[2];
    let w: [C; 3] = std::array::from_fn(|j| tn[j] - ntn * n[j]);
    let ias = C::new(0.0, s) * k.a_val;
    let u: [C; 3] = std::array::from_fn(|j| k.b_val * u0[j] + ias * w[j]);
    let c = k.c_val + decay;
    let iwa = C::new(0.0, omega) * k.a_val;
    let tau_out: [C; 6] = std::array::from_fn(|slot| {
        let (j, l) = SYM_PAIRS[slot];
        decay * tau0[slot] - c * (n[j] * w[l] + n[l] * w[j]) + iwa * (xi[j] * u0[l] + xi[l] * u0[j])
    });
    (u, tau_out)
}

/// Propagation for general `Re`, `We` by rescaling onto the unit system:
/// time `t/We`, wavevector `ξL`, velocity `u/L` with `L = sqrt(We/Re)`.
pub fn propagate_mode_scaled(u0: &[C; 3], tau0: &[C; 6], xi: [f64; 3], t: f64, params: &FluidParams) -> ModeState {
    let l = params.length_scale();
    let u_in = u0.map(|x| x / l);
    let (u, tau) = propagate_mode(&u_in, tau0, xi.map(|x| x * l), t / params.weissenberg(), params.omega());
    (u.map(|x| x * l), tau)
}

/// Per-mode kernels for a fixed step in physical units, reused across steps.
#[derive(Debug, Clone)]
pub struct ScaledKernels {
    kernels: KernelTriple,
    decay: f64,
    xi_scaled: [f64; 3],
    length: f64,
    omega: f64,
}

impl ScaledKernels {
    pub fn new(xi: [f64; 3], t: f64, params: &FluidParams) -> Self {
        let length = params.length_scale();
        let xi_scaled = xi.map(|x| x * length);
        let ts = t / params.weissenberg();
        Self {
            kernels: kernel_triple(norm3(xi_scaled), ts, params.omega()),
            decay: (-ts).exp(),
            xi_scaled,
            length,
            omega: params.omega(),
        }
    }

    pub fn apply(&self, u0: &[C; 3], tau0: &[C; 6]) -> ModeState {
        if norm3(self.xi_scaled) == 0.0 {
            return (*u0, tau0.map(|x| x * self.decay));
        }
        let u_in = u0.map(|x| x / self.length);
        let (u, tau) = propagate_with(&self.kernels, self.decay, &u_in, tau0, self.xi_scaled, self.omega);
        (u.map(|x| x * self.length), tau)
    }
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn sym_matrix(t: &[C; 6]) -> [[C; 3]; 3] {
    [[t[0], t[3], t[4]], [t[3], t[1], t[5]], [t[4], t[5], t[2]]]
}

/// Closed-form constants of the pointwise kernel bounds on `|ξ| ≤ R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundConstants {
    pub theta: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

pub fn bound_constants(omega: f64, radius: f64) -> Result<BoundConstants> {
    if !(omega > 0.0 && omega < 1.0) {
        return Err(Error::param("omega", format!("must lie in (0, 1), got {omega}")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::param("radius", format!("must be positive, got {radius}")));
    }
    let (w, r2) = (omega, radius * radius);
    let sw = w.sqrt();
    let nu = 1.0 - w;
    let gap = sw.min(1.0 - sw);
    let theta = 0.5 * (nu / 2.0).min(1.0 / (1.0 + r2 * nu));
    let c1 = (4.0 * nu.sqrt() / gap).max(8.0 * (1.0 + sw).powi(2) * (2.0 / nu).max(1.0 + r2 * nu));
    let c2 = 2.0 * (1.0 + nu * r2).max(sw * radius) * c1;
    let c3 = c2.max((3.0 * w * nu.sqrt()).max(2.0 * (1.0 - sw) / nu.sqrt()) / gap);
    Ok(BoundConstants { theta, c1, c2, c3 })
}

impl BoundConstants {
    /// Right-hand sides of the three bounds at `(s, t)`.
    pub fn bounds(&self, s: f64, t: f64, omega: f64) -> [f64; 3] {
        let heat = (-self.theta * s * s * t).exp();
        let slow = (-self.theta * t / (4.0 * (1.0 + omega.sqrt()).powi(2))).exp();
        [self.c1 * heat, self.c2 * heat, self.c3 * (slow + s * s * heat)]
    }
}

/// Outcome of checking the kernel bounds on a sample set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub omega: f64,
    pub radius: f64,
    pub constants: BoundConstants,
    pub samples: usize,
    /// Violations of the 𝒜, ℬ, 𝒞 bounds.
    pub violations: [usize; 3],
    /// Largest `|kernel| / bound` per kernel.
    pub worst_ratio: [f64; 3],
}

impl BoundReport {
    pub fn total_violations(&self) -> usize {
        self.violations.iter().sum()
    }
}

/// Slack added to every bound before comparing.
pub const BOUND_SLACK: f64 = 1e-12;

pub fn verify_pointwise_bounds(omega: f64, radius: f64, xi_samples: &[f64], t_samples: &[f64]) -> Result<BoundReport> {
    let constants = bound_constants(omega, radius)?;
    if xi_samples.iter().any(|&s| !(s >= 0.0 && s <= radius)) {
        return Err(Error::param("xi_samples", format!("samples must lie in [0, {radius}]")));
    }
    if t_samples.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
        return Err(Error::param("t_samples", "times must be nonnegative"));
    }
    let per_xi: Vec<([usize; 3], [f64; 3])> = xi_samples
        .par_iter()
        .map(|&s| {
            let ev = eigenvalues(s, omega);
            let mut v = [0usize; 3];
            let mut worst = [0.0f64; 3];
            for &t in t_samples {
                let k = kernels_from(&ev, t);
                let b = constants.bounds(s, t, omega);
                for (i, val) in [k.a_val.norm(), k.b_val.norm(), k.c_val.norm()].into_iter().enumerate() {
                    if val > b[i] + BOUND_SLACK {
                        v[i] += 1;
                    }
                    worst[i] = worst[i].max(val / b[i]);
                }
            }
            (v, worst)
        })
        .collect();
    let mut violations = [0; 3];
    let mut worst_ratio = [0.0f64; 3];
    for (v, w) in per_xi {
        for i in 0..3 {
            violations[i] += v[i];
            worst_ratio[i] = worst_ratio[i].max(w[i]);
        }
    }
    Ok(BoundReport { omega, radius, constants, samples: xi_samples.len() * t_samples.len(), violations, worst_ratio })
}

/// Uniform `n_xi × n_t` scan of `|ξ| ∈ (0, R]`, `t ∈ [0, t_max]`.
pub fn bound_scan(omega: f64, radius: f64, n_xi: usize, n_t: usize, t_max: f64) -> Result<BoundReport> {
    if n_xi == 0 || n_t < 2 {
        return Err(Error::param("samples", "need n_xi >= 1 and n_t >= 2"));
    }
    let xs: Vec<f64> = (1..=n_xi).map(|i| radius * i as f64 / n_xi as f64).collect();
    let ts: Vec<f64> = (0..n_t).map(|j| t_max * j as f64 / (n_t - 1) as f64).collect();
    verify_pointwise_bounds(omega, radius, &xs, &ts)
}

/// Sphere integrals of the angular patterns entering the linear energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularMoments {
    /// `∫ |P(n)e|²`
    pub uu: f64,
    /// `∫ |P(n)Tn|²`
    pub vv: f64,
    /// `∫ |T|²`
    pub tt: f64,
}

/// Stress pattern used when a stress profile carries no tensor structure.
pub const DEFAULT_TENSOR_PATTERN: [f64; 6] = [0.0, 0.0, 0.0, std::f64::consts::FRAC_1_SQRT_2, 0.0, 0.0];

impl AngularMoments {
    pub fn new(direction: [f64; 3], pattern: [f64; 6]) -> Self {
        let rule = SphereRule::standard();
        let t = [
            [pattern[0], pattern[3], pattern[4]],
            [pattern[3], pattern[1], pattern[5]],
            [pattern[4], pattern[5], pattern[2]],
        ];
        let uu = rule.integrate(|n| {
            let ne = n[0] * direction[0] + n[1] * direction[1] + n[2] * direction[2];
            (0..3).map(|j| (direction[j] - ne * n[j]).powi(2)).sum()
        });
        let vv = rule.integrate(|n| {
            let tn: [f64; 3] = std::array::from_fn(|j| t[j][0] * n[0] + t[j][1] * n[1] + t[j][2] * n[2]);
            let ntn = tn[0] * n[0] + tn[1] * n[1] + tn[2] * n[2];
            (0..3).map(|j| (tn[j] - ntn * n[j]).powi(2)).sum()
        });
        let frob =
            pattern[..3].iter().map(|x| x * x).sum::<f64>() + 2.0 * pattern[3..].iter().map(|x| x * x).sum::<f64>();
        Self { uu, vv, tt: sphere_area(3) * frob }
    }
}

/// Linear data `û₀ = f_u(|ξ|) P(n)e`, `τ̂₀ = f_τ(|ξ|) T`.
#[derive(Debug, Clone)]
pub struct LinearData<'a> {
    u: Option<&'a SpectralProfile>,
    tau: Option<&'a SpectralProfile>,
    moments: AngularMoments,
    r_max: f64,
}

impl<'a> LinearData<'a> {
    /// A `Unit` angular structure selects `e = e₁` for the velocity and
    /// [`DEFAULT_TENSOR_PATTERN`] for the stress.
    pub fn new(u: Option<&'a SpectralProfile>, tau: Option<&'a SpectralProfile>) -> Result<Self> {
        let mut direction = [1.0, 0.0, 0.0];
        let mut pattern = DEFAULT_TENSOR_PATTERN;
        if let Some(p) = u {
            if p.dimension() != 3 {
                return Err(Error::param("u_profile", "linear energy curves are three-dimensional"));
            }
            match p.angular() {
                AngularStructure::Unit => {}
                AngularStructure::Solenoidal { direction: d } => direction = d,
                AngularStructure::Tensor { .. } => {
                    return Err(Error::param("u_profile", "velocity profile cannot carry a tensor pattern"))
                }
            }
        }
        if let Some(p) = tau {
            if p.dimension() != 3 {
                return Err(Error::param("tau_profile", "linear energy curves are three-dimensional"));
            }
            match p.angular() {
                AngularStructure::Unit => {}
                AngularStructure::Tensor { pattern: t } => pattern = t,
                AngularStructure::Solenoidal { .. } => {
                    return Err(Error::param("tau_profile", "stress profile cannot carry a vector pattern"))
                }
            }
        }
        let r_max = [u, tau].iter().flatten().map(|p| p.support().unwrap_or(1e2)).fold(0.0, f64::max).max(1e-3);
        Ok(Self { u, tau, moments: AngularMoments::new(direction, pattern), r_max })
    }

    pub fn moments(&self) -> AngularMoments {
        self.moments
    }

    /// Radial densities (per unit `dξ`, angular parts integrated) of
    /// `|û_L|²` and `|τ̂_L|²` at `|ξ| = s`.
    fn densities(&self, s: f64, t: f64, omega: f64) -> (f64, f64) {
        let fu = self.u.map_or(0.0, |p| p.radial(s));
        let ft = self.tau.map_or(0.0, |p| p.radial(s));
        let k = kernel_triple(s, t, omega);
        let et = (-t).exp();
        let c = k.c_val + et;
        let m = self.moments;
        let a2 = k.a_val.norm_sqr();
        let u2 = k.b_val.norm_sqr() * fu * fu * m.uu + s * s * a2 * ft * ft * m.vv;
        let t2 = ft * ft * (et * et * m.tt - 4.0 * et * c.re * m.vv + 2.0 * c.norm_sqr() * m.vv)
            + 2.0 * omega * omega * s * s * a2 * fu * fu * m.uu;
        (u2, t2)
    }

    /// `[‖u‖², ‖τ‖², ‖∇u‖², ‖∇²u‖²]` at each time, on a given radial rule.
    fn norms_on(&self, q: &RadialQuadrature, omega: f64, times: &[f64]) -> Vec<[f64; 4]> {
        let area = sphere_area(3);
        let (r0, r1) = (q.r_min(), 2.0 * q.r_min());
        times
            .par_iter()
            .map(|&t| {
                let dens: Vec<(f64, f64)> = q.nodes().iter().map(|&s| self.densities(s, t, omega)).collect();
                let (d0, d1) = (self.densities(r0, t, omega), self.densities(r1, t, omega));
                let mut out = [0.0; 4];
                for (i, o) in out.iter_mut().enumerate() {
                    let pick = |s: f64, d: (f64, f64)| -> f64 {
                        match i {
                            0 => d.0,
                            1 => d.1,
                            2 => s * s * d.0,
                            _ => s.powi(4) * d.0,
                        }
                    };
                    let samples: Vec<f64> = q.nodes().iter().zip(&dens).map(|(&s, &d)| pick(s, d) / area).collect();
                    *o = q.sum_with_tail(&samples, pick(r0, d0) / area, pick(r1, d1) / area);
                }
                out
            })
            .collect()
    }

    /// Norms at each time with panel doubling until every entry settles to
    /// `1e-10` relative.
    pub fn norms(&self, omega: f64, times: &[f64]) -> Result<Vec<[f64; 4]>> {
        const MAX_PANELS: usize = 4096;
        let decades = (self.r_max / 1e-4).log10();
        let mut panels = ((RadialQuadrature::DEFAULT_PANELS as f64) * decades / 6.0).ceil().max(16.0) as usize;
        let rule = |p: usize| RadialQuadrature::new(3, 1e-4, self.r_max, p, RadialQuadrature::DEFAULT_ORDER);
        let mut prev = self.norms_on(&rule(panels)?, omega, times);
        loop {
            panels *= 2;
            let cur = self.norms_on(&rule(panels)?, omega, times);
            let change = prev
                .iter()
                .zip(&cur)
                .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs() / y.abs().max(f64::MIN_POSITIVE)))
                .filter(|c| c.is_finite())
                .fold(0.0, f64::max);
            if change <= 1e-10 {
                return Ok(cur);
            }
            if panels >= MAX_PANELS {
                return Err(Error::QuadratureNonConvergence { panels, change });
            }
            prev = cur;
        }
    }
}

/// Column names of [`linear_energy_curve`].
pub const LINEAR_COLUMNS: [&str; 5] = ["u_l2sq", "tau_l2sq", "u_h1sq", "u_h2sq", "energy"];

/// Continuum norms of the linear flow from radial data; `energy` is
/// `ω‖u_L‖² + ½‖τ_L‖²`.
pub fn linear_energy_curve(
    u_profile: Option<&SpectralProfile>,
    tau_profile: Option<&SpectralProfile>,
    omega: f64,
    times: &[f64],
) -> Result<TimeSeries> {
    check_omega(omega)?;
    if times.is_empty() {
        return Err(Error::param("times", "time grid is empty"));
    }
    if times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("times", "times must be nonnegative and strictly increasing"));
    }
    let data = LinearData::new(u_profile, tau_profile)?;
    let norms = data.norms(omega, times)?;
    let col = |f: &dyn Fn(&[f64; 4]) -> f64| norms.iter().map(f).collect::<Vec<_>>();
    TimeSeries::from_columns(
        times.to_vec(),
        vec![
            ("u_l2sq".into(), col(&|n| n[0])),
            ("tau_l2sq".into(), col(&|n| n[1])),
            ("u_h1sq".into(), col(&|n| n[2])),
            ("u_h2sq".into(), col(&|n| n[3])),
            ("energy".into(), col(&|n| omega * n[0] + 0.5 * n[1])),
        ],
    )
}

fn check_omega(omega: f64) -> Result<()> {
    if omega > 0.0 && omega < 1.0 {
        Ok(())
    } else {
        Err(Error::param("omega", format!("must lie in (0, 1), got {omega}")))
    }
}

/// Relative residual of
/// `d/dt(ω‖u‖² + ½‖τ‖²) + ‖τ‖² + 2ω(1-ω)‖∇u‖² = 0` with a central difference.
pub fn energy_identity_residual(
    u_profile: Option<&SpectralProfile>,
    tau_profile: Option<&SpectralProfile>,
    omega: f64,
    t: f64,
    dt: f64,
) -> Result<f64> {
    check_omega(omega)?;
    if !(dt > 0.0) {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    if t < dt {
        return Err(Error::param("t", format!("need t >= dt, got t = {t}, dt = {dt}")));
    }
    if u_profile.is_none() && tau_profile.is_none() {
        return Ok(0.0);
    }
    let data = LinearData::new(u_profile, tau_profile)?;
    let n = data.norms(omega, &[t - dt, t, t + dt])?;
    let lyap = |v: &[f64; 4]| omega * v[0] + 0.5 * v[1];
    let deriv = (lyap(&n[2]) - lyap(&n[0])) / (2.0 * dt);
    let dissipation = n[1][1] + 2.0 * omega * (1.0 - omega) * n[1][2];
    let scale = deriv.abs().max(dissipation);
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((deriv + dissipation).abs() / scale)
}

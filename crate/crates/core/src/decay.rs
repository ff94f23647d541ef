//! Decay characters of initial data.
//!
//! The decay character `r*` of `v₀` is the exponent for which
//! `ρ^{-2r-d} ∫_{|ξ|≤ρ} |v̂₀|² dξ` has a positive finite limit as `ρ → 0`.
//! It is estimated here from a log-log fit of the ball energy over a fixed
//! window of small radii, and the fit is rejected when the local slope drifts.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{radial_integral, sphere_area};
use crate::rates::ols;
use crate::spectral::{deterministic_sum, SpectralField};

/// Radial fitting window for [`estimate_r_star`].
pub const FIT_WINDOW: (f64, f64) = (1e-4, 1e-1);
/// Largest tolerated drift of the local slope, in units of `r*`.
pub const DRIFT_TOLERANCE: f64 = 0.05;
const FIT_POINTS: usize = 25;
const QUAD_TOL: f64 = 1e-11;

/// Radial amplitude law `|ξ| ↦ |v̂(ξ)|` (before amplitude and shift).
#[derive(Clone)]
pub enum RadialLaw {
    /// `|ξ|^q` on the unit ball.
    PowerCutoff { q: f64 },
    /// `|ξ|^q e^{-|ξ|²}`.
    PowerGauss { q: f64 },
    /// Characteristic function of the unit ball.
    Indicator,
    /// `|ξ|^q (2 + sin ln|ξ|) e^{-|ξ|²}`: no limit exists at the origin.
    LogOscillating { q: f64 },
    /// User-supplied law with optional compact support radius.
    Custom { f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, support: Option<f64> },
}

impl fmt::Debug for RadialLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialLaw::PowerCutoff { q } => write!(f, "PowerCutoff({q})"),
            RadialLaw::PowerGauss { q } => write!(f, "PowerGauss({q})"),
            RadialLaw::Indicator => write!(f, "Indicator"),
            RadialLaw::LogOscillating { q } => write!(f, "LogOscillating({q})"),
            RadialLaw::Custom { support, .. } => write!(f, "Custom(support = {support:?})"),
        }
    }
}

impl RadialLaw {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            RadialLaw::PowerCutoff { q } => {
                if r <= 1.0 {
                    r.powf(*q)
                } else {
                    0.0
                }
            }
            RadialLaw::PowerGauss { q } => r.powf(*q) * (-r * r).exp(),
            RadialLaw::Indicator => {
                if r <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            RadialLaw::LogOscillating { q } => r.powf(*q) * (2.0 + r.ln().sin()) * (-r * r).exp(),
            RadialLaw::Custom { f, .. } => f(r),
        }
    }

    /// Radius beyond which the law vanishes, if compactly supported.
    pub fn support(&self) -> Option<f64> {
        match self {
            RadialLaw::PowerCutoff { .. } | RadialLaw::Indicator => Some(1.0),
            RadialLaw::Custom { support, .. } => *support,
            _ => None,
        }
    }
}

/// Fixed angular pattern multiplying the radial law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngularStructure {
    /// Unit-modulus scalar (or fixed unit vector/tensor) pattern.
    Unit,
    /// `P(ξ/|ξ|) e` for a unit vector `e`: divergence-free, three dimensions.
    Solenoidal { direction: [f64; 3] },
    /// Fixed symmetric tensor with unit Frobenius norm, stored as
    /// `[11, 22, 33, 12, 13, 23]`; three dimensions.
    Tensor { pattern: [f64; 6] },
}

impl AngularStructure {
    pub fn solenoidal(direction: [f64; 3]) -> Result<Self> {
        let n = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::param("direction", "must be a nonzero vector"));
        }
        Ok(AngularStructure::Solenoidal { direction: direction.map(|x| x / n) })
    }

    pub fn tensor(pattern: [f64; 6]) -> Result<Self> {
        let n = frobenius(&pattern);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::param("pattern", "must be a nonzero tensor"));
        }
        Ok(AngularStructure::Tensor { pattern: pattern.map(|x| x / n) })
    }

    /// `∫_{S^{d-1}} |pattern(n)|² dσ(n)`.
    pub fn factor(&self, dimension: usize) -> f64 {
        match self {
            AngularStructure::Unit | AngularStructure::Tensor { .. } => sphere_area(dimension),
            // |P(n)e|² = 1 - (n·e)², whose sphere average is 2/3
            AngularStructure::Solenoidal { .. } => sphere_area(dimension) * 2.0 / 3.0,
        }
    }
}

fn frobenius(p: &[f64; 6]) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + 2.0 * (p[3] * p[3] + p[4] * p[4] + p[5] * p[5])).sqrt()
}

/// Initial datum described by its Fourier transform
/// `v̂(ξ) = amplitude · |ξ|^shift · law(|ξ|) · pattern(ξ/|ξ|)`.
#[derive(Debug, Clone)]
pub struct SpectralProfile {
    dimension: usize,
    law: RadialLaw,
    angular: AngularStructure,
    amplitude: f64,
    shift: f64,
}

impl SpectralProfile {
    pub fn new(dimension: usize, law: RadialLaw, angular: AngularStructure) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::param("dimension", "must be positive"));
        }
        if !matches!(angular, AngularStructure::Unit) && dimension != 3 {
            return Err(Error::param("angular", "vector and tensor patterns require dimension 3"));
        }
        let p = Self { dimension, law, angular, amplitude: 1.0, shift: 0.0 };
        p.validate()?;
        Ok(p)
    }

    pub fn power_gauss(q: f64) -> Result<Self> {
        Self::new(3, RadialLaw::PowerGauss { q }, AngularStructure::Unit)
    }

    pub fn power_cutoff(q: f64) -> Result<Self> {
        Self::new(3, RadialLaw::PowerCutoff { q }, AngularStructure::Unit)
    }

    pub fn indicator() -> Result<Self> {
        Self::new(3, RadialLaw::Indicator, AngularStructure::Unit)
    }

    /// Profile with the decay character of an `Lᵖ ∩ L²` datum in `ℝ³`.
    pub fn lp_like(p: f64) -> Result<Self> {
        let q = lp_decay_character(p, 3)?;
        Self::new(3, RadialLaw::PowerGauss { q }, AngularStructure::Unit)
    }

    pub fn log_oscillating(q: f64) -> Result<Self> {
        Self::new(3, RadialLaw::LogOscillating { q }, AngularStructure::Unit)
    }

    pub fn with_dimension(mut self, dimension: usize) -> Result<Self> {
        if dimension == 0 || (!matches!(self.angular, AngularStructure::Unit) && dimension != 3) {
            return Err(Error::param("dimension", format!("unsupported dimension {dimension}")));
        }
        self.dimension = dimension;
        self.validate()?;
        Ok(self)
    }

    pub fn with_angular(mut self, angular: AngularStructure) -> Result<Self> {
        if !matches!(angular, AngularStructure::Unit) && self.dimension != 3 {
            return Err(Error::param("angular", "vector and tensor patterns require dimension 3"));
        }
        self.angular = angular;
        Ok(self)
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(Error::param("amplitude", format!("must be positive, got {amplitude}")));
        }
        self.amplitude = amplitude;
        Ok(self)
    }

    /// Multiply the transform by `|ξ|^s`, i.e. apply `Λ^s = (-Δ)^{s/2}`.
    pub fn with_shift(mut self, s: f64) -> Result<Self> {
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::param("shift", format!("must be nonnegative, got {s}")));
        }
        self.shift += s;
        self.validate()?;
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }
    pub fn law(&self) -> &RadialLaw {
        &self.law
    }
    pub fn angular(&self) -> AngularStructure {
        self.angular
    }
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }
    pub fn support(&self) -> Option<f64> {
        self.law.support()
    }

    /// Radial factor of `|v̂|` at `|ξ| = r`.
    pub fn radial(&self, r: f64) -> f64 {
        let base = self.amplitude * self.law.eval(r);
        if self.shift == 0.0 {
            base
        } else {
            base * r.powf(self.shift)
        }
    }

    /// `∫_{S^{d-1}} |pattern|²`.
    pub fn angular_factor(&self) -> f64 {
        self.angular.factor(self.dimension)
    }

    fn radial_density(&self, r: f64) -> f64 {
        self.radial(r).powi(2) * r.powi(self.dimension as i32 - 1)
    }

    fn upper_radius(&self) -> f64 {
        self.support().unwrap_or(40.0)
    }

    fn validate(&self) -> Result<()> {
        let total = radial_integral(|r| self.radial_density(r), 0.0, self.upper_radius(), 1e-8)
            .map_err(|e| Error::NotSquareIntegrable(e.to_string()))?;
        if !total.is_finite() {
            return Err(Error::NotSquareIntegrable("infinite L² norm".into()));
        }
        Ok(())
    }

    /// `‖v‖²_{L²} = ∫ |v̂|² dξ`.
    pub fn norm_sq(&self) -> Result<f64> {
        Ok(self.angular_factor() * radial_integral(|r| self.radial_density(r), 0.0, self.upper_radius(), QUAD_TOL)?)
    }

    /// `E(ρ) = ∫_{|ξ|≤ρ} |v̂|² dξ`.
    pub fn ball_energy(&self, rho: f64) -> Result<f64> {
        if !(rho > 0.0) {
            return Err(Error::param("rho", format!("must be positive, got {rho}")));
        }
        let hi = rho.min(self.upper_radius());
        Ok(self.angular_factor() * radial_integral(|r| self.radial_density(r), 0.0, hi, QUAD_TOL)?)
    }
}

/// Result of [`estimate_r_star`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayCharacterEstimate {
    pub r_star: f64,
    /// Limit `P_{r*}` read off the fit intercept.
    pub p_r_value: f64,
    pub fit_window: (f64, f64),
    pub slope_stderr: f64,
}

/// `ρ^{-2r-d} ∫_{B(ρ)} |v̂|² dξ`.
pub fn correlation_integral(v: &SpectralProfile, r: f64, rho: f64) -> Result<f64> {
    let d = v.dimension() as f64;
    if !(r > -d / 2.0) {
        return Err(Error::param("r", format!("must exceed -d/2 = {}, got {r}", -d / 2.0)));
    }
    Ok(v.ball_energy(rho)? * rho.powf(-2.0 * r - d))
}

/// Fit `log E(ρ) = s log ρ + b` on [`FIT_WINDOW`]; `r* = (s - d)/2`.
pub fn estimate_r_star(v: &SpectralProfile) -> Result<DecayCharacterEstimate> {
    let (lo, hi) = FIT_WINDOW;
    let mut xs = Vec::with_capacity(FIT_POINTS);
    let mut ys = Vec::with_capacity(FIT_POINTS);
    for i in 0..FIT_POINTS {
        let rho = lo * (hi / lo).powf(i as f64 / (FIT_POINTS - 1) as f64);
        let e = v.ball_energy(rho)?;
        if !(e > 0.0) {
            return Err(Error::Fit(format!("ball energy vanishes at radius {rho:e}")));
        }
        xs.push(rho.ln());
        ys.push(e.ln());
    }
    fit_decay_character(&xs, &ys, v.dimension() as f64, (lo, hi), DRIFT_TOLERANCE)
}

fn fit_decay_character(
    log_rho: &[f64],
    log_e: &[f64],
    dimension: f64,
    window: (f64, f64),
    tolerance: f64,
) -> Result<DecayCharacterEstimate> {
    let fit = ols(log_rho, log_e)?;
    let drift = log_rho
        .windows(2)
        .zip(log_e.windows(2))
        .map(|(x, y)| (((y[1] - y[0]) / (x[1] - x[0])) - fit.slope).abs() / 2.0)
        .fold(0.0, f64::max);
    if drift > tolerance {
        return Err(Error::NoDecayCharacter { drift, tolerance });
    }
    let r_star = (fit.slope - dimension) / 2.0;
    if !(r_star > -dimension / 2.0) {
        return Err(Error::Fit(format!("estimated r* = {r_star} is not above -d/2")));
    }
    Ok(DecayCharacterEstimate {
        r_star,
        p_r_value: fit.intercept.exp(),
        fit_window: window,
        slope_stderr: fit.slope_stderr / 2.0,
    })
}

/// Discrete analogue on a box field: `E(ρ)` is the lattice shell sum over
/// `|k| ≤ ρ`, fitted on `ρ ∈ [4/M, k_max]`.
pub fn estimate_r_star_lattice<F: SpectralField>(field: &F, tolerance: f64) -> Result<DecayCharacterEstimate> {
    let g = field.grid();
    let lo = 4.0 * g.spacing();
    let hi = g.k_max_retained();
    if hi < 2.0 * lo {
        return Err(Error::Fit(format!("lattice too coarse: need k_max >= {} (have {hi})", 2.0 * lo)));
    }
    let comps = field.components();
    let mult = field.multiplicities();
    let npts = 12;
    let mut xs = Vec::with_capacity(npts);
    let mut ys = Vec::with_capacity(npts);
    for i in 0..npts {
        let rho = lo * (hi / lo).powf(i as f64 / (npts - 1) as f64);
        let r2 = rho * rho * (1.0 + 1e-12);
        let e = g.volume()
            * deterministic_sum(g.len(), |m| {
                if g.kmag2(m) <= r2 {
                    comps.iter().zip(mult).map(|(c, w)| w * c[m].norm_sqr()).sum()
                } else {
                    0.0
                }
            });
        if !(e > 0.0) {
            return Err(Error::Fit(format!("ball energy vanishes at radius {rho}")));
        }
        xs.push(rho.ln());
        ys.push(e.ln());
    }
    fit_decay_character(&xs, &ys, 3.0, (lo, hi), tolerance)
}

/// `r*(v₀) = -n(1 - 1/p)` for `v₀ ∈ Lᵖ ∩ L²(ℝⁿ)`, `1 ≤ p < 2`.
pub fn lp_decay_character(p: f64, n: usize) -> Result<f64> {
    if !(1.0..2.0).contains(&p) {
        return Err(Error::param("p", format!("must lie in [1, 2), got {p}")));
    }
    if n == 0 {
        return Err(Error::param("n", "dimension must be positive"));
    }
    Ok(-(n as f64) * (1.0 - 1.0 / p))
}

/// `r*_s = s + r*`: decay character of `Λ^s v₀`.
pub fn r_star_shift(r_star: f64, s: f64) -> f64 {
    s + r_star
}

/// Diagonalizable semigroup with symbol `-c|ξ|^{2σ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagonalSemigroup {
    frac_order: f64,
    damping_floor: f64,
    dimension: usize,
}

impl DiagonalSemigroup {
    pub fn new(frac_order: f64, damping_floor: f64, dimension: usize) -> Result<Self> {
        if !(frac_order > 0.0 && frac_order <= 1.0) {
            return Err(Error::param("frac_order", format!("must lie in (0, 1], got {frac_order}")));
        }
        if !(damping_floor > 0.0 && damping_floor.is_finite()) {
            return Err(Error::param("damping_floor", format!("must be positive, got {damping_floor}")));
        }
        if dimension == 0 {
            return Err(Error::param("dimension", "must be positive"));
        }
        Ok(Self { frac_order, damping_floor, dimension })
    }

    pub fn frac_order(&self) -> f64 {
        self.frac_order
    }
    pub fn damping_floor(&self) -> f64 {
        self.damping_floor
    }
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Predicted exponent `-(d/2 + r*)/σ` of `‖v(t)‖²`.
    pub fn predicted_exponent(&self, r_star: f64) -> f64 {
        -(self.dimension as f64 / 2.0 + r_star) / self.frac_order
    }
}

/// `‖v(t)‖² = ∫ e^{-2c|ξ|^{2σ} t} |v̂₀|² dξ` at each time.
pub fn semigroup_decay_curve(v: &SpectralProfile, sg: &DiagonalSemigroup, times: &[f64]) -> Result<Vec<f64>> {
    if times.is_empty() {
        return Err(Error::param("times", "time grid is empty"));
    }
    if times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("times", "times must be nonnegative and strictly increasing"));
    }
    if sg.dimension() != v.dimension() {
        return Err(Error::param("dimension", "semigroup and profile dimensions differ"));
    }
    let (c, sigma) = (sg.damping_floor(), sg.frac_order());
    times
        .iter()
        .map(|&t| {
            let integrand = |r: f64| (-2.0 * c * r.powf(2.0 * sigma) * t).exp() * v.radial_density(r);
            Ok(v.angular_factor() * radial_integral(integrand, 0.0, v.upper_radius(), QUAD_TOL)?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn correlation_closed_forms() {
        let ind = SpectralProfile::indicator().unwrap();
        for rho in [1e-3, 0.3, 1.0] {
            let v = correlation_integral(&ind, 0.0, rho).unwrap();
            assert!((v - 4.0 * PI / 3.0).abs() < 1e-9 * v, "{rho}: {v}");
        }
        let lin = SpectralProfile::power_cutoff(1.0).unwrap();
        for rho in [1e-2, 0.5, 1.0] {
            let v = correlation_integral(&lin, 1.0, rho).unwrap();
            assert!((v - 4.0 * PI / 5.0).abs() < 1e-9 * v);
        }
        // exponent mismatch: ∝ ρ²
        let a = correlation_integral(&lin, 0.0, 1e-3).unwrap();
        let b = correlation_integral(&lin, 0.0, 1e-4).unwrap();
        assert!((a / b - 100.0).abs() < 1e-6);
        assert!(b < 1e-7);
    }

    #[test]
    fn correlation_rejects_low_r() {
        let ind = SpectralProfile::indicator().unwrap();
        assert!(correlation_integral(&ind, -1.5, 0.1).is_err());
        assert!(correlation_integral(&ind, 0.0, 0.0).is_err());
    }

    #[test]
    fn non_integrable_profile_rejected() {
        assert!(matches!(SpectralProfile::power_gauss(-1.6), Err(Error::NotSquareIntegrable(_))));
        assert!(SpectralProfile::power_gauss(-1.4).is_ok());
    }

    #[test]
    fn indicator_estimate() {
        let est = estimate_r_star(&SpectralProfile::indicator().unwrap()).unwrap();
        assert!(est.r_star.abs() < 1e-6);
        assert!((est.p_r_value / (4.0 * PI / 3.0) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn power_gauss_estimates() {
        for q in [-1.0, 0.0, 1.0, 2.0] {
            let est = estimate_r_star(&SpectralProfile::power_gauss(q).unwrap()).unwrap();
            assert!((est.r_star - q).abs() < 0.05, "q = {q}: {}", est.r_star);
        }
    }

    #[test]
    fn log_oscillation_has_no_decay_character() {
        let err = estimate_r_star(&SpectralProfile::log_oscillating(0.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NoDecayCharacter { .. }), "{err:?}");
    }

    #[test]
    fn lp_formula() {
        assert_eq!(lp_decay_character(1.0, 3).unwrap(), 0.0);
        assert!((lp_decay_character(4.0 / 3.0, 3).unwrap() + 0.75).abs() < 1e-15);
        let near = lp_decay_character(2.0 - 1e-9, 3).unwrap();
        assert!((near + 1.5).abs() < 1e-8 && near > -1.5);
        assert!(lp_decay_character(2.0, 3).is_err());
        assert!(lp_decay_character(0.5, 3).is_err());
    }

    #[test]
    fn shift_identity() {
        assert_eq!(r_star_shift(0.0, 1.0), 1.0);
        assert_eq!(r_star_shift(-0.7, 0.0), -0.7);
        let p = SpectralProfile::power_gauss(0.0).unwrap().with_shift(1.0).unwrap();
        let est = estimate_r_star(&p).unwrap();
        assert!((est.r_star - 1.0).abs() < 0.05);
    }

    #[test]
    fn amplitude_scales_p_only() {
        let a = SpectralProfile::power_gauss(0.5).unwrap();
        let b = a.clone().with_amplitude(2.0).unwrap();
        let (ea, eb) = (estimate_r_star(&a).unwrap(), estimate_r_star(&b).unwrap());
        assert!((ea.r_star - eb.r_star).abs() < 1e-12);
        assert!((eb.p_r_value / ea.p_r_value - 4.0).abs() < 1e-9);
    }

    #[test]
    fn semigroup_validation() {
        assert!(DiagonalSemigroup::new(0.0, 1.0, 3).is_err());
        assert!(DiagonalSemigroup::new(1.5, 1.0, 3).is_err());
        assert!(DiagonalSemigroup::new(1.0, 0.0, 3).is_err());
        let sg = DiagonalSemigroup::new(1.0, 1.0, 3).unwrap();
        let v = SpectralProfile::indicator().unwrap();
        assert!(semigroup_decay_curve(&v, &sg, &[]).is_err());
        assert!(semigroup_decay_curve(&v, &sg, &[2.0, 1.0]).is_err());
    }

    #[test]
    fn semigroup_curve_is_decreasing() {
        let sg = DiagonalSemigroup::new(0.5, 1.0, 3).unwrap();
        let v = SpectralProfile::power_gauss(0.0).unwrap();
        let times: Vec<f64> = (0..20).map(|i| 0.1 * 1.6f64.powi(i)).collect();
        let curve = semigroup_decay_curve(&v, &sg, &times).unwrap();
        assert!(curve.windows(2).all(|w| w[1] < w[0]));
        // t = 0 reproduces the L² norm
        let at0 = semigroup_decay_curve(&v, &sg, &[0.0]).unwrap()[0];
        assert!((at0 / v.norm_sq().unwrap() - 1.0).abs() < 1e-10);
    }
}

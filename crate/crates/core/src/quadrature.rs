//! Radial and spherical quadrature for continuum norms on `ℝ^d`.
//!
//! Radial integrals are computed in the logarithmic variable `x = ln r` with
//! composite Gauss–Legendre panels, which resolves power-law behaviour near
//! the origin and concentrated Gaussian bumps alike. The contribution below
//! the smallest node is closed with a power-law tail fitted at the cutoff.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Surface area of the unit sphere `S^{d-1}`.
pub fn sphere_area(dimension: usize) -> f64 {
    match dimension {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        d => 2.0 * PI / (d - 2) as f64 * sphere_area(d - 2),
    }
}

/// Volume of the unit ball in `ℝ^d`.
pub fn unit_ball_volume(dimension: usize) -> f64 {
    sphere_area(dimension) / dimension as f64
}

/// Integral of `r^{p-1}` on `(0, r0]` given the value `h0 = c r0^p`.
fn power_tail(r0: f64, h0: f64, r1: f64, h1: f64) -> f64 {
    if h0 == 0.0 || h1 == 0.0 {
        return 0.0;
    }
    let p = (h1 / h0).ln() / (r1 / r0).ln();
    if p.is_finite() && p > 1e-3 {
        h0 / p
    } else {
        f64::INFINITY
    }
}

/// Fixed log-spaced quadrature for `∫_{ℝ^d} f(|ξ|) dξ`.
#[derive(Debug, Clone)]
pub struct RadialQuadrature {
    dimension: usize,
    r_min: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialQuadrature {
    pub const DEFAULT_PANELS: usize = 128;
    pub const DEFAULT_ORDER: usize = 16;

    /// `panels × order` nodes on `[r_min, r_max]`.
    pub fn new(dimension: usize, r_min: f64, r_max: f64, panels: usize, order: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::param("dimension", "must be positive"));
        }
        if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
            return Err(Error::param("radius", format!("need 0 < r_min < r_max, got [{r_min}, {r_max}]")));
        }
        if panels == 0 || order == 0 {
            return Err(Error::param("panels", "need at least one panel and one node"));
        }
        let (gx, gw) = gauss_legendre(order);
        let (x0, x1) = (r_min.ln(), r_max.ln());
        let h = (x1 - x0) / panels as f64;
        let area = sphere_area(dimension);
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let mid = x0 + (p as f64 + 0.5) * h;
            for (x, w) in gx.iter().zip(&gw) {
                let r = (mid + 0.5 * h * x).exp();
                nodes.push(r);
                weights.push(area * 0.5 * h * w * r.powi(dimension as i32));
            }
        }
        Ok(Self { dimension, r_min, nodes, weights })
    }

    /// 2048 nodes on `[1e-4, 1e2]`.
    pub fn standard(dimension: usize) -> Self {
        Self::new(dimension, 1e-4, 1e2, Self::DEFAULT_PANELS, Self::DEFAULT_ORDER).expect("valid defaults")
    }

    /// Same node density, truncated at `r_max` (for compactly supported data).
    pub fn standard_truncated(dimension: usize, r_max: f64) -> Result<Self> {
        let r_max = r_max.min(1e2);
        let decades = (r_max / 1e-4).log10();
        let panels = ((Self::DEFAULT_PANELS as f64) * decades / 6.0).ceil().max(8.0) as usize;
        Self::new(dimension, 1e-4, r_max, panels, Self::DEFAULT_ORDER)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    /// Weighted sum of precomputed integrand samples (one per node) plus the
    /// power-law tail below `r_min`, which needs the radial integrand at
    /// `r_min` and `2 r_min`.
    pub fn sum_with_tail(&self, samples: &[f64], at_min: f64, at_twice_min: f64) -> f64 {
        let body: f64 = samples.iter().zip(&self.weights).map(|(f, w)| f * w).sum();
        body + self.tail(at_min, at_twice_min)
    }

    fn tail(&self, f0: f64, f1: f64) -> f64 {
        let d = self.dimension as i32;
        let (r0, r1) = (self.r_min, 2.0 * self.r_min);
        sphere_area(self.dimension) * power_tail(r0, f0 * r0.powi(d), r1, f1 * r1.powi(d))
    }

    /// `∫_{ℝ^d} f(|ξ|) dξ`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let samples: Vec<f64> = self.nodes.iter().map(|&r| f(r)).collect();
        self.sum_with_tail(&samples, f(self.r_min), f(2.0 * self.r_min))
    }
}

/// Adaptive `∫_lo^hi g(r) dr` for `0 ≤ lo < hi`, refining log-spaced
/// Gauss–Legendre panels until the relative change drops below `rel_tol`.
/// A zero lower limit is handled with a power-law tail below `hi·1e-14`.
pub fn radial_integral(g: impl Fn(f64) -> f64, lo: f64, hi: f64, rel_tol: f64) -> Result<f64> {
    const MAX_PANELS: usize = 8192;
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::param("interval", format!("need 0 <= lo < hi, got [{lo}, {hi}]")));
    }
    let a = if lo == 0.0 { hi * 1e-14 } else { lo };
    let tail = if lo == 0.0 {
        let (r0, r1) = (a, 2.0 * a);
        power_tail(r0, g(r0) * r0, r1, g(r1) * r1)
    } else {
        0.0
    };
    if !tail.is_finite() {
        return Err(Error::NotSquareIntegrable(format!("integrand is not integrable at the origin (near r = {a:e})")));
    }
    let (gx, gw) = gauss_legendre(16);
    let (x0, x1) = (a.ln(), hi.ln());
    let eval = |panels: usize| -> f64 {
        let h = (x1 - x0) / panels as f64;
        (0..panels)
            .map(|p| {
                let mid = x0 + (p as f64 + 0.5) * h;
                gx.iter()
                    .zip(&gw)
                    .map(|(x, w)| {
                        let r = (mid + 0.5 * h * x).exp();
                        w * g(r) * r
                    })
                    .sum::<f64>()
                    * 0.5
                    * h
            })
            .sum()
    };
    let mut panels = 16;
    let mut prev = eval(panels);
    loop {
        panels *= 2;
        let cur = eval(panels);
        let change = (cur - prev).abs() / cur.abs().max(f64::MIN_POSITIVE);
        if change <= rel_tol || cur == prev {
            return Ok(cur + tail);
        }
        if panels >= MAX_PANELS {
            return Err(Error::QuadratureNonConvergence { panels, change });
        }
        prev = cur;
    }
}

/// Product rule on the unit sphere `S²`: Gauss–Legendre in `cos θ` times the
/// trapezoid rule in `φ`. Exact for polynomials in the direction components
/// of degree below `min(2 n_mu, n_phi)`.
#[derive(Debug, Clone)]
pub struct SphereRule {
    points: Vec<([f64; 3], f64)>,
}

impl SphereRule {
    pub fn new(n_mu: usize, n_phi: usize) -> Self {
        let (mu, wmu) = gauss_legendre(n_mu);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut points = Vec::with_capacity(n_mu * n_phi);
        for (m, w) in mu.iter().zip(&wmu) {
            let s = (1.0 - m * m).sqrt();
            for k in 0..n_phi {
                let phi = (k as f64 + 0.5) * dphi;
                points.push(([s * phi.cos(), s * phi.sin(), *m], w * dphi));
            }
        }
        Self { points }
    }

    /// Exact through degree 19.
    pub fn standard() -> Self {
        Self::new(10, 20)
    }

    pub fn points(&self) -> &[([f64; 3], f64)] {
        &self.points
    }

    pub fn integrate(&self, f: impl Fn([f64; 3]) -> f64) -> f64 {
        self.points.iter().map(|(n, w)| w * f(*n)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let int: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((int - 2.0 / 15.0).abs() < 1e-14);
        let (x1, w1) = gauss_legendre(1);
        assert_eq!((x1[0], w1[0]), (0.0, 2.0));
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
    }

    #[test]
    fn unit_ball_volume_from_radial_rule() {
        let q = RadialQuadrature::standard_truncated(3, 1.0).unwrap();
        let v = q.integrate(|_| 1.0);
        assert!(((v - 4.0 * PI / 3.0) / (4.0 * PI / 3.0)).abs() < 1e-8, "{v}");
        let full = RadialQuadrature::standard(3);
        assert!(full.weights().iter().all(|&w| w > 0.0));
        assert_eq!(full.nodes().len(), 2048);
    }

    #[test]
    fn gaussian_moment() {
        // ∫ e^{-|ξ|²} dξ = π^{3/2}
        let q = RadialQuadrature::standard(3);
        let v = q.integrate(|r| (-r * r).exp());
        assert!((v / PI.powf(1.5) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn adaptive_handles_weak_singularity() {
        // ∫_0^1 r^{-0.9} dr = 10
        let v = radial_integral(|r| r.powf(-0.9), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 10.0).abs() < 1e-8, "{v}");
        assert!(radial_integral(|r| r.powf(-1.2), 0.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn sphere_rule_moments() {
        let s = SphereRule::standard();
        assert!((s.integrate(|_| 1.0) - 4.0 * PI).abs() < 1e-13);
        assert!((s.integrate(|n| n[0] * n[0]) - 4.0 * PI / 3.0).abs() < 1e-13);
        assert!((s.integrate(|n| n[0].powi(2) * n[1].powi(2)) - 4.0 * PI / 15.0).abs() < 1e-13);
        assert!(s.integrate(|n| n[0] * n[1].powi(2)).abs() < 1e-14);
    }
}

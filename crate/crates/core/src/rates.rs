//! Predicted decay exponents, log-log slope fits and alignment diagnostics.

use serde::{Deserialize, Serialize};

use crate::decay::{DiagonalSemigroup, SpectralProfile};
use crate::error::{Error, Result};
use crate::quadrature::radial_integral;
use crate::spectral::{deterministic_sum, SpectralField};

/// Columns recorded by the solver, in CSV order (after `t`).
pub const SOLVER_COLUMNS: [&str; 11] = [
    "u_l2sq",
    "u_h1sq",
    "u_h2sq",
    "tau_l2sq",
    "tau_h1sq",
    "tau_h2sq",
    "eps_l2sq",
    "div_u",
    "trace_tau_max",
    "energy",
    "align_cos",
];

/// `α = min{3/2, 3/2 + min{r_u, 1 + r_τ}}`.
pub fn alpha(r_u: f64, r_tau: f64) -> Result<f64> {
    check_r("r_u", r_u)?;
    check_r("r_tau", r_tau)?;
    Ok(1.5f64.min(1.5 + r_u.min(1.0 + r_tau)))
}

fn check_r(name: &'static str, r: f64) -> Result<()> {
    if r.is_finite() && r > -1.5 {
        Ok(())
    } else {
        Err(Error::param(name, format!("decay character must exceed -3/2, got {r}")))
    }
}

/// Exponent of the linear Lyapunov quantity `ω‖u_L‖² + ½‖τ_L‖²`;
/// `None` marks a vanishing component.
pub fn linear_exponent(r_u: Option<f64>, r_tau: Option<f64>) -> Result<f64> {
    let mut m = f64::INFINITY;
    if let Some(r) = r_u {
        check_r("r_u", r)?;
        m = m.min(r);
    }
    if let Some(r) = r_tau {
        check_r("r_tau", r)?;
        m = m.min(1.0 + r);
    }
    if m.is_infinite() {
        return Err(Error::param("data", "both components vanish"));
    }
    Ok(-(1.5 + m))
}

/// Quantity whose squared norm carries a predicted exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    /// `‖(u, τ)‖²`
    Energy,
    /// `‖∇ᵏ(u, τ)‖²`, `k = 0, 1, 2`
    Grad(u8),
    /// `‖∇ʲτ‖²`, `j = 0, 1`
    TauGrad(u8),
    /// `‖τ - 2ωD(u)‖²`
    Elastic,
}

/// Which lower-bound hypothesis holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerBoundCase {
    /// `r_u ≤ 1 + r_τ`, `r_u ≤ 0`
    A,
    /// `1 + r_τ ≤ r_u`, `1 + r_τ ≤ 0`
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePrediction {
    pub r_u: f64,
    pub r_tau: f64,
    pub alpha: f64,
    pub table: Vec<(Quantity, f64)>,
    pub lower_case_a: Option<f64>,
    pub lower_case_b: Option<f64>,
}

pub fn predicted_exponents(r_u: f64, r_tau: f64) -> Result<RatePrediction> {
    let a = alpha(r_u, r_tau)?;
    let table = vec![
        (Quantity::Energy, -a),
        (Quantity::Grad(0), -a),
        (Quantity::Grad(1), -(1.0 + a)),
        (Quantity::Grad(2), -(2.0 + a)),
        (Quantity::TauGrad(0), -(1.0 + a)),
        (Quantity::TauGrad(1), -(2.0 + a)),
        (Quantity::Elastic, -(2.0 + a)),
    ];
    let lower_case_a = (r_u <= 1.0 + r_tau && r_u <= 0.0).then(|| -(2.5 + r_u));
    let lower_case_b = (1.0 + r_tau <= r_u && 1.0 + r_tau <= 0.0).then(|| -(3.5 + r_tau));
    let p = RatePrediction { r_u, r_tau, alpha: a, table, lower_case_a, lower_case_b };
    let (eps, tau, grad) = (
        p.exponent(Quantity::Elastic).unwrap_or(f64::NAN),
        p.exponent(Quantity::TauGrad(0)).unwrap_or(f64::NAN),
        p.exponent(Quantity::Grad(1)).unwrap_or(f64::NAN),
    );
    debug_assert!(eps == tau - 1.0 && tau == grad);
    Ok(p)
}

impl RatePrediction {
    pub fn exponent(&self, q: Quantity) -> Option<f64> {
        self.table.iter().find(|(k, _)| *k == q).map(|(_, e)| *e)
    }

    /// Exponent attached to a solver/linear series column.
    pub fn exponent_for_column(&self, column: &str) -> Option<f64> {
        let q = match column {
            "energy" => Quantity::Energy,
            "u_l2sq" => Quantity::Grad(0),
            "u_h1sq" => Quantity::Grad(1),
            "u_h2sq" | "tau_h2sq" => Quantity::Grad(2),
            "tau_l2sq" => Quantity::TauGrad(0),
            "tau_h1sq" => Quantity::TauGrad(1),
            "eps_l2sq" => Quantity::Elastic,
            _ => return None,
        };
        self.exponent(q)
    }

    /// Applicable two-sided case and its exponent (case a preferred when both hold,
    /// in which event both exponents coincide).
    pub fn two_sided(&self) -> Option<(LowerBoundCase, f64)> {
        self.lower_case_a.map(|e| (LowerBoundCase::A, e)).or(self.lower_case_b.map(|e| (LowerBoundCase::B, e)))
    }
}

/// Time grid with named columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries {
    times: Vec<f64>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Self {
        Self {
            times: Vec::new(),
            names: names.iter().map(|s| s.as_ref().to_string()).collect(),
            columns: vec![Vec::new(); names.len()],
        }
    }

    pub fn from_columns(times: Vec<f64>, columns: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let mut s = Self { times, names: Vec::new(), columns: Vec::new() };
        for (n, c) in columns {
            if c.len() != s.times.len() {
                return Err(Error::Series(format!("column {n} has {} rows, expected {}", c.len(), s.times.len())));
            }
            s.names.push(n);
            s.columns.push(c);
        }
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if self.times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::Series("times must be finite and nonnegative".into()));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Series("times must be strictly increasing".into()));
        }
        for (n, c) in self.names.iter().zip(&self.columns) {
            if !n.ends_with("cos") && c.iter().any(|v| *v < 0.0) {
                return Err(Error::Series(format!("column {n} has negative entries")));
            }
        }
        Ok(())
    }

    /// Append one row; values in column order.
    pub fn push(&mut self, t: f64, row: &[f64]) -> Result<()> {
        if row.len() != self.names.len() {
            return Err(Error::Series(format!("row has {} values, expected {}", row.len(), self.names.len())));
        }
        if let Some(&last) = self.times.last() {
            if t <= last {
                return Err(Error::Series(format!("time {t} does not follow {last}")));
            }
        }
        for ((n, c), v) in self.names.iter().zip(self.columns.iter_mut()).zip(row) {
            if !n.ends_with("cos") && *v < 0.0 {
                return Err(Error::Series(format!("column {n} would get negative value {v}")));
            }
            c.push(*v);
        }
        self.times.push(t);
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
    pub fn names(&self) -> &[String] {
        &self.names
    }
    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    /// Append (or replace) a derived column.
    pub fn with_column(mut self, name: &str, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.times.len() {
            return Err(Error::Series(format!("column {name} has wrong length")));
        }
        match self.names.iter().position(|n| n == name) {
            Some(i) => self.columns[i] = values,
            None => {
                self.names.push(name.to_string());
                self.columns.push(values);
            }
        }
        self.validate()?;
        Ok(self)
    }

    /// Value of a column at the sample closest to `t`.
    pub fn value_near(&self, name: &str, t: f64) -> Result<(f64, f64)> {
        let col = self.column(name)?;
        let i = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
            .ok_or_else(|| Error::Series("empty series".into()))?;
        Ok((self.times[i], col[i]))
    }
}

/// Ordinary least-squares line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub max_residual: f64,
}

pub fn ols(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::Fit("x and y differ in length".into()));
    }
    if n < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Fit("abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let resid: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - intercept - slope * a).collect();
    let sse: f64 = resid.iter().map(|r| r * r).sum();
    let slope_stderr = (sse / (nf - 2.0) / sxx).sqrt();
    let max_residual = resid.iter().map(|r| r.abs()).fold(0.0, f64::max);
    Ok(LinearFit { slope, intercept, slope_stderr, max_residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub window: (f64, f64),
    pub n_points: usize,
    pub max_residual: f64,
}

/// OLS slope of `log(column)` against `log(1 + t)` for samples with `t` in `window`.
pub fn fit_loglog_slope(series: &TimeSeries, column: &str, window: (f64, f64)) -> Result<SlopeFit> {
    let col = series.column(column)?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (&t, &v) in series.times().iter().zip(col) {
        if t >= window.0 && t <= window.1 {
            if !(v > 0.0) {
                return Err(Error::Fit(format!("column {column} is not positive at t = {t} ({v})")));
            }
            xs.push((1.0 + t).ln());
            ys.push(v.ln());
        }
    }
    if xs.len() < 4 {
        return Err(Error::Fit(format!(
            "only {} samples of {column} in window [{}, {}]",
            xs.len(),
            window.0,
            window.1
        )));
    }
    let fit = ols(&xs, &ys)?;
    Ok(SlopeFit {
        slope: fit.slope,
        stderr: fit.slope_stderr,
        window,
        n_points: xs.len(),
        max_residual: fit.max_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

/// One line of a JSON report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRecord {
    pub quantity: String,
    pub predicted_exponent: Option<f64>,
    pub fitted_slope: Option<f64>,
    pub stderr: Option<f64>,
    pub window: (f64, f64),
    pub verdict: Verdict,
}

impl ReportRecord {
    /// Record comparing a fitted slope with a predicted exponent at `tol`.
    pub fn compare(quantity: &str, predicted: f64, fit: &SlopeFit, tol: f64) -> Self {
        let verdict = if (fit.slope - predicted).abs() <= tol { Verdict::Pass } else { Verdict::Fail };
        Self {
            quantity: quantity.to_string(),
            predicted_exponent: Some(predicted),
            fitted_slope: Some(fit.slope),
            stderr: Some(fit.stderr),
            window: fit.window,
            verdict,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentTolerances {
    pub window: (f64, f64),
    /// Largest accepted slope of `‖ε‖²/‖τ‖²`.
    pub max_ratio_slope: f64,
    /// Smallest accepted cosine at the end of the window.
    pub min_final_cos: f64,
}

impl Default for AlignmentTolerances {
    fn default() -> Self {
        Self { window: (5.0, 50.0), max_ratio_slope: -0.7, min_final_cos: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentReport {
    /// `None` when the residual vanishes identically in the window.
    pub ratio_slope: Option<SlopeFit>,
    pub predicted_ratio_slope: f64,
    pub cos_start: (f64, f64),
    pub cos_end: (f64, f64),
    pub ratio_verdict: Verdict,
    pub cosine_verdict: Verdict,
    pub verdict: Verdict,
}

/// Ratio slope of `‖ε‖²/‖τ‖²` and the trend of the alignment cosine.
pub fn alignment_report(series: &TimeSeries, tol: &AlignmentTolerances) -> Result<AlignmentReport> {
    let tau = series.column("tau_l2sq")?;
    let eps = series.column("eps_l2sq")?;
    let cos = series.column("align_cos")?;
    if tau.iter().all(|v| *v == 0.0) {
        return Err(Error::Series("tau column is identically zero".into()));
    }
    let (lo, hi) = tol.window;
    let in_window = |t: f64| t >= lo && t <= hi;
    if series.times().iter().any(|&t| in_window(t))
        && series.times().iter().zip(tau).any(|(&t, &v)| in_window(t) && v == 0.0)
    {
        return Err(Error::Series("tau vanishes inside the alignment window".into()));
    }
    let ratio: Vec<f64> = eps.iter().zip(tau).map(|(e, t)| if *t > 0.0 { e / t } else { 0.0 }).collect();
    let ratio_vanishes = series.times().iter().zip(&ratio).all(|(&t, &r)| !in_window(t) || r <= 1e-300);
    let ratio_slope = if ratio_vanishes {
        None
    } else {
        let s = series.clone().with_column("eps_over_tau", ratio)?;
        Some(fit_loglog_slope(&s, "eps_over_tau", tol.window)?)
    };
    let ratio_verdict = match &ratio_slope {
        None => Verdict::Pass,
        Some(f) if f.slope <= tol.max_ratio_slope => Verdict::Pass,
        Some(_) => Verdict::Fail,
    };
    let cos_start = series.value_near("align_cos", lo)?;
    let cos_end = series.value_near("align_cos", hi)?;
    let guard = |c: f64| if c.is_finite() { c } else { 0.0 };
    let (c0, c1) = (guard(cos_start.1), guard(cos_end.1));
    let trivially_aligned = cos.iter().all(|c| (c - 1.0).abs() < 1e-12);
    let cosine_verdict =
        if trivially_aligned || (c1 > c0 && c1 > tol.min_final_cos) { Verdict::Pass } else { Verdict::Fail };
    let verdict =
        if ratio_verdict == Verdict::Pass && cosine_verdict == Verdict::Pass { Verdict::Pass } else { Verdict::Fail };
    Ok(AlignmentReport {
        ratio_slope,
        predicted_ratio_slope: -1.0,
        cos_start: (cos_start.0, c0),
        cos_end: (cos_end.0, c1),
        ratio_verdict,
        cosine_verdict,
        verdict,
    })
}

/// `V Σ_{|k| ≤ radius} |f̂(k)|²` over a box field.
pub fn ball_energy<F: SpectralField>(field: &F, radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::param("radius", format!("must be positive, got {radius}")));
    }
    let g = field.grid();
    let r2 = radius * radius * (1.0 + 1e-12);
    let comps = field.components();
    let mult = field.multiplicities();
    Ok(g.volume()
        * deterministic_sum(g.len(), |m| {
            if g.kmag2(m) <= r2 {
                comps.iter().zip(mult).map(|(c, w)| w * c[m].norm_sqr()).sum()
            } else {
                0.0
            }
        }))
}

/// `∫_{|ξ| ≤ radius} e^{-2c|ξ|^{2σ}t} |v̂|² dξ` for a profile evolved by a
/// diagonal semigroup.
pub fn continuum_ball_energy(v: &SpectralProfile, sg: &DiagonalSemigroup, t: f64, radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::param("radius", format!("must be positive, got {radius}")));
    }
    let hi = v.support().map_or(radius, |s| s.min(radius));
    let d = v.dimension() as i32;
    let (c, sigma) = (sg.damping_floor(), sg.frac_order());
    let g = |r: f64| (-2.0 * c * r.powf(2.0 * sigma) * t).exp() * v.radial(r).powi(2) * r.powi(d - 1);
    Ok(v.angular_factor() * radial_integral(g, 0.0, hi, 1e-11)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoSidedVerdict {
    pub case: Option<LowerBoundCase>,
    pub records: Vec<ReportRecord>,
}

impl TwoSidedVerdict {
    pub fn passed(&self) -> bool {
        self.case.is_some() && self.records.iter().all(|r| r.verdict == Verdict::Pass)
    }
}

/// Columns holding `‖D(u)‖²` (up to the factor ½ for solenoidal fields) and `‖τ‖²`.
pub const TWO_SIDED_COLUMNS: [&str; 2] = ["u_h1sq", "tau_l2sq"];

/// Fit `‖∇u‖²` and `‖τ‖²` and compare with the applicable two-sided exponent.
pub fn two_sided_check(
    series: &TimeSeries,
    prediction: &RatePrediction,
    window: (f64, f64),
    tol: f64,
) -> Result<TwoSidedVerdict> {
    let Some((case, exponent)) = prediction.two_sided() else {
        let records = TWO_SIDED_COLUMNS
            .iter()
            .map(|c| ReportRecord {
                quantity: c.to_string(),
                predicted_exponent: None,
                fitted_slope: None,
                stderr: None,
                window,
                verdict: Verdict::NotApplicable,
            })
            .collect();
        return Ok(TwoSidedVerdict { case: None, records });
    };
    let records = TWO_SIDED_COLUMNS
        .iter()
        .map(|c| Ok(ReportRecord::compare(c, exponent, &fit_loglog_slope(series, c, window)?, tol)))
        .collect::<Result<Vec<_>>>()?;
    Ok(TwoSidedVerdict { case: Some(case), records })
}

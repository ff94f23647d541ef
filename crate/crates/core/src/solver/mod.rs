//! Pseudo-spectral exponential integrator for the Oldroyd-B system on the
//! periodic box. The linear part is advanced exactly by the per-mode
//! propagator; only the quadratic terms are discretized in time.

mod diagnostics;
mod initial;

use std::path::{Path, PathBuf};

use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use diagnostics::{diagnostics, dissipation_rate, elastic_residual, energy, Diagnostics};
pub use initial::{profile_fields, random_band, remove_trace};

use crate::error::{Error, Result};
use crate::linear::ScaledKernels;
use crate::rates::{TimeSeries, SOLVER_COLUMNS};
use crate::spectral::{
    h2_norm_sq, leray_project_in_place, FluidParams, FourierGrid, PseudoSpectral, SpectralField, SpectralTensorField,
    SpectralVectorField,
};
use diagnostics::{mode_dissipation, mode_sums};

/// Above this `H²` norm of the initial data the small-data theory no longer
/// applies and `run` logs a warning.
pub const SMALL_DATA_THRESHOLD: f64 = 0.1;
pub const DEFAULT_CFL_CAP: f64 = 0.5;

/// Velocity and stress coefficients at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub time: f64,
    pub u: SpectralVectorField,
    pub tau: SpectralTensorField,
    pub params: FluidParams,
}

impl SimState {
    /// Validates grids and finiteness, projects `u`, and zeroes modes
    /// outside the dealias mask.
    pub fn new(
        mut u: SpectralVectorField,
        mut tau: SpectralTensorField,
        params: FluidParams,
        time: f64,
    ) -> Result<Self> {
        if u.grid() != tau.grid() {
            return Err(Error::GridMismatch);
        }
        if !(time.is_finite() && time >= 0.0) {
            return Err(Error::param("time", format!("must be nonnegative, got {time}")));
        }
        if !(u.is_finite() && tau.is_finite()) {
            return Err(Error::NonFinite { time });
        }
        u.apply_dealias();
        tau.apply_dealias();
        leray_project_in_place(&mut u);
        Ok(Self { time, u, tau, params })
    }

    pub fn zeros(grid: &FourierGrid, params: FluidParams) -> Self {
        Self { time: 0.0, u: SpectralVectorField::zeros(grid), tau: SpectralTensorField::zeros(grid), params }
    }

    pub fn grid(&self) -> &FourierGrid {
        self.u.grid()
    }

    /// `‖(u, τ)‖_{H²}`.
    pub fn h2_norm(&self) -> f64 {
        (h2_norm_sq(&self.u) + h2_norm_sq(&self.tau)).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.tau.is_finite()
    }

    pub fn energy(&self) -> f64 {
        energy(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    EtdHeun,
    EtdEuler,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub integrator: Integrator,
    /// Steps between checkpoints; 0 disables them.
    pub checkpoint_every: usize,
    pub diagnostics_every: usize,
    pub cfl_cap: f64,
    /// Directory for checkpoints and failure records; nothing is written
    /// when unset.
    pub output_dir: Option<PathBuf>,
    pub nonlinear: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            t_end: 1.0,
            integrator: Integrator::EtdHeun,
            checkpoint_every: 0,
            diagnostics_every: 1,
            cfl_cap: DEFAULT_CFL_CAP,
            output_dir: None,
            nonlinear: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::param("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::param("t_end", format!("must be positive, got {}", self.t_end)));
        }
        if self.diagnostics_every == 0 {
            return Err(Error::param("diagnostics_every", "must be at least 1"));
        }
        if !(self.cfl_cap.is_finite() && self.cfl_cap > 0.0) {
            return Err(Error::param("cfl_cap", format!("must be positive, got {}", self.cfl_cap)));
        }
        Ok(())
    }
}

/// Quadratic terms `N_u = -ℙ(u·∇)u`, `N_τ = -(u·∇τ + g_a(τ, ∇u))`, plus the
/// advective rate used for the CFL check.
#[derive(Debug, Clone)]
pub struct NonlinearTerms {
    pub du: SpectralVectorField,
    pub dtau: SpectralTensorField,
    pub cfl_rate: f64,
}

/// Result of one step: the new state, `∫ (‖τ‖² + 2ω(1-ω)‖∇u‖²) dt` over the
/// step, and the largest CFL number seen.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: SimState,
    pub dissipation: f64,
    pub cfl_number: f64,
}

const GAUSS3: [(f64, f64); 3] =
    [(0.5 - 0.387_298_334_620_741_7, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + 0.387_298_334_620_741_7, 5.0 / 18.0)];
const MAX_CACHED_STEPS: usize = 8;

/// Per-mode kernels for the retained modes, keyed by step length.
struct KernelCache {
    modes: Vec<usize>,
    slot: Vec<usize>,
    entries: Vec<(u64, Vec<ScaledKernels>)>,
}

impl KernelCache {
    fn new(grid: &FourierGrid) -> Self {
        let modes: Vec<usize> = (0..grid.len()).filter(|&i| grid.is_retained(i)).collect();
        let mut slot = vec![usize::MAX; grid.len()];
        for (p, &i) in modes.iter().enumerate() {
            slot[i] = p;
        }
        Self { modes, slot, entries: Vec::new() }
    }

    /// Position of the kernels for step `h` in `entries`, building them if
    /// needed.
    fn ensure(&mut self, h: f64, grid: &FourierGrid, params: &FluidParams) -> usize {
        let key = h.to_bits();
        if let Some(pos) = self.entries.iter().position(|(k, _)| *k == key) {
            return pos;
        }
        if self.entries.len() == MAX_CACHED_STEPS {
            self.entries.remove(0);
        }
        let ks = self.modes.par_iter().map(|&i| ScaledKernels::new(grid.wavevector(i), h, params)).collect();
        self.entries.push((key, ks));
        self.entries.len() - 1
    }
}

/// Stepper bound to one grid and parameter set. Keeps per-mode kernels for
/// every step length it has seen (up to a small cap).
pub struct Solver {
    engine: PseudoSpectral,
    params: FluidParams,
    cache: KernelCache,
    nonlinear: bool,
    cfl_cap: f64,
}

impl Solver {
    pub fn new(grid: &FourierGrid, params: FluidParams) -> Self {
        Self {
            engine: PseudoSpectral::new(grid),
            params,
            cache: KernelCache::new(grid),
            nonlinear: true,
            cfl_cap: DEFAULT_CFL_CAP,
        }
    }

    pub fn with_nonlinear(mut self, on: bool) -> Self {
        self.nonlinear = on;
        self
    }

    pub fn with_cfl_cap(mut self, cap: f64) -> Self {
        self.cfl_cap = cap;
        self
    }

    pub fn grid(&self) -> &FourierGrid {
        self.engine.grid()
    }

    pub fn engine(&self) -> &PseudoSpectral {
        &self.engine
    }

    pub fn params(&self) -> &FluidParams {
        &self.params
    }

    fn check(&self, state: &SimState) -> Result<()> {
        if state.grid() != self.grid() {
            return Err(Error::GridMismatch);
        }
        if state.params != self.params {
            return Err(Error::param("params", "state parameters differ from the solver's"));
        }
        Ok(())
    }

    /// Apply the exact linear propagator for time `h` to `u + c·du`,
    /// `τ + c·dτ`.
    fn propagate_combined(
        &mut self,
        h: f64,
        state: &SimState,
        n: Option<(&NonlinearTerms, f64)>,
    ) -> (SpectralVectorField, SpectralTensorField) {
        let g = self.engine.grid();
        let pos = self.cache.ensure(h, g, &self.params);
        let ks = &self.cache.entries[pos].1;
        let out: Vec<([C; 3], [C; 6])> = self
            .cache
            .modes
            .par_iter()
            .zip(ks.par_iter())
            .map(|(&i, k)| {
                let (u0, t0) = combined_mode(state, n, i);
                k.apply(&u0, &t0)
            })
            .collect();
        let mut u = SpectralVectorField::zeros(g);
        let mut tau = SpectralTensorField::zeros(g);
        for (&i, (um, tm)) in self.cache.modes.iter().zip(out) {
            u.set_mode(i, um);
            tau.set_mode(i, tm);
        }
        (u, tau)
    }

    /// Gauss-Legendre estimate of the dissipation integral over a step,
    /// evaluating `G(θh)(z + θh·N(z))` at each node.
    fn step_dissipation(&mut self, h: f64, state: &SimState, n: Option<&NonlinearTerms>) -> f64 {
        let omega = self.params.omega();
        let g = self.engine.grid();
        let mut total = 0.0;
        for (theta, w) in GAUSS3 {
            let pos = self.cache.ensure(theta * h, g, &self.params);
            let ks = &self.cache.entries[pos].1;
            let slot = &self.cache.slot;
            let [d] = mode_sums::<1, _>(g, |i| {
                let (u0, t0) = combined_mode(state, n.map(|n| (n, theta * h)), i);
                let (u1, t1) = ks[slot[i]].apply(&u0, &t0);
                [mode_dissipation(g.kmag2(i), &u1, &t1, omega)]
            });
            total += w * h * d * g.volume();
        }
        total
    }

    /// Evaluate the quadratic terms. Returns zeros without any transforms
    /// when `u` vanishes or the nonlinearity is switched off.
    pub fn nonlinear_rhs(&self, state: &SimState) -> Result<NonlinearTerms> {
        self.check(state)?;
        let g = self.grid();
        if !self.nonlinear || state.u.max_abs() == 0.0 {
            return Ok(NonlinearTerms {
                du: SpectralVectorField::zeros(g),
                dtau: SpectralTensorField::zeros(g),
                cfl_rate: 0.0,
            });
        }
        let e = &self.engine;
        let vel = e.velocity(&state.u)?;
        let cfl_rate = vel.cfl_rate(g.k_max_retained());
        let tau_refs: Vec<&[C]> = state.tau.components().iter().map(|c| c.as_slice()).collect();
        let tau_phys = e.to_physical(&tau_refs);
        let adv_tau = e.advect_physical(&vel, state.tau.components());
        let ga = e.g_a_physical(&vel, &tau_phys, self.params.a());
        drop(tau_phys);
        let npts = g.len();
        let adv_u: Vec<Vec<f64>> = (0..3)
            .map(|j| (0..npts).into_par_iter().map(|p| (0..3).map(|l| vel.u[l][p] * vel.grad[j][l][p]).sum()).collect())
            .collect();
        let stress: Vec<Vec<f64>> = adv_tau
            .into_iter()
            .zip(ga)
            .map(|(mut a, b)| {
                a.par_iter_mut().zip(b.par_iter()).for_each(|(x, y)| *x += y);
                a
            })
            .collect();
        let mut refs: Vec<&[f64]> = adv_u.iter().map(|v| v.as_slice()).collect();
        refs.extend(stress.iter().map(|v| v.as_slice()));
        let mut spec = e.to_spectral(&refs).into_iter();
        let mut du = SpectralVectorField::from_components(g, std::array::from_fn(|_| spec.next().expect("3 comps")))?;
        let mut dtau = SpectralTensorField::from_components(g, std::array::from_fn(|_| spec.next().expect("6 comps")))?;
        leray_project_in_place(&mut du);
        du.scale(-1.0);
        dtau.scale(-1.0);
        Ok(NonlinearTerms { du, dtau, cfl_rate })
    }

    fn checked_rhs(&self, state: &SimState, h: f64) -> Result<(NonlinearTerms, f64)> {
        let n = self.nonlinear_rhs(state)?;
        let number = h * n.cfl_rate;
        if !number.is_finite() {
            return Err(Error::NonFinite { time: state.time });
        }
        if number > self.cfl_cap {
            return Err(Error::Cfl { number, cap: self.cfl_cap });
        }
        Ok((n, number))
    }

    /// Heun corrector `z' = G(h)(z + h/2·N(z)) + h/2·N(z_pred)` with predictor
    /// `z_pred = G(h)(z + h·N(z))`.
    pub fn step_etd_heun(&mut self, state: &SimState, h: f64) -> Result<StepOutcome> {
        self.step(state, h, Integrator::EtdHeun)
    }

    /// `z' = G(h)(z + h·N(z))`.
    pub fn step_etd_euler(&mut self, state: &SimState, h: f64) -> Result<StepOutcome> {
        self.step(state, h, Integrator::EtdEuler)
    }

    pub fn step(&mut self, state: &SimState, h: f64, integrator: Integrator) -> Result<StepOutcome> {
        self.check(state)?;
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::param("dt", format!("must be positive, got {h}")));
        }
        let (n0, cfl0) = self.checked_rhs(state, h)?;
        let linear_only = n0.cfl_rate == 0.0;
        let n0_ref = (!linear_only).then_some(&n0);
        let dissipation = self.step_dissipation(h, state, n0_ref);
        let (pu, pt) = self.propagate_combined(h, state, n0_ref.map(|n| (n, h)));
        let time = state.time + h;
        let mut cfl_number = cfl0;
        let (u, tau) = match (integrator, n0_ref) {
            (Integrator::EtdEuler, _) | (_, None) => (pu, pt),
            (Integrator::EtdHeun, Some(n)) => {
                let pred = SimState { time, u: pu, tau: pt, params: self.params };
                let (n1, cfl1) = self.checked_rhs(&pred, h)?;
                cfl_number = cfl_number.max(cfl1);
                let (mut u, mut tau) = self.propagate_combined(h, state, Some((n, 0.5 * h)));
                u.axpy(0.5 * h, &n1.du)?;
                tau.axpy(0.5 * h, &n1.dtau)?;
                (u, tau)
            }
        };
        let next = SimState { time, u, tau, params: self.params };
        if !next.is_finite() || !dissipation.is_finite() {
            return Err(Error::NonFinite { time });
        }
        debug_assert!(next.u.max_divergence_relative() < 1e-10, "velocity lost solenoidality");
        Ok(StepOutcome { state: next, dissipation, cfl_number })
    }

    /// Linear evolution of `state` over time `t`, mode by mode.
    pub fn linear_reference(&mut self, state: &SimState, t: f64) -> Result<SimState> {
        self.check(state)?;
        if t == 0.0 {
            return Ok(state.clone());
        }
        let (u, tau) = self.propagate_combined(t, state, None);
        Ok(SimState { time: state.time + t, u, tau, params: self.params })
    }
}

#[inline]
fn combined_mode(state: &SimState, n: Option<(&NonlinearTerms, f64)>, i: usize) -> ([C; 3], [C; 6]) {
    let mut u = state.u.mode(i);
    let mut t = state.tau.mode(i);
    if let Some((n, c)) = n {
        let du = n.du.mode(i);
        let dt = n.dtau.mode(i);
        for j in 0..3 {
            u[j] += c * du[j];
        }
        for j in 0..6 {
            t[j] += c * dt[j];
        }
    }
    (u, t)
}

/// Where and why a run stopped early.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureRecord {
    pub time: f64,
    pub step: usize,
    pub reason: String,
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub series: TimeSeries,
    /// Dissipation integral from the start to each recorded time.
    pub dissipation: Vec<f64>,
    pub final_state: SimState,
    pub steps: usize,
    pub max_div_u: f64,
    pub max_trace_tau: f64,
    pub max_cfl: f64,
    pub checkpoints: Vec<PathBuf>,
    pub warnings: Vec<String>,
    pub failure: Option<FailureRecord>,
}

impl RunOutput {
    /// `energy + ∫ dissipation` at each recorded time.
    pub fn lyapunov(&self) -> Result<Vec<f64>> {
        let e = self.series.column("energy")?;
        Ok(e.iter().zip(&self.dissipation).map(|(a, b)| a + b).collect())
    }
}

pub fn checkpoint_name(step: usize) -> String {
    format!("checkpoint_{step:08}.oldb")
}

fn physical_trace_max(engine: &PseudoSpectral, tau: &SpectralTensorField) -> f64 {
    let tr = tau.trace();
    engine.to_physical(&[&tr])[0].par_iter().fold(|| 0.0f64, |m, x| m.max(x.abs())).reduce(|| 0.0, f64::max)
}

fn divergence_norm(u: &SpectralVectorField) -> f64 {
    let g = u.grid();
    let [d] = mode_sums::<1, _>(g, |i| {
        let k = g.wavevector(i);
        let m = u.mode(i);
        [(k[0] * m[0] + k[1] * m[1] + k[2] * m[2]).norm_sqr()]
    });
    (d * g.volume()).sqrt()
}

fn write_failure(dir: &Path, state: &SimState, record: &mut FailureRecord) -> Result<()> {
    let path = dir.join("checkpoint_failure.oldb");
    crate::io::write_checkpoint(&path, state)?;
    record.checkpoint = Some(path);
    let json = serde_json::to_string_pretty(record).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(dir.join("failure.json"), json + "\n").map_err(|e| Error::Io(e.to_string()))
}

/// Advance `initial` to `config.t_end`, recording diagnostics every
/// `diagnostics_every` steps and at the end. A CFL or NaN abort returns the
/// partial series with `failure` set, after writing the last good state and
/// `failure.json` to the output directory.
pub fn run(initial: SimState, config: &SolverConfig) -> Result<RunOutput> {
    config.validate()?;
    if let Some(dir) = &config.output_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    }
    let t0 = initial.time;
    if config.t_end <= t0 {
        return Err(Error::param("t_end", format!("must exceed the initial time {t0}")));
    }
    let mut warnings = Vec::new();
    let h2 = initial.h2_norm();
    if h2 > SMALL_DATA_THRESHOLD {
        let msg = format!("initial H2 norm {h2:.3e} exceeds the small-data threshold {SMALL_DATA_THRESHOLD}");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let grid = initial.grid().clone();
    let mut solver = Solver::new(&grid, initial.params).with_nonlinear(config.nonlinear).with_cfl_cap(config.cfl_cap);
    let span = config.t_end - t0;
    let n_steps = ((span / config.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let mut series = TimeSeries::new(&SOLVER_COLUMNS);
    let mut dissipation = Vec::new();
    let mut checkpoints = Vec::new();
    let mut state = initial;
    let mut accumulated = 0.0;
    let first = diagnostics(&state, solver.engine());
    let mut max_div_u = first.div_u;
    let mut max_trace_tau = first.trace_tau_max;
    let mut max_cfl = 0.0f64;
    series.push(first.t, &first.row())?;
    dissipation.push(0.0);
    let mut failure = None;
    for step in 1..=n_steps {
        let h = if step == n_steps { config.t_end - (t0 + (step - 1) as f64 * config.dt) } else { config.dt };
        let outcome = match solver.step(&state, h, config.integrator) {
            Ok(o) => o,
            Err(e @ (Error::Cfl { .. } | Error::NonFinite { .. })) => {
                log::warn!("run aborted at t = {}: {e}", state.time);
                let mut record =
                    FailureRecord { time: state.time, step: step - 1, reason: e.to_string(), checkpoint: None };
                if let Some(dir) = &config.output_dir {
                    write_failure(dir, &state, &mut record)?;
                }
                failure = Some(record);
                break;
            }
            Err(e) => return Err(e),
        };
        state = outcome.state;
        state.time = if step == n_steps { config.t_end } else { t0 + step as f64 * config.dt };
        accumulated += outcome.dissipation;
        max_cfl = max_cfl.max(outcome.cfl_number);
        max_div_u = max_div_u.max(divergence_norm(&state.u));
        max_trace_tau = max_trace_tau.max(physical_trace_max(solver.engine(), &state.tau));
        if step % config.diagnostics_every == 0 || step == n_steps {
            let d = diagnostics(&state, solver.engine());
            series.push(d.t, &d.row())?;
            dissipation.push(accumulated);
            log::debug!("t = {:.4} energy = {:.6e} cfl = {:.3e}", d.t, d.energy, outcome.cfl_number);
        }
        if let Some(dir) = &config.output_dir {
            if config.checkpoint_every > 0 && (step % config.checkpoint_every == 0 || step == n_steps) {
                let path = dir.join(checkpoint_name(step));
                crate::io::write_checkpoint(&path, &state)?;
                checkpoints.push(path);
            }
        }
    }
    let steps = match &failure {
        Some(f) => f.step,
        None => n_steps,
    };
    Ok(RunOutput {
        series,
        dissipation,
        final_state: state,
        steps,
        max_div_u,
        max_trace_tau,
        max_cfl,
        checkpoints,
        warnings,
        failure,
    })
}

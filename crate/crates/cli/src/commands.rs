use std::fs;
use std::path::{Path, PathBuf};

use oldroyd_core::decay::{estimate_r_star, estimate_r_star_lattice, DecayCharacterEstimate, SpectralProfile};
use oldroyd_core::io::{
    emit_plot, emit_report, emit_timeseries, fmt17, guides_from_prediction, parse_timeseries, read_checkpoint,
    report_to_json,
};
use oldroyd_core::linear::{bound_scan, linear_energy_curve};
use oldroyd_core::rates::{
    alignment_report, fit_loglog_slope, linear_exponent, predicted_exponents, two_sided_check, ReportRecord,
    TimeSeries, Verdict,
};
use oldroyd_core::solver::{profile_fields, random_band, run, SimState};
use oldroyd_core::spectral::{SpectralTensorField, SpectralVectorField};
use serde::Serialize;

use crate::config::{parse_config, InitialData, Mode, RunConfig};
use crate::error::{CliError, CliResult};

pub fn load_config(path: &Path, mode: Mode) -> CliResult<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    let cfg = parse_config(&text)?;
    if let Some(m) = cfg.mode {
        if m != mode {
            return Err(CliError::Invalid(format!(
                "{}: config mode `{}` does not match subcommand `{}`",
                path.display(),
                m.name(),
                mode.name()
            )));
        }
    }
    Ok(cfg)
}

fn load_series(path: &Path) -> CliResult<TimeSeries> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    parse_timeseries(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn describe(name: &str, est: &DecayCharacterEstimate) -> String {
    format!(
        "{name}: r* = {:.6} (stderr {:.2e}), P_r* = {}, window [{}, {}]",
        est.r_star,
        est.slope_stderr,
        fmt17(est.p_r_value),
        est.fit_window.0,
        est.fit_window.1
    )
}

fn profile_estimate(name: &str, p: &SpectralProfile) -> CliResult<DecayCharacterEstimate> {
    estimate_r_star(p).map_err(|e| match CliError::from(e) {
        CliError::Runtime(m) => CliError::Runtime(format!("{name}: {m}")),
        other => other,
    })
}

pub fn decay_character(cfg: &RunConfig, lattice_tolerance: f64) -> CliResult<Vec<String>> {
    let mut lines = Vec::new();
    match &cfg.initial {
        InitialData::Profiles { u, tau } => {
            if u.is_none() && tau.is_none() {
                return Err(CliError::Invalid("no initial profiles configured ([initial.u] or [initial.tau])".into()));
            }
            for (name, spec) in [("u", u), ("tau", tau)] {
                if let Some(spec) = spec {
                    lines.push(describe(name, &profile_estimate(name, &spec.scalar()?)?));
                }
            }
        }
        InitialData::RandomBand(b) => {
            let (u, tau) = random_band(&cfg.grid, b.k_lo, b.k_hi, b.amplitude, b.seed)?;
            lines.push(describe("u (lattice)", &estimate_r_star_lattice(&u, lattice_tolerance)?));
            lines.push(describe("tau (lattice)", &estimate_r_star_lattice(&tau, lattice_tolerance)?));
        }
    }
    Ok(lines)
}

/// Decay characters from `[rates]` when given, otherwise estimated from the
/// configured profiles (`None` for an absent component).
fn decay_characters(cfg: &RunConfig) -> CliResult<(Option<f64>, Option<f64>)> {
    let (pu, pt) = match &cfg.initial {
        InitialData::Profiles { u, tau } => (u.as_ref(), tau.as_ref()),
        InitialData::RandomBand(_) => (None, None),
    };
    let r_u = match (cfg.rates.r_u, pu) {
        (Some(r), _) => Some(r),
        (None, Some(p)) => Some(profile_estimate("u", &p.scalar()?)?.r_star),
        (None, None) => None,
    };
    let r_tau = match (cfg.rates.r_tau, pt) {
        (Some(r), _) => Some(r),
        (None, Some(p)) => Some(profile_estimate("tau", &p.scalar()?)?.r_star),
        (None, None) => None,
    };
    Ok((r_u, r_tau))
}

pub fn linear(cfg: &RunConfig) -> CliResult<Vec<String>> {
    let InitialData::Profiles { u, tau } = &cfg.initial else {
        return Err(CliError::Invalid("linear curves need radial profiles, not initial.random_band".into()));
    };
    if u.is_none() && tau.is_none() {
        return Err(CliError::Invalid("no initial profiles configured ([initial.u] or [initial.tau])".into()));
    }
    let up = u.as_ref().map(|s| s.velocity()).transpose()?;
    let tp = tau.as_ref().map(|s| s.stress()).transpose()?;
    let (r_u, r_tau) = decay_characters(cfg)?;
    let omega = cfg.physics.omega();
    let series = linear_energy_curve(up.as_ref(), tp.as_ref(), omega, &cfg.rates.sample_times())?;
    create_dir(&cfg.output)?;
    let csv = cfg.output.join("linear.csv");
    emit_timeseries(&series, &csv)?;

    let window = cfg.rates.window;
    let tol = cfg.rates.tolerance;
    let predicted = linear_exponent(r_u.filter(|_| u.is_some()), r_tau.filter(|_| tau.is_some()))?;
    let mut records =
        vec![ReportRecord::compare("energy", predicted, &fit_loglog_slope(&series, "energy", window)?, tol)];
    if let (Some(ru), Some(rt), true, true) = (r_u, r_tau, u.is_some(), tau.is_some()) {
        records.extend(two_sided_check(&series, &predicted_exponents(ru, rt)?, window, tol)?.records);
    }
    let report = cfg.output.join("linear_report.json");
    emit_report(&records, &report)?;

    let mut lines = vec![format!(
        "decay characters: r_u = {}, r_tau = {}",
        r_u.map_or("none".into(), |r| format!("{r:.4}")),
        r_tau.map_or("none".into(), |r| format!("{r:.4}"))
    )];
    lines.extend(records.iter().map(record_line));
    lines.push(format!("wrote {} and {}", csv.display(), report.display()));
    Ok(lines)
}

fn record_line(r: &ReportRecord) -> String {
    let show = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    let verdict = match r.verdict {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::NotApplicable => "n/a",
    };
    format!(
        "{}: predicted {}, fitted {} ± {} over [{}, {}] -> {verdict}",
        r.quantity,
        show(r.predicted_exponent),
        show(r.fitted_slope),
        show(r.stderr),
        r.window.0,
        r.window.1
    )
}

pub fn initial_state(cfg: &RunConfig) -> CliResult<SimState> {
    let (u, tau) = match &cfg.initial {
        InitialData::RandomBand(b) => random_band(&cfg.grid, b.k_lo, b.k_hi, b.amplitude, b.seed)?,
        InitialData::Profiles { u: None, tau: None } => {
            (SpectralVectorField::zeros(&cfg.grid), SpectralTensorField::zeros(&cfg.grid))
        }
        InitialData::Profiles { u, tau } => {
            let up = u.as_ref().map(|s| s.velocity()).transpose()?;
            let tp = tau.as_ref().map(|s| s.stress()).transpose()?;
            profile_fields(&cfg.grid, up.as_ref(), tp.as_ref())?
        }
    };
    Ok(SimState::new(u, tau, cfg.physics, 0.0)?)
}

#[derive(Serialize)]
struct RunSummary<'a> {
    start_time: f64,
    final_time: f64,
    steps: usize,
    max_div_u: f64,
    max_trace_tau: f64,
    max_cfl: f64,
    checkpoints: &'a [PathBuf],
    warnings: &'a [String],
    failure: Option<&'a oldroyd_core::solver::FailureRecord>,
}

pub fn simulate(cfg: &RunConfig, resume: Option<&Path>) -> CliResult<Vec<String>> {
    let state = match resume {
        None => initial_state(cfg)?,
        Some(path) => {
            let s = read_checkpoint(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
            if s.grid() != &cfg.grid {
                return Err(CliError::Invalid(format!("{}: checkpoint grid differs from [grid]", path.display())));
            }
            if s.params != cfg.physics {
                return Err(CliError::Invalid(format!(
                    "{}: checkpoint parameters differ from [physics]",
                    path.display()
                )));
            }
            s
        }
    };
    let start_time = state.time;
    create_dir(&cfg.output)?;
    let out = run(state, &cfg.solver)?;
    let csv = cfg.output.join("series.csv");
    emit_timeseries(&out.series, &csv)?;
    let summary = RunSummary {
        start_time,
        final_time: out.final_state.time,
        steps: out.steps,
        max_div_u: out.max_div_u,
        max_trace_tau: out.max_trace_tau,
        max_cfl: out.max_cfl,
        checkpoints: &out.checkpoints,
        warnings: &out.warnings,
        failure: out.failure.as_ref(),
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Runtime(e.to_string()))? + "\n";
    write_text(&cfg.output.join("run.json"), &json)?;
    if let Some(f) = &out.failure {
        return Err(CliError::Runtime(format!(
            "run aborted at t = {} after {} steps: {}; partial series in {}",
            f.time,
            f.step,
            f.reason,
            csv.display()
        )));
    }
    let mut lines: Vec<String> = out.warnings.iter().map(|w| format!("warning: {w}")).collect();
    lines.push(format!(
        "t = {} after {} steps; max div u = {:.3e}, max |tr tau| = {:.3e}, max CFL = {:.3e}",
        out.final_state.time, out.steps, out.max_div_u, out.max_trace_tau, out.max_cfl
    ));
    lines.push(format!("wrote {} ({} checkpoints)", csv.display(), out.checkpoints.len()));
    Ok(lines)
}

/// Fit every predicted column of the series; `Err(Check)` carries the
/// report when any record fails.
pub fn fit(cfg: &RunConfig, series_path: &Path, output: Option<&Path>) -> CliResult<Vec<String>> {
    let series = load_series(series_path)?;
    let (r_u, r_tau) = decay_characters(cfg)?;
    let (Some(r_u), Some(r_tau)) = (r_u, r_tau) else {
        return Err(CliError::Invalid(
            "fit needs both decay characters: set rates.r_u and rates.r_tau or configure both profiles".into(),
        ));
    };
    let pred = predicted_exponents(r_u, r_tau)?;
    let columns: Vec<String> = match &cfg.rates.columns {
        Some(c) => c.clone(),
        None => series.names().iter().filter(|c| pred.exponent_for_column(c).is_some()).cloned().collect(),
    };
    let (window, tol) = (cfg.rates.window, cfg.rates.tolerance);
    let mut records = Vec::new();
    for c in &columns {
        let Some(e) = pred.exponent_for_column(c) else {
            return Err(CliError::Invalid(format!("rates.columns: `{c}` has no predicted exponent")));
        };
        series.column(c)?;
        records.push(match fit_loglog_slope(&series, c, window) {
            Ok(f) => ReportRecord::compare(c, e, &f, tol),
            Err(oldroyd_core::Error::Fit(msg)) => {
                log::warn!("{c}: {msg}");
                ReportRecord {
                    quantity: c.clone(),
                    predicted_exponent: Some(e),
                    fitted_slope: None,
                    stderr: None,
                    window,
                    verdict: Verdict::Fail,
                }
            }
            Err(e) => return Err(e.into()),
        });
    }
    if let Some(al) = &cfg.rates.alignment {
        let rep = alignment_report(&series, al)?;
        records.push(ReportRecord {
            quantity: "eps_l2sq/tau_l2sq".into(),
            predicted_exponent: Some(rep.predicted_ratio_slope),
            fitted_slope: rep.ratio_slope.map(|f| f.slope),
            stderr: rep.ratio_slope.map(|f| f.stderr),
            window: al.window,
            verdict: rep.ratio_verdict,
        });
        records.push(ReportRecord {
            quantity: "align_cos".into(),
            predicted_exponent: None,
            fitted_slope: None,
            stderr: None,
            window: (rep.cos_start.1, rep.cos_end.1),
            verdict: rep.cosine_verdict,
        });
    }
    if records.is_empty() {
        return Err(CliError::Invalid("no columns to fit".into()));
    }
    let path = match output {
        Some(p) => p.to_path_buf(),
        None => {
            create_dir(&cfg.output)?;
            cfg.output.join("report.json")
        }
    };
    emit_report(&records, &path)?;
    let json = report_to_json(&records)?;
    let failed = records.iter().filter(|r| r.verdict == Verdict::Fail).count();
    if failed > 0 {
        let mut msg = format!("{failed} of {} checks failed; report in {}", records.len(), path.display());
        for r in records.iter().filter(|r| r.verdict == Verdict::Fail) {
            msg.push('\n');
            msg.push_str(&record_line(r));
        }
        print!("{json}");
        return Err(CliError::Check(msg));
    }
    Ok(vec![json.trim_end().to_string()])
}

pub fn verify_bounds(
    omega: f64,
    radius: f64,
    n_xi: usize,
    n_t: usize,
    t_max: f64,
    output: Option<&Path>,
) -> CliResult<Vec<String>> {
    let rep = bound_scan(omega, radius, n_xi, n_t, t_max)?;
    if let Some(p) = output {
        let json = serde_json::to_string_pretty(&rep).map_err(|e| CliError::Runtime(e.to_string()))? + "\n";
        write_text(p, &json)?;
    }
    let n = rep.total_violations();
    let mut lines = vec![
        format!("violations: {n}"),
        format!("samples: {}", rep.samples),
        format!(
            "constants: theta = {}, C1 = {}, C2 = {}, C3 = {}",
            fmt17(rep.constants.theta),
            fmt17(rep.constants.c1),
            fmt17(rep.constants.c2),
            fmt17(rep.constants.c3)
        ),
        format!(
            "worst ratio: A {:.4e}, B {:.4e}, C {:.4e}",
            rep.worst_ratio[0], rep.worst_ratio[1], rep.worst_ratio[2]
        ),
    ];
    if n > 0 {
        for l in lines.drain(..) {
            println!("{l}");
        }
        return Err(CliError::Check(format!("{n} bound violations (per kernel {:?})", rep.violations)));
    }
    lines.truncate(4);
    Ok(lines)
}

pub fn plot(
    series_path: &Path,
    columns: &[String],
    rates: Option<(f64, f64)>,
    output: Option<&Path>,
) -> CliResult<Vec<String>> {
    let series = load_series(series_path)?;
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let guides = match rates {
        Some((ru, rt)) => guides_from_prediction(&predicted_exponents(ru, rt)?, &cols),
        None => Vec::new(),
    };
    let path = output.map_or_else(|| series_path.with_extension("svg"), Path::to_path_buf);
    emit_plot(&series, &cols, &guides, &path)?;
    Ok(vec![format!("wrote {}", path.display())])
}

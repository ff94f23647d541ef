use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use oldroyd_core::io::{emit_timeseries, read_checkpoint, read_timeseries};
use oldroyd_core::rates::TimeSeries;
use oldroyd_core::spectral::SpectralField;

fn oldb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oldb")).args(args).env("OLDB_THREADS", "2").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    let out = dir.join("out");
    fs::write(&p, format!("{body}\n[output]\ndir = \"{}\"\n", out.display())).unwrap();
    p
}

fn power_series(path: &Path, exponent: f64) {
    let times: Vec<f64> = (0..=40).map(|i| 10f64.powf(2.0 + 2.0 * i as f64 / 40.0)).collect();
    let cols = ["u_l2sq", "tau_l2sq", "eps_l2sq"]
        .iter()
        .zip([-1.5, -2.5, -3.5])
        .map(|(c, e)| (c.to_string(), times.iter().map(|t| (1.0 + t).powf(e + exponent)).collect()))
        .collect();
    emit_timeseries(&TimeSeries::from_columns(times, cols).unwrap(), path).unwrap();
}

#[test]
fn verify_bounds_reports_zero_violations() {
    let o = oldb(&["verify-bounds", "--omega", "0.5", "--radius", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).lines().any(|l| l == "violations: 0"));
}

#[test]
fn verify_bounds_rejects_bad_omega() {
    let o = oldb(&["verify-bounds", "--omega", "1.5", "--radius", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("ERROR 1:"));
}

#[test]
fn unknown_flag_is_usage_error() {
    let o = oldb(&["verify-bounds", "--omega", "0.5", "--radius", "1", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.lines().all(|l| l.starts_with("ERROR 1:")), "{err}");
    assert!(err.contains("Usage"));
}

#[test]
fn help_exits_zero() {
    let o = oldb(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("simulate"));
}

#[test]
fn bad_thread_count_is_validation_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_oldb"))
        .args(["verify-bounds", "--omega", "0.5", "--radius", "1"])
        .env("OLDB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_errors_are_all_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "[physics]\nomega = 1.2\n[grid]\nn = 7\nextra = 1\n");
    let o = oldb(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    let lines: Vec<&str> = err.lines().collect();
    assert_eq!(lines.len(), 3, "{err}");
    assert!(lines.iter().all(|l| l.starts_with("ERROR 1: line ")));
    assert!(err.contains("physics.omega") && err.contains("grid.n") && err.contains("grid.extra"));
}

#[test]
fn mode_must_match_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "mode = \"linear\"");
    let o = oldb(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fit_pass_and_fail_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "fit.toml", "[rates]\nr_u = 0.0\nr_tau = 0.0\nwindow = [100.0, 10000.0]\n");
    let good = dir.path().join("good.csv");
    let bad = dir.path().join("bad.csv");
    power_series(&good, 0.0);
    power_series(&bad, 0.5);

    let o = oldb(&["fit", "--series", good.to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = fs::read_to_string(dir.path().join("out/report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
    assert!(report.contains("\"quantity\": \"eps_l2sq\""));

    let rep = dir.path().join("bad.json");
    let o = oldb(&[
        "fit",
        "--series",
        bad.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        rep.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("ERROR 3:"));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(rep).unwrap()).unwrap();
    assert!(v.as_array().unwrap().iter().all(|r| r["verdict"] == "fail"));
}

#[test]
fn fit_needs_decay_characters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "fit.toml", "[rates]\nr_u = 0.0\n");
    let s = dir.path().join("s.csv");
    power_series(&s, 0.0);
    let o = oldb(&["fit", "--series", s.to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn decay_character_of_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "dc.toml",
        "[initial.u]\nfamily = \"power_gauss\"\nq = 1.0\n[initial.tau]\nfamily = \"indicator\"\n",
    );
    let o = oldb(&["decay-character", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let r = |prefix: &str| -> f64 {
        let line = out.lines().find(|l| l.starts_with(prefix)).unwrap();
        line.split("r* = ").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap()
    };
    assert!((r("u:") - 1.0).abs() < 0.05);
    assert!(r("tau:").abs() < 0.05);

    let cfg = write_config(dir.path(), "osc.toml", "[initial.u]\nfamily = \"log_oscillating\"\nq = 0.0\n");
    let o = oldb(&["decay-character", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no decay character"));
}

#[test]
fn linear_curve_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "lin.toml",
        "[initial.u]\nfamily = \"power_gauss\"\nq = 0.0\n[initial.tau]\nfamily = \"power_gauss\"\nq = 0.0\n\
         [rates]\ntimes = [1.0, 10000.0, 41]\n",
    );
    let o = oldb(&["linear", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = read_timeseries(&dir.path().join("out/linear.csv")).unwrap();
    assert_eq!(s.len(), 41);
    let report = fs::read_to_string(dir.path().join("out/linear_report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r["verdict"] == "pass"), "{report}");
}

fn small_sim(dir: &Path, extra: &str) -> PathBuf {
    write_config(
        dir,
        "sim.toml",
        &format!(
            "mode = \"simulate\"\n[grid]\nn = 12\nbox_scale = 2.0\n\
             [initial.random_band]\nk_lo = 0.5\nk_hi = 1.5\namplitude = 1e-2\nseed = 11\n\
             [solver]\ndt = 0.1\nt_end = 0.6\ncheckpoint_every = 2\n{extra}"
        ),
    )
}

#[test]
fn simulate_writes_series_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_sim(dir.path(), "");
    let o = oldb(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = dir.path().join("out");
    let csv = fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(csv.starts_with(
        "t,u_l2sq,u_h1sq,u_h2sq,tau_l2sq,tau_h1sq,tau_h2sq,eps_l2sq,div_u,trace_tau_max,energy,align_cos\n"
    ));
    let full = read_timeseries(&out.join("series.csv")).unwrap();
    assert_eq!(full.len(), 7);
    let ck = out.join("checkpoint_00000002.oldb");
    assert!(read_checkpoint(&ck).is_ok());
    let final_state = read_checkpoint(&out.join("checkpoint_00000006.oldb")).unwrap();

    // resume into a separate directory and compare the final state
    let rdir = tempfile::tempdir().unwrap();
    let rcfg = small_sim(rdir.path(), "");
    let o = oldb(&["simulate", "--config", rcfg.to_str().unwrap(), "--resume", ck.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let resumed = read_checkpoint(&rdir.path().join("out/checkpoint_00000004.oldb")).unwrap();
    assert_eq!(resumed.time, final_state.time);
    let scale = final_state.u.max_abs().max(final_state.tau.max_abs());
    let du = resumed.u.components().iter().zip(final_state.u.components());
    let dt = resumed.tau.components().iter().zip(final_state.tau.components());
    let worst = du.chain(dt).flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm())).fold(0.0, f64::max);
    assert!(worst <= 1e-12 * scale, "{worst}");
}

#[test]
fn simulate_runtime_abort_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_sim(dir.path(), "cfl_cap = 1e-9\n");
    let o = oldb(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("ERROR 2:"));
    let out = dir.path().join("out");
    assert!(out.join("failure.json").exists());
    assert!(out.join("checkpoint_failure.oldb").exists());
    assert_eq!(read_timeseries(&out.join("series.csv")).unwrap().len(), 1);
}

#[test]
fn resume_rejects_mismatched_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_sim(dir.path(), "");
    assert_eq!(oldb(&["simulate", "--config", cfg.to_str().unwrap()]).status.code(), Some(0));
    let ck = dir.path().join("out/checkpoint_00000002.oldb");
    let other = write_config(dir.path(), "other.toml", "[grid]\nn = 16\nbox_scale = 2.0\n");
    let o = oldb(&["simulate", "--config", other.to_str().unwrap(), "--resume", ck.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn plot_is_deterministic_and_checks_columns() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s.csv");
    power_series(&s, 0.0);
    let (a, b) = (dir.path().join("a.svg"), dir.path().join("b.svg"));
    for p in [&a, &b] {
        let o = oldb(&[
            "plot",
            "--series",
            s.to_str().unwrap(),
            "--columns",
            "u_l2sq,tau_l2sq",
            "--r-u",
            "0",
            "--r-tau",
            "0",
            "--output",
            p.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let svg = fs::read(&a).unwrap();
    assert_eq!(svg, fs::read(&b).unwrap());
    let text = String::from_utf8(svg).unwrap();
    assert!(text.contains("u_l2sq") && text.contains("tau_l2sq"));

    let o = oldb(&["plot", "--series", s.to_str().unwrap(), "--columns", "nope"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nope"));
}

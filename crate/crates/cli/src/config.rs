//! Run configuration: TOML text in, validated [`RunConfig`] out.
//!
//! Every violation is collected with its line number before anything is
//! returned, so one pass reports all problems.

use std::fmt;
use std::path::PathBuf;

use oldroyd_core::decay::{AngularStructure, SpectralProfile};
use oldroyd_core::linear::DEFAULT_TENSOR_PATTERN;
use oldroyd_core::rates::AlignmentTolerances;
use oldroyd_core::solver::{Integrator, SolverConfig};
use oldroyd_core::spectral::{FluidParams, FourierGrid};
use toml_edit::{ImDocument, Item, TableLike};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    DecayCharacter,
    Linear,
    Simulate,
    Fit,
    VerifyBounds,
    Plot,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::DecayCharacter => "decay-character",
            Mode::Linear => "linear",
            Mode::Simulate => "simulate",
            Mode::Fit => "fit",
            Mode::VerifyBounds => "verify-bounds",
            Mode::Plot => "plot",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [Mode::DecayCharacter, Mode::Linear, Mode::Simulate, Mode::Fit, Mode::VerifyBounds, Mode::Plot]
            .into_iter()
            .find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileFamily {
    PowerCutoff { q: f64 },
    PowerGauss { q: f64 },
    Indicator,
    LpLike { p: f64 },
    LogOscillating { q: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSpec {
    pub family: ProfileFamily,
    pub amplitude: f64,
    pub shift: f64,
    pub dimension: usize,
    pub direction: Option<[f64; 3]>,
    pub pattern: Option<[f64; 6]>,
}

impl ProfileSpec {
    fn base(&self) -> oldroyd_core::Result<SpectralProfile> {
        let p = match self.family {
            ProfileFamily::PowerCutoff { q } => SpectralProfile::power_cutoff(q)?,
            ProfileFamily::PowerGauss { q } => SpectralProfile::power_gauss(q)?,
            ProfileFamily::Indicator => SpectralProfile::indicator()?,
            ProfileFamily::LpLike { p } => SpectralProfile::lp_like(p)?,
            ProfileFamily::LogOscillating { q } => SpectralProfile::log_oscillating(q)?,
        };
        let mut p = p.with_amplitude(self.amplitude)?;
        if self.shift != 0.0 {
            p = p.with_shift(self.shift)?;
        }
        if self.dimension != 3 {
            p = p.with_dimension(self.dimension)?;
        }
        Ok(p)
    }

    /// Scalar radial profile, as used by the decay-character estimator.
    pub fn scalar(&self) -> oldroyd_core::Result<SpectralProfile> {
        self.base()
    }

    /// Velocity profile `f(|ξ|) P(n) e`.
    pub fn velocity(&self) -> oldroyd_core::Result<SpectralProfile> {
        let e = self.direction.unwrap_or([1.0, 0.0, 0.0]);
        self.base()?.with_angular(AngularStructure::solenoidal(e)?)
    }

    /// Stress profile `f(|ξ|) T`.
    pub fn stress(&self) -> oldroyd_core::Result<SpectralProfile> {
        let t = self.pattern.unwrap_or(DEFAULT_TENSOR_PATTERN);
        self.base()?.with_angular(AngularStructure::tensor(t)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomBand {
    pub k_lo: f64,
    pub k_hi: f64,
    pub amplitude: f64,
    pub seed: u64,
}

#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Profiles { u: Option<ProfileSpec>, tau: Option<ProfileSpec> },
    RandomBand(RandomBand),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateSettings {
    pub window: (f64, f64),
    pub tolerance: f64,
    pub r_u: Option<f64>,
    pub r_tau: Option<f64>,
    pub columns: Option<Vec<String>>,
    /// Sampling of the linear curves: `(t_min, t_max, count)`, geometric.
    pub times: (f64, f64, usize),
    pub alignment: Option<AlignmentTolerances>,
}

impl Default for RateSettings {
    fn default() -> Self {
        Self {
            window: (1e2, 1e4),
            tolerance: 0.1,
            r_u: None,
            r_tau: None,
            columns: None,
            times: (1e-2, 1e4, 121),
            alignment: None,
        }
    }
}

impl RateSettings {
    pub fn sample_times(&self) -> Vec<f64> {
        let (lo, hi, n) = self.times;
        let (a, b) = (lo.ln(), hi.ln());
        (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub physics: FluidParams,
    pub grid: FourierGrid,
    pub initial: InitialData,
    pub solver: SolverConfig,
    pub rates: RateSettings,
    pub output: PathBuf,
}

/// One violation, with its 1-based line when known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{} configuration error(s)", .0.len())]
pub struct ConfigErrors(pub Vec<ConfigIssue>);

struct Ctx<'t> {
    text: &'t str,
    issues: Vec<ConfigIssue>,
}

impl Ctx<'_> {
    fn line(&self, span: Option<std::ops::Range<usize>>) -> Option<usize> {
        span.map(|s| self.text[..s.start.min(self.text.len())].matches('\n').count() + 1)
    }

    fn push(&mut self, line: Option<usize>, field: &str, message: impl Into<String>) {
        self.issues.push(ConfigIssue { line, field: field.to_string(), message: message.into() });
    }
}

/// Keys of one table plus the path used in messages.
struct Section<'a> {
    path: String,
    table: Option<&'a dyn TableLike>,
    line: Option<usize>,
}

impl<'a> Section<'a> {
    fn field(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn entry(&self, ctx: &Ctx, key: &str) -> Option<(&'a Item, Option<usize>)> {
        let (k, item) = self.table?.get_key_value(key)?;
        Some((item, ctx.line(k.span()).or(self.line)))
    }

    fn check_keys(&self, ctx: &mut Ctx, allowed: &[&str]) {
        let Some(t) = self.table else { return };
        for (k, _) in t.iter() {
            if !allowed.contains(&k) {
                let line = ctx.line(t.get_key_value(k).and_then(|(key, _)| key.span())).or(self.line);
                ctx.push(line, &self.field(k), "unknown key");
            }
        }
    }

    fn sub(&self, ctx: &mut Ctx, key: &str) -> Section<'a> {
        let path = self.field(key);
        match self.entry(ctx, key) {
            None => Section { path, table: None, line: None },
            Some((item, line)) => match item.as_table_like() {
                Some(t) => Section { path, table: Some(t), line },
                None => {
                    ctx.push(line, &path, format!("expected a table, found {}", item.type_name()));
                    Section { path, table: None, line }
                }
            },
        }
    }

    fn float(&self, ctx: &mut Ctx, key: &str) -> Option<(f64, Option<usize>)> {
        let (item, line) = self.entry(ctx, key)?;
        match item.as_float().or_else(|| item.as_integer().map(|i| i as f64)) {
            Some(v) => Some((v, line)),
            None => {
                ctx.push(line, &self.field(key), format!("expected a number, found {}", item.type_name()));
                None
            }
        }
    }

    fn int(&self, ctx: &mut Ctx, key: &str) -> Option<(i64, Option<usize>)> {
        let (item, line) = self.entry(ctx, key)?;
        match item.as_integer() {
            Some(v) => Some((v, line)),
            None => {
                ctx.push(line, &self.field(key), format!("expected an integer, found {}", item.type_name()));
                None
            }
        }
    }

    fn string(&self, ctx: &mut Ctx, key: &str) -> Option<(&'a str, Option<usize>)> {
        let (item, line) = self.entry(ctx, key)?;
        match item.as_str() {
            Some(v) => Some((v, line)),
            None => {
                ctx.push(line, &self.field(key), format!("expected a string, found {}", item.type_name()));
                None
            }
        }
    }

    fn boolean(&self, ctx: &mut Ctx, key: &str) -> Option<bool> {
        let (item, line) = self.entry(ctx, key)?;
        let v = item.as_bool();
        if v.is_none() {
            ctx.push(line, &self.field(key), format!("expected a boolean, found {}", item.type_name()));
        }
        v
    }

    fn floats<const N: usize>(&self, ctx: &mut Ctx, key: &str) -> Option<([f64; N], Option<usize>)> {
        let (item, line) = self.entry(ctx, key)?;
        let vals: Option<Vec<f64>> = item
            .as_array()
            .map(|a| a.iter().map(|v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64))).collect())
            .unwrap_or(None);
        match vals.and_then(|v| <[f64; N]>::try_from(v).ok()) {
            Some(a) => Some((a, line)),
            None => {
                ctx.push(line, &self.field(key), format!("expected an array of {N} numbers"));
                None
            }
        }
    }

    fn strings(&self, ctx: &mut Ctx, key: &str) -> Option<Vec<String>> {
        let (item, line) = self.entry(ctx, key)?;
        let vals: Option<Vec<String>> =
            item.as_array().and_then(|a| a.iter().map(|v| v.as_str().map(str::to_string)).collect());
        if vals.is_none() {
            ctx.push(line, &self.field(key), "expected an array of strings");
        }
        vals
    }

    /// Number in the half-open or closed range described by `ok`.
    fn checked(&self, ctx: &mut Ctx, key: &str, default: f64, ok: impl Fn(f64) -> bool, what: &str) -> f64 {
        match self.float(ctx, key) {
            Some((v, line)) if !(v.is_finite() && ok(v)) => {
                ctx.push(line, &self.field(key), format!("{what}, got {v}"));
                default
            }
            Some((v, _)) => v,
            None => default,
        }
    }

    fn count(&self, ctx: &mut Ctx, key: &str, default: usize, min: i64) -> usize {
        match self.int(ctx, key) {
            Some((v, line)) if v < min => {
                ctx.push(line, &self.field(key), format!("must be at least {min}, got {v}"));
                default
            }
            Some((v, _)) => v as usize,
            None => default,
        }
    }
}

/// Parse and validate configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let doc = match ImDocument::parse(text) {
        Ok(d) => d,
        Err(e) => {
            let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            let msg = e.message().to_string();
            return Err(ConfigErrors(vec![ConfigIssue { line, field: "<syntax>".into(), message: msg }]));
        }
    };
    let mut ctx = Ctx { text, issues: Vec::new() };
    let root = Section { path: String::new(), table: Some(doc.as_table()), line: None };
    root.check_keys(&mut ctx, &["mode", "physics", "grid", "initial", "solver", "rates", "output"]);

    let mode = match root.string(&mut ctx, "mode") {
        Some((s, line)) => {
            let m = Mode::parse(s);
            if m.is_none() {
                ctx.push(line, "mode", format!("unknown mode `{s}`"));
            }
            m
        }
        None => None,
    };

    let sec = root.sub(&mut ctx, "physics");
    let physics = physics(&mut ctx, &sec);
    let sec = root.sub(&mut ctx, "grid");
    let grid = grid(&mut ctx, &sec);
    let sec = root.sub(&mut ctx, "initial");
    let initial = initial(&mut ctx, &sec, grid.as_ref());
    let sec = root.sub(&mut ctx, "solver");
    let solver = solver(&mut ctx, &sec);
    let sec = root.sub(&mut ctx, "rates");
    let rates = rates(&mut ctx, &sec);

    let out = root.sub(&mut ctx, "output");
    out.check_keys(&mut ctx, &["dir"]);
    let output = out.string(&mut ctx, "dir").map_or_else(|| PathBuf::from("out"), |(s, _)| PathBuf::from(s));

    if !ctx.issues.is_empty() {
        return Err(ConfigErrors(ctx.issues));
    }
    Ok(RunConfig {
        mode,
        physics: physics.expect("validated"),
        grid: grid.expect("validated"),
        initial: initial.expect("validated"),
        solver: SolverConfig { output_dir: Some(output.clone()), ..solver },
        rates,
        output,
    })
}

fn physics(ctx: &mut Ctx, s: &Section) -> Option<FluidParams> {
    s.check_keys(ctx, &["omega", "a", "reynolds", "weissenberg"]);
    let before = ctx.issues.len();
    let omega = s.checked(ctx, "omega", 0.5, |v| v > 0.0 && v < 1.0, "must lie in (0, 1)");
    let a = s.checked(ctx, "a", 0.0, |v| (-1.0..=1.0).contains(&v), "must lie in [-1, 1]");
    let re = s.checked(ctx, "reynolds", 1.0, |v| v > 0.0, "must be positive");
    let we = s.checked(ctx, "weissenberg", 1.0, |v| v > 0.0, "must be positive");
    if ctx.issues.len() > before {
        return None;
    }
    FluidParams::new(omega, a, re, we).ok()
}

fn grid(ctx: &mut Ctx, s: &Section) -> Option<FourierGrid> {
    s.check_keys(ctx, &["n", "box_scale"]);
    let n = match s.int(ctx, "n") {
        Some((v, line)) if v < 4 || v % 2 != 0 || v > 1024 => {
            ctx.push(line, "grid.n", format!("must be even and in [4, 1024], got {v}"));
            None
        }
        Some((v, _)) => Some(v as usize),
        None => Some(64),
    };
    let before = ctx.issues.len();
    let m = s.checked(ctx, "box_scale", 16.0, |v| v > 0.0, "must be positive");
    if ctx.issues.len() > before {
        return None;
    }
    FourierGrid::new(n?, m).ok()
}

fn profile(ctx: &mut Ctx, s: &Section) -> Option<ProfileSpec> {
    s.check_keys(ctx, &["family", "q", "p", "amplitude", "shift", "dimension", "direction", "pattern"]);
    let before = ctx.issues.len();
    let q = s.float(ctx, "q");
    let p = s.float(ctx, "p");
    let family = match s.string(ctx, "family") {
        None => {
            ctx.push(s.line, &s.field("family"), "missing profile family");
            None
        }
        Some((name, line)) => {
            let need_q = |ctx: &mut Ctx| {
                if q.is_none() {
                    ctx.push(line, &s.field("q"), format!("family `{name}` needs q"));
                }
                q.map_or(0.0, |v| v.0)
            };
            match name {
                "power_cutoff" => Some(ProfileFamily::PowerCutoff { q: need_q(ctx) }),
                "power_gauss" => Some(ProfileFamily::PowerGauss { q: need_q(ctx) }),
                "log_oscillating" => Some(ProfileFamily::LogOscillating { q: need_q(ctx) }),
                "indicator" => Some(ProfileFamily::Indicator),
                "lp_like" => match p {
                    Some((p, _)) => Some(ProfileFamily::LpLike { p }),
                    None => {
                        ctx.push(line, &s.field("p"), "family `lp_like` needs p");
                        None
                    }
                },
                "random_band" => {
                    ctx.push(line, &s.field("family"), "random_band applies to both fields; use [initial.random_band]");
                    None
                }
                other => {
                    ctx.push(line, &s.field("family"), format!("unknown profile family `{other}`"));
                    None
                }
            }
        }
    };
    let amplitude = s.checked(ctx, "amplitude", 1.0, |v| v > 0.0, "must be positive");
    let shift = s.checked(ctx, "shift", 0.0, |v| v >= 0.0, "must be nonnegative");
    let dimension = s.count(ctx, "dimension", 3, 1);
    let direction = s.floats::<3>(ctx, "direction").map(|v| v.0);
    let pattern = s.floats::<6>(ctx, "pattern").map(|v| v.0);
    if ctx.issues.len() > before {
        return None;
    }
    let spec = ProfileSpec { family: family?, amplitude, shift, dimension, direction, pattern };
    // building surfaces range errors (q too small, zero direction, ...)
    let built = if spec.dimension != 3 {
        spec.scalar().map(|_| ())
    } else {
        spec.scalar().and(spec.velocity()).and(spec.stress()).map(|_| ())
    };
    if let Err(e) = built {
        ctx.push(s.line, &s.path, e.to_string());
        return None;
    }
    Some(spec)
}

fn initial(ctx: &mut Ctx, s: &Section, grid: Option<&FourierGrid>) -> Option<InitialData> {
    s.check_keys(ctx, &["u", "tau", "random_band"]);
    let band = s.sub(ctx, "random_band");
    if band.table.is_some() {
        for k in ["u", "tau"] {
            if let Some((_, line)) = s.entry(ctx, k) {
                ctx.push(line, &s.field(k), "cannot be combined with initial.random_band");
            }
        }
        band.check_keys(ctx, &["k_lo", "k_hi", "amplitude", "seed"]);
        let before = ctx.issues.len();
        let k_lo = s_req(ctx, &band, "k_lo", |v| v >= 0.0, "must be nonnegative");
        let k_hi = s_req(ctx, &band, "k_hi", |v| v > 0.0, "must be positive");
        let amplitude = band.checked(ctx, "amplitude", 1e-2, |v| v > 0.0, "must be positive");
        let seed = match band.int(ctx, "seed") {
            None if !ctx.issues[before..].iter().any(|i| i.field == band.field("seed")) => {
                ctx.push(band.line, &band.field("seed"), "random data require an explicit seed");
                None
            }
            Some((v, line)) if v < 0 => {
                ctx.push(line, &band.field("seed"), format!("must be nonnegative, got {v}"));
                None
            }
            other => other.map(|(v, _)| v as u64),
        };
        if let (Some(lo), Some(hi)) = (k_lo, k_hi) {
            if hi <= lo {
                ctx.push(band.line, &band.field("k_hi"), format!("must exceed k_lo = {lo}, got {hi}"));
            } else if let Some(g) = grid {
                if hi > g.k_max_retained() {
                    ctx.push(
                        band.line,
                        &band.field("k_hi"),
                        format!("{hi} exceeds the largest retained wavenumber {}", g.k_max_retained()),
                    );
                }
            }
        }
        if ctx.issues.len() > before {
            return None;
        }
        return Some(InitialData::RandomBand(RandomBand { k_lo: k_lo?, k_hi: k_hi?, amplitude, seed: seed? }));
    }
    let (us, ts) = (s.sub(ctx, "u"), s.sub(ctx, "tau"));
    let before = ctx.issues.len();
    let u = us.table.is_some().then(|| profile(ctx, &us));
    let tau = ts.table.is_some().then(|| profile(ctx, &ts));
    if ctx.issues.len() > before {
        return None;
    }
    Some(InitialData::Profiles { u: u.flatten(), tau: tau.flatten() })
}

fn s_req(ctx: &mut Ctx, s: &Section, key: &str, ok: impl Fn(f64) -> bool, what: &str) -> Option<f64> {
    match s.float(ctx, key) {
        None => {
            if s.entry(ctx, key).is_none() {
                ctx.push(s.line, &s.field(key), "missing required value");
            }
            None
        }
        Some((v, line)) if !(v.is_finite() && ok(v)) => {
            ctx.push(line, &s.field(key), format!("{what}, got {v}"));
            None
        }
        Some((v, _)) => Some(v),
    }
}

fn solver(ctx: &mut Ctx, s: &Section) -> SolverConfig {
    s.check_keys(ctx, &["dt", "t_end", "integrator", "checkpoint_every", "diagnostics_every", "cfl_cap", "nonlinear"]);
    let d = SolverConfig::default();
    let integrator = match s.string(ctx, "integrator") {
        Some(("etd_heun", _)) | None => Integrator::EtdHeun,
        Some(("etd_euler", _)) => Integrator::EtdEuler,
        Some((other, line)) => {
            ctx.push(line, "solver.integrator", format!("expected `etd_heun` or `etd_euler`, got `{other}`"));
            Integrator::EtdHeun
        }
    };
    SolverConfig {
        dt: s.checked(ctx, "dt", d.dt, |v| v > 0.0, "must be positive"),
        t_end: s.checked(ctx, "t_end", d.t_end, |v| v > 0.0, "must be positive"),
        integrator,
        checkpoint_every: s.count(ctx, "checkpoint_every", d.checkpoint_every, 0),
        diagnostics_every: s.count(ctx, "diagnostics_every", d.diagnostics_every, 1),
        cfl_cap: s.checked(ctx, "cfl_cap", d.cfl_cap, |v| v > 0.0, "must be positive"),
        output_dir: None,
        nonlinear: s.boolean(ctx, "nonlinear").unwrap_or(d.nonlinear),
    }
}

fn rates(ctx: &mut Ctx, s: &Section) -> RateSettings {
    s.check_keys(ctx, &["window", "tolerance", "r_u", "r_tau", "columns", "times", "alignment"]);
    let d = RateSettings::default();
    let window = match s.floats::<2>(ctx, "window") {
        Some(([lo, hi], line)) if !(lo >= 0.0 && hi > lo && hi.is_finite()) => {
            ctx.push(line, "rates.window", format!("need 0 <= lo < hi, got [{lo}, {hi}]"));
            d.window
        }
        Some(([lo, hi], _)) => (lo, hi),
        None => d.window,
    };
    let tolerance = s.checked(ctx, "tolerance", d.tolerance, |v| v > 0.0, "must be positive");
    let r_check = |v: f64| v > -1.5;
    let r_u = s.float(ctx, "r_u").map(|(v, line)| {
        if !r_check(v) {
            ctx.push(line, "rates.r_u", format!("decay character must exceed -3/2, got {v}"));
        }
        v
    });
    let r_tau = s.float(ctx, "r_tau").map(|(v, line)| {
        if !r_check(v) {
            ctx.push(line, "rates.r_tau", format!("decay character must exceed -3/2, got {v}"));
        }
        v
    });
    let columns = s.strings(ctx, "columns");
    let times = match s.entry(ctx, "times") {
        None => d.times,
        Some((item, line)) => {
            let arr = item.as_array();
            let parsed = arr.filter(|a| a.len() == 3).and_then(|a| {
                let lo = a.get(0).and_then(|v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)))?;
                let hi = a.get(1).and_then(|v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)))?;
                let n = a.get(2).and_then(|v| v.as_integer())?;
                Some((lo, hi, n))
            });
            match parsed {
                Some((lo, hi, n)) if lo > 0.0 && hi > lo && hi.is_finite() && n >= 2 => (lo, hi, n as usize),
                _ => {
                    ctx.push(line, "rates.times", "expected [t_min > 0, t_max > t_min, count >= 2]");
                    d.times
                }
            }
        }
    };
    let al = s.sub(ctx, "alignment");
    let alignment = al.table.map(|_| {
        al.check_keys(ctx, &["window", "max_ratio_slope", "min_final_cos"]);
        let def = AlignmentTolerances::default();
        let window = match al.floats::<2>(ctx, "window") {
            Some(([lo, hi], line)) if !(lo >= 0.0 && hi > lo) => {
                ctx.push(line, "rates.alignment.window", format!("need 0 <= lo < hi, got [{lo}, {hi}]"));
                def.window
            }
            Some(([lo, hi], _)) => (lo, hi),
            None => def.window,
        };
        AlignmentTolerances {
            window,
            max_ratio_slope: al.checked(ctx, "max_ratio_slope", def.max_ratio_slope, |_| true, "must be finite"),
            min_final_cos: al.checked(
                ctx,
                "min_final_cos",
                def.min_final_cos,
                |v| (-1.0..=1.0).contains(&v),
                "must lie in [-1, 1]",
            ),
        }
    });
    RateSettings { window, tolerance, r_u, r_tau, columns, times, alignment }
}

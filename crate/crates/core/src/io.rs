//! Binary checkpoints, CSV time series, JSON reports and SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::rates::{RatePrediction, ReportRecord, TimeSeries, Verdict};
use crate::solver::SimState;
use crate::spectral::{FluidParams, FourierGrid, SpectralField, SpectralTensorField, SpectralVectorField};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"OLDB";
pub const CHECKPOINT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 6 * 8;

/// Serialize a state: header, then `u` (3 components) and `τ` (6
/// components), each as little-endian `(re, im)` pairs in storage order.
pub fn encode_checkpoint(state: &SimState) -> Vec<u8> {
    let g = state.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 9 * g.len() * 16);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(g.n_per_axis() as u32).to_le_bytes());
    let p = &state.params;
    for v in [g.box_scale(), p.omega(), p.a(), p.reynolds(), p.weissenberg(), state.time] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for c in state.u.components().iter().chain(state.tau.components()) {
        for z in c {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    out
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<SimState> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Checkpoint(format!("file too short ({} bytes)", bytes.len())));
    }
    if &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let version = u32_at(4);
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version} (expected {CHECKPOINT_VERSION})")));
    }
    let n = u32_at(8) as usize;
    let [m, omega, a, re, we, time] = std::array::from_fn(|i| f64_at(12 + 8 * i));
    let grid = FourierGrid::new(n, m).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let params = FluidParams::new(omega, a, re, we).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let len = grid.len();
    let expected = HEADER_LEN + 9 * len * 16;
    if bytes.len() != expected {
        return Err(Error::Checkpoint(format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let comp = |c: usize| -> Vec<Complex64> {
        let base = HEADER_LEN + c * len * 16;
        (0..len).map(|i| Complex64::new(f64_at(base + 16 * i), f64_at(base + 16 * i + 8))).collect()
    };
    let u = SpectralVectorField::from_components(&grid, std::array::from_fn(comp))?;
    let tau = SpectralTensorField::from_components(&grid, std::array::from_fn(|c| comp(3 + c)))?;
    if !(time.is_finite() && time >= 0.0) {
        return Err(Error::Checkpoint(format!("invalid time {time}")));
    }
    Ok(SimState { time, u, tau, params })
}

pub fn write_checkpoint(path: &Path, state: &SimState) -> Result<()> {
    fs::write(path, encode_checkpoint(state)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn read_checkpoint(path: &Path) -> Result<SimState> {
    let bytes = fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    decode_checkpoint(&bytes)
}

/// 17 significant digits; enough for an exact round trip.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn timeseries_to_csv(series: &TimeSeries) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    header.extend(series.names().iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    let cols: Vec<&[f64]> = series.names().iter().map(|n| series.column(n)).collect::<Result<_>>()?;
    for (i, t) in series.times().iter().enumerate() {
        let mut row = vec![fmt17(*t)];
        row.extend(cols.iter().map(|c| fmt17(c[i])));
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn emit_timeseries(series: &TimeSeries, path: &Path) -> Result<()> {
    let text = timeseries_to_csv(series)?;
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn parse_timeseries(text: &str) -> Result<TimeSeries> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("t") {
        return Err(Error::Series("first column must be `t`".into()));
    }
    let mut times = Vec::new();
    let mut cols = vec![Vec::new(); header.len() - 1];
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != header.len() {
            return Err(Error::Series(format!("row {} has {} fields", line + 2, rec.len())));
        }
        let parse =
            |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Series(format!("row {}: bad number `{s}`", line + 2)));
        times.push(parse(&rec[0])?);
        for (c, field) in cols.iter_mut().zip(rec.iter().skip(1)) {
            c.push(parse(field)?);
        }
    }
    TimeSeries::from_columns(times, header.into_iter().skip(1).zip(cols).collect())
}

pub fn read_timeseries(path: &Path) -> Result<TimeSeries> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_timeseries(&text)
}

fn raw(x: f64) -> Option<Box<RawValue>> {
    x.is_finite().then(|| RawValue::from_string(fmt17(x)).expect("valid JSON number"))
}

#[derive(Serialize)]
struct RecordJson<'a> {
    quantity: &'a str,
    predicted_exponent: Option<Box<RawValue>>,
    fitted_slope: Option<Box<RawValue>>,
    stderr: Option<Box<RawValue>>,
    window: [Option<Box<RawValue>>; 2],
    verdict: Verdict,
}

pub fn report_to_json(records: &[ReportRecord]) -> Result<String> {
    let rows: Vec<RecordJson> = records
        .iter()
        .map(|r| RecordJson {
            quantity: &r.quantity,
            predicted_exponent: r.predicted_exponent.and_then(raw),
            fitted_slope: r.fitted_slope.and_then(raw),
            stderr: r.stderr.and_then(raw),
            window: [raw(r.window.0), raw(r.window.1)],
            verdict: r.verdict,
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&rows).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn emit_report(records: &[ReportRecord], path: &Path) -> Result<()> {
    fs::write(path, report_to_json(records)?).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Guide slopes for the requested columns that carry a predicted exponent.
pub fn guides_from_prediction(prediction: &RatePrediction, columns: &[&str]) -> Vec<(String, f64)> {
    columns.iter().filter_map(|c| prediction.exponent_for_column(c).map(|e| (c.to_string(), e))).collect()
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

/// Log-log SVG of `columns` against `1 + t`, with a dashed guide line of the
/// given slope through the first point of each guided column.
pub fn plot_svg(series: &TimeSeries, columns: &[&str], guides: &[(String, f64)]) -> Result<String> {
    if columns.is_empty() {
        return Err(Error::Series("no columns to plot".into()));
    }
    let mut curves = Vec::new();
    for c in columns {
        let vals = series.column(c)?;
        let pts: Vec<(f64, f64)> = series
            .times()
            .iter()
            .zip(vals)
            .filter(|(_, v)| **v > 0.0 && v.is_finite())
            .map(|(t, v)| ((1.0 + t).log10(), v.log10()))
            .collect();
        curves.push((c.to_string(), pts));
    }
    let all = curves.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return Err(Error::Series("no positive values to plot".into()));
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let (w, h, left, right, top, bottom) = (720.0, 480.0, 70.0, 170.0, 20.0, 50.0);
    let px = |x: f64| left + (x - x0) / (x1 - x0) * (w - left - right);
    let py = |y: f64| top + (y1 - y) / (y1 - y0) * (h - top - bottom);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        w - left - right,
        h - top - bottom
    );
    for d in (x0.floor() as i64)..=(x1.ceil() as i64) {
        let x = d as f64;
        if x >= x0 - 1e-9 && x <= x1 + 1e-9 {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">1e{d}</text>"#,
                px(x),
                h - bottom + 16.0
            );
        }
    }
    for d in (y0.floor() as i64)..=(y1.ceil() as i64) {
        let y = d as f64;
        if y >= y0 - 1e-9 && y <= y1 + 1e-9 {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">1e{d}</text>"#,
                left - 6.0,
                py(y) + 4.0
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">1 + t</text>"#,
        left + 0.5 * (w - left - right),
        h - 10.0
    );
    for (i, (name, pts)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if !pts.is_empty() {
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                path.join(" ")
            );
        }
        if let (Some(&(gx, gy)), Some((_, slope))) = (pts.first(), guides.iter().find(|(c, _)| c == name)) {
            let ey = gy + slope * (x1 - gx);
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-dasharray="5,4" stroke-width="1"/>"#,
                px(gx),
                py(gy),
                px(x1),
                py(ey.max(y0))
            );
        }
        let ly = top + 16.0 + 18.0 * i as f64;
        let lx = w - right + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let label = match guides.iter().find(|(c, _)| c == name) {
            Some((_, e)) => format!("{name} (slope {e:.2})"),
            None => name.clone(),
        };
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="11">{label}</text>"#, lx + 26.0, ly + 4.0);
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_plot(series: &TimeSeries, columns: &[&str], guides: &[(String, f64)], path: &Path) -> Result<()> {
    let svg = plot_svg(series, columns, guides)?;
    fs::write(path, svg).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

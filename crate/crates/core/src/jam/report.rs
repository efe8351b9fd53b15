use std::fmt::Write;

use super::{evaluate_fit, Direction, FitResult, JamMeasurement};

pub const CSV_HEADER: &str = "dwell_s,power_dbm_increasing,power_dbm_decreasing";

/// The measured dwell-time table shipped with the crate.
pub const DWELL_TABLE_CSV: &str = include_str!("../../assets/dwell_power.csv");

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TableError {
    #[error("expected header {CSV_HEADER:?}")]
    Header,
    #[error("line {line}: {reason}")]
    Row { line: usize, reason: String },
}

/// One CSV row. A direction whose search failed is `None` and written as
/// an empty cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub dwell_s: f64,
    pub increasing: Option<f64>,
    pub decreasing: Option<f64>,
}

impl TableRow {
    pub fn measurements(&self) -> impl Iterator<Item = JamMeasurement> + '_ {
        [(self.increasing, Direction::Increasing), (self.decreasing, Direction::Decreasing)]
            .into_iter()
            .filter_map(move |(p, direction)| {
                p.map(|jam_power| JamMeasurement {
                    dwell_time: self.dwell_s,
                    jam_power,
                    direction,
                })
            })
    }
}

pub fn parse_table(text: &str) -> Result<Vec<TableRow>, TableError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(TableError::Header),
    }
    lines
        .map(|(i, l)| {
            let bad = |reason: &str| TableError::Row {
                line: i + 1,
                reason: reason.to_string(),
            };
            let cells: Vec<&str> = l.split(',').map(str::trim).collect();
            if cells.len() != 3 {
                return Err(bad("expected 3 cells"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad number {s:?}")));
            let opt = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
            let dwell_s = num(cells[0])?;
            if !(dwell_s > 0.0) {
                return Err(bad("dwell time must be positive"));
            }
            Ok(TableRow {
                dwell_s,
                increasing: opt(cells[1])?,
                decreasing: opt(cells[2])?,
            })
        })
        .collect()
}

pub fn write_table(rows: &[TableRow]) -> String {
    let cell = |v: Option<f64>| v.map(|p| format!("{p}")).unwrap_or_default();
    let mut out = format!("{CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.dwell_s, cell(r.increasing), cell(r.decreasing));
    }
    out
}

/// Coefficients, per-point residuals and RMS as a text block.
pub fn fit_report(fit: &FitResult, data: &[JamMeasurement]) -> String {
    let c = &fit.coefficients;
    let mut out = String::new();
    let _ = writeln!(out, "model: y = y0 + A1*exp(-(x-x0)/t1) + A2*exp(-(x-x0)/t2)");
    let _ = writeln!(out, "y0 = {:.6} dBm", c.y0);
    let _ = writeln!(out, "x0 = {:.6} s", c.x0);
    let _ = writeln!(out, "A1 = {:.6} dBm", c.a1);
    let _ = writeln!(out, "t1 = {:.6} s", c.t1);
    let _ = writeln!(out, "A2 = {:.6} dBm", c.a2);
    let _ = writeln!(out, "t2 = {:.6} s", c.t2);
    let _ = writeln!(out, "iterations = {}", fit.iterations);
    if fit.rank_deficient {
        let _ = writeln!(out, "warning: parameters not identifiable at the solution");
    }
    let _ = writeln!(out, "dwell_s,measured_dbm,fitted_dbm,residual_db");
    for (m, r) in data.iter().zip(&fit.residuals) {
        let _ = writeln!(
            out,
            "{},{:.3},{:.3},{:+.4}",
            m.dwell_time,
            m.jam_power,
            evaluate_fit(c, m.dwell_time),
            r
        );
    }
    let _ = writeln!(out, "rms = {:.4} dB", fit.rms);
    out
}

/// `x,y_fit` samples of the fitted curve over `[from, to]`.
pub fn plot_data(fit: &FitResult, from: f64, to: f64, points: usize) -> String {
    let mut out = String::from("x,y_fit\n");
    let n = points.max(2);
    for i in 0..n {
        let x = from + (to - from) * i as f64 / (n - 1) as f64;
        let _ = writeln!(out, "{x:.4},{:.6}", evaluate_fit(&fit.coefficients, x));
    }
    out
}

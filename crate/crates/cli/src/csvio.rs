//! Design files: optional `x1,...,xp` header, one point per line.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use quasilhd::textfmt::format_f64;
use quasilhd::PointSet;

/// Values may exceed the unit cube by at most this much.
pub const CUBE_SLACK: f64 = 1e-12;

pub fn write_design(points: &PointSet) -> String {
    let p = points.p();
    let mut out = (1..=p).map(|j| format!("x{j}")).collect::<Vec<_>>().join(",");
    out.push('\n');
    for x in points.iter() {
        let row: Vec<String> = x.iter().map(|v| format_f64(*v)).collect();
        writeln!(out, "{}", row.join(",")).expect("write to string");
    }
    out
}

pub fn read_design(text: &str) -> Result<PointSet> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if rows.is_empty() && width.is_none() && fields.iter().any(|f| f.parse::<f64>().is_err()) {
            // Header row.
            width = Some(fields.len());
            continue;
        }
        if let Some(w) = width {
            if fields.len() != w {
                bail!("row {line_no}: expected {w} columns, found {}", fields.len());
            }
        }
        width = Some(fields.len());
        let mut row = Vec::with_capacity(fields.len());
        for (col, f) in fields.iter().enumerate() {
            let v: f64 = f
                .parse()
                .with_context(|| format!("row {line_no}, column {}: cannot parse {f:?} as a number", col + 1))?;
            if !(-CUBE_SLACK..=1.0 + CUBE_SLACK).contains(&v) {
                bail!("row {line_no}, column {}: value {f} lies outside the unit cube", col + 1);
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("design file contains no points");
    }
    Ok(PointSet::from_rows(&rows)?)
}

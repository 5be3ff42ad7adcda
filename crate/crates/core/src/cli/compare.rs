//! Column-wise comparison of two result tables.

use super::table::Table;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnDiff {
    pub name: String,
    pub max_abs: f64,
    pub rms: f64,
}

const DIAGNOSTICS: [&str; 3] = ["trace_err", "herm_err", "min_eig"];

/// Linear interpolation of `(xs, ys)` at `x`; `xs` ascending.
fn interp(xs: &[f64], ys: &[f64], x: f64) -> Result<f64> {
    let n = xs.len();
    if n == 0 || x < xs[0] - 1e-12 * xs[n - 1].abs().max(1.0) || x > xs[n - 1] * (1.0 + 1e-12) + 1e-15 {
        return Err(Error::Config(format!("t = {x} lies outside the reference grid")));
    }
    let i = xs.partition_point(|&v| v <= x).clamp(1, n.max(2) - 1);
    if n == 1 {
        return Ok(ys[0]);
    }
    let (x0, x1) = (xs[i - 1], xs[i]);
    let w = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
    Ok(ys[i - 1] + w * (ys[i] - ys[i - 1]))
}

fn same_grid(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(1.0))
}

/// Differences of every shared observable column (diagnostics excluded),
/// or of `columns` when given. With `interpolate`, `b` is linearly
/// interpolated onto the times of `a`; otherwise the grids must agree.
pub fn compare_tables(a: &Table, b: &Table, columns: &[String], interpolate: bool) -> Result<Vec<ColumnDiff>> {
    let ta = a.column("t").ok_or_else(|| Error::Config("first table has no 't' column".into()))?;
    let tb = b.column("t").ok_or_else(|| Error::Config("second table has no 't' column".into()))?;
    if !interpolate && !same_grid(ta, tb) {
        return Err(Error::Config(format!(
            "time grids differ ({} vs {} rows); pass --interpolate to resample",
            ta.len(),
            tb.len()
        )));
    }
    let names: Vec<String> = if columns.is_empty() {
        a.headers
            .iter()
            .filter(|h| *h != "t" && !DIAGNOSTICS.contains(&h.as_str()) && b.column(h).is_some())
            .cloned()
            .collect()
    } else {
        columns.to_vec()
    };
    if names.is_empty() {
        return Err(Error::Config("no common columns to compare".into()));
    }
    let mut out = Vec::new();
    for name in names {
        let ya = a.column(&name).ok_or_else(|| Error::Config(format!("first table lacks '{name}'")))?;
        let yb = b.column(&name).ok_or_else(|| Error::Config(format!("second table lacks '{name}'")))?;
        let mut max_abs = 0.0_f64;
        let mut sq = 0.0;
        for (k, &t) in ta.iter().enumerate() {
            let vb = if interpolate { interp(tb, yb, t)? } else { yb[k] };
            let d = (ya[k] - vb).abs();
            max_abs = max_abs.max(d);
            sq += d * d;
        }
        out.push(ColumnDiff {
            name,
            max_abs,
            rms: (sq / ta.len().max(1) as f64).sqrt(),
        });
    }
    Ok(out)
}

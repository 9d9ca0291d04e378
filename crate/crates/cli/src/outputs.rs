//! Deterministic file outputs: time series, snapshots, grid and state
//! dumps. All floating-point values are written with full precision so
//! identical runs produce byte-identical files.

use crate::diagnostics::TimeSeriesRecord;
use anyhow::{bail, Context, Result};
use ndarray::{Array1, Array2};
use sgdg::basis1d::legendre_cell_value;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub const TIMESERIES_HEADER: &str =
    "t,active_elements,gmres_iters,dn,dmom,denergy,epot,ekin,etotal";

pub fn timeseries_csv(records: &[TimeSeriesRecord]) -> String {
    let mut out = String::from(TIMESERIES_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{:.17e},{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            r.t, r.active_elements, r.gmres_iters, r.dn, r.dmom, r.denergy, r.epot, r.ekin,
            r.etotal
        );
    }
    out
}

pub fn write_timeseries(path: &Path, records: &[TimeSeriesRecord]) -> Result<()> {
    fs::write(path, timeseries_csv(records))
        .with_context(|| format!("writing {}", path.display()))
}

/// Parse a timeseries.csv back into (t, epot) pairs for the damping fit.
pub fn read_epot_series(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != TIMESERIES_HEADER {
        bail!("unexpected timeseries header: {header}");
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 9 {
            bail!("line {}: expected 9 columns", i + 2);
        }
        let t: f64 = cols[0].parse()?;
        let epot: f64 = cols[6].parse()?;
        out.push((t, epot));
    }
    Ok(out)
}

/// Evaluate a 2D per-cell Legendre field at a point; points on interior
/// cell boundaries take the left-limit value.
pub fn eval_legendre_2d(
    field: &Array2<f64>,
    k: usize,
    x_domain: (f64, f64),
    y_domain: (f64, f64),
    x: f64,
    y: f64,
) -> f64 {
    let k1 = k + 1;
    let (xc, yc) = (field.nrows() / k1, field.ncols() / k1);
    let hx = (x_domain.1 - x_domain.0) / xc as f64;
    let hy = (y_domain.1 - y_domain.0) / yc as f64;
    let cx = (((x - x_domain.0) / hx).ceil() as usize).clamp(1, xc) - 1;
    let cy = (((y - y_domain.0) / hy).ceil() as usize).clamp(1, yc) - 1;
    let lox = x_domain.0 + cx as f64 * hx;
    let loy = y_domain.0 + cy as f64 * hy;
    let mut acc = 0.0;
    for i in 0..k1 {
        for j in 0..k1 {
            acc += field[[cx * k1 + i, cy * k1 + j]]
                * legendre_cell_value(i, lox, hx, x)
                * legendre_cell_value(j, loy, hy, y);
        }
    }
    acc
}

/// Uniform sampling lattice with `2^level + 1` points.
pub fn lattice(domain: (f64, f64), level: usize) -> Vec<f64> {
    let n = (1usize << level) + 1;
    let h = (domain.1 - domain.0) / (n - 1) as f64;
    (0..n).map(|i| domain.0 + i as f64 * h).collect()
}

/// Snapshot CSV of a 2D Legendre field sampled on a lattice.
pub fn snapshot_csv(
    header: (&str, &str),
    xs: &[f64],
    ys: &[f64],
    value_at: impl Fn(f64, f64) -> f64,
) -> String {
    let mut out = format!("{},{},value\n", header.0, header.1);
    for &x in xs {
        for &y in ys {
            let _ = writeln!(out, "{:.17e},{:.17e},{:.17e}", x, y, value_at(x, y));
        }
    }
    out
}

pub fn write_snapshot(
    path: &Path,
    header: (&str, &str),
    xs: &[f64],
    ys: &[f64],
    value_at: impl Fn(f64, f64) -> f64,
) -> Result<()> {
    fs::write(path, snapshot_csv(header, xs, ys, value_at))
        .with_context(|| format!("writing {}", path.display()))
}

/// Read a lattice snapshot back: returns (xs, ys, values) with values in
/// row-major (x-major) order.
pub fn read_snapshot(path: &Path) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            bail!("line {}: expected 3 columns", i + 1);
        }
        let x: f64 = cols[0].parse()?;
        let y: f64 = cols[1].parse()?;
        let v: f64 = cols[2].parse()?;
        if xs.last().is_none_or(|&last| x > last) {
            xs.push(x);
        }
        if xs.len() == 1 {
            ys.push(y);
        }
        values.push(v);
    }
    if xs.len() * ys.len() != values.len() {
        bail!("snapshot is not a full lattice");
    }
    Ok((xs, ys, values))
}

pub fn write_state(path: &Path, state: &Array1<f64>) -> Result<()> {
    let mut out = String::with_capacity(state.len() * 25);
    for v in state.iter() {
        let _ = writeln!(out, "{v:.17e}");
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn read_state(path: &Path) -> Result<Array1<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let values: Vec<f64> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse::<f64>().map_err(|e| anyhow::anyhow!("{e}: '{l}'")))
        .collect::<Result<_>>()?;
    Ok(Array1::from_vec(values))
}

pub fn write_matrix(path: &Path, m: &Array2<f64>) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let sep = if c + 1 == m.ncols() { "\n" } else { " " };
            let _ = write!(out, "{:.17e}{}", m[[r, c]], sep);
        }
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let dims: Vec<usize> = lines
        .next()
        .unwrap_or_default()
        .split_whitespace()
        .map(|t| t.parse().unwrap_or(0))
        .collect();
    if dims.len() != 2 {
        bail!("bad matrix header");
    }
    let mut values = Vec::with_capacity(dims[0] * dims[1]);
    for line in lines {
        for tok in line.split_whitespace() {
            values.push(tok.parse::<f64>()?);
        }
    }
    Array2::from_shape_vec((dims[0], dims[1]), values).context("matrix shape mismatch")
}

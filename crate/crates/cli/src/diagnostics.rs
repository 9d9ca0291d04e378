//! Run diagnostics: energy series, the damping-rate fit, and reduced
//! moment errors against the Chu reference.

use anyhow::{bail, Result};
use ndarray::Array2;

/// One row of the time series output.
#[derive(Debug, Clone)]
pub struct TimeSeriesRecord {
    pub t: f64,
    pub active_elements: usize,
    pub gmres_iters: usize,
    pub dn: f64,
    pub dmom: f64,
    pub denergy: f64,
    pub epot: f64,
    pub ekin: f64,
    pub etotal: f64,
}

/// Exponential decay rate of a potential-energy series, from a linear
/// least-squares fit of log(E) at its local maxima (convention
/// `E ~ exp(-gamma t)`, so decay yields positive gamma).
///
/// Raw strict interior maxima are thinned with a minimum-separation
/// window of half the oscillation period estimated from the first two
/// maxima, keeping the larger peak when two compete.
pub fn damping_rate_fit(series: &[(f64, f64)]) -> Result<f64> {
    let mut raw = Vec::new();
    for i in 1..series.len().saturating_sub(1) {
        if series[i].1 > series[i - 1].1 && series[i].1 > series[i + 1].1 {
            raw.push(series[i]);
        }
    }
    // constant series: no interior maxima, zero rate by convention
    if raw.is_empty() {
        let all_equal = series.windows(2).all(|w| (w[0].1 - w[1].1).abs() < 1e-300);
        if all_equal && series.len() >= 3 {
            return Ok(0.0);
        }
        bail!("damping fit needs at least 3 local maxima, found 0");
    }
    let peaks = if raw.len() >= 2 {
        let window = 0.45 * (raw[1].0 - raw[0].0);
        let mut kept: Vec<(f64, f64)> = vec![raw[0]];
        for &p in &raw[1..] {
            let last = *kept.last().unwrap();
            if p.0 - last.0 >= window {
                kept.push(p);
            } else if p.1 > last.1 {
                *kept.last_mut().unwrap() = p;
            }
        }
        kept
    } else {
        raw
    };
    if peaks.len() < 3 {
        bail!("damping fit needs at least 3 local maxima, found {}", peaks.len());
    }
    // least squares of ln E against t
    let n = peaks.len() as f64;
    let (mut st, mut se, mut stt, mut ste) = (0.0, 0.0, 0.0, 0.0);
    for &(t, e) in &peaks {
        if e <= 0.0 {
            bail!("nonpositive potential energy in the fit window");
        }
        let le = e.ln();
        st += t;
        se += le;
        stt += t * t;
        ste += t * le;
    }
    let slope = (n * ste - st * se) / (n * stt - st * st);
    Ok(-slope)
}

/// L2 norm over (x, v_x) of the difference between two per-cell Legendre
/// coefficient fields at matched levels (orthonormal basis: Euclidean
/// distance of coefficients).
pub fn reduced_moment_error(marginal: &Array2<f64>, reference: &Array2<f64>) -> Result<f64> {
    if marginal.dim() != reference.dim() {
        bail!(
            "field shapes differ: {:?} vs {:?} (levels must match)",
            marginal.dim(),
            reference.dim()
        );
    }
    Ok(marginal
        .iter()
        .zip(reference.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

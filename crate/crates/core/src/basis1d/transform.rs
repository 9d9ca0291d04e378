//! Change of coordinates between per-element Legendre and hierarchical
//! wavelet representations of the same DG space.

use super::family::{build_alpert_basis, eval_wavelet};
use super::{element_level_position, space_dim};
use crate::quadrature::gauss_legendre;
use crate::Result;
use ndarray::{Array1, Array2};

/// Orthogonal transform at a fixed level: `wavelet = forward * legendre`.
#[derive(Debug, Clone)]
pub struct BasisTransform1D {
    pub k: usize,
    pub level: usize,
    pub forward: Array2<f64>,
}

impl BasisTransform1D {
    pub fn n(&self) -> usize {
        self.forward.nrows()
    }

    pub fn to_wavelet(&self, legendre: &Array1<f64>) -> Array1<f64> {
        self.forward.dot(legendre)
    }

    pub fn to_legendre(&self, wavelet: &Array1<f64>) -> Array1<f64> {
        self.forward.t().dot(wavelet)
    }

    /// Conjugate an operator matrix from Legendre into wavelet
    /// coordinates: `F A F^T`.
    pub fn conjugate(&self, a_legendre: &Array2<f64>) -> Array2<f64> {
        self.forward.dot(a_legendre).dot(&self.forward.t())
    }
}

/// Value of the L2(cell)-normalized Legendre basis function of index `i`
/// on the cell `(lo, lo + h)`.
pub fn legendre_cell_value(i: usize, lo: f64, h: f64, x: f64) -> f64 {
    let xi = 2.0 * (x - lo) / h - 1.0;
    let mut p_prev = 1.0;
    let mut p = xi;
    let value = match i {
        0 => 1.0,
        1 => xi,
        _ => {
            for j in 2..=i {
                let jf = j as f64;
                let next = ((2.0 * jf - 1.0) * xi * p - (jf - 1.0) * p_prev) / jf;
                p_prev = p;
                p = next;
            }
            p
        }
    };
    ((2 * i + 1) as f64 / h).sqrt() * value
}

/// Build the forward transform on the reference interval (0, 1) at the
/// given level. Wavelet dofs are ordered by hierarchical element
/// (level-0 block first, then each complement level), Legendre dofs by
/// cell.
pub fn build_transform(k: usize, level: usize) -> Result<BasisTransform1D> {
    let family = build_alpert_basis(k)?;
    let n = space_dim(k, level);
    let cells = 1usize << level;
    let h = 1.0 / cells as f64;
    let (qx, qw) = gauss_legendre(k + 3);
    let mut forward = Array2::zeros((n, n));
    for elt in 0..(1usize << level) {
        let (lvl, pos) = element_level_position(elt);
        let (cell_start, cell_count) = if lvl <= 1 {
            (0usize, cells)
        } else {
            let count = 1usize << (level - (lvl - 1));
            (pos * count, count)
        };
        for i in 1..=(k + 1) {
            let row = elt * (k + 1) + (i - 1);
            for cell in cell_start..cell_start + cell_count {
                let lo = cell as f64 * h;
                for (xq, wq) in qx.iter().zip(&qw) {
                    let x = lo + 0.5 * h * (xq + 1.0);
                    let w = 0.5 * h * wq;
                    let gval = eval_wavelet(&family, lvl, pos, i, x)?;
                    if gval == 0.0 {
                        continue;
                    }
                    for i2 in 0..=k {
                        forward[[row, cell * (k + 1) + i2]] +=
                            w * gval * legendre_cell_value(i2, lo, h, x);
                    }
                }
            }
        }
    }
    Ok(BasisTransform1D { k, level, forward })
}

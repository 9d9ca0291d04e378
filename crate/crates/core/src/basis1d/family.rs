//! Alpert multiwavelet construction.
//!
//! The mother wavelets are piecewise degree-k polynomials on (-1, 1),
//! determined (up to sign) by parity, vanishing moments, and mutual
//! orthonormality. All basis functions at refined levels are shifts and
//! rescalings of these.

use super::poly::{shifted_legendre_normalized, Poly};
use crate::linalg::null_space_vector;
use crate::{Error, Result};
use ndarray::Array2;

/// One mother wavelet: its polynomial pieces on (0,1) and (-1,0) and the
/// parity sign relating them, `phi(-y) = parity * phi(y)`.
#[derive(Debug, Clone)]
pub struct MotherWavelet {
    pub right: Poly,
    pub left: Poly,
    pub parity: f64,
}

impl MotherWavelet {
    /// Evaluate on (-1, 1). At the internal break y = 0 the left-hand
    /// limit is returned (left-limit convention at interior interfaces).
    pub fn eval(&self, y: f64) -> f64 {
        if y <= 0.0 {
            self.left.eval(y)
        } else {
            self.right.eval(y)
        }
    }
}

/// The degree-k Alpert wavelet family together with the level-0 scaling
/// functions (normalized shifted Legendre polynomials on (0,1)).
#[derive(Debug, Clone)]
pub struct WaveletFamily1D {
    pub k: usize,
    pub mothers: Vec<MotherWavelet>,
    pub scaling: Vec<Poly>,
}

/// Construct the Alpert wavelets for polynomial degree `k <= 3`.
///
/// Wavelets are built from the highest polynomial index down: each one is
/// the unique (up to sign) unit-norm piecewise polynomial with the
/// required parity, the required vanishing moments, and orthogonality to
/// the already-built wavelets of the same parity. Signs follow the
/// positive-leading-coefficient convention, which reproduces the
/// published k=2 polynomials.
pub fn build_alpert_basis(k: usize) -> Result<WaveletFamily1D> {
    if k > 3 {
        return Err(Error::UnsupportedDegree(k));
    }
    let n = k + 1;
    let mut rights: Vec<Option<Poly>> = vec![None; n];
    for i in (1..=n).rev() {
        let parity = parity_sign(i, k);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        // Moment constraints not already implied by parity: the moment
        // against y^j over (-1,1) vanishes automatically when
        // parity * (-1)^j = -1, so only j with (-1)^j = parity constrain
        // the right-hand piece.
        for j in 0..(i + k) {
            let j_sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j_sign == parity {
                rows.push((0..n).map(|m| 1.0 / (m + j + 1) as f64).collect());
            }
        }
        // Orthogonality to same-parity wavelets already constructed.
        for (i2, built) in rights.iter().enumerate() {
            if let Some(p2) = built {
                if parity_sign(i2 + 1, k) == parity {
                    rows.push(
                        (0..n)
                            .map(|m| {
                                p2.c.iter()
                                    .enumerate()
                                    .map(|(m2, &c2)| c2 / (m + m2 + 1) as f64)
                                    .sum()
                            })
                            .collect(),
                    );
                }
            }
        }
        debug_assert_eq!(rows.len(), k);
        let constraints =
            Array2::from_shape_vec((rows.len(), n), rows.into_iter().flatten().collect())
                .expect("constraint shape");
        let v = null_space_vector(&constraints, "alpert wavelet construction")?;
        let mut p = Poly::new(v.to_vec());
        // Unit norm over (-1,1): 2 * integral of p^2 over (0,1) = 1.
        let norm = (2.0 * p.inner01(&p)).sqrt();
        p = p.scale(1.0 / norm);
        // Fix the sign by the leading coefficient of the (0,1) piece.
        let max_abs = p.c.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let lead = p
            .c
            .iter()
            .rposition(|c| c.abs() > 1e-9 * max_abs)
            .unwrap_or(0);
        if p.c[lead] < 0.0 {
            p = p.scale(-1.0);
        }
        rights[i - 1] = Some(p);
    }
    let mothers = rights
        .into_iter()
        .enumerate()
        .map(|(i0, p)| {
            let right = p.expect("constructed");
            let parity = parity_sign(i0 + 1, k);
            let left = right.compose_affine(-1.0, 0.0).scale(parity);
            MotherWavelet { right, left, parity }
        })
        .collect();
    let scaling = (0..n).map(shifted_legendre_normalized).collect();
    Ok(WaveletFamily1D { k, mothers, scaling })
}

fn parity_sign(i: usize, k: usize) -> f64 {
    if (i + k) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Evaluate the hierarchical basis function `g_{l,j}^i` at `y` in the
/// reference interval (0, 1).
///
/// Level 0 holds the scaling functions; for `l >= 1` the value is
/// `2^((l-1)/2) * gamma_i(2^(l-1) y - j)` with
/// `gamma_i(t) = sqrt(2) * phi_i(2t - 1)`, supported on the dyadic cell
/// `I_{l-1,j}`. Outside the support the value is zero.
pub fn eval_wavelet(
    family: &WaveletFamily1D,
    level: usize,
    position: usize,
    i: usize,
    y: f64,
) -> Result<f64> {
    let k = family.k;
    if i < 1 || i > k + 1 {
        return Err(Error::IndexOutOfRange(format!(
            "polynomial index i={i} for k={k}"
        )));
    }
    if level == 0 {
        if position != 0 {
            return Err(Error::IndexOutOfRange(format!(
                "position {position} at level 0"
            )));
        }
        return Ok(family.scaling[i - 1].eval(y));
    }
    let max_pos = 1usize << (level - 1);
    if position >= max_pos {
        return Err(Error::IndexOutOfRange(format!(
            "position {position} at level {level}"
        )));
    }
    let t = ((1u64 << (level - 1)) as f64) * y - position as f64;
    if !(0.0..=1.0).contains(&t) {
        return Ok(0.0);
    }
    let scale = 2f64.powf((level as f64 - 1.0) / 2.0) * std::f64::consts::SQRT_2;
    Ok(scale * family.mothers[i - 1].eval(2.0 * t - 1.0))
}

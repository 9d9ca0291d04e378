//! Small dense linear algebra: LU with partial pivoting and null spaces.
//!
//! The systems solved here are small (per-element blocks, Poisson nodes,
//! wavelet construction), so a self-contained factorization avoids any
//! external BLAS/LAPACK dependency and keeps results bit-reproducible.

use crate::{Error, Result};
use ndarray::{Array1, Array2};

/// LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct LuFactor {
    lu: Array2<f64>,
    piv: Vec<usize>,
}

impl LuFactor {
    pub fn new(a: &Array2<f64>, context: &str) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "LU requires a square matrix");
        let mut lu = a.clone();
        let mut piv = Vec::with_capacity(n);
        for col in 0..n {
            let mut pivot_row = col;
            let mut best = lu[[col, col]].abs();
            for r in col + 1..n {
                let v = lu[[r, col]].abs();
                if v > best {
                    best = v;
                    pivot_row = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::SingularMatrix(context.to_string()));
            }
            if pivot_row != col {
                for c in 0..n {
                    lu.swap([col, c], [pivot_row, c]);
                }
            }
            piv.push(pivot_row);
            let d = lu[[col, col]];
            for r in col + 1..n {
                let f = lu[[r, col]] / d;
                lu[[r, col]] = f;
                if f != 0.0 {
                    for c in col + 1..n {
                        lu[[r, c]] -= f * lu[[col, c]];
                    }
                }
            }
        }
        Ok(Self { lu, piv })
    }

    pub fn n(&self) -> usize {
        self.lu.nrows()
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n();
        assert_eq!(b.len(), n);
        for (col, &p) in self.piv.iter().enumerate() {
            if p != col {
                b.swap(col, p);
            }
        }
        for r in 1..n {
            let mut acc = b[r];
            for c in 0..r {
                acc -= self.lu[[r, c]] * b[c];
            }
            b[r] = acc;
        }
        for r in (0..n).rev() {
            let mut acc = b[r];
            for c in r + 1..n {
                acc -= self.lu[[r, c]] * b[c];
            }
            b[r] = acc / self.lu[[r, r]];
        }
    }

    pub fn solve(&self, b: &Array1<f64>) -> Array1<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Array1::from_vec(x)
    }
}

/// Solve `a x = b` for a single right-hand side.
pub fn solve_dense(a: &Array2<f64>, b: &Array1<f64>, context: &str) -> Result<Array1<f64>> {
    Ok(LuFactor::new(a, context)?.solve(b))
}

/// One-dimensional null space of an m x n constraint matrix (m = n - 1
/// independent rows expected). Gaussian elimination with full pivoting;
/// the returned vector is unnormalized.
pub fn null_space_vector(c: &Array2<f64>, context: &str) -> Result<Array1<f64>> {
    let m = c.nrows();
    let n = c.ncols();
    let mut a = c.clone();
    let mut col_perm: Vec<usize> = (0..n).collect();
    let mut rank = 0usize;
    for step in 0..m.min(n) {
        // full pivot over the remaining submatrix
        let (mut pr, mut pc, mut best) = (step, step, 0.0f64);
        for r in step..m {
            for cidx in step..n {
                let v = a[[r, cidx]].abs();
                if v > best {
                    best = v;
                    pr = r;
                    pc = cidx;
                }
            }
        }
        if best < 1e-12 {
            break;
        }
        if pr != step {
            for cidx in 0..n {
                a.swap([step, cidx], [pr, cidx]);
            }
        }
        if pc != step {
            for r in 0..m {
                a.swap([r, step], [r, pc]);
            }
            col_perm.swap(step, pc);
        }
        let d = a[[step, step]];
        for r in step + 1..m {
            let f = a[[r, step]] / d;
            if f != 0.0 {
                for cidx in step..n {
                    a[[r, cidx]] -= f * a[[step, cidx]];
                }
            }
        }
        rank += 1;
    }
    if rank + 1 != n {
        return Err(Error::SingularMatrix(format!(
            "{context}: expected a one-dimensional null space (rank {rank}, n {n})"
        )));
    }
    // Free variable is the last permuted column; back-substitute.
    let mut x = vec![0.0; n];
    x[n - 1] = 1.0;
    for r in (0..rank).rev() {
        let mut acc = 0.0;
        for cidx in r + 1..n {
            acc += a[[r, cidx]] * x[cidx];
        }
        x[r] = -acc / a[[r, r]];
    }
    let mut out = vec![0.0; n];
    for (permuted, &orig) in col_perm.iter().enumerate() {
        out[orig] = x[permuted];
    }
    Ok(Array1::from_vec(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn lu_solves_small_system() {
        let a = array![[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]];
        let b = array![1.0, 2.0, 3.0];
        let x = solve_dense(&a, &b, "test").unwrap();
        let r = a.dot(&x) - &b;
        assert!(r.iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn lu_detects_singular() {
        let a = array![[1.0, 2.0], [2.0, 4.0]];
        assert!(LuFactor::new(&a, "singular").is_err());
    }

    #[test]
    fn null_space_of_rank_deficient_rows() {
        // rows orthogonal to (1, -2, 1)
        let c = array![[1.0, 1.0, 1.0], [0.0, 1.0, 2.0]];
        let v = null_space_vector(&c, "test").unwrap();
        let r0 = v[0] + v[1] + v[2];
        let r1 = v[1] + 2.0 * v[2];
        assert_abs_diff_eq!(r0, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r1, 0.0, epsilon = 1e-12);
        assert!(v.iter().any(|x| x.abs() > 1e-8));
    }
}

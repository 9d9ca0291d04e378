//! Restarted GMRES with optional block-Jacobi preconditioning.
//!
//! The iteration is right-preconditioned so reported residuals are true
//! residuals of the original system. Orthogonalization is modified
//! Gram-Schmidt with a second pass when cancellation is severe. All
//! reductions run in a fixed order; identical inputs produce identical
//! outputs.

use crate::kronops::{KronApplicator, SeparableOperator};
use crate::linalg::LuFactor;
use crate::{Error, Result};
use ndarray::{Array1, Array2};

/// Outcome of one linear solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
    pub restarts: usize,
}

/// GMRES controls: relative-residual tolerance, restart length, and the
/// total inner-iteration budget.
#[derive(Debug, Clone)]
pub struct GmresOptions {
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self { tol: 1e-8, restart: 100, max_iter: 10_000 }
    }
}

/// Per-element dense blocks factorized once; application solves each
/// block independently.
#[derive(Debug)]
pub struct BlockJacobi {
    factors: Vec<LuFactor>,
    block_size: usize,
}

impl BlockJacobi {
    pub fn from_blocks(blocks: Vec<Array2<f64>>) -> Result<Self> {
        let block_size = blocks.first().map(|b| b.nrows()).unwrap_or(0);
        let factors = blocks
            .iter()
            .enumerate()
            .map(|(e, b)| LuFactor::new(b, &format!("block-jacobi element {e}")))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { factors, block_size })
    }

    /// Build from the diagonal blocks of a separable operator on a grid.
    pub fn from_operator(
        op: &SeparableOperator,
        applicator: &KronApplicator<'_>,
    ) -> Result<Self> {
        Self::from_blocks(applicator.block_diagonal(op)?)
    }

    pub fn solve(&self, v: &Array1<f64>) -> Array1<f64> {
        let bs = self.block_size;
        let mut out = v.to_vec();
        for (e, f) in self.factors.iter().enumerate() {
            f.solve_in_place(&mut out[e * bs..(e + 1) * bs]);
        }
        Array1::from_vec(out)
    }
}

fn norm(v: &Array1<f64>) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solve `A x = b` by restarted GMRES.
///
/// `apply_a` is the operator action; `x0` the initial guess (zero when
/// absent); `precond` an optional preconditioner-inverse action applied
/// on the right. Breakdown of the Arnoldi recurrence is reported through
/// an early exit with the current iterate, not an error.
pub fn gmres<F>(
    apply_a: F,
    b: &Array1<f64>,
    x0: Option<&Array1<f64>>,
    opts: &GmresOptions,
    precond: Option<&dyn Fn(&Array1<f64>) -> Array1<f64>>,
) -> Result<(Array1<f64>, SolveReport)>
where
    F: Fn(&Array1<f64>) -> Array1<f64>,
{
    let n = b.len();
    if opts.tol <= 0.0 {
        return Err(Error::Invalid("gmres tolerance must be positive".into()));
    }
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok((
            Array1::zeros(n),
            SolveReport { iterations: 0, final_residual: 0.0, converged: true, restarts: 0 },
        ));
    }
    let mut x = match x0 {
        Some(g) => g.clone(),
        None => Array1::zeros(n),
    };
    let m = opts.restart.max(1);
    let mut total_iters = 0usize;
    let mut restarts = 0usize;
    let mut final_residual;
    loop {
        let r = b - &apply_a(&x);
        let beta = norm(&r);
        final_residual = beta / b_norm;
        if final_residual <= opts.tol {
            return Ok((
                x,
                SolveReport {
                    iterations: total_iters,
                    final_residual,
                    converged: true,
                    restarts,
                },
            ));
        }
        if total_iters >= opts.max_iter {
            return Ok((
                x,
                SolveReport {
                    iterations: total_iters,
                    final_residual,
                    converged: false,
                    restarts,
                },
            ));
        }
        let mut basis: Vec<Array1<f64>> = vec![&r / beta];
        let mut h = vec![vec![0.0f64; 0]; 0]; // h[j] has j+2 entries
        let mut cs: Vec<f64> = Vec::new();
        let mut sn: Vec<f64> = Vec::new();
        let mut g = vec![beta];
        let mut inner = 0usize;
        let mut breakdown = false;
        while inner < m && total_iters < opts.max_iter {
            let j = inner;
            let vj = &basis[j];
            let z = match precond {
                Some(p) => p(vj),
                None => vj.clone(),
            };
            let mut w = apply_a(&z);
            let w_norm_before = norm(&w);
            let mut hj = vec![0.0f64; j + 2];
            for (i, vi) in basis.iter().enumerate() {
                let hij = w.dot(vi);
                hj[i] = hij;
                w.scaled_add(-hij, vi);
            }
            // second orthogonalization pass under severe cancellation
            if norm(&w) < 1e-4 * w_norm_before {
                for (i, vi) in basis.iter().enumerate() {
                    let corr = w.dot(vi);
                    hj[i] += corr;
                    w.scaled_add(-corr, vi);
                }
            }
            let w_norm = norm(&w);
            hj[j + 1] = w_norm;
            // apply accumulated Givens rotations
            for i in 0..j {
                let t = cs[i] * hj[i] + sn[i] * hj[i + 1];
                hj[i + 1] = -sn[i] * hj[i] + cs[i] * hj[i + 1];
                hj[i] = t;
            }
            // new rotation eliminating hj[j+1]
            let denom = (hj[j] * hj[j] + hj[j + 1] * hj[j + 1]).sqrt();
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (hj[j] / denom, hj[j + 1] / denom) };
            cs.push(c);
            sn.push(s);
            hj[j] = c * hj[j] + s * hj[j + 1];
            hj[j + 1] = 0.0;
            g.push(-s * g[j]);
            g[j] *= c;
            h.push(hj);
            inner += 1;
            total_iters += 1;
            let est = g[inner].abs() / b_norm;
            if w_norm <= 1e-14 * b_norm {
                breakdown = true;
                break;
            }
            basis.push(&w / w_norm);
            if est <= opts.tol {
                break;
            }
        }
        // back-substitute y from the triangular system and update x
        if inner > 0 {
            let mut y = vec![0.0f64; inner];
            for i in (0..inner).rev() {
                let mut acc = g[i];
                for l in i + 1..inner {
                    acc -= h[l][i] * y[l];
                }
                y[i] = acc / h[i][i];
            }
            let mut update = Array1::<f64>::zeros(n);
            for (i, yi) in y.iter().enumerate() {
                update.scaled_add(*yi, &basis[i]);
            }
            if let Some(p) = precond {
                update = p(&update);
            }
            x += &update;
        }
        let true_res = norm(&(b - &apply_a(&x))) / b_norm;
        final_residual = true_res;
        if true_res <= opts.tol {
            return Ok((
                x,
                SolveReport {
                    iterations: total_iters,
                    final_residual,
                    converged: true,
                    restarts,
                },
            ));
        }
        if breakdown || total_iters >= opts.max_iter {
            return Ok((
                x,
                SolveReport {
                    iterations: total_iters,
                    final_residual,
                    converged: final_residual <= opts.tol,
                    restarts,
                },
            ));
        }
        restarts += 1;
    }
}

//! Discrete Poisson solve on the continuous piecewise-linear periodic
//! space, with the background density chosen for charge neutrality and a
//! zero-mean gauge on the potential.

use super::PhysicsContext;
use crate::basis1d::{legendre_cell_value, space_dim};
use crate::linalg::LuFactor;
use crate::quadrature::gauss_legendre;
use crate::Result;
use ndarray::{Array1, Array2};
use std::cell::RefCell;

/// Electrostatic field: nodal values of the potential and the per-cell
/// constant electric field `E = -dPhi/dx`.
#[derive(Debug, Clone)]
pub struct ElectricField {
    pub phi_nodes: Array1<f64>,
    pub e_cells: Array1<f64>,
    pub cell_width: f64,
}

impl ElectricField {
    pub fn zero(cells: usize, cell_width: f64) -> Self {
        Self {
            phi_nodes: Array1::zeros(cells),
            e_cells: Array1::zeros(cells),
            cell_width,
        }
    }

    /// `1/2 integral of E^2` over the spatial domain (E is piecewise
    /// constant, so the sum is exact).
    pub fn potential_energy(&self) -> f64 {
        0.5 * self.cell_width * self.e_cells.iter().map(|e| e * e).sum::<f64>()
    }
}

/// Periodic Poisson solver on hat functions over a uniform mesh. The
/// stiffness system is bordered with the zero-mean constraint and
/// factorized once.
pub struct PeriodicPoisson {
    pub k: usize,
    pub level: usize,
    pub domain: (f64, f64),
    lu: RefCell<Option<LuFactor>>,
}

impl PeriodicPoisson {
    pub fn new(k: usize, level: usize, domain: (f64, f64)) -> Self {
        Self { k, level, domain, lu: RefCell::new(None) }
    }

    /// Solve with the background electron density set to the spatial
    /// mean of the input (charge neutrality), making the discrete system
    /// exactly solvable.
    pub fn solve(&self, density_leg: &Array1<f64>) -> Result<ElectricField> {
        let k = self.k;
        let cells = 1usize << self.level;
        let (a, b) = self.domain;
        let h = (b - a) / cells as f64;
        assert_eq!(density_leg.len(), space_dim(k, self.level));

        let volume = b - a;
        let total: f64 = (0..cells).map(|c| density_leg[c * (k + 1)] * h.sqrt()).sum();
        let n_e = total / volume;

        // rhs: (n - n_e, hat_i); hat_i peaks at node i = a + i h and is
        // supported on cells i-1 and i (periodic)
        let (qx, qw) = gauss_legendre(k + 3);
        let mut rhs = vec![0.0f64; cells + 1];
        for c in 0..cells {
            let lo = a + c as f64 * h;
            for (xq, wq) in qx.iter().zip(&qw) {
                let x = lo + 0.5 * h * (xq + 1.0);
                let w = 0.5 * h * wq;
                let mut nval = -n_e;
                for i in 0..=k {
                    nval += density_leg[c * (k + 1) + i] * legendre_cell_value(i, lo, h, x);
                }
                let t = (x - lo) / h;
                rhs[(c + 1) % cells] += w * nval * t;
                rhs[c] += w * nval * (1.0 - t);
            }
        }
        rhs[cells] = 0.0; // gauge row

        if self.lu.borrow().is_none() {
            let n = cells;
            let mut m = Array2::<f64>::zeros((n + 1, n + 1));
            for i in 0..n {
                m[[i, i]] = 2.0 / h;
                m[[i, (i + 1) % n]] -= 1.0 / h;
                m[[i, (i + n - 1) % n]] -= 1.0 / h;
                // zero-mean constraint: integral of phi = h * sum_i phi_i
                m[[i, n]] = h;
                m[[n, i]] = h;
            }
            *self.lu.borrow_mut() = Some(LuFactor::new(&m, "poisson")?);
        }
        let lu_ref = self.lu.borrow();
        let lu = lu_ref.as_ref().expect("factorized");
        lu.solve_in_place(&mut rhs);
        let phi = Array1::from_iter(rhs[..cells].iter().copied());
        let mut e_cells = Array1::zeros(cells);
        for c in 0..cells {
            e_cells[c] = -(phi[(c + 1) % cells] - phi[c]) / h;
        }
        Ok(ElectricField { phi_nodes: phi, e_cells, cell_width: h })
    }
}

impl PhysicsContext {
    /// Solve the periodic Poisson problem for the given density (per-cell
    /// Legendre coefficients in x).
    pub fn solve_poisson(&self, density_leg: &Array1<f64>) -> Result<ElectricField> {
        if self.poisson_lu.borrow().is_none() {
            *self.poisson_lu.borrow_mut() = Some(PeriodicPoisson::new(
                self.k(),
                self.config.caps[0],
                self.config.x_domain,
            ));
        }
        self.poisson_lu.borrow().as_ref().expect("initialized").solve(density_leg)
    }
}

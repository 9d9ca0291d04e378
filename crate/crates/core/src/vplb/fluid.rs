//! Velocity moments and fluid variables.
//!
//! Moments are computed by contracting the state with 1D moment
//! functionals in the velocity dimensions; by the vanishing-moment
//! property only velocity-level-0 blocks contribute for weights of
//! polynomial degree <= k. The bulk velocity and temperature are defined
//! through density-weighted per-cell projections, which makes the
//! discrete collision operator annihilate number, momentum, and energy
//! functionals exactly.

use super::{PhysicsContext};
use crate::basis1d::legendre_cell_value;
use crate::hiergrid::AdaptiveGrid;
use crate::linalg::LuFactor;
use crate::quadrature::gauss_legendre;
use crate::{Error, Result};
use ndarray::{Array1, Array2};

/// Slab fluid variables: per-cell Legendre coefficients in x of the raw
/// moments (number, x-momentum, energy densities) and of the derived
/// density, bulk velocity, and temperature.
#[derive(Debug, Clone)]
pub struct FluidFields {
    pub rho_leg: [Array1<f64>; 3],
    pub n_leg: Array1<f64>,
    pub u_leg: Array1<f64>,
    pub theta_leg: Array1<f64>,
}

/// Space homogeneous fluid state.
#[derive(Debug, Clone)]
pub struct FluidScalars {
    pub n: f64,
    pub u: [f64; 3],
    pub theta: f64,
}

/// Globally conserved quantities of the kinetic state (field energy not
/// included).
#[derive(Debug, Clone, Copy)]
pub struct TotalInvariants {
    pub number: f64,
    pub momentum: f64,
    pub kinetic_energy: f64,
}

impl PhysicsContext {
    /// Contract the state with one moment row per dimension, producing a
    /// scalar functional value.
    pub fn contract_all(
        &self,
        state: &Array1<f64>,
        grid: &AdaptiveGrid,
        degrees: &[usize],
    ) -> Result<f64> {
        self.check_grid(grid)?;
        let d = self.d();
        assert_eq!(degrees.len(), d);
        let k1 = self.k() + 1;
        let bs = grid.block_size();
        let s = state.as_slice().expect("contiguous");
        let rows: Vec<&Array1<f64>> = (0..d)
            .map(|m| &self.dims[m].moment_rows[degree_slot(degrees[m])])
            .collect();
        let mut total = 0.0;
        for (e, key) in grid.keys().iter().enumerate() {
            let block = &s[e * bs..(e + 1) * bs];
            let mut offs = [0usize; crate::hiergrid::MAX_D];
            for m in 0..d {
                offs[m] = key.element_index_1d(m) * k1;
            }
            for (flat, &v) in block.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let mut w = v;
                let mut rem = flat;
                for m in (0..d).rev() {
                    w *= rows[m][offs[m] + rem % k1];
                    rem /= k1;
                }
                total += w;
            }
        }
        Ok(total)
    }

    /// Contract the velocity dimensions with moment rows, leaving an
    /// x-direction coefficient vector in wavelet coordinates.
    pub fn contract_velocity(
        &self,
        state: &Array1<f64>,
        grid: &AdaptiveGrid,
        v_degrees: &[usize],
    ) -> Result<Array1<f64>> {
        self.check_grid(grid)?;
        debug_assert!(self.config.geometry.has_x());
        let d = self.d();
        assert_eq!(v_degrees.len(), d - 1);
        let k1 = self.k() + 1;
        let bs = grid.block_size();
        let s = state.as_slice().expect("contiguous");
        let nx = crate::basis1d::space_dim(self.k(), self.config.caps[0]);
        let rows: Vec<&Array1<f64>> = (1..d)
            .map(|m| &self.dims[m].moment_rows[degree_slot(v_degrees[m - 1])])
            .collect();
        let mut out = Array1::zeros(nx);
        let v_block = bs / k1; // coefficients per fixed x index
        for (e, key) in grid.keys().iter().enumerate() {
            let block = &s[e * bs..(e + 1) * bs];
            let x_off = key.element_index_1d(0) * k1;
            let mut offs = [0usize; crate::hiergrid::MAX_D];
            for m in 1..d {
                offs[m] = key.element_index_1d(m) * k1;
            }
            for ix in 0..k1 {
                let mut acc = 0.0;
                for fv in 0..v_block {
                    let v = block[ix * v_block + fv];
                    if v == 0.0 {
                        continue;
                    }
                    let mut w = v;
                    let mut rem = fv;
                    for m in (1..d).rev() {
                        w *= rows[m - 1][offs[m] + rem % k1];
                        rem /= k1;
                    }
                    acc += w;
                }
                out[x_off + ix] += acc;
            }
        }
        Ok(out)
    }

    /// Raw moments of a slab state as per-cell Legendre coefficient
    /// vectors in x: number, x-momentum, and energy densities.
    pub fn raw_moments(&self, state: &Array1<f64>, grid: &AdaptiveGrid) -> Result<[Array1<f64>; 3]> {
        let vd = self.config.geometry.vdims();
        let zeros = vec![0usize; vd];
        let rho0_w = self.contract_velocity(state, grid, &zeros)?;
        let mut deg = zeros.clone();
        deg[0] = 1;
        let rho1_w = self.contract_velocity(state, grid, &deg)?;
        let mut rho2_w = Array1::zeros(rho0_w.len());
        for m in 0..vd {
            let mut deg = zeros.clone();
            deg[m] = 2;
            rho2_w += &self.contract_velocity(state, grid, &deg)?;
        }
        rho2_w *= 0.5;
        let t = &self.x_ops().transform;
        Ok([t.to_legendre(&rho0_w), t.to_legendre(&rho1_w), t.to_legendre(&rho2_w)])
    }

    /// Derive (n, u, theta) from raw moments by density-weighted
    /// projection per spatial cell. Nonpositive density or temperature
    /// at any quadrature point is a hard error naming the cell.
    pub fn fluid_from_moments(&self, rho_leg: [Array1<f64>; 3]) -> Result<FluidFields> {
        derive_fluid_1d(
            self.k(),
            self.config.x_domain,
            rho_leg,
            self.config.geometry.vdims() as f64,
        )
    }

    /// Raw moments consistent with given fluid variables, i.e. the left
    /// inverse of [`PhysicsContext::fluid_from_moments`].
    pub fn moments_from_fluid(
        &self,
        n_leg: &Array1<f64>,
        u_leg: &Array1<f64>,
        theta_leg: &Array1<f64>,
    ) -> [Array1<f64>; 3] {
        let vd = self.config.geometry.vdims() as f64;
        let k = self.k();
        let k1 = k + 1;
        let cells = self.x_cells();
        let (a, _) = self.config.x_domain;
        let h = self.x_cell_width();
        let (qx, qw) = gauss_legendre(k + 3);
        let mut rho1 = Array1::zeros(cells * k1);
        let mut rho2 = Array1::zeros(cells * k1);
        for c in 0..cells {
            let lo = a + c as f64 * h;
            let psi = |i: usize, x: f64| legendre_cell_value(i, lo, h, x);
            let eval = |coeffs: &Array1<f64>, x: f64| -> f64 {
                (0..k1).map(|i| coeffs[c * k1 + i] * psi(i, x)).sum()
            };
            for (xq, wq) in qx.iter().zip(&qw) {
                let x = lo + 0.5 * h * (xq + 1.0);
                let wgt = 0.5 * h * wq;
                let nv = eval(n_leg, x);
                let uv = eval(u_leg, x);
                for i in 0..k1 {
                    rho1[c * k1 + i] += wgt * nv * uv * psi(i, x);
                }
            }
            for (xq, wq) in qx.iter().zip(&qw) {
                let x = lo + 0.5 * h * (xq + 1.0);
                let wgt = 0.5 * h * wq;
                let uv = eval(u_leg, x);
                let tv = eval(theta_leg, x);
                let nv = eval(n_leg, x);
                let r1 = eval(&rho1, x);
                for i in 0..k1 {
                    rho2[c * k1 + i] +=
                        wgt * (0.5 * uv * r1 + 0.5 * vd * nv * tv) * psi(i, x);
                }
            }
        }
        [n_leg.clone(), rho1, rho2]
    }

    /// Moments and fluid variables of a slab state.
    pub fn compute_moments(&self, state: &Array1<f64>, grid: &AdaptiveGrid) -> Result<FluidFields> {
        let rho = self.raw_moments(state, grid)?;
        self.fluid_from_moments(rho)
    }

    /// Moments of a space homogeneous state.
    pub fn compute_moments_0x3v(
        &self,
        state: &Array1<f64>,
        grid: &AdaptiveGrid,
    ) -> Result<FluidScalars> {
        debug_assert_eq!(self.config.geometry, super::Geometry::Relax0x3v);
        let n = self.contract_all(state, grid, &[0, 0, 0])?;
        if n <= 0.0 {
            return Err(Error::NonpositiveDensity { cell: 0, value: n });
        }
        let mut u = [0.0f64; 3];
        let mut p2 = 0.0;
        for m in 0..3 {
            let mut deg = [0usize; 3];
            deg[m] = 1;
            u[m] = self.contract_all(state, grid, &deg)? / n;
            let mut deg2 = [0usize; 3];
            deg2[m] = 2;
            p2 += self.contract_all(state, grid, &deg2)?;
        }
        let usq = u.iter().map(|x| x * x).sum::<f64>();
        let theta = (p2 / n - usq) / 3.0;
        if theta <= 0.0 {
            return Err(Error::NonpositiveTemperature { cell: 0, value: theta });
        }
        Ok(FluidScalars { n, u, theta })
    }

    /// Spatially integrated number, x-momentum, and kinetic energy of a
    /// slab state.
    pub fn total_invariants(&self, state: &Array1<f64>, grid: &AdaptiveGrid) -> Result<TotalInvariants> {
        let d = self.d();
        let vd = self.config.geometry.vdims();
        let mut deg = vec![0usize; d];
        let number = self.contract_all(state, grid, &deg)?;
        deg[1] = 1;
        let momentum = self.contract_all(state, grid, &deg)?;
        let mut kinetic = 0.0;
        for m in 0..vd {
            let mut deg2 = vec![0usize; d];
            deg2[1 + m] = 2;
            kinetic += self.contract_all(state, grid, &deg2)?;
        }
        Ok(TotalInvariants { number, momentum, kinetic_energy: 0.5 * kinetic })
    }
}

fn degree_slot(degree: usize) -> usize {
    match degree {
        0 => 0,
        1 => 1,
        2 => 2,
        4 => 3,
        _ => panic!("unsupported moment degree {degree}"),
    }
}

/// Density-weighted fluid derivation shared with the Chu reference
/// solver: `(n u, q) = (rho1, q)` and `(vd n theta, q) = (2 rho2 - u rho1, q)`
/// per spatial cell, with `vd` the number of velocity dimensions. These
/// definitions make the discrete collision functionals vanish exactly.
pub fn derive_fluid_1d(
    k: usize,
    x_domain: (f64, f64),
    rho_leg: [Array1<f64>; 3],
    vd: f64,
) -> Result<FluidFields> {
    let k1 = k + 1;
    let cells = rho_leg[0].len() / k1;
    let (a, b) = x_domain;
    let h = (b - a) / cells as f64;
    let (qx, qw) = gauss_legendre(k + 3);
    let n_leg = rho_leg[0].clone();
    let mut u_leg = Array1::zeros(cells * k1);
    let mut theta_leg = Array1::zeros(cells * k1);
    for c in 0..cells {
        let lo = a + c as f64 * h;
        let psi = |i: usize, x: f64| legendre_cell_value(i, lo, h, x);
        let eval = |coeffs: &Array1<f64>, x: f64| -> f64 {
            (0..k1).map(|i| coeffs[c * k1 + i] * psi(i, x)).sum()
        };
        // density-weighted local mass matrix
        let mut w_mat = Array2::<f64>::zeros((k1, k1));
        for (xq, wq) in qx.iter().zip(&qw) {
            let x = lo + 0.5 * h * (xq + 1.0);
            let wgt = 0.5 * h * wq;
            let nval = eval(&n_leg, x);
            if nval <= 0.0 {
                return Err(Error::NonpositiveDensity { cell: c, value: nval });
            }
            for i in 0..k1 {
                for j in 0..k1 {
                    w_mat[[i, j]] += wgt * nval * psi(i, x) * psi(j, x);
                }
            }
        }
        let lu = LuFactor::new(&w_mat, &format!("weighted mass, cell {c}"))?;
        // (n u, q) = (rho1, q): orthonormality makes the rhs the raw
        // coefficients
        let mut u_cell: Vec<f64> = (0..k1).map(|i| rho_leg[1][c * k1 + i]).collect();
        lu.solve_in_place(&mut u_cell);
        for i in 0..k1 {
            u_leg[c * k1 + i] = u_cell[i];
        }
        let mut rhs = vec![0.0f64; k1];
        for i in 0..k1 {
            rhs[i] = 2.0 * rho_leg[2][c * k1 + i];
        }
        for (xq, wq) in qx.iter().zip(&qw) {
            let x = lo + 0.5 * h * (xq + 1.0);
            let wgt = 0.5 * h * wq;
            let uval = (0..k1).map(|i| u_leg[c * k1 + i] * psi(i, x)).sum::<f64>();
            let r1 = eval(&rho_leg[1], x);
            for (i, r) in rhs.iter_mut().enumerate() {
                *r -= wgt * uval * r1 * psi(i, x);
            }
        }
        let mut theta_cell = rhs;
        lu.solve_in_place(&mut theta_cell);
        for i in 0..k1 {
            theta_leg[c * k1 + i] = theta_cell[i] / vd;
        }
        for (xq, _) in qx.iter().zip(&qw) {
            let x = lo + 0.5 * h * (xq + 1.0);
            let tval = eval(&theta_leg, x);
            if tval <= 0.0 {
                return Err(Error::NonpositiveTemperature { cell: c, value: tval });
            }
        }
    }
    Ok(FluidFields { rho_leg, n_leg, u_leg, theta_leg })
}

//! The 1x1v Chu-reduced VPLB solver.
//!
//! Evolves the reduced fields g1, g2 (and the diagnostic g3) on a full
//! 2D tensor mesh in a local per-cell Legendre basis. g1 and g2 carry
//! the slab dynamics exactly; g3 tracks the fourth transverse moment for
//! diagnostics only. The same IMEX scheme as the 4D solver is used, with
//! the implicit stage solving the collision system field by field in
//! Gauss-Seidel order (g1, then g2 with the 4*theta*g1 source, then g3),
//! which keeps the reduced conservation identities exact at the stage
//! level.
//!
//! State layout: `Array2` with rows indexed by x dofs (cell-major
//! Legendre) and columns by v dofs.

use crate::basis1d::{assemble_legendre, legendre_cell_value, space_dim, Boundary1D, OperatorKind1D};
use crate::krylov::{gmres, GmresOptions, SolveReport};
use crate::quadrature::gauss_legendre;
use crate::vplb::{derive_fluid_1d, ElectricField, FluidFields, PeriodicPoisson};
use crate::{Error, Result};
use ndarray::{Array1, Array2};

/// Configuration of the reduced solver.
#[derive(Debug, Clone)]
pub struct ChuConfig {
    pub x_domain: (f64, f64),
    pub v_domain: (f64, f64),
    pub lx: usize,
    pub lv: usize,
    pub k: usize,
    pub nu: f64,
    pub gmres: GmresOptions,
    pub use_preconditioner: bool,
}

/// The three reduced fields.
#[derive(Debug, Clone)]
pub struct ChuState {
    pub g1: Array2<f64>,
    pub g2: Array2<f64>,
    pub g3: Array2<f64>,
}

/// Globally conserved quantities of the reduced system.
#[derive(Debug, Clone, Copy)]
pub struct ChuInvariants {
    pub mass: f64,
    pub momentum: f64,
    /// Kinetic part `1/2 int (g1 v^2 + g2)`.
    pub kinetic_energy: f64,
    /// Field part `1/2 int E^2`.
    pub field_energy: f64,
}

impl ChuInvariants {
    pub fn total_energy(&self) -> f64 {
        self.kinetic_energy + self.field_energy
    }
}

pub struct ChuSolver {
    pub cfg: ChuConfig,
    nx: usize,
    nv: usize,
    ax_dc: Array2<f64>,
    ax_jump: Array2<f64>,
    av_dc: Array2<f64>,
    av_jump: Array2<f64>,
    av_drift: Array2<f64>,
    av_fwjump: Array2<f64>,
    av_mult_v: Array2<f64>,
    av_mult_abs_v: Array2<f64>,
    av_diffusion: Array2<f64>,
    mx0: Array1<f64>,
    mv: [Array1<f64>; 3],
    poisson: PeriodicPoisson,
}

impl ChuSolver {
    pub fn new(cfg: ChuConfig) -> Result<Self> {
        if cfg.k > 3 {
            return Err(Error::UnsupportedDegree(cfg.k));
        }
        let k = cfg.k;
        let nx = space_dim(k, cfg.lx);
        let nv = space_dim(k, cfg.lv);
        let ax = |kind: &OperatorKind1D| {
            assemble_legendre(kind, k, cfg.lx, cfg.x_domain, Boundary1D::Periodic)
        };
        let av = |kind: &OperatorKind1D| {
            assemble_legendre(kind, k, cfg.lv, cfg.v_domain, Boundary1D::ZeroFlux)
        };
        let av_dc = av(&OperatorKind1D::CentralDivergence)?;
        let av_grad = av(&OperatorKind1D::LdgGradient)?;
        let av_diffusion = av_dc.dot(&av_grad);
        let row = |deg: usize| -> Result<Array1<f64>> {
            Ok(av(&OperatorKind1D::MomentFunctional { degree: deg })?.row(0).to_owned())
        };
        let mx0 = ax(&OperatorKind1D::MomentFunctional { degree: 0 })?.row(0).to_owned();
        Ok(Self {
            nx,
            nv,
            ax_dc: ax(&OperatorKind1D::CentralDivergence)?,
            ax_jump: ax(&OperatorKind1D::JumpPenalty)?,
            av_jump: av(&OperatorKind1D::JumpPenalty)?,
            av_drift: av(&OperatorKind1D::CoordinateDivergence)?,
            av_fwjump: av(&OperatorKind1D::FaceWeightedJumpPenalty)?,
            av_mult_v: av(&OperatorKind1D::CoordinateMultiply)?,
            av_mult_abs_v: av(&OperatorKind1D::AbsCoordinateMultiply)?,
            av_dc,
            av_diffusion,
            mx0,
            mv: [row(0)?, row(1)?, row(2)?],
            poisson: PeriodicPoisson::new(k, cfg.lx, cfg.x_domain),
            cfg,
        })
    }

    pub fn dofs(&self) -> (usize, usize) {
        (self.nx, self.nv)
    }

    fn x_cells(&self) -> usize {
        1 << self.cfg.lx
    }

    fn x_h(&self) -> f64 {
        (self.cfg.x_domain.1 - self.cfg.x_domain.0) / self.x_cells() as f64
    }

    /// Per-cell constant multiplication matrix in x (diagonal).
    fn x_diag(&self, cell_values: &[f64]) -> Array2<f64> {
        let k1 = self.cfg.k + 1;
        let mut m = Array2::zeros((self.nx, self.nx));
        for (c, &v) in cell_values.iter().enumerate() {
            for i in 0..k1 {
                m[[c * k1 + i, c * k1 + i]] = v;
            }
        }
        m
    }

    /// Multiplication matrix in x for a per-cell Legendre field.
    fn x_mult(&self, field_leg: &Array1<f64>) -> Array2<f64> {
        let k = self.cfg.k;
        let k1 = k + 1;
        let cells = self.x_cells();
        let (a, _) = self.cfg.x_domain;
        let h = self.x_h();
        let (qx, qw) = gauss_legendre(k + 3);
        let mut m = Array2::zeros((self.nx, self.nx));
        for c in 0..cells {
            let lo = a + c as f64 * h;
            for (xq, wq) in qx.iter().zip(&qw) {
                let x = lo + 0.5 * h * (xq + 1.0);
                let w = 0.5 * h * wq;
                let fv: f64 =
                    (0..k1).map(|i| field_leg[c * k1 + i] * legendre_cell_value(i, lo, h, x)).sum();
                for i in 0..k1 {
                    for j in 0..k1 {
                        m[[c * k1 + i, c * k1 + j]] +=
                            w * fv * legendre_cell_value(i, lo, h, x) * legendre_cell_value(j, lo, h, x);
                    }
                }
            }
        }
        m
    }

    /// `y = sum_t scale * Ax S Av^T` over 2D Kronecker terms.
    fn apply_terms(
        &self,
        terms: &[(f64, Option<&Array2<f64>>, Option<&Array2<f64>>)],
        s: &Array2<f64>,
    ) -> Array2<f64> {
        let mut y = Array2::zeros((self.nx, self.nv));
        for (scale, ax, av) in terms {
            let mut t = match ax {
                Some(a) => a.dot(s),
                None => s.clone(),
            };
            if let Some(b) = av {
                t = t.dot(&b.t());
            }
            y.scaled_add(*scale, &t);
        }
        y
    }

    /// Reduced velocity moments: `n = int g1`, `u` and `theta` via the
    /// density-weighted projections with the transverse energy carried
    /// by g2.
    pub fn moments(&self, state: &ChuState) -> Result<FluidFields> {
        let n = state.g1.dot(&self.mv[0]);
        let rho1 = state.g1.dot(&self.mv[1]);
        let rho2 = (state.g1.dot(&self.mv[2]) + state.g2.dot(&self.mv[0])) * 0.5;
        derive_fluid_1d(self.cfg.k, self.cfg.x_domain, [n, rho1, rho2], 3.0)
    }

    pub fn electric_field(&self, state: &ChuState) -> Result<ElectricField> {
        self.poisson.solve(&state.g1.dot(&self.mv[0]))
    }

    pub fn invariants(&self, state: &ChuState) -> Result<ChuInvariants> {
        let mass = self.mx0.dot(&state.g1.dot(&self.mv[0]));
        let momentum = self.mx0.dot(&state.g1.dot(&self.mv[1]));
        let kinetic =
            0.5 * (self.mx0.dot(&state.g1.dot(&self.mv[2])) + self.mx0.dot(&state.g2.dot(&self.mv[0])));
        let ef = self.electric_field(state)?;
        Ok(ChuInvariants {
            mass,
            momentum,
            kinetic_energy: kinetic,
            field_energy: ef.potential_energy(),
        })
    }

    /// Transport terms for a frozen electric field.
    fn vlasov_terms<'a>(
        &'a self,
        e_diag: &'a Array2<f64>,
        abs_e_diag: &'a Array2<f64>,
    ) -> Vec<(f64, Option<&'a Array2<f64>>, Option<&'a Array2<f64>>)> {
        vec![
            (1.0, Some(&self.ax_dc), Some(&self.av_mult_v)),
            (0.5, Some(&self.ax_jump), Some(&self.av_mult_abs_v)),
            (1.0, Some(e_diag), Some(&self.av_dc)),
            (0.5, Some(abs_e_diag), Some(&self.av_jump)),
        ]
    }

    /// Collision terms `C1(.; u, theta)` for frozen fluid fields.
    fn collision_terms<'a>(
        &'a self,
        u_mult: &'a Array2<f64>,
        theta_mult: &'a Array2<f64>,
    ) -> Vec<(f64, Option<&'a Array2<f64>>, Option<&'a Array2<f64>>)> {
        vec![
            (1.0, None, Some(&self.av_drift)),
            (-0.5, None, Some(&self.av_fwjump)),
            (-1.0, Some(u_mult), Some(&self.av_dc)),
            (1.0, Some(theta_mult), Some(&self.av_diffusion)),
        ]
    }

    /// Solve `(1 + extra_shift) g - c_nu C1 g = rhs` by GMRES.
    #[allow(clippy::too_many_arguments)]
    fn implicit_solve(
        &self,
        u_mult: &Array2<f64>,
        theta_mult: &Array2<f64>,
        c_nu: f64,
        extra_shift: f64,
        rhs: &Array2<f64>,
        guess: &Array2<f64>,
        precond: Option<&ChuBlockJacobi>,
        solves: &mut Vec<SolveReport>,
    ) -> Result<Array2<f64>> {
        let terms = self.collision_terms(u_mult, theta_mult);
        let shape = (self.nx, self.nv);
        let flat = |a: &Array2<f64>| Array1::from_iter(a.iter().copied());
        let unflat = |v: &Array1<f64>| {
            Array2::from_shape_vec(shape, v.to_vec()).expect("shape")
        };
        let apply = |v: &Array1<f64>| {
            let s = unflat(v);
            let mut y = s.clone() * (1.0 + extra_shift);
            y.scaled_add(-c_nu, &self.apply_terms(&terms, &s));
            flat(&y)
        };
        let pc_apply = precond.map(|p| move |v: &Array1<f64>| p.solve(v));
        let (x, report) = gmres(
            apply,
            &flat(rhs),
            Some(&flat(guess)),
            &self.cfg.gmres,
            pc_apply
                .as_ref()
                .map(|f| f as &dyn Fn(&Array1<f64>) -> Array1<f64>),
        )?;
        if !report.converged {
            return Err(Error::SolverStalled {
                residual: report.final_residual,
                iterations: report.iterations,
            });
        }
        solves.push(report);
        Ok(unflat(&x))
    }

    /// Build the block-Jacobi preconditioner for the implicit system
    /// with per-(x-cell, v-cell) blocks.
    fn build_precond(
        &self,
        u_mult: &Array2<f64>,
        theta_mult: &Array2<f64>,
        c_nu: f64,
        extra_shift: f64,
    ) -> Result<ChuBlockJacobi> {
        let k1 = self.cfg.k + 1;
        let xc = self.x_cells();
        let vc = 1usize << self.cfg.lv;
        let bs = k1 * k1;
        let terms = self.collision_terms(u_mult, theta_mult);
        let mut blocks = Vec::with_capacity(xc * vc);
        for cx in 0..xc {
            for cv in 0..vc {
                let mut block = Array2::<f64>::eye(bs) * (1.0 + extra_shift);
                for (scale, ax, av) in &terms {
                    let mut sub = Array2::<f64>::zeros((bs, bs));
                    for i in 0..k1 {
                        for j in 0..k1 {
                            let axv = match ax {
                                Some(a) => a[[cx * k1 + i, cx * k1 + j]],
                                None => f64::from(i == j),
                            };
                            if axv == 0.0 {
                                continue;
                            }
                            for p in 0..k1 {
                                for q in 0..k1 {
                                    let avv = match av {
                                        Some(b) => b[[cv * k1 + p, cv * k1 + q]],
                                        None => f64::from(p == q),
                                    };
                                    sub[[i * k1 + p, j * k1 + q]] = axv * avv;
                                }
                            }
                        }
                    }
                    block.scaled_add(-c_nu * scale, &sub);
                }
                blocks.push(block);
            }
        }
        ChuBlockJacobi::new(blocks, self.nx, self.nv, k1)
    }

    /// One IMEX step; returns the new state and the per-solve reports.
    pub fn step(&self, state: &ChuState, dt: f64) -> Result<(ChuState, Vec<SolveReport>)> {
        let nu = self.cfg.nu;
        let mut solves = Vec::new();
        // explicit transport from t_n
        let e1 = self.electric_field(state)?;
        let (ed1, ad1) = (
            self.x_diag(e1.e_cells.as_slice().unwrap()),
            self.x_diag(&e1.e_cells.iter().map(|e| e.abs()).collect::<Vec<_>>()),
        );
        let t1 = self.vlasov_terms(&ed1, &ad1);
        let mut stage1 = ChuState {
            g1: &state.g1 - &(self.apply_terms(&t1, &state.g1) * dt),
            g2: &state.g2 - &(self.apply_terms(&t1, &state.g2) * dt),
            g3: &state.g3 - &(self.apply_terms(&t1, &state.g3) * dt),
        };
        if nu > 0.0 {
            stage1 = self.implicit_collisions(&stage1, dt * nu, &mut solves)?;
        }
        // second explicit stage with a refreshed field
        let e2 = self.electric_field(&stage1)?;
        let (ed2, ad2) = (
            self.x_diag(e2.e_cells.as_slice().unwrap()),
            self.x_diag(&e2.e_cells.iter().map(|e| e.abs()).collect::<Vec<_>>()),
        );
        let t2 = self.vlasov_terms(&ed2, &ad2);
        let mut stage2 = ChuState {
            g1: &state.g1 * 0.5 + &(&stage1.g1 - &(self.apply_terms(&t2, &stage1.g1) * dt)) * 0.5,
            g2: &state.g2 * 0.5 + &(&stage1.g2 - &(self.apply_terms(&t2, &stage1.g2) * dt)) * 0.5,
            g3: &state.g3 * 0.5 + &(&stage1.g3 - &(self.apply_terms(&t2, &stage1.g3) * dt)) * 0.5,
        };
        if nu > 0.0 {
            stage2 = self.implicit_collisions(&stage2, 0.5 * dt * nu, &mut solves)?;
        }
        Ok((stage2, solves))
    }

    /// Implicit collision solve at one stage: fields in Gauss-Seidel
    /// order with moments frozen from the explicit predictor.
    fn implicit_collisions(
        &self,
        predictor: &ChuState,
        c_nu: f64,
        solves: &mut Vec<SolveReport>,
    ) -> Result<ChuState> {
        let fluid = self.moments(predictor)?;
        let u_mult = self.x_mult(&fluid.u_leg);
        let theta_mult = self.x_mult(&fluid.theta_leg);
        let pc = |extra: f64| -> Result<Option<ChuBlockJacobi>> {
            if self.cfg.use_preconditioner {
                Ok(Some(self.build_precond(&u_mult, &theta_mult, c_nu, extra)?))
            } else {
                Ok(None)
            }
        };
        let pc0 = pc(0.0)?;
        let g1 = self.implicit_solve(
            &u_mult,
            &theta_mult,
            c_nu,
            0.0,
            &predictor.g1,
            &predictor.g1,
            pc0.as_ref(),
            solves,
        )?;
        let pc2 = pc(2.0 * c_nu)?;
        let rhs2 = &predictor.g2 + &(theta_mult.dot(&g1) * (4.0 * c_nu));
        let g2 = self.implicit_solve(
            &u_mult,
            &theta_mult,
            c_nu,
            2.0 * c_nu,
            &rhs2,
            &predictor.g2,
            pc2.as_ref(),
            solves,
        )?;
        let pc4 = pc(4.0 * c_nu)?;
        let rhs3 = &predictor.g3 + &(theta_mult.dot(&g2) * (12.0 * c_nu));
        let g3 = self.implicit_solve(
            &u_mult,
            &theta_mult,
            c_nu,
            4.0 * c_nu,
            &rhs3,
            &predictor.g3,
            pc4.as_ref(),
            solves,
        )?;
        Ok(ChuState { g1, g2, g3 })
    }

    /// Project an analytic field onto the 2D per-cell Legendre basis,
    /// splitting x-integration panels at the given breakpoints.
    pub fn project(&self, f: &dyn Fn(f64, f64) -> f64, x_breaks: &[f64]) -> Array2<f64> {
        let k = self.cfg.k;
        let k1 = k + 1;
        let xc = self.x_cells();
        let vc = 1usize << self.cfg.lv;
        let (xa, _) = self.cfg.x_domain;
        let (va, vb) = self.cfg.v_domain;
        let hx = self.x_h();
        let hv = (vb - va) / vc as f64;
        let (qx, qw) = gauss_legendre(k + 3);
        let mut out = Array2::zeros((self.nx, self.nv));
        for cx in 0..xc {
            let lox = xa + cx as f64 * hx;
            let hix = lox + hx;
            let mut cuts = vec![lox];
            for &bp in x_breaks {
                if bp > lox + 1e-13 * hx && bp < hix - 1e-13 * hx {
                    cuts.push(bp);
                }
            }
            cuts.push(hix);
            cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
            for cv in 0..vc {
                let lov = va + cv as f64 * hv;
                for panel in cuts.windows(2) {
                    let midx = 0.5 * (panel[0] + panel[1]);
                    let halfx = 0.5 * (panel[1] - panel[0]);
                    if halfx <= 0.0 {
                        continue;
                    }
                    for (xq, wq) in qx.iter().zip(&qw) {
                        let x = midx + halfx * xq;
                        let wx = halfx * wq;
                        for (vq, wq2) in qx.iter().zip(&qw) {
                            let v = lov + 0.5 * hv * (vq + 1.0);
                            let wv = 0.5 * hv * wq2;
                            let fv = f(x, v);
                            if fv == 0.0 {
                                continue;
                            }
                            for i in 0..k1 {
                                for j in 0..k1 {
                                    out[[cx * k1 + i, cv * k1 + j]] += wx
                                        * wv
                                        * fv
                                        * legendre_cell_value(i, lox, hx, x)
                                        * legendre_cell_value(j, lov, hv, v);
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Evaluate one field at a point (left-limit convention on interior
    /// cell boundaries).
    pub fn eval_field(&self, field: &Array2<f64>, x: f64, v: f64) -> f64 {
        let k1 = self.cfg.k + 1;
        let (xa, xb) = self.cfg.x_domain;
        let (va, vb) = self.cfg.v_domain;
        let xc = self.x_cells();
        let vc = 1usize << self.cfg.lv;
        let hx = (xb - xa) / xc as f64;
        let hv = (vb - va) / vc as f64;
        let cx = (((x - xa) / hx).ceil() as usize).clamp(1, xc) - 1;
        let cv = (((v - va) / hv).ceil() as usize).clamp(1, vc) - 1;
        let lox = xa + cx as f64 * hx;
        let lov = va + cv as f64 * hv;
        let mut acc = 0.0;
        for i in 0..k1 {
            for j in 0..k1 {
                acc += field[[cx * k1 + i, cv * k1 + j]]
                    * legendre_cell_value(i, lox, hx, x)
                    * legendre_cell_value(j, lov, hv, v);
            }
        }
        acc
    }

    /// L2 norm of the difference between two coefficient arrays
    /// (orthonormal basis: plain Euclidean distance).
    pub fn l2_distance(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        a.iter().zip(b.iter()).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
    }
}

/// Block-Jacobi preconditioner over (x-cell, v-cell) blocks of the 2D
/// tensor layout.
struct ChuBlockJacobi {
    inner: crate::krylov::BlockJacobi,
    permutation: Vec<usize>,
}

impl ChuBlockJacobi {
    fn new(blocks: Vec<Array2<f64>>, nx: usize, nv: usize, k1: usize) -> Result<Self> {
        // permute dofs into contiguous (x-cell, v-cell) blocks
        let xc = nx / k1;
        let vc = nv / k1;
        let mut permutation = Vec::with_capacity(nx * nv);
        for cx in 0..xc {
            for cv in 0..vc {
                for i in 0..k1 {
                    for j in 0..k1 {
                        permutation.push((cx * k1 + i) * nv + cv * k1 + j);
                    }
                }
            }
        }
        let inner = crate::krylov::BlockJacobi::from_blocks(blocks)?;
        Ok(Self { inner, permutation })
    }
}

impl ChuBlockJacobi {
    fn solve(&self, v: &Array1<f64>) -> Array1<f64> {
        let mut packed = Array1::zeros(v.len());
        for (slot, &src) in self.permutation.iter().enumerate() {
            packed[slot] = v[src];
        }
        let solved = self.inner.solve(&packed);
        let mut out = Array1::zeros(v.len());
        for (slot, &dst) in self.permutation.iter().enumerate() {
            out[dst] = solved[slot];
        }
        out
    }
}

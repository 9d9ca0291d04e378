//! Time integration: the two-stage IMEX-RK scheme and backward Euler,
//! wrapped in the adaptive refine-redo / coarsen loop.
//!
//! One IMEX step runs four sub-stages: an explicit transport update, an
//! implicit collision solve with moments frozen from the explicit
//! predictor, an explicit half-stage, and a second implicit half-solve.
//! The Poisson field is refreshed from the current stage's density
//! before each explicit transport application. Implicit systems
//! `(I - c nu R_lb) f = rhs` are solved by restarted GMRES, warm-started
//! from the stage predictor, with optional block-Jacobi preconditioning.

use crate::hiergrid::{
    coarsen, refine, AdaptNorm, AdaptiveGrid, CoefficientBlockNorms, reindex,
};
use crate::kronops::{KronApplicator, SeparableOperator};
use crate::krylov::{gmres, BlockJacobi, GmresOptions, SolveReport};
use crate::vplb::{FluidView, PhysicsContext};
use crate::{Error, Result};
use ndarray::Array1;

/// Time stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Two-stage IMEX Runge-Kutta (explicit transport, implicit
    /// collisions).
    Imex2,
    /// Backward Euler on the collision operator only (space homogeneous
    /// relaxation).
    BackwardEuler,
}

/// Controls for one step.
#[derive(Debug, Clone)]
pub struct StepConfig {
    pub dt: f64,
    pub scheme: Scheme,
    /// Refinement threshold; 0 disables adaptivity.
    pub tau: f64,
    /// Coarsening factor in (0, 1).
    pub mu: f64,
    pub adapt_norm: AdaptNorm,
    pub max_refine_passes: usize,
    pub gmres: GmresOptions,
    pub use_preconditioner: bool,
}

impl StepConfig {
    pub fn fixed_grid(dt: f64, scheme: Scheme, gmres: GmresOptions) -> Self {
        Self {
            dt,
            scheme,
            tau: 0.0,
            mu: 0.1,
            adapt_norm: AdaptNorm::Linf,
            max_refine_passes: 10,
            gmres,
            use_preconditioner: false,
        }
    }

    pub fn adaptive(&self) -> bool {
        self.tau > 0.0
    }
}

/// Result of one accepted step.
pub struct StepOutcome {
    pub state: Array1<f64>,
    pub grid: AdaptiveGrid,
    /// Grid and state after the refinement loop, before coarsening.
    pub pre_coarsen_grid: AdaptiveGrid,
    pub pre_coarsen_state: Array1<f64>,
    /// Active elements after refinement, before coarsening.
    pub active_after_refine: usize,
    pub refine_passes: usize,
    pub pass_cap_hit: bool,
    pub solves: Vec<SolveReport>,
}

fn solve_implicit(
    applicator: &KronApplicator<'_>,
    lb: &SeparableOperator,
    c_nu: f64,
    rhs: &Array1<f64>,
    guess: &Array1<f64>,
    cfg: &StepConfig,
    solves: &mut Vec<SolveReport>,
) -> Result<Array1<f64>> {
    let grid = applicator.grid();
    let identity = SeparableOperator::identity(grid.d(), grid.k(), grid.caps());
    let shifted = SeparableOperator::add_scaled(&identity, lb, 1.0, -c_nu)?;
    let precond = if cfg.use_preconditioner {
        Some(BlockJacobi::from_operator(&shifted, applicator)?)
    } else {
        None
    };
    let pc_apply = precond.as_ref().map(|p| move |v: &Array1<f64>| p.solve(v));
    let apply = |v: &Array1<f64>| applicator.apply(&shifted, v).expect("validated operator");
    let (x, report) = gmres(
        apply,
        rhs,
        Some(guess),
        &cfg.gmres,
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
    Ok(x)
}

/// Advance one step on a fixed grid.
pub fn step_fixed(
    ctx: &PhysicsContext,
    applicator: &KronApplicator<'_>,
    f_n: &Array1<f64>,
    cfg: &StepConfig,
) -> Result<(Array1<f64>, Vec<SolveReport>)> {
    let grid = applicator.grid();
    ctx.check_grid(grid)?;
    let dt = cfg.dt;
    let nu = ctx.config.nu;
    let mut solves = Vec::new();
    let has_x = ctx.config.geometry.has_x();
    match cfg.scheme {
        Scheme::BackwardEuler => {
            if nu == 0.0 {
                return Ok((f_n.clone(), solves));
            }
            let lb = if has_x {
                let fluid = ctx.compute_moments(f_n, grid)?;
                ctx.assemble_lb(&FluidView::Fields(&fluid))?
            } else {
                let fluid = ctx.compute_moments_0x3v(f_n, grid)?;
                ctx.assemble_lb(&FluidView::Scalars(&fluid))?
            };
            let f_next = solve_implicit(applicator, &lb, dt * nu, f_n, f_n, cfg, &mut solves)?;
            Ok((f_next, solves))
        }
        Scheme::Imex2 => {
            // explicit transport stage
            let f1s = if has_x {
                let density = ctx.density_leg(f_n, grid)?;
                let efield = ctx.solve_poisson(&density)?;
                let vp = ctx.assemble_vlasov(&efield)?;
                let mut f1s = f_n.clone();
                applicator.apply_accumulate(&vp, f_n, &mut f1s, -dt)?;
                f1s
            } else {
                f_n.clone()
            };
            // implicit collision solve with predictor moments
            let f1 = if nu > 0.0 {
                let lb = if has_x {
                    let fluid = ctx.compute_moments(&f1s, grid)?;
                    ctx.assemble_lb(&FluidView::Fields(&fluid))?
                } else {
                    let fluid = ctx.compute_moments_0x3v(&f1s, grid)?;
                    ctx.assemble_lb(&FluidView::Scalars(&fluid))?
                };
                solve_implicit(applicator, &lb, dt * nu, &f1s, &f1s, cfg, &mut solves)?
            } else {
                f1s
            };
            // explicit half stage with a refreshed field
            let f2s = if has_x {
                let density = ctx.density_leg(&f1, grid)?;
                let efield = ctx.solve_poisson(&density)?;
                let vp = ctx.assemble_vlasov(&efield)?;
                let mut f2s = f_n * 0.5 + &f1 * 0.5;
                applicator.apply_accumulate(&vp, &f1, &mut f2s, -0.5 * dt)?;
                f2s
            } else {
                f_n * 0.5 + &f1 * 0.5
            };
            // second implicit half-solve
            let f2 = if nu > 0.0 {
                let lb = if has_x {
                    let fluid = ctx.compute_moments(&f2s, grid)?;
                    ctx.assemble_lb(&FluidView::Fields(&fluid))?
                } else {
                    let fluid = ctx.compute_moments_0x3v(&f2s, grid)?;
                    ctx.assemble_lb(&FluidView::Scalars(&fluid))?
                };
                solve_implicit(applicator, &lb, 0.5 * dt * nu, &f2s, &f2s, cfg, &mut solves)?
            } else {
                f2s
            };
            Ok((f2, solves))
        }
    }
}

impl PhysicsContext {
    /// Density as per-cell Legendre coefficients in x.
    pub fn density_leg(&self, state: &Array1<f64>, grid: &AdaptiveGrid) -> Result<Array1<f64>> {
        let zeros = vec![0usize; self.config.geometry.vdims()];
        let w = self.contract_velocity(state, grid, &zeros)?;
        Ok(self.x_ops().transform.to_legendre(&w))
    }
}

/// Advance one step with the refine-redo / coarsen loop. With `tau = 0`
/// this is a plain fixed-grid step.
pub fn adapt_advance(
    ctx: &PhysicsContext,
    f_n: &Array1<f64>,
    grid_n: &AdaptiveGrid,
    cfg: &StepConfig,
) -> Result<StepOutcome> {
    let mut grid = grid_n.clone();
    let mut f_start = f_n.clone();
    let mut passes = 0usize;
    let mut pass_cap_hit = false;
    let mut all_solves = Vec::new();
    loop {
        let applicator = KronApplicator::new(&grid);
        let (candidate, mut solves) = step_fixed(ctx, &applicator, &f_start, cfg)?;
        all_solves.append(&mut solves);
        if !cfg.adaptive() {
            return Ok(StepOutcome {
                active_after_refine: grid.len(),
                pre_coarsen_grid: grid.clone(),
                pre_coarsen_state: candidate.clone(),
                state: candidate,
                grid,
                refine_passes: passes,
                pass_cap_hit: false,
                solves: all_solves,
            });
        }
        let norms = CoefficientBlockNorms::of(&candidate, &grid)?;
        let (refined, added) = refine(&grid, &norms, cfg.tau, cfg.adapt_norm);
        if added.is_empty() || passes >= cfg.max_refine_passes {
            if !added.is_empty() {
                pass_cap_hit = true;
            }
            let coarse = coarsen(&grid, &norms, cfg.tau, cfg.mu, cfg.adapt_norm);
            let f_next = reindex(&grid, &coarse, &candidate);
            return Ok(StepOutcome {
                active_after_refine: grid.len(),
                pre_coarsen_grid: grid.clone(),
                pre_coarsen_state: candidate,
                state: f_next,
                grid: coarse,
                refine_passes: passes,
                pass_cap_hit,
                solves: all_solves,
            });
        }
        // enlarge the grid, zero-fill the new blocks at t_n, and redo
        f_start = reindex(&grid, &refined, &f_start);
        grid = refined;
        passes += 1;
    }
}

/// Adapt a grid to an already-projected state (used for initial
/// conditions): refine by the criterion, reprojecting through the given
/// closure after each growth, then coarsen once.
pub fn adapt_initial<F>(
    ctx: &PhysicsContext,
    start: &AdaptiveGrid,
    tau: f64,
    mu: f64,
    norm: AdaptNorm,
    max_passes: usize,
    mut project: F,
) -> Result<(AdaptiveGrid, Array1<f64>)>
where
    F: FnMut(&AdaptiveGrid) -> Result<Array1<f64>>,
{
    ctx.check_grid(start)?;
    let mut grid = start.clone();
    let mut state = project(&grid)?;
    let mut passes = 0;
    loop {
        let norms = CoefficientBlockNorms::of(&state, &grid)?;
        let (refined, added) = refine(&grid, &norms, tau, norm);
        if added.is_empty() || passes >= max_passes {
            let coarse = coarsen(&grid, &norms, tau, mu, norm);
            let state = reindex(&grid, &coarse, &state);
            return Ok((coarse, state));
        }
        grid = refined;
        state = project(&grid)?;
        passes += 1;
    }
}

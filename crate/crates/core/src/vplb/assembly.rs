//! Assembly of the Vlasov-Poisson and Lenard-Bernstein operators as
//! sums of Kronecker terms.
//!
//! Matrices follow the bilinear-form orientation `M[test, trial]`; the
//! time integrator forms `df/dt = -R_vp f + nu R_lb f`. Streaming and
//! acceleration use upwind fluxes split into central plus jump-penalty
//! terms; the collision operator uses a central flux of the full drift
//! `(v - u) w` with a `|v.n|/2` Lax-Friedrichs penalty, and the LDG
//! diffusion with the auxiliary gradient eliminated into a composite
//! per-dimension factor. The spatial coefficients `E`, `|E|`, `u`, and
//! `theta` enter as per-cell polynomial multiplication factors in x.

use super::fluid::{FluidFields, FluidScalars};
use super::poisson::ElectricField;
use super::PhysicsContext;
use crate::kronops::{KronTerm, SeparableOperator};
use crate::{Error, Result};
use ndarray::{Array1, Array2};

/// Fluid data driving the collision operator.
#[derive(Debug, Clone)]
pub enum FluidView<'a> {
    Scalars(&'a FluidScalars),
    Fields(&'a FluidFields),
}

impl PhysicsContext {
    fn cells_matrix(&self, leg: &Array1<f64>) -> Array2<f64> {
        let k1 = self.k() + 1;
        let cells = self.x_cells();
        Array2::from_shape_vec((cells, k1), leg.to_vec()).expect("coefficient layout")
    }

    /// Streaming and acceleration terms for the current electric field.
    pub fn assemble_vlasov(&self, efield: &ElectricField) -> Result<SeparableOperator> {
        if !self.config.geometry.has_x() {
            return Err(Error::Invalid(
                "vlasov operator requires a spatial dimension".into(),
            ));
        }
        let d = self.d();
        let mut op = SeparableOperator::new(d, self.k(), &self.config.caps);
        let x = self.x_ops();
        let vx = &self.dims[1];
        let none = || vec![None; d];
        // streaming: -(v_x w, dx g) + <v_x {w} + |v_x|/2 [w], [g]>
        let mut f = none();
        f[0] = Some(x.dc_periodic.clone().unwrap());
        f[1] = Some(vx.mult_v.clone().unwrap());
        op.push(KronTerm::new(1.0, f));
        let mut f = none();
        f[0] = Some(x.jump_periodic.clone().unwrap());
        f[1] = Some(vx.mult_abs_v.clone().unwrap());
        op.push(KronTerm::new(0.5, f));
        // acceleration: -(E w, dvx g) + <E {w} + |E|/2 [w], [g]>
        let k1 = self.k() + 1;
        let h = self.x_cell_width();
        let e_vals: Vec<f64> = efield.e_cells.to_vec();
        let abs_vals: Vec<f64> = e_vals.iter().map(|e| e.abs()).collect();
        let e_coeffs = crate::basis1d::CellPolys::constant_per_cell(&e_vals, k1 - 1, h).coeffs;
        let abs_coeffs = crate::basis1d::CellPolys::constant_per_cell(&abs_vals, k1 - 1, h).coeffs;
        let mut f = none();
        f[0] = Some(self.x_mult_factor(&e_coeffs)?);
        f[1] = Some(vx.dc_zero_flux.clone().unwrap());
        op.push(KronTerm::new(1.0, f));
        let mut f = none();
        f[0] = Some(self.x_mult_factor(&abs_coeffs)?);
        f[1] = Some(vx.jump_interior.clone().unwrap());
        op.push(KronTerm::new(0.5, f));
        Ok(op)
    }

    /// Collision operator for the given fluid state.
    pub fn assemble_lb(&self, fluid: &FluidView<'_>) -> Result<SeparableOperator> {
        let d = self.d();
        let geometry = self.config.geometry;
        let mut op = SeparableOperator::new(d, self.k(), &self.config.caps);
        let none = || vec![None; d];
        match (geometry.has_x(), fluid) {
            (true, FluidView::Fields(fields)) => {
                let u_factor = self.x_mult_factor(&self.cells_matrix(&fields.u_leg))?;
                let theta_factor = self.x_mult_factor(&self.cells_matrix(&fields.theta_leg))?;
                for m in geometry.v_start()..d {
                    let vm = &self.dims[m];
                    // drift: -(v w, dv g) + <v {w}, [g]>
                    let mut f = none();
                    f[m] = Some(vm.drift.clone().unwrap());
                    op.push(KronTerm::new(1.0, f));
                    // Lax-Friedrichs penalty: -|v.n|/2 [w][g]
                    let mut f = none();
                    f[m] = Some(vm.face_weighted_jump.clone().unwrap());
                    op.push(KronTerm::new(-0.5, f));
                    // theta-weighted diffusion composite
                    let mut f = none();
                    f[0] = Some(theta_factor.clone());
                    f[m] = Some(vm.diffusion.clone().unwrap());
                    op.push(KronTerm::new(1.0, f));
                }
                // bulk-velocity part, x-component only: +(u w, dvx g) - <u {w}, [g]>
                let mut f = none();
                f[0] = Some(u_factor);
                f[1] = Some(self.dims[1].dc_zero_flux.clone().unwrap());
                op.push(KronTerm::new(-1.0, f));
            }
            (false, FluidView::Scalars(s)) => {
                for m in 0..d {
                    let vm = &self.dims[m];
                    let mut f = none();
                    f[m] = Some(vm.drift.clone().unwrap());
                    op.push(KronTerm::new(1.0, f));
                    let mut f = none();
                    f[m] = Some(vm.face_weighted_jump.clone().unwrap());
                    op.push(KronTerm::new(-0.5, f));
                    if s.u[m] != 0.0 {
                        let mut f = none();
                        f[m] = Some(vm.dc_zero_flux.clone().unwrap());
                        op.push(KronTerm::new(-s.u[m], f));
                    }
                    let mut f = none();
                    f[m] = Some(vm.diffusion.clone().unwrap());
                    op.push(KronTerm::new(s.theta, f));
                }
            }
            _ => {
                return Err(Error::Invalid(
                    "fluid view does not match the geometry".into(),
                ))
            }
        }
        Ok(op)
    }
}

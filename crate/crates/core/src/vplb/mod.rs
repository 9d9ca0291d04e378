//! Physics assembly for the Vlasov-Poisson-Lenard-Bernstein model:
//! streaming and acceleration forms, the Poisson solve, moment
//! extraction, fluid variables, the LDG collision operator, and
//! Maxwellian construction.
//!
//! Dimension layout: the slab geometries order dimensions as
//! `(x, v_x, v_y, v_z)` (the 1x1v variant stops after `v_x`); the space
//! homogeneous geometry is `(v_x, v_y, v_z)`.

mod assembly;
mod fluid;
mod poisson;
mod project;

pub use assembly::FluidView;
pub use fluid::{derive_fluid_1d, FluidFields, FluidScalars, TotalInvariants};
pub use poisson::{ElectricField, PeriodicPoisson};
pub use project::{
    eval_state_at, project_1d_wavelet, project_separable, wavelet_to_legendre_1d, MarginalWeight,
    SeparableProduct,
};

use crate::basis1d::{
    assemble_1d_operator, build_alpert_basis, build_transform, BasisTransform1D, Boundary1D,
    OperatorKind1D, WaveletFamily1D,
};
use crate::hiergrid::AdaptiveGrid;
use crate::kronops::{Factor, FactorPattern};
use crate::{Error, Result};
use ndarray::{Array1, Array2};
use std::cell::RefCell;
use std::sync::Arc;

/// Geometry of the phase-space domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    /// Space homogeneous relaxation: dimensions (v_x, v_y, v_z).
    Relax0x3v,
    /// Slab: dimensions (x, v_x, v_y, v_z), periodic in x.
    Slab1x3v,
    /// Reduced slab with one velocity dimension (x, v_x); used for
    /// cross-checks against dense 2D assembly.
    Slab1x1v,
}

impl Geometry {
    pub fn d(&self) -> usize {
        match self {
            Geometry::Relax0x3v => 3,
            Geometry::Slab1x3v => 4,
            Geometry::Slab1x1v => 2,
        }
    }

    pub fn has_x(&self) -> bool {
        !matches!(self, Geometry::Relax0x3v)
    }

    /// Number of velocity dimensions.
    pub fn vdims(&self) -> usize {
        match self {
            Geometry::Relax0x3v => 3,
            Geometry::Slab1x3v => 3,
            Geometry::Slab1x1v => 1,
        }
    }

    /// Index of the first velocity dimension.
    pub fn v_start(&self) -> usize {
        usize::from(self.has_x())
    }
}

/// Domain, collisionality, and resolution controls for one problem.
#[derive(Debug, Clone)]
pub struct PhaseSpaceConfig {
    pub geometry: Geometry,
    /// Periodic spatial interval (ignored for 0x3v).
    pub x_domain: (f64, f64),
    /// Velocity interval used in every velocity dimension.
    pub v_domain: (f64, f64),
    /// Collision frequency.
    pub nu: f64,
    pub k: usize,
    /// Per-dimension maximum levels, length `geometry.d()`.
    pub caps: Vec<usize>,
}

impl PhaseSpaceConfig {
    pub fn d(&self) -> usize {
        self.geometry.d()
    }

    pub fn validate(&self) -> Result<()> {
        if self.k > 3 {
            return Err(Error::UnsupportedDegree(self.k));
        }
        if self.caps.len() != self.d() {
            return Err(Error::Invalid(format!(
                "caps length {} does not match geometry dimension {}",
                self.caps.len(),
                self.d()
            )));
        }
        if self.v_domain.1 <= self.v_domain.0 {
            return Err(Error::Invalid("empty velocity domain".into()));
        }
        if self.geometry.has_x() && self.x_domain.1 <= self.x_domain.0 {
            return Err(Error::Invalid("empty spatial domain".into()));
        }
        if self.nu < 0.0 {
            return Err(Error::Invalid("negative collision frequency".into()));
        }
        Ok(())
    }

    pub fn domain(&self, dim: usize) -> (f64, f64) {
        if self.geometry.has_x() && dim == 0 {
            self.x_domain
        } else {
            self.v_domain
        }
    }
}

/// Per-dimension static 1D machinery in wavelet coordinates.
pub(crate) struct DimOps {
    pub transform: BasisTransform1D,
    // velocity-dimension factors
    pub dc_zero_flux: Option<Arc<Factor>>,
    pub jump_interior: Option<Arc<Factor>>,
    pub drift: Option<Arc<Factor>>,
    pub face_weighted_jump: Option<Arc<Factor>>,
    pub mult_v: Option<Arc<Factor>>,
    pub mult_abs_v: Option<Arc<Factor>>,
    pub diffusion: Option<Arc<Factor>>, // Dc * LdgGradient composite
    // x-dimension factors
    pub dc_periodic: Option<Arc<Factor>>,
    pub jump_periodic: Option<Arc<Factor>>,
    // moment rows (wavelet coordinates) for degrees 0, 1, 2, 4
    pub moment_rows: [Array1<f64>; 4],
}

/// Maxwellian velocity distribution
/// `n (2 pi theta)^{-3/2} exp(-|v-u|^2 / (2 theta))`.
pub fn maxwellian(n: f64, u: [f64; 3], theta: f64, v: [f64; 3]) -> Result<f64> {
    if n <= 0.0 {
        return Err(Error::NonpositiveDensity { cell: 0, value: n });
    }
    if theta <= 0.0 {
        return Err(Error::NonpositiveTemperature { cell: 0, value: theta });
    }
    let dv2 = (v[0] - u[0]).powi(2) + (v[1] - u[1]).powi(2) + (v[2] - u[2]).powi(2);
    Ok(n * (2.0 * std::f64::consts::PI * theta).powf(-1.5) * (-dv2 / (2.0 * theta)).exp())
}

/// Assembled context for one configuration: transforms, static factors,
/// moment rows, and the cached Poisson factorization.
pub struct PhysicsContext {
    pub config: PhaseSpaceConfig,
    pub(crate) family: WaveletFamily1D,
    pub(crate) dims: Vec<DimOps>,
    pub(crate) poisson_lu: RefCell<Option<PeriodicPoisson>>,
}

impl PhysicsContext {
    pub fn new(config: PhaseSpaceConfig) -> Result<Self> {
        config.validate()?;
        let k = config.k;
        let family = build_alpert_basis(k)?;
        let mut dims = Vec::with_capacity(config.d());
        for m in 0..config.d() {
            let level = config.caps[m];
            let domain = config.domain(m);
            let transform = build_transform(k, level)?;
            let is_x = config.geometry.has_x() && m == 0;
            let mk = |kind: &OperatorKind1D, boundary: Boundary1D| -> Result<Arc<Factor>> {
                let op = assemble_1d_operator(kind, k, level, domain, boundary, &transform)?;
                Ok(Factor::from_operator(&op))
            };
            let mut moment_rows: [Array1<f64>; 4] = [
                Array1::zeros(0),
                Array1::zeros(0),
                Array1::zeros(0),
                Array1::zeros(0),
            ];
            for (slot, degree) in [(0usize, 0usize), (1, 1), (2, 2), (3, 4)] {
                let row = assemble_1d_operator(
                    &OperatorKind1D::MomentFunctional { degree },
                    k,
                    level,
                    domain,
                    Boundary1D::ZeroFlux,
                    &transform,
                )?;
                let mut r = row.wavelet.row(0).to_owned();
                if degree <= k {
                    // vanishing moments: entries against wavelets of level
                    // >= 1 are exactly zero; remove conjugation roundoff
                    for col in (k + 1)..r.len() {
                        r[col] = 0.0;
                    }
                }
                moment_rows[slot] = r;
            }
            let ops = if is_x {
                DimOps {
                    dc_periodic: Some(mk(&OperatorKind1D::CentralDivergence, Boundary1D::Periodic)?),
                    jump_periodic: Some(mk(&OperatorKind1D::JumpPenalty, Boundary1D::Periodic)?),
                    dc_zero_flux: None,
                    jump_interior: None,
                    drift: None,
                    face_weighted_jump: None,
                    mult_v: None,
                    mult_abs_v: None,
                    diffusion: None,
                    transform,
                    moment_rows,
                }
            } else {
                let dc = mk(&OperatorKind1D::CentralDivergence, Boundary1D::ZeroFlux)?;
                let grad = assemble_1d_operator(
                    &OperatorKind1D::LdgGradient,
                    k,
                    level,
                    domain,
                    Boundary1D::ZeroFlux,
                    &transform,
                )?;
                let diffusion = Factor::new(dc.matrix.dot(&grad.wavelet), FactorPattern::Local);
                DimOps {
                    dc_zero_flux: Some(dc),
                    jump_interior: Some(mk(&OperatorKind1D::JumpPenalty, Boundary1D::ZeroFlux)?),
                    drift: Some(mk(&OperatorKind1D::CoordinateDivergence, Boundary1D::ZeroFlux)?),
                    face_weighted_jump: Some(mk(
                        &OperatorKind1D::FaceWeightedJumpPenalty,
                        Boundary1D::ZeroFlux,
                    )?),
                    mult_v: Some(mk(&OperatorKind1D::CoordinateMultiply, Boundary1D::ZeroFlux)?),
                    mult_abs_v: Some(mk(&OperatorKind1D::AbsCoordinateMultiply, Boundary1D::ZeroFlux)?),
                    diffusion: Some(diffusion),
                    dc_periodic: None,
                    jump_periodic: None,
                    transform,
                    moment_rows,
                }
            };
            dims.push(ops);
        }
        Ok(Self { config, family, dims, poisson_lu: RefCell::new(None) })
    }

    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn d(&self) -> usize {
        self.config.d()
    }

    pub(crate) fn x_ops(&self) -> &DimOps {
        debug_assert!(self.config.geometry.has_x());
        &self.dims[0]
    }

    /// Number of spatial cells at the x cap level.
    pub fn x_cells(&self) -> usize {
        1 << self.config.caps[0]
    }

    /// Spatial cell width.
    pub fn x_cell_width(&self) -> f64 {
        let (a, b) = self.config.x_domain;
        (b - a) / self.x_cells() as f64
    }

    /// Wavelet-coordinate multiplication factor in x for a per-cell
    /// Legendre coefficient field.
    pub(crate) fn x_mult_factor(&self, coeffs: &Array2<f64>) -> Result<Arc<Factor>> {
        let k = self.k();
        let level = self.config.caps[0];
        let op = assemble_1d_operator(
            &OperatorKind1D::CoefficientMultiply(crate::basis1d::CellPolys {
                coeffs: coeffs.clone(),
            }),
            k,
            level,
            self.config.x_domain,
            Boundary1D::ZeroFlux,
            &self.x_ops().transform,
        )?;
        Ok(Factor::from_operator(&op))
    }

    /// Validate a state/grid pair against this context.
    pub fn check_grid(&self, grid: &AdaptiveGrid) -> Result<()> {
        if grid.d() != self.d() || grid.k() != self.k() || grid.caps() != &self.config.caps[..] {
            return Err(Error::OperatorMismatch(
                "grid dims/caps do not match physics configuration".into(),
            ));
        }
        Ok(())
    }
}

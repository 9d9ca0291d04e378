//! Adaptive sparse-grid discontinuous Galerkin methods for the
//! Vlasov-Poisson-Lenard-Bernstein (VPLB) kinetic model.
//!
//! The solver represents the phase-space distribution in an orthonormal
//! Alpert multiwavelet basis, keeps an adaptive set of hierarchical
//! elements, and applies PDE operators as sums of Kronecker products of
//! one-dimensional matrices. Supported geometries are the space
//! homogeneous `0x3v` relaxation problem and the `1x3v` slab, plus a
//! `1x1v` Chu-reduced reference solver on plain tensor-product Legendre
//! grids.
//!
//! Module map:
//! - [`basis1d`]: 1D Legendre/Alpert bases, transforms, operator matrices
//! - [`hiergrid`]: hierarchical element sets, refinement and coarsening
//! - [`kronops`]: Kronecker-product operators on adaptive grids
//! - [`vplb`]: physics assembly (Vlasov, Poisson, Lenard-Bernstein, moments)
//! - [`krylov`]: restarted GMRES with block-Jacobi preconditioning
//! - [`timeint`]: IMEX-RK / backward-Euler stepping and the adapt loop
//! - [`chu1d`]: the 1x1v reduced reference solver

pub mod basis1d;
pub mod chu1d;
pub mod hiergrid;
pub mod kronops;
pub mod krylov;
pub mod linalg;
pub mod quadrature;
pub mod timeint;
pub mod vplb;

use thiserror::Error;

/// Errors surfaced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported polynomial degree k={0} (supported: 0..=3)")]
    UnsupportedDegree(usize),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("state length {got} does not match grid ({expected} coefficients)")]
    StateMismatch { got: usize, expected: usize },
    #[error("operator mismatch: {0}")]
    OperatorMismatch(String),
    #[error("singular matrix in {0}")]
    SingularMatrix(String),
    #[error("nonpositive density n={value:.6e} in spatial cell {cell}")]
    NonpositiveDensity { cell: usize, value: f64 },
    #[error("nonpositive temperature theta={value:.6e} in spatial cell {cell}")]
    NonpositiveTemperature { cell: usize, value: f64 },
    #[error("linear solver failed to converge: residual {residual:.3e} after {iterations} iterations")]
    SolverStalled { residual: f64, iterations: usize },
    #[error("refinement did not settle within {0} passes")]
    RefinementPassCap(usize),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

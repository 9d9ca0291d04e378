//! One-dimensional bases and operator matrices.
//!
//! Everything multidimensional in this crate is built from three 1D
//! ingredients assembled here: the per-element orthonormal Legendre basis
//! at a uniform dyadic level, the hierarchical Alpert multiwavelet basis
//! spanning the same space, and the DG operator matrices (advection
//! volume/flux pieces, LDG gradient, multiplication and moment
//! functionals) expressed in either coordinate system.

mod family;
mod operators;
mod poly;
mod transform;

pub use family::{build_alpert_basis, eval_wavelet, WaveletFamily1D};
pub use operators::{
    assemble_1d_operator, assemble_legendre, Boundary1D, CellPolys, OperatorKind1D,
    OperatorMatrix1D,
};
pub use poly::Poly;
pub use transform::{build_transform, legendre_cell_value, BasisTransform1D};

/// Dimension of the 1D DG space at `level` for polynomial degree `k`:
/// `(k+1) * 2^level`.
pub fn space_dim(k: usize, level: usize) -> usize {
    (k + 1) << level
}

/// Dimension of the hierarchical complement W_level: `(k+1) * 2^(level-1)`
/// for level >= 1 and `k+1` at level 0.
pub fn complement_dim(k: usize, level: usize) -> usize {
    if level == 0 {
        k + 1
    } else {
        (k + 1) << (level - 1)
    }
}

/// Number of 1D hierarchical elements up to `level` (one at level 0, then
/// 2^(l-1) per level l): total 2^level.
pub fn element_count(level: usize) -> usize {
    1 << level
}

/// Flat index of the 1D element (level, position): 0 for the root,
/// `2^(level-1) + position` otherwise. Coefficient blocks of size k+1 laid
/// out in this order reproduce the hierarchical dof ordering, and leading
/// sub-ranges of the level-N ordering coincide with lower levels.
pub fn element_index(level: usize, position: usize) -> usize {
    if level == 0 {
        debug_assert_eq!(position, 0);
        0
    } else {
        (1 << (level - 1)) + position
    }
}

/// Inverse of [`element_index`].
pub fn element_level_position(index: usize) -> (usize, usize) {
    if index == 0 {
        (0, 0)
    } else {
        let level = usize::BITS as usize - index.leading_zeros() as usize;
        (level, index - (1 << (level - 1)))
    }
}

/// Closed support of a 1D element on the reference interval, in ticks of
/// 2^-TICK_LEVEL.
const TICK_LEVEL: usize = 40;

pub(crate) fn element_support_ticks(index: usize) -> (u64, u64) {
    let (level, position) = element_level_position(index);
    if level <= 1 {
        (0, 1 << TICK_LEVEL)
    } else {
        let shift = TICK_LEVEL - (level - 1);
        ((position as u64) << shift, ((position + 1) as u64) << shift)
    }
}

/// Whether two 1D elements can interact through a local bilinear form:
/// their closed supports intersect, or (for periodic forms) they meet
/// through the wrap-around face.
pub fn elements_couple(a: usize, b: usize, periodic: bool) -> bool {
    let (alo, ahi) = element_support_ticks(a);
    let (blo, bhi) = element_support_ticks(b);
    if alo.max(blo) <= ahi.min(bhi) {
        return true;
    }
    if periodic {
        let full = 1u64 << TICK_LEVEL;
        if (alo == 0 && bhi == full) || (blo == 0 && ahi == full) {
            return true;
        }
    }
    false
}

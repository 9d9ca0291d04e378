//! Assembly of 1D DG operator matrices.
//!
//! Matrices are assembled in per-cell Legendre coordinates on a uniform
//! dyadic mesh of the physical interval, then optionally conjugated into
//! hierarchical wavelet coordinates. The orientation convention is
//! `M[test, trial] = Form(trial, test)`, matching the bilinear forms of
//! the weak formulation; time integrators add the ODE signs. The one
//! exception is `UpwindAdvection`, which is the right-hand-side operator
//! `-(wind * CentralDivergence + |wind|/2 * JumpPenalty)` so that its
//! symmetric part is dissipative.
//!
//! Jumps and averages use `[w] = w^- - w^+`, `{w} = (w^- + w^+)/2`, with
//! the periodic wrap face treated cyclically (the last cell is the `-`
//! side, the first cell the `+` side).

use super::transform::{legendre_cell_value, BasisTransform1D};
use crate::quadrature::gauss_legendre;
use crate::{Error, Result};
use ndarray::Array2;
#[cfg(test)]
use ndarray::Array1;

/// Boundary handling for the 1D factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary1D {
    /// x-type dimension: flux faces include the wrap-around face.
    Periodic,
    /// v-type dimension: interior faces only, zero flux at the ends.
    ZeroFlux,
}

/// A coefficient function given by per-cell normalized-Legendre
/// coefficients on the assembly mesh (`n_cells` rows, `k+1` columns).
#[derive(Debug, Clone)]
pub struct CellPolys {
    pub coeffs: Array2<f64>,
}

impl CellPolys {
    pub fn constant_per_cell(values: &[f64], k: usize, h: f64) -> Self {
        let mut coeffs = Array2::zeros((values.len(), k + 1));
        for (c, &v) in values.iter().enumerate() {
            coeffs[[c, 0]] = v * h.sqrt();
        }
        Self { coeffs }
    }

    pub fn eval(&self, cell: usize, lo: f64, h: f64, x: f64) -> f64 {
        let k1 = self.coeffs.ncols();
        (0..k1)
            .map(|i| self.coeffs[[cell, i]] * legendre_cell_value(i, lo, h, x))
            .sum()
    }
}

/// The supported 1D operator kinds.
#[derive(Debug, Clone)]
pub enum OperatorKind1D {
    /// Identity (orthonormal bases).
    Mass,
    /// `-(w, g') + sum_f {w}[g]`
    CentralDivergence,
    /// `sum_f [w][g]`
    JumpPenalty,
    /// `sum_f |x_f| [w][g]` with the face coordinate as weight.
    FaceWeightedJumpPenalty,
    /// `-(x w, g') + sum_f x_f {w}[g]`, the central-flux divergence of
    /// the coordinate-weighted flux.
    CoordinateDivergence,
    /// Right-hand-side upwind advection operator for a constant wind.
    UpwindAdvection { wind: f64 },
    /// LDG auxiliary gradient: `(w', tau) - sum_f [w]{tau}` over
    /// interior faces, closed at zero-flux domain ends by the one-sided
    /// term `-(w n) tau` (the distribution vanishes outside the box).
    /// The closure cancels every boundary-trace remainder in the moment
    /// functionals of the eliminated diffusion composite: constants
    /// annihilate `Dc G` columns and the coordinate functional reduces
    /// to `-integral`, which is what makes collision conservation exact
    /// on under-resolved grids.
    LdgGradient,
    /// `(x w, g)`
    CoordinateMultiply,
    /// `(|x| w, g)`, split exactly at the kink when a cell straddles 0.
    AbsCoordinateMultiply,
    /// `(p(x) w, g)` for a supplied per-cell polynomial.
    CoefficientMultiply(CellPolys),
    /// Row functional `w -> integral of w * x^degree` (1 x n matrix).
    MomentFunctional { degree: usize },
}

impl OperatorKind1D {
    pub fn label(&self) -> &'static str {
        match self {
            OperatorKind1D::Mass => "mass",
            OperatorKind1D::CentralDivergence => "central-divergence",
            OperatorKind1D::JumpPenalty => "jump-penalty",
            OperatorKind1D::FaceWeightedJumpPenalty => "face-weighted-jump-penalty",
            OperatorKind1D::CoordinateDivergence => "coordinate-divergence",
            OperatorKind1D::UpwindAdvection { .. } => "upwind-advection",
            OperatorKind1D::LdgGradient => "ldg-gradient",
            OperatorKind1D::CoordinateMultiply => "coordinate-multiply",
            OperatorKind1D::AbsCoordinateMultiply => "abs-coordinate-multiply",
            OperatorKind1D::CoefficientMultiply(_) => "coefficient-multiply",
            OperatorKind1D::MomentFunctional { .. } => "moment-functional",
        }
    }
}

/// A 1D operator matrix in hierarchical wavelet coordinates.
#[derive(Debug, Clone)]
pub struct OperatorMatrix1D {
    pub kind: &'static str,
    pub boundary: Boundary1D,
    pub domain: (f64, f64),
    pub k: usize,
    pub level: usize,
    pub wavelet: Array2<f64>,
}

impl OperatorMatrix1D {
    pub fn rows(&self) -> usize {
        self.wavelet.nrows()
    }
    pub fn cols(&self) -> usize {
        self.wavelet.ncols()
    }
}

struct Mesh {
    a: f64,
    h: f64,
    cells: usize,
    k: usize,
}

impl Mesh {
    fn lo(&self, c: usize) -> f64 {
        self.a + c as f64 * self.h
    }
    fn trace_left(&self, i: usize) -> f64 {
        let s = ((2 * i + 1) as f64 / self.h).sqrt();
        if i % 2 == 0 {
            s
        } else {
            -s
        }
    }
    fn trace_right(&self, i: usize) -> f64 {
        ((2 * i + 1) as f64 / self.h).sqrt()
    }
    fn dof(&self, cell: usize, i: usize) -> usize {
        cell * (self.k + 1) + i
    }
}

/// Faces carrying flux terms: `(left_cell, right_cell, coordinate)`.
fn faces(mesh: &Mesh, boundary: Boundary1D) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for c in 1..mesh.cells {
        out.push((c - 1, c, mesh.lo(c)));
    }
    if boundary == Boundary1D::Periodic {
        out.push((mesh.cells - 1, 0, mesh.a));
    }
    out
}

/// Add `scale * avg_or_jump(w) * jump(g)` face contributions.
///
/// `w_avg = true` uses `{w}`, otherwise `[w]`.
fn add_face_term(
    m: &mut Array2<f64>,
    mesh: &Mesh,
    face: (usize, usize, f64),
    scale: f64,
    w_avg: bool,
) {
    let (lc, rc, _) = face;
    let k = mesh.k;
    // weights per (cell, i): value of the trace combination
    let mut w_weights = Vec::with_capacity(2 * (k + 1));
    let mut g_weights = Vec::with_capacity(2 * (k + 1));
    for i in 0..=k {
        let (wl, wr) = if w_avg {
            (0.5 * mesh.trace_right(i), 0.5 * mesh.trace_left(i))
        } else {
            (mesh.trace_right(i), -mesh.trace_left(i))
        };
        w_weights.push((mesh.dof(lc, i), wl));
        w_weights.push((mesh.dof(rc, i), wr));
        g_weights.push((mesh.dof(lc, i), mesh.trace_right(i)));
        g_weights.push((mesh.dof(rc, i), -mesh.trace_left(i)));
    }
    for &(gd, gw) in &g_weights {
        for &(wd, ww) in &w_weights {
            m[[gd, wd]] += scale * ww * gw;
        }
    }
}

/// Assemble the operator in per-cell Legendre coordinates.
///
/// `MomentFunctional` yields a 1 x n matrix; everything else is n x n
/// with `n = (k+1) * 2^level`.
pub fn assemble_legendre(
    kind: &OperatorKind1D,
    k: usize,
    level: usize,
    domain: (f64, f64),
    boundary: Boundary1D,
) -> Result<Array2<f64>> {
    let cells = 1usize << level;
    let (a, b) = domain;
    if b <= a {
        return Err(Error::Invalid(format!("empty domain ({a}, {b})")));
    }
    let mesh = Mesh { a, h: (b - a) / cells as f64, cells, k };
    let n = cells * (k + 1);
    let npts = k + 3;
    let (qx, qw) = gauss_legendre(npts);

    // quadrature panels per cell: split at a kink (|x|) when required
    let panels = |c: usize, split_zero: bool| -> Vec<(f64, f64)> {
        let lo = mesh.lo(c);
        let hi = lo + mesh.h;
        if split_zero && lo < 0.0 && hi > 0.0 {
            vec![(lo, 0.0), (0.0, hi)]
        } else {
            vec![(lo, hi)]
        }
    };

    // generic volume assembly: M[g,w] += integral of f(x) * w(x) * dg(x)
    // where dg is either the test value or its derivative
    enum TestPart {
        Value,
        Derivative,
    }
    let volume = |m: &mut Array2<f64>,
                  f: &dyn Fn(usize, f64) -> f64,
                  test: TestPart,
                  split_zero: bool,
                  sign: f64| {
        for c in 0..cells {
            let lo = mesh.lo(c);
            for (plo, phi) in panels(c, split_zero) {
                let mid = 0.5 * (plo + phi);
                let half = 0.5 * (phi - plo);
                for (xq, wq) in qx.iter().zip(&qw) {
                    let x = mid + half * xq;
                    let w = half * wq;
                    let coeff = f(c, x);
                    if coeff == 0.0 {
                        continue;
                    }
                    for iw in 0..=k {
                        let wval = legendre_cell_value(iw, lo, mesh.h, x);
                        for ig in 0..=k {
                            let gval = match test {
                                TestPart::Value => legendre_cell_value(ig, lo, mesh.h, x),
                                TestPart::Derivative => {
                                    legendre_cell_derivative(ig, lo, mesh.h, x)
                                }
                            };
                            m[[mesh.dof(c, ig), mesh.dof(c, iw)]] += sign * w * coeff * wval * gval;
                        }
                    }
                }
            }
        }
    };

    let mut m = Array2::zeros((n, n));
    match kind {
        OperatorKind1D::Mass => {
            for d in 0..n {
                m[[d, d]] = 1.0;
            }
        }
        OperatorKind1D::CentralDivergence => {
            volume(&mut m, &|_, _| 1.0, TestPart::Derivative, false, -1.0);
            for face in faces(&mesh, boundary) {
                add_face_term(&mut m, &mesh, face, 1.0, true);
            }
        }
        OperatorKind1D::JumpPenalty => {
            for face in faces(&mesh, boundary) {
                add_face_term(&mut m, &mesh, face, 1.0, false);
            }
        }
        OperatorKind1D::FaceWeightedJumpPenalty => {
            for face in faces(&mesh, boundary) {
                add_face_term(&mut m, &mesh, face, face.2.abs(), false);
            }
        }
        OperatorKind1D::CoordinateDivergence => {
            volume(&mut m, &|_, x| x, TestPart::Derivative, false, -1.0);
            for face in faces(&mesh, boundary) {
                add_face_term(&mut m, &mesh, face, face.2, true);
            }
        }
        OperatorKind1D::UpwindAdvection { wind } => {
            let dc = assemble_legendre(&OperatorKind1D::CentralDivergence, k, level, domain, boundary)?;
            let j = assemble_legendre(&OperatorKind1D::JumpPenalty, k, level, domain, boundary)?;
            m = dc.mapv(|v| -wind * v) + j.mapv(|v| -0.5 * wind.abs() * v);
        }
        OperatorKind1D::LdgGradient => {
            volume(&mut m, &|_, _| 1.0, TestPart::Value, false, 1.0);
            // transpose roles: the trial function is differentiated, so
            // assemble (w', tau) by swapping value/derivative
            m.fill(0.0);
            for c in 0..cells {
                let lo = mesh.lo(c);
                let mid = lo + 0.5 * mesh.h;
                let half = 0.5 * mesh.h;
                for (xq, wq) in qx.iter().zip(&qw) {
                    let x = mid + half * xq;
                    let w = half * wq;
                    for iw in 0..=k {
                        let wder = legendre_cell_derivative(iw, lo, mesh.h, x);
                        for ig in 0..=k {
                            let gval = legendre_cell_value(ig, lo, mesh.h, x);
                            m[[mesh.dof(c, ig), mesh.dof(c, iw)]] += w * wder * gval;
                        }
                    }
                }
            }
            // interior faces: - [w] {tau}
            for c in 1..cells {
                let face = (c - 1, c, mesh.lo(c));
                add_face_term_jump_avg(&mut m, &mesh, face, -1.0);
            }
            match boundary {
                Boundary1D::Periodic => {
                    let face = (cells - 1, 0, mesh.a);
                    add_face_term_jump_avg(&mut m, &mesh, face, -1.0);
                }
                Boundary1D::ZeroFlux => {
                    // one-sided closure at the domain ends: -(w n) tau
                    let last = cells - 1;
                    for iw in 0..=k {
                        for it in 0..=k {
                            m[[mesh.dof(last, it), mesh.dof(last, iw)]] -=
                                mesh.trace_right(iw) * mesh.trace_right(it);
                            m[[mesh.dof(0, it), mesh.dof(0, iw)]] +=
                                mesh.trace_left(iw) * mesh.trace_left(it);
                        }
                    }
                }
            }
        }
        OperatorKind1D::CoordinateMultiply => {
            volume(&mut m, &|_, x| x, TestPart::Value, false, 1.0);
        }
        OperatorKind1D::AbsCoordinateMultiply => {
            volume(&mut m, &|_, x| x.abs(), TestPart::Value, true, 1.0);
        }
        OperatorKind1D::CoefficientMultiply(p) => {
            if p.coeffs.nrows() != cells || p.coeffs.ncols() != k + 1 {
                return Err(Error::OperatorMismatch(format!(
                    "coefficient shape {:?} does not match mesh ({} cells, k={})",
                    p.coeffs.shape(),
                    cells,
                    k
                )));
            }
            volume(
                &mut m,
                &|c, x| p.eval(c, mesh.lo(c), mesh.h, x),
                TestPart::Value,
                false,
                1.0,
            );
        }
        OperatorKind1D::MomentFunctional { degree } => {
            let mut row = Array2::zeros((1, n));
            for c in 0..cells {
                let lo = mesh.lo(c);
                let mid = lo + 0.5 * mesh.h;
                let half = 0.5 * mesh.h;
                // x^degree * poly(k): degree + k <= 2(k+3)-1 needs
                // npts >= (degree+k+1)/2; k+3 covers degree <= k+5
                for (xq, wq) in qx.iter().zip(&qw) {
                    let x = mid + half * xq;
                    let w = half * wq;
                    for i in 0..=k {
                        row[[0, mesh.dof(c, i)]] +=
                            w * x.powi(*degree as i32) * legendre_cell_value(i, lo, mesh.h, x);
                    }
                }
            }
            return Ok(row);
        }
    }
    Ok(m)
}

/// `- [w] {tau}` face contribution used by the LDG gradient.
fn add_face_term_jump_avg(m: &mut Array2<f64>, mesh: &Mesh, face: (usize, usize, f64), scale: f64) {
    let (lc, rc, _) = face;
    let k = mesh.k;
    for i in 0..=k {
        for i2 in 0..=k {
            // w jump weights
            let w_pairs = [
                (mesh.dof(lc, i), mesh.trace_right(i)),
                (mesh.dof(rc, i), -mesh.trace_left(i)),
            ];
            // tau average weights
            let g_pairs = [
                (mesh.dof(lc, i2), 0.5 * mesh.trace_right(i2)),
                (mesh.dof(rc, i2), 0.5 * mesh.trace_left(i2)),
            ];
            for &(wd, ww) in &w_pairs {
                for &(gd, gw) in &g_pairs {
                    m[[gd, wd]] += scale * ww * gw;
                }
            }
        }
    }
}

pub(crate) fn legendre_cell_derivative(i: usize, lo: f64, h: f64, x: f64) -> f64 {
    let xi = 2.0 * (x - lo) / h - 1.0;
    let (_, d) = crate::quadrature::legendre_with_derivative(i, xi);
    ((2 * i + 1) as f64 / h).sqrt() * d * 2.0 / h
}

/// Assemble the operator and conjugate it into wavelet coordinates using
/// the supplied transform (which must match `k` and `level`).
pub fn assemble_1d_operator(
    kind: &OperatorKind1D,
    k: usize,
    level: usize,
    domain: (f64, f64),
    boundary: Boundary1D,
    transform: &BasisTransform1D,
) -> Result<OperatorMatrix1D> {
    assert_eq!(transform.k, k);
    assert_eq!(transform.level, level);
    let leg = assemble_legendre(kind, k, level, domain, boundary)?;
    let wavelet = if leg.nrows() == 1 {
        // functional row: r_wav = r_leg * F^T
        leg.dot(&transform.forward.t())
    } else {
        transform.conjugate(&leg)
    };
    Ok(OperatorMatrix1D {
        kind: kind.label(),
        boundary,
        domain,
        k,
        level,
        wavelet,
    })
}

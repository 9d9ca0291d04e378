//! Projection of analytic data onto adaptive grids, state evaluation,
//! and transverse-velocity marginals.

use super::PhysicsContext;
use crate::basis1d::{eval_wavelet, legendre_cell_value, space_dim, WaveletFamily1D};
use crate::hiergrid::AdaptiveGrid;
use crate::quadrature::gauss_legendre;
use crate::Result;
use ndarray::{Array1, Array2};

/// One separable product term: `scale * prod_m f_m(y_m)`, with each 1D
/// factor given by its wavelet coefficients at the cap level.
#[derive(Debug, Clone)]
pub struct SeparableProduct {
    pub scale: f64,
    pub factors: Vec<Array1<f64>>,
}

/// L2-project a 1D function onto the wavelet coefficients at `level`,
/// integrating on the finest cells and splitting panels at the given
/// breakpoints (known kinks or jumps of `f`).
pub fn project_1d_wavelet(
    f: &dyn Fn(f64) -> f64,
    k: usize,
    level: usize,
    domain: (f64, f64),
    breakpoints: &[f64],
    transform: &crate::basis1d::BasisTransform1D,
) -> Array1<f64> {
    let cells = 1usize << level;
    let (a, b) = domain;
    let h = (b - a) / cells as f64;
    let (qx, qw) = gauss_legendre(k + 3);
    let mut leg = Array1::zeros(space_dim(k, level));
    for c in 0..cells {
        let lo = a + c as f64 * h;
        let hi = lo + h;
        let mut cuts: Vec<f64> = vec![lo];
        for &bp in breakpoints {
            if bp > lo + 1e-14 * h && bp < hi - 1e-14 * h {
                cuts.push(bp);
            }
        }
        cuts.push(hi);
        cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
        for panel in cuts.windows(2) {
            let (plo, phi) = (panel[0], panel[1]);
            if phi - plo < 1e-300 {
                continue;
            }
            let mid = 0.5 * (plo + phi);
            let half = 0.5 * (phi - plo);
            for (xq, wq) in qx.iter().zip(&qw) {
                let x = mid + half * xq;
                let w = half * wq;
                let fv = f(x);
                if fv == 0.0 {
                    continue;
                }
                for i in 0..=k {
                    leg[c * (k + 1) + i] += w * fv * legendre_cell_value(i, lo, h, x);
                }
            }
        }
    }
    transform.to_wavelet(&leg)
}

/// Assemble the state of a sum of separable products on an adaptive
/// grid from per-dimension wavelet coefficient vectors.
pub fn project_separable(grid: &AdaptiveGrid, products: &[SeparableProduct]) -> Array1<f64> {
    let d = grid.d();
    let k1 = grid.k() + 1;
    let bs = grid.block_size();
    let mut state = Array1::zeros(grid.num_coefficients());
    let s = state.as_slice_mut().expect("contiguous");
    for (e, key) in grid.keys().iter().enumerate() {
        let block = &mut s[e * bs..(e + 1) * bs];
        for p in products {
            debug_assert_eq!(p.factors.len(), d);
            let mut offs = [0usize; crate::hiergrid::MAX_D];
            for m in 0..d {
                offs[m] = key.element_index_1d(m) * k1;
            }
            for (flat, slot) in block.iter_mut().enumerate() {
                let mut w = p.scale;
                let mut rem = flat;
                for m in (0..d).rev() {
                    w *= p.factors[m][offs[m] + rem % k1];
                    rem /= k1;
                }
                *slot += w;
            }
        }
    }
    state
}

impl PhysicsContext {
    /// Wavelet coefficients of a 1D function along dimension `m`,
    /// integrated on the finest cells with panels split at the given
    /// breakpoints.
    pub fn project_function_1d(
        &self,
        m: usize,
        f: &dyn Fn(f64) -> f64,
        breakpoints: &[f64],
    ) -> Array1<f64> {
        project_1d_wavelet(
            f,
            self.k(),
            self.config.caps[m],
            self.config.domain(m),
            breakpoints,
            &self.dims[m].transform,
        )
    }

    /// The basis transform used along dimension `m`.
    pub fn transform(&self, m: usize) -> &crate::basis1d::BasisTransform1D {
        &self.dims[m].transform
    }

    /// Per-element L2 projection of an arbitrary function by quadrature
    /// on the finest-level cells inside each element's support, with
    /// panels split at per-dimension breakpoints. Cost grows with the
    /// cap levels; preset initial data uses [`project_separable`]
    /// instead.
    pub fn project_pointwise(
        &self,
        grid: &AdaptiveGrid,
        f: &dyn Fn(&[f64]) -> f64,
        breakpoints: &[Vec<f64>],
    ) -> Result<Array1<f64>> {
        self.check_grid(grid)?;
        let d = self.d();
        let k = self.k();
        let k1 = k + 1;
        let bs = grid.block_size();
        let (qx, qw) = gauss_legendre(k + 3);
        let mut state = Array1::zeros(grid.num_coefficients());
        let s = state.as_slice_mut().expect("contiguous");
        for (e, key) in grid.keys().iter().enumerate() {
            // per-dimension quadrature nodes: (x, weight, basis values)
            let mut nodes: Vec<Vec<(f64, f64, Vec<f64>)>> = Vec::with_capacity(d);
            for m in 0..d {
                let (a, b) = self.config.domain(m);
                let width = b - a;
                let cap = self.config.caps[m];
                let level = key.level(m);
                let pos = key.position(m);
                // reference support of the element
                let (rlo, rhi) = if level <= 1 {
                    (0.0, 1.0)
                } else {
                    let scale = 1.0 / (1u64 << (level - 1)) as f64;
                    (pos as f64 * scale, (pos + 1) as f64 * scale)
                };
                let fine = 1usize << cap;
                let fh = 1.0 / fine as f64;
                let c0 = (rlo / fh).round() as usize;
                let c1 = (rhi / fh).round() as usize;
                let mut list = Vec::new();
                for c in c0..c1 {
                    let plo_ref = c as f64 * fh;
                    let phi_ref = (c + 1) as f64 * fh;
                    let plo = a + plo_ref * width;
                    let phi = a + phi_ref * width;
                    let mut cuts = vec![plo];
                    for &bp in &breakpoints[m] {
                        if bp > plo + 1e-13 * width && bp < phi - 1e-13 * width {
                            cuts.push(bp);
                        }
                    }
                    cuts.push(phi);
                    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
                    for panel in cuts.windows(2) {
                        let mid = 0.5 * (panel[0] + panel[1]);
                        let half = 0.5 * (panel[1] - panel[0]);
                        if half <= 0.0 {
                            continue;
                        }
                        for (xq, wq) in qx.iter().zip(&qw) {
                            let x = mid + half * xq;
                            let w = half * wq;
                            let yref = (x - a) / width;
                            let vals: Vec<f64> = (1..=k1)
                                .map(|i| {
                                    eval_wavelet(&self.family, level, pos, i, yref).unwrap()
                                        / width.sqrt()
                                })
                                .collect();
                            list.push((x, w, vals));
                        }
                    }
                }
                nodes.push(list);
            }
            // tensor quadrature over the node lists
            let block = &mut s[e * bs..(e + 1) * bs];
            let mut idx = vec![0usize; d];
            let mut point = vec![0.0f64; d];
            'outer: loop {
                let mut w_tot = 1.0;
                for m in 0..d {
                    let (x, w, _) = &nodes[m][idx[m]];
                    point[m] = *x;
                    w_tot *= w;
                }
                let fv = f(&point);
                if fv != 0.0 {
                    for (flat, slot) in block.iter_mut().enumerate() {
                        let mut val = w_tot * fv;
                        let mut rem = flat;
                        for m in (0..d).rev() {
                            val *= nodes[m][idx[m]].2[rem % k1];
                            rem /= k1;
                        }
                        *slot += val;
                    }
                }
                for m in (0..d).rev() {
                    idx[m] += 1;
                    if idx[m] < nodes[m].len() {
                        continue 'outer;
                    }
                    idx[m] = 0;
                    if m == 0 {
                        break 'outer;
                    }
                }
            }
        }
        Ok(state)
    }

    /// Evaluate a state at one phase-space point.
    pub fn eval_state_at(&self, grid: &AdaptiveGrid, state: &Array1<f64>, point: &[f64]) -> f64 {
        eval_state_at(&self.family, &self.configured_domains(), grid, state, point)
    }

    fn configured_domains(&self) -> Vec<(f64, f64)> {
        (0..self.d()).map(|m| self.config.domain(m)).collect()
    }

    /// Transverse marginal of a slab state: the weighted integral over
    /// (v_y, v_z), returned as per-cell Legendre coefficients on the
    /// (x, v_x) tensor box at the cap levels.
    pub fn weighted_marginal(
        &self,
        state: &Array1<f64>,
        grid: &AdaptiveGrid,
        weight: MarginalWeight,
    ) -> Result<Array2<f64>> {
        self.check_grid(grid)?;
        let d = self.d();
        let k1 = self.k() + 1;
        let nx = space_dim(self.k(), self.config.caps[0]);
        let nv = space_dim(self.k(), self.config.caps[1]);
        let mut wavelet = Array2::<f64>::zeros((nx, nv));
        // weight components as per-dimension moment degrees on (v_y, v_z)
        let components: Vec<Vec<usize>> = match (d, weight) {
            (2, MarginalWeight::One) => vec![vec![]],
            (4, MarginalWeight::One) => vec![vec![0, 0]],
            (4, MarginalWeight::TransverseSq) => vec![vec![2, 0], vec![0, 2]],
            (4, MarginalWeight::TransverseQuart) => vec![vec![4, 0], vec![0, 4]],
            _ => {
                return Err(crate::Error::Invalid(
                    "marginal weight incompatible with geometry".into(),
                ))
            }
        };
        let bs = grid.block_size();
        let s = state.as_slice().expect("contiguous");
        for (e, key) in grid.keys().iter().enumerate() {
            let block = &s[e * bs..(e + 1) * bs];
            let x_off = key.element_index_1d(0) * k1;
            let v_off = key.element_index_1d(1) * k1;
            let trans_block = bs / (k1 * k1);
            for comp in &components {
                for ix in 0..k1 {
                    for iv in 0..k1 {
                        let mut acc = 0.0;
                        for ft in 0..trans_block {
                            let v = block[(ix * k1 + iv) * trans_block + ft];
                            if v == 0.0 {
                                continue;
                            }
                            let mut w = v;
                            let mut rem = ft;
                            for m in (2..d).rev() {
                                let deg = comp[m - 2];
                                let slot = match deg {
                                    0 => 0,
                                    2 => 2,
                                    4 => 3,
                                    _ => unreachable!(),
                                };
                                let row = &self.dims[m].moment_rows[slot];
                                w *= row[key.element_index_1d(m) * k1 + rem % k1];
                                rem /= k1;
                            }
                            acc += w;
                        }
                        wavelet[[x_off + ix, v_off + iv]] += acc;
                    }
                }
            }
        }
        // convert both directions to per-cell Legendre coordinates
        let fx = &self.dims[0].transform.forward;
        let fv = &self.dims[1].transform.forward;
        Ok(fx.t().dot(&wavelet).dot(fv))
    }
}

/// Which transverse weight the marginal integrates against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginalWeight {
    /// `<f>` over (v_y, v_z)
    One,
    /// `<f (v_y^2 + v_z^2)>`
    TransverseSq,
    /// `<f (v_y^4 + v_z^4)>`
    TransverseQuart,
}

/// Evaluate a state at one point given the wavelet family and the
/// per-dimension physical domains.
pub fn eval_state_at(
    family: &WaveletFamily1D,
    domains: &[(f64, f64)],
    grid: &AdaptiveGrid,
    state: &Array1<f64>,
    point: &[f64],
) -> f64 {
    let d = grid.d();
    let k1 = grid.k() + 1;
    let bs = grid.block_size();
    let s = state.as_slice().expect("contiguous");
    let yref: Vec<f64> = (0..d)
        .map(|m| {
            let (a, b) = domains[m];
            (point[m] - a) / (b - a)
        })
        .collect();
    let scale: f64 = domains.iter().map(|(a, b)| 1.0 / (b - a).sqrt()).product();
    let mut total = 0.0;
    let mut vals = vec![[0.0f64; 4]; d];
    'elements: for (e, key) in grid.keys().iter().enumerate() {
        for m in 0..d {
            let level = key.level(m);
            let pos = key.position(m);
            if level >= 1 {
                // left-limit convention: a point on a support boundary
                // belongs to the element on its left, except at the
                // domain's left end
                let (lo, hi) = support_ref(level, pos);
                let inside = (yref[m] > lo && yref[m] <= hi) || (lo == 0.0 && yref[m] == 0.0);
                if !inside {
                    continue 'elements;
                }
            }
            for i in 1..=k1 {
                vals[m][i - 1] = eval_wavelet(family, level, pos, i, yref[m]).unwrap();
            }
        }
        let block = &s[e * bs..(e + 1) * bs];
        for (flat, &c) in block.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let mut w = c;
            let mut rem = flat;
            for m in (0..d).rev() {
                w *= vals[m][rem % k1];
                rem /= k1;
            }
            total += w;
        }
    }
    total * scale
}

fn support_ref(level: usize, pos: usize) -> (f64, f64) {
    if level <= 1 {
        (0.0, 1.0)
    } else {
        let s = 1.0 / (1u64 << (level - 1)) as f64;
        (pos as f64 * s, (pos + 1) as f64 * s)
    }
}

/// Reconstruct per-cell Legendre coefficients of a full 1D state from
/// wavelet coordinates (helper shared by drivers).
pub fn wavelet_to_legendre_1d(
    transform: &crate::basis1d::BasisTransform1D,
    wavelet: &Array1<f64>,
) -> Array1<f64> {
    transform.to_legendre(wavelet)
}

//! Hierarchical element bookkeeping: index sets, parent/child relations,
//! refinement and coarsening.
//!
//! A hierarchical element is a (level, position) multi-index pair owning
//! a `(k+1)^d` coefficient block. Grids are insertion-ordered
//! deduplicated sets of such elements with per-dimension level caps; the
//! ordering fixes the layout of state vectors and makes runs
//! reproducible.

use crate::{Error, Result};
use ndarray::Array1;
use std::collections::HashMap;
use std::fmt::Write as _;

pub const MAX_D: usize = 4;

/// Key of one hierarchical element: per-dimension levels and positions.
/// Unused trailing dimensions are zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ElementKey {
    pub d: u8,
    pub levels: [u8; MAX_D],
    pub positions: [u32; MAX_D],
}

impl ElementKey {
    pub fn new(levels: &[usize], positions: &[usize]) -> Self {
        assert_eq!(levels.len(), positions.len());
        assert!(levels.len() <= MAX_D);
        let mut lv = [0u8; MAX_D];
        let mut ps = [0u32; MAX_D];
        for (m, (&l, &p)) in levels.iter().zip(positions).enumerate() {
            lv[m] = l as u8;
            ps[m] = p as u32;
            debug_assert!(p <= max_position(l));
        }
        Self { d: levels.len() as u8, levels: lv, positions: ps }
    }

    pub fn root(d: usize) -> Self {
        Self { d: d as u8, levels: [0; MAX_D], positions: [0; MAX_D] }
    }

    pub fn dim(&self) -> usize {
        self.d as usize
    }

    pub fn level(&self, m: usize) -> usize {
        self.levels[m] as usize
    }

    pub fn position(&self, m: usize) -> usize {
        self.positions[m] as usize
    }

    pub fn level_sum(&self) -> usize {
        self.levels[..self.dim()].iter().map(|&l| l as usize).sum()
    }

    /// Flat 1D element index per dimension (see `basis1d::element_index`).
    pub fn element_index_1d(&self, m: usize) -> usize {
        crate::basis1d::element_index(self.level(m), self.position(m))
    }

    pub fn is_root(&self) -> bool {
        self.levels[..self.dim()].iter().all(|&l| l == 0)
    }
}

/// Largest valid position index at a level: 0 at levels 0 and 1, else
/// `2^(level-1) - 1`.
pub fn max_position(level: usize) -> usize {
    if level <= 1 {
        0
    } else {
        (1 << (level - 1)) - 1
    }
}

/// Ordered, deduplicated set of active hierarchical elements.
#[derive(Debug, Clone)]
pub struct AdaptiveGrid {
    d: usize,
    k: usize,
    caps: [usize; MAX_D],
    keys: Vec<ElementKey>,
    index: HashMap<ElementKey, usize>,
}

impl AdaptiveGrid {
    pub fn empty(d: usize, k: usize, caps: &[usize]) -> Self {
        assert!(d >= 1 && d <= MAX_D);
        assert_eq!(caps.len(), d);
        let mut c = [0usize; MAX_D];
        c[..d].copy_from_slice(caps);
        Self { d, k, caps: c, keys: Vec::new(), index: HashMap::new() }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn caps(&self) -> &[usize] {
        &self.caps[..self.d]
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[ElementKey] {
        &self.keys
    }

    pub fn contains(&self, key: &ElementKey) -> bool {
        self.index.contains_key(key)
    }

    pub fn position_of(&self, key: &ElementKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    /// Coefficients per element block.
    pub fn block_size(&self) -> usize {
        (self.k + 1).pow(self.d as u32)
    }

    /// Offset of element `i`'s block in a state vector.
    pub fn element_offset(&self, i: usize) -> usize {
        i * self.block_size()
    }

    /// Total state length.
    pub fn num_coefficients(&self) -> usize {
        self.len() * self.block_size()
    }

    /// Insert a key if absent; returns true when newly added.
    pub fn insert(&mut self, key: ElementKey) -> bool {
        debug_assert_eq!(key.dim(), self.d);
        debug_assert!(self.respects_caps(&key));
        if self.index.contains_key(&key) {
            false
        } else {
            self.index.insert(key, self.keys.len());
            self.keys.push(key);
            true
        }
    }

    pub fn respects_caps(&self, key: &ElementKey) -> bool {
        (0..self.d).all(|m| key.level(m) <= self.caps[m])
    }

    /// If the active set is exactly a cross product of per-dimension
    /// element prefixes `0..n_m`, return those counts (used for the
    /// tensor fast path in operator application).
    pub fn full_tensor_shape(&self) -> Option<Vec<usize>> {
        let mut counts = vec![0usize; self.d];
        for key in &self.keys {
            for m in 0..self.d {
                counts[m] = counts[m].max(key.element_index_1d(m) + 1);
            }
        }
        let product: usize = counts.iter().product();
        if product == self.len() {
            Some(counts)
        } else {
            None
        }
    }

    /// Plain-text dump: one line per active element,
    /// `l_1 ... l_d j_1 ... j_d`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for key in &self.keys {
            for m in 0..self.d {
                let _ = write!(out, "{} ", key.level(m));
            }
            for m in 0..self.d {
                let sep = if m + 1 == self.d { "\n" } else { " " };
                let _ = write!(out, "{}{}", key.position(m), sep);
            }
        }
        out
    }

    pub fn parse_dump(text: &str, d: usize, k: usize, caps: &[usize]) -> Result<Self> {
        let mut grid = Self::empty(d, k, caps);
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let nums: Vec<usize> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|e| Error::Invalid(format!("line {}: {e}", lineno + 1)))
                })
                .collect::<Result<_>>()?;
            if nums.len() != 2 * d {
                return Err(Error::Invalid(format!(
                    "line {}: expected {} numbers, got {}",
                    lineno + 1,
                    2 * d,
                    nums.len()
                )));
            }
            grid.insert(ElementKey::new(&nums[..d], &nums[d..]));
        }
        Ok(grid)
    }
}

fn push_positions(levels: &[usize], dim: usize, current: &mut Vec<usize>, out: &mut Vec<ElementKey>) {
    if dim == levels.len() {
        out.push(ElementKey::new(levels, current));
        return;
    }
    for j in 0..=max_position(levels[dim]) {
        current.push(j);
        push_positions(levels, dim + 1, current, out);
        current.pop();
    }
}

fn enumerate_levels(
    d: usize,
    caps: &[usize],
    keep: &dyn Fn(&[usize]) -> bool,
    levels: &mut Vec<usize>,
    out: &mut Vec<ElementKey>,
) {
    if levels.len() == d {
        if keep(levels) {
            push_positions(levels, 0, &mut Vec::new(), out);
        }
        return;
    }
    let m = levels.len();
    for l in 0..=caps[m] {
        levels.push(l);
        enumerate_levels(d, caps, keep, levels, out);
        levels.pop();
    }
}

fn build_grid(d: usize, k: usize, caps: &[usize], keep: &dyn Fn(&[usize]) -> bool) -> AdaptiveGrid {
    let mut grid = AdaptiveGrid::empty(d, k, caps);
    let mut out = Vec::new();
    enumerate_levels(d, caps, keep, &mut Vec::new(), &mut out);
    for key in out {
        grid.insert(key);
    }
    grid
}

/// Full grid: every element with `l_m <= levels[m]` componentwise.
pub fn full_index_set(levels: &[usize], k: usize) -> AdaptiveGrid {
    build_grid(levels.len(), k, levels, &|_| true)
}

/// Sparse grid of level `n`: elements with `|l|_1 <= n`, optionally
/// clipped by per-dimension caps.
pub fn sparse_index_set(n: usize, d: usize, k: usize, caps: Option<&[usize]>) -> AdaptiveGrid {
    let caps_vec: Vec<usize> = match caps {
        Some(c) => c.iter().map(|&c| c.min(n)).collect(),
        None => vec![n; d],
    };
    build_grid(d, k, &caps_vec, &|levels| levels.iter().sum::<usize>() <= n)
}

/// Mixed grid (d = 4): full in the first (spatial) dimension up to `lx`,
/// sparse of level `lv` across the three velocity dimensions.
pub fn mixed_index_set(lx: usize, lv: usize, k: usize) -> AdaptiveGrid {
    let caps = [lx, lv, lv, lv];
    build_grid(4, k, &caps, &|levels| levels[1] + levels[2] + levels[3] <= lv)
}

/// Children of an element under per-dimension caps: up to two per
/// dimension (one from level 0).
pub fn children(key: &ElementKey, caps: &[usize]) -> Vec<ElementKey> {
    let d = key.dim();
    let mut out = Vec::new();
    for m in 0..d {
        let l = key.level(m);
        let j = key.position(m);
        if l == 0 {
            if caps[m] >= 1 {
                let mut child = *key;
                child.levels[m] = 1;
                child.positions[m] = 0;
                out.push(child);
            }
        } else if l < caps[m] {
            for half in 0..2u32 {
                let mut child = *key;
                child.levels[m] = (l + 1) as u8;
                child.positions[m] = 2 * j as u32 + half;
                out.push(child);
            }
        }
    }
    out
}

/// Parents of an element: at most one per dimension.
pub fn parents(key: &ElementKey) -> Vec<ElementKey> {
    let d = key.dim();
    let mut out = Vec::new();
    for m in 0..d {
        let l = key.level(m);
        if l == 0 {
            continue;
        }
        let mut parent = *key;
        parent.levels[m] = (l - 1) as u8;
        parent.positions[m] = if l == 1 { 0 } else { key.positions[m] / 2 };
        out.push(parent);
    }
    out
}

/// Per-element block norms of a state vector.
#[derive(Debug, Clone)]
pub struct CoefficientBlockNorms {
    pub l2: Vec<f64>,
    pub linf: Vec<f64>,
}

impl CoefficientBlockNorms {
    pub fn of(state: &Array1<f64>, grid: &AdaptiveGrid) -> Result<Self> {
        if state.len() != grid.num_coefficients() {
            return Err(Error::StateMismatch {
                got: state.len(),
                expected: grid.num_coefficients(),
            });
        }
        let bs = grid.block_size();
        let mut l2 = Vec::with_capacity(grid.len());
        let mut linf = Vec::with_capacity(grid.len());
        let s = state.as_slice().expect("contiguous state");
        for e in 0..grid.len() {
            let block = &s[e * bs..(e + 1) * bs];
            let mut sq = 0.0;
            let mut mx = 0.0f64;
            for &v in block {
                sq += v * v;
                mx = mx.max(v.abs());
            }
            l2.push(sq.sqrt());
            linf.push(mx);
        }
        Ok(Self { l2, linf })
    }
}

/// Which norm drives the refinement/coarsening criteria. The max-norm
/// variant compares block max-norms against the largest block max-norm;
/// the l2 variant compares block l2 norms against the global L2 norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdaptNorm {
    Linf,
    L2,
}

fn criterion_reference(norms: &CoefficientBlockNorms, which: AdaptNorm) -> f64 {
    match which {
        AdaptNorm::Linf => norms.linf.iter().fold(0.0f64, |a, &b| a.max(b)),
        AdaptNorm::L2 => norms.l2.iter().map(|v| v * v).sum::<f64>().sqrt(),
    }
}

fn block_measure(norms: &CoefficientBlockNorms, e: usize, which: AdaptNorm) -> f64 {
    match which {
        AdaptNorm::Linf => norms.linf[e],
        AdaptNorm::L2 => norms.l2[e],
    }
}

/// One refinement pass: add the (deduplicated) children of every active
/// element whose block norm meets the threshold. Returns the enlarged
/// grid and the newly added keys; the input ordering is preserved as a
/// prefix.
pub fn refine(
    grid: &AdaptiveGrid,
    norms: &CoefficientBlockNorms,
    tau: f64,
    which: AdaptNorm,
) -> (AdaptiveGrid, Vec<ElementKey>) {
    assert!(tau > 0.0);
    let reference = criterion_reference(norms, which);
    let mut out = grid.clone();
    let mut added = Vec::new();
    for e in 0..grid.len() {
        if block_measure(norms, e, which) >= tau * reference {
            for child in children(&grid.keys()[e], grid.caps()) {
                if out.insert(child) {
                    added.push(child);
                }
            }
        }
    }
    (out, added)
}

/// Coarsening pass: drop every active element whose block norm is at or
/// below `mu * tau` times the reference. The root element is never
/// removed, so the grid cannot become empty.
pub fn coarsen(
    grid: &AdaptiveGrid,
    norms: &CoefficientBlockNorms,
    tau: f64,
    mu: f64,
    which: AdaptNorm,
) -> AdaptiveGrid {
    assert!(tau > 0.0 && mu > 0.0 && mu < 1.0);
    let reference = criterion_reference(norms, which);
    let mut out = AdaptiveGrid::empty(grid.d(), grid.k(), grid.caps());
    for e in 0..grid.len() {
        let key = grid.keys()[e];
        if key.is_root() || block_measure(norms, e, which) > mu * tau * reference {
            out.insert(key);
        }
    }
    out
}

/// Move coefficients between grids: blocks present in both are copied,
/// blocks new to the target are zero, blocks absent from it are dropped.
pub fn reindex(
    grid_old: &AdaptiveGrid,
    grid_new: &AdaptiveGrid,
    state_old: &Array1<f64>,
) -> Array1<f64> {
    assert_eq!(grid_old.block_size(), grid_new.block_size());
    let bs = grid_old.block_size();
    let mut state_new = Array1::zeros(grid_new.num_coefficients());
    let old = state_old.as_slice().expect("contiguous");
    let new = state_new.as_slice_mut().expect("contiguous");
    for (e_new, key) in grid_new.keys().iter().enumerate() {
        if let Some(e_old) = grid_old.position_of(key) {
            new[e_new * bs..(e_new + 1) * bs].copy_from_slice(&old[e_old * bs..(e_old + 1) * bs]);
        }
    }
    state_new
}

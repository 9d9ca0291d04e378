//! Independent dense-assembly oracles for the physics operators.
//!
//! A 2D (x, v) DG discretization is assembled here directly from the
//! weak forms with plain tensor quadrature and trace evaluations,
//! without any Kronecker structure, wavelet coordinates, or sweep/pair
//! machinery. The production operators must match its action after the
//! change of basis.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use sgdg::basis1d::legendre_cell_value;
use sgdg::hiergrid::{full_index_set, AdaptiveGrid};
use sgdg::kronops::KronApplicator;
use sgdg::quadrature::gauss_legendre;
use sgdg::vplb::{FluidView, Geometry, PhaseSpaceConfig, PhysicsContext};

struct Mesh1 {
    a: f64,
    h: f64,
    cells: usize,
    k: usize,
}

impl Mesh1 {
    fn new(domain: (f64, f64), level: usize, k: usize) -> Self {
        let cells = 1usize << level;
        Self { a: domain.0, h: (domain.1 - domain.0) / cells as f64, cells, k }
    }
    fn lo(&self, c: usize) -> f64 {
        self.a + c as f64 * self.h
    }
    fn psi(&self, c: usize, i: usize, x: f64) -> f64 {
        legendre_cell_value(i, self.lo(c), self.h, x)
    }
    fn dpsi(&self, c: usize, i: usize, x: f64) -> f64 {
        let lo = self.lo(c);
        let eps = 1e-6 * self.h;
        // centered difference is plenty below 1e-11 * scale for the
        // oracle? No: use the exact derivative via the recurrence
        // relation instead.
        let _ = eps;
        exact_dpsi(i, lo, self.h, x)
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
}

fn exact_dpsi(i: usize, lo: f64, h: f64, x: f64) -> f64 {
    let xi = 2.0 * (x - lo) / h - 1.0;
    let (_, d) = sgdg::quadrature::legendre_with_derivative(i, xi);
    ((2 * i + 1) as f64 / h).sqrt() * d * 2.0 / h
}

/// Dof index in the tensor-Legendre layout.
fn dof(mx: &Mesh1, mv: &Mesh1, cx: usize, i: usize, cv: usize, j: usize) -> usize {
    (cx * (mx.k + 1) + i) * (mv.cells * (mv.k + 1)) + cv * (mv.k + 1) + j
}

/// Evaluate a per-cell Legendre field of x.
fn eval_field(mesh: &Mesh1, leg: &Array1<f64>, c: usize, x: f64) -> f64 {
    (0..=mesh.k).map(|i| leg[c * (mesh.k + 1) + i] * mesh.psi(c, i, x)).sum()
}

/// Oracle assembly of the Vlasov-Poisson form for a frozen per-cell
/// constant electric field.
fn assemble_vp_oracle(mx: &Mesh1, mv: &Mesh1, e_cells: &[f64]) -> Array2<f64> {
    let n = mx.cells * (mx.k + 1) * mv.cells * (mv.k + 1);
    let mut m = Array2::<f64>::zeros((n, n));
    let q = mx.k + 5;
    let (qx, qw) = gauss_legendre(q);
    // volume terms per 2D cell
    for cx in 0..mx.cells {
        for cv in 0..mv.cells {
            for (ax, awx) in qx.iter().zip(&qw) {
                let x = mx.lo(cx) + 0.5 * mx.h * (ax + 1.0);
                let wx = 0.5 * mx.h * awx;
                for (av, awv) in qx.iter().zip(&qw) {
                    let v = mv.lo(cv) + 0.5 * mv.h * (av + 1.0);
                    let wv = 0.5 * mv.h * awv;
                    let w2 = wx * wv;
                    for iw in 0..=mx.k {
                        for jw in 0..=mv.k {
                            let wval = mx.psi(cx, iw, x) * mv.psi(cv, jw, v);
                            for ig in 0..=mx.k {
                                for jg in 0..=mv.k {
                                    // -(v w, dx g) - (E w, dv g)
                                    let term = -v * wval * mx.dpsi(cx, ig, x) * mv.psi(cv, jg, v)
                                        - e_cells[cx] * wval * mx.psi(cx, ig, x) * mv.dpsi(cv, jg, v);
                                    m[[dof(mx, mv, cx, ig, cv, jg), dof(mx, mv, cx, iw, cv, jw)]] +=
                                        w2 * term;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    // x-faces (periodic): integral over v of [v {w} + |v|/2 [w]] [g]
    for xf in 0..mx.cells {
        let lc = (xf + mx.cells - 1) % mx.cells;
        let rc = xf;
        for cv in 0..mv.cells {
            for (av, awv) in qx.iter().zip(&qw) {
                let v = mv.lo(cv) + 0.5 * mv.h * (av + 1.0);
                let wv = 0.5 * mv.h * awv;
                for jw in 0..=mv.k {
                    for jg in 0..=mv.k {
                        let vfac = mv.psi(cv, jw, v) * mv.psi(cv, jg, v);
                        for iw in 0..=mx.k {
                            for ig in 0..=mx.k {
                                // w side: {w} and [w]; g side: [g]
                                let w_minus = mx.trace_right(iw);
                                let w_plus = mx.trace_left(iw);
                                let g_minus = mx.trace_right(ig);
                                let g_plus = mx.trace_left(ig);
                                let flux_avg = 0.5 * v;
                                let flux_jmp = 0.5 * v.abs();
                                // (L,L), (L,R), (R,L), (R,R) combinations
                                let combos = [
                                    (lc, w_minus, lc, g_minus, flux_avg + flux_jmp),
                                    (lc, w_minus, rc, -g_plus, flux_avg + flux_jmp),
                                    (rc, w_plus, lc, g_minus, flux_avg - flux_jmp),
                                    (rc, w_plus, rc, -g_plus, flux_avg - flux_jmp),
                                ];
                                for (wc, wtr, gc, gtr, f) in combos {
                                    m[[dof(mx, mv, gc, ig, cv, jg), dof(mx, mv, wc, iw, cv, jw)]] +=
                                        wv * vfac * f * wtr * gtr;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    // interior v-faces: integral over x of [E {w} + |E|/2 [w]] [g]
    for vf in 1..mv.cells {
        let lc = vf - 1;
        let rc = vf;
        for cx in 0..mx.cells {
            let e = e_cells[cx];
            for (ax, awx) in qx.iter().zip(&qw) {
                let x = mx.lo(cx) + 0.5 * mx.h * (ax + 1.0);
                let wx = 0.5 * mx.h * awx;
                for iw in 0..=mx.k {
                    for ig in 0..=mx.k {
                        let xfac = mx.psi(cx, iw, x) * mx.psi(cx, ig, x);
                        for jw in 0..=mv.k {
                            for jg in 0..=mv.k {
                                let w_minus = mv.trace_right(jw);
                                let w_plus = mv.trace_left(jw);
                                let g_minus = mv.trace_right(jg);
                                let g_plus = mv.trace_left(jg);
                                let favg = 0.5 * e;
                                let fjmp = 0.5 * e.abs();
                                let combos = [
                                    (lc, w_minus, lc, g_minus, favg + fjmp),
                                    (lc, w_minus, rc, -g_plus, favg + fjmp),
                                    (rc, w_plus, lc, g_minus, favg - fjmp),
                                    (rc, w_plus, rc, -g_plus, favg - fjmp),
                                ];
                                for (wc, wtr, gc, gtr, f) in combos {
                                    m[[dof(mx, mv, cx, ig, gc, jg), dof(mx, mv, cx, iw, wc, jw)]] +=
                                        wx * xfac * f * wtr * gtr;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    m
}

/// Oracle assembly of the collision form for frozen DG fields u(x),
/// theta(x): central flux of the full drift plus |v.n|/2 penalty, and
/// the LDG diffusion assembled as divergence times theta-weighted
/// gradient.
fn assemble_lb_oracle(mx: &Mesh1, mv: &Mesh1, u_leg: &Array1<f64>, theta_leg: &Array1<f64>) -> Array2<f64> {
    let n = mx.cells * (mx.k + 1) * mv.cells * (mv.k + 1);
    let mut adv = Array2::<f64>::zeros((n, n));
    let q = mx.k + 5;
    let (qx, qw) = gauss_legendre(q);
    // advective volume: -((v - u(x)) w, dv g)
    for cx in 0..mx.cells {
        for cv in 0..mv.cells {
            for (ax, awx) in qx.iter().zip(&qw) {
                let x = mx.lo(cx) + 0.5 * mx.h * (ax + 1.0);
                let wx = 0.5 * mx.h * awx;
                let u = eval_field(mx, u_leg, cx, x);
                for (av, awv) in qx.iter().zip(&qw) {
                    let v = mv.lo(cv) + 0.5 * mv.h * (av + 1.0);
                    let wv = 0.5 * mv.h * awv;
                    for iw in 0..=mx.k {
                        for jw in 0..=mv.k {
                            let wval = mx.psi(cx, iw, x) * mv.psi(cv, jw, v);
                            for ig in 0..=mx.k {
                                for jg in 0..=mv.k {
                                    let gval = mx.psi(cx, ig, x) * mv.dpsi(cv, jg, v);
                                    adv[[dof(mx, mv, cx, ig, cv, jg), dof(mx, mv, cx, iw, cv, jw)]] -=
                                        wx * wv * (v - u) * wval * gval;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    // advective flux on interior v-faces:
    // [(v_f - u(x)) {w} - |v_f|/2 [w]] [g]
    for vf in 1..mv.cells {
        let lc = vf - 1;
        let rc = vf;
        let v_f = mv.lo(vf);
        for cx in 0..mx.cells {
            for (ax, awx) in qx.iter().zip(&qw) {
                let x = mx.lo(cx) + 0.5 * mx.h * (ax + 1.0);
                let wx = 0.5 * mx.h * awx;
                let u = eval_field(mx, u_leg, cx, x);
                for iw in 0..=mx.k {
                    for ig in 0..=mx.k {
                        let xfac = mx.psi(cx, iw, x) * mx.psi(cx, ig, x);
                        for jw in 0..=mv.k {
                            for jg in 0..=mv.k {
                                let w_minus = mv.trace_right(jw);
                                let w_plus = mv.trace_left(jw);
                                let g_minus = mv.trace_right(jg);
                                let g_plus = mv.trace_left(jg);
                                let favg = 0.5 * (v_f - u);
                                let fjmp = -0.5 * v_f.abs();
                                let combos = [
                                    (lc, w_minus, lc, g_minus, favg + fjmp),
                                    (lc, w_minus, rc, -g_plus, favg + fjmp),
                                    (rc, w_plus, lc, g_minus, favg - fjmp),
                                    (rc, w_plus, rc, -g_plus, favg - fjmp),
                                ];
                                for (wc, wtr, gc, gtr, f) in combos {
                                    adv[[dof(mx, mv, cx, ig, gc, jg), dof(mx, mv, cx, iw, wc, jw)]] +=
                                        wx * xfac * f * wtr * gtr;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    // sigma matrix: (sigma, tau) = (theta dv w, tau) - <theta [w], {tau}>
    let mut sig = Array2::<f64>::zeros((n, n));
    for cx in 0..mx.cells {
        for cv in 0..mv.cells {
            for (ax, awx) in qx.iter().zip(&qw) {
                let x = mx.lo(cx) + 0.5 * mx.h * (ax + 1.0);
                let wx = 0.5 * mx.h * awx;
                let theta = eval_field(mx, theta_leg, cx, x);
                for (av, awv) in qx.iter().zip(&qw) {
                    let v = mv.lo(cv) + 0.5 * mv.h * (av + 1.0);
                    let wv = 0.5 * mv.h * awv;
                    for iw in 0..=mx.k {
                        for jw in 0..=mv.k {
                            let wder = mx.psi(cx, iw, x) * mv.dpsi(cv, jw, v);
                            for it in 0..=mx.k {
                                for jt in 0..=mv.k {
                                    let tval = mx.psi(cx, it, x) * mv.psi(cv, jt, v);
                                    sig[[dof(mx, mv, cx, it, cv, jt), dof(mx, mv, cx, iw, cv, jw)]] +=
                                        wx * wv * theta * wder * tval;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    for vf in 1..mv.cells {
        let lc = vf - 1;
        let rc = vf;
        for cx in 0..mx.cells {
            for (ax, awx) in qx.iter().zip(&qw) {
                let x = mx.lo(cx) + 0.5 * mx.h * (ax + 1.0);
                let wx = 0.5 * mx.h * awx;
                let theta = eval_field(mx, theta_leg, cx, x);
                for iw in 0..=mx.k {
                    for it in 0..=mx.k {
                        let xfac = mx.psi(cx, iw, x) * mx.psi(cx, it, x);
                        for jw in 0..=mv.k {
                            for jt in 0..=mv.k {
                                let w_pairs = [
                                    (lc, mv.trace_right(jw)),
                                    (rc, -mv.trace_left(jw)),
                                ];
                                let t_pairs = [
                                    (lc, 0.5 * mv.trace_right(jt)),
                                    (rc, 0.5 * mv.trace_left(jt)),
                                ];
                                for &(wc, wtr) in &w_pairs {
                                    for &(tc, ttr) in &t_pairs {
                                        sig[[dof(mx, mv, cx, it, tc, jt), dof(mx, mv, cx, iw, wc, jw)]] -=
                                            wx * xfac * theta * wtr * ttr;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    // zero-flux closure of the gradient at the velocity-domain ends:
    // -(theta w n) tau one-sided
    for cx in 0..mx.cells {
        for (ax, awx) in qx.iter().zip(&qw) {
            let x = mx.lo(cx) + 0.5 * mx.h * (ax + 1.0);
            let wx = 0.5 * mx.h * awx;
            let theta = eval_field(mx, theta_leg, cx, x);
            for iw in 0..=mx.k {
                for it in 0..=mx.k {
                    let xfac = mx.psi(cx, iw, x) * mx.psi(cx, it, x);
                    let last = mv.cells - 1;
                    for jw in 0..=mv.k {
                        for jt in 0..=mv.k {
                            sig[[dof(mx, mv, cx, it, last, jt), dof(mx, mv, cx, iw, last, jw)]] -=
                                wx * xfac * theta * mv.trace_right(jw) * mv.trace_right(jt);
                            sig[[dof(mx, mv, cx, it, 0, jt), dof(mx, mv, cx, iw, 0, jw)]] +=
                                wx * xfac * theta * mv.trace_left(jw) * mv.trace_left(jt);
                        }
                    }
                }
            }
        }
    }
    // divergence: -(sigma, dv g) + <{sigma}, [g]>
    let mut div = Array2::<f64>::zeros((n, n));
    for cx in 0..mx.cells {
        for cv in 0..mv.cells {
            for (ax, awx) in qx.iter().zip(&qw) {
                let x = mx.lo(cx) + 0.5 * mx.h * (ax + 1.0);
                let wx = 0.5 * mx.h * awx;
                for (av, awv) in qx.iter().zip(&qw) {
                    let v = mv.lo(cv) + 0.5 * mv.h * (av + 1.0);
                    let wv = 0.5 * mv.h * awv;
                    for iw in 0..=mx.k {
                        for jw in 0..=mv.k {
                            let sval = mx.psi(cx, iw, x) * mv.psi(cv, jw, v);
                            for ig in 0..=mx.k {
                                for jg in 0..=mv.k {
                                    let gval = mx.psi(cx, ig, x) * mv.dpsi(cv, jg, v);
                                    div[[dof(mx, mv, cx, ig, cv, jg), dof(mx, mv, cx, iw, cv, jw)]] -=
                                        wx * wv * sval * gval;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    for vf in 1..mv.cells {
        let lc = vf - 1;
        let rc = vf;
        for cx in 0..mx.cells {
            for (ax, awx) in qx.iter().zip(&qw) {
                let x = mx.lo(cx) + 0.5 * mx.h * (ax + 1.0);
                let wx = 0.5 * mx.h * awx;
                for iw in 0..=mx.k {
                    for ig in 0..=mx.k {
                        let xfac = mx.psi(cx, iw, x) * mx.psi(cx, ig, x);
                        for jw in 0..=mv.k {
                            for jg in 0..=mv.k {
                                let s_pairs = [
                                    (lc, 0.5 * mv.trace_right(jw)),
                                    (rc, 0.5 * mv.trace_left(jw)),
                                ];
                                let g_pairs = [
                                    (lc, mv.trace_right(jg)),
                                    (rc, -mv.trace_left(jg)),
                                ];
                                for &(sc, str_) in &s_pairs {
                                    for &(gc, gtr) in &g_pairs {
                                        div[[
                                            dof(mx, mv, cx, ig, gc, jg),
                                            dof(mx, mv, cx, iw, sc, jw),
                                        ]] += wx * xfac * str_ * gtr;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    &adv + &div.dot(&sig)
}

/// Convert a state between the grid's wavelet layout and the
/// tensor-Legendre layout on a full grid.
struct BasisBridge {
    k1: usize,
    dims: Vec<usize>,
    strides: Vec<usize>,
    forwards: Vec<Array2<f64>>,
    element_offsets: Vec<Vec<usize>>,
}

impl BasisBridge {
    fn new(ctx: &PhysicsContext, grid: &AdaptiveGrid) -> Self {
        let d = grid.d();
        let k1 = grid.k() + 1;
        let shape = grid.full_tensor_shape().expect("full grid");
        let dims: Vec<usize> = shape.iter().map(|&n| n * k1).collect();
        let mut strides = vec![1usize; d];
        for m in (0..d - 1).rev() {
            strides[m] = strides[m + 1] * dims[m + 1];
        }
        let forwards: Vec<Array2<f64>> = (0..d)
            .map(|m| {
                sgdg::basis1d::build_transform(grid.k(), ctx.config.caps[m])
                    .unwrap()
                    .forward
                    .slice(ndarray::s![..dims[m], ..dims[m]])
                    .to_owned()
            })
            .collect();
        let element_offsets = grid
            .keys()
            .iter()
            .map(|key| {
                let mut per_dim = Vec::with_capacity(d);
                for m in 0..d {
                    per_dim.push(key.element_index_1d(m) * k1 * strides[m]);
                }
                per_dim
            })
            .collect();
        Self { k1, dims, strides, forwards, element_offsets }
    }

    fn total(&self) -> usize {
        self.dims.iter().product()
    }

    fn sweep(&self, data: &[f64], m: usize, transpose: bool) -> Vec<f64> {
        let n = self.dims[m];
        let stride = self.strides[m];
        let total = self.total();
        let mut out = vec![0.0; total];
        let a = &self.forwards[m];
        let span = n * stride;
        let mut base = 0;
        while base < total {
            for lo in 0..stride {
                for r in 0..n {
                    let mut acc = 0.0;
                    for c in 0..n {
                        let aval = if transpose { a[[c, r]] } else { a[[r, c]] };
                        acc += aval * data[base + lo + c * stride];
                    }
                    out[base + lo + r * stride] = acc;
                }
            }
            base += span;
        }
        out
    }

    /// tensor-Legendre -> grid wavelet state
    fn to_state(&self, grid: &AdaptiveGrid, leg: &[f64]) -> Array1<f64> {
        let d = grid.d();
        let mut cur = leg.to_vec();
        for m in 0..d {
            cur = self.sweep(&cur, m, false);
        }
        // gather
        let bs = grid.block_size();
        let mut state = Array1::zeros(grid.num_coefficients());
        for (e, offs) in self.element_offsets.iter().enumerate() {
            for flat in 0..bs {
                let mut rem = flat;
                let mut pos = 0usize;
                for m in (0..d).rev() {
                    pos += (rem % self.k1) * self.strides[m];
                    rem /= self.k1;
                }
                let tpos: usize = pos + offs.iter().sum::<usize>();
                state[e * bs + flat] = cur[tpos];
            }
        }
        state
    }

    /// grid wavelet state -> tensor-Legendre
    fn to_legendre(&self, grid: &AdaptiveGrid, state: &Array1<f64>) -> Vec<f64> {
        let d = grid.d();
        let bs = grid.block_size();
        let mut wav = vec![0.0; self.total()];
        for (e, offs) in self.element_offsets.iter().enumerate() {
            for flat in 0..bs {
                let mut rem = flat;
                let mut pos = 0usize;
                for m in (0..d).rev() {
                    pos += (rem % self.k1) * self.strides[m];
                    rem /= self.k1;
                }
                let tpos: usize = pos + offs.iter().sum::<usize>();
                wav[tpos] = state[e * bs + flat];
            }
        }
        let mut cur = wav;
        for m in 0..d {
            cur = self.sweep(&cur, m, true);
        }
        cur
    }
}

fn project_x_field(mesh: &Mesh1, f: impl Fn(f64) -> f64) -> Array1<f64> {
    let (qx, qw) = gauss_legendre(mesh.k + 4);
    let mut out = Array1::zeros(mesh.cells * (mesh.k + 1));
    for c in 0..mesh.cells {
        let lo = mesh.lo(c);
        for (x, w) in qx.iter().zip(&qw) {
            let xx = lo + 0.5 * mesh.h * (x + 1.0);
            let ww = 0.5 * mesh.h * w;
            for i in 0..=mesh.k {
                out[c * (mesh.k + 1) + i] += ww * f(xx) * mesh.psi(c, i, xx);
            }
        }
    }
    out
}

fn slab_1x1v_ctx(k: usize, lx: usize, lv: usize) -> (PhysicsContext, AdaptiveGrid) {
    let cfg = PhaseSpaceConfig {
        geometry: Geometry::Slab1x1v,
        x_domain: (-1.0, 1.0),
        v_domain: (-6.0, 6.0),
        nu: 1.0,
        k,
        caps: vec![lx, lv],
    };
    let ctx = PhysicsContext::new(cfg).unwrap();
    let grid = full_index_set(&[lx, lv], k);
    (ctx, grid)
}

#[test]
fn vlasov_operator_matches_dense_dg_oracle() {
    let (k, lx, lv) = (2usize, 2usize, 2usize);
    let (ctx, grid) = slab_1x1v_ctx(k, lx, lv);
    let mx = Mesh1::new(ctx.config.x_domain, lx, k);
    let mv = Mesh1::new(ctx.config.v_domain, lv, k);
    let e_cells = vec![0.3, -0.8, 1.4, 0.05];
    let oracle = assemble_vp_oracle(&mx, &mv, &e_cells);
    // production operator with the same frozen field
    let efield = sgdg::vplb::ElectricField {
        phi_nodes: Array1::zeros(mx.cells),
        e_cells: Array1::from_vec(e_cells),
        cell_width: mx.h,
    };
    let op = ctx.assemble_vlasov(&efield).unwrap();
    let bridge = BasisBridge::new(&ctx, &grid);
    let app = KronApplicator::new(&grid);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    for _ in 0..3 {
        let leg: Vec<f64> = (0..bridge.total()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let state = bridge.to_state(&grid, &leg);
        let y = app.apply(&op, &state).unwrap();
        let y_leg = bridge.to_legendre(&grid, &y);
        let want = oracle.dot(&Array1::from_vec(leg));
        let scale = want.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for (got, w) in y_leg.iter().zip(want.iter()) {
            assert!(
                (got - w).abs() <= 1e-11 * scale,
                "vlasov mismatch: {got} vs {w} (scale {scale})"
            );
        }
    }
}

#[test]
fn collision_operator_matches_dense_dg_oracle() {
    let (k, lx, lv) = (2usize, 2usize, 3usize);
    let (ctx, grid) = slab_1x1v_ctx(k, lx, lv);
    let mx = Mesh1::new(ctx.config.x_domain, lx, k);
    let mv = Mesh1::new(ctx.config.v_domain, lv, k);
    let u_leg = project_x_field(&mx, |x| 0.3 + 0.2 * (std::f64::consts::PI * x).sin());
    let theta_leg = project_x_field(&mx, |x| 1.0 + 0.25 * (std::f64::consts::PI * x).cos());
    let oracle = assemble_lb_oracle(&mx, &mv, &u_leg, &theta_leg);
    let n_leg = project_x_field(&mx, |_| 1.0);
    let fluid = sgdg::vplb::FluidFields {
        rho_leg: [n_leg.clone(), Array1::zeros(n_leg.len()), Array1::zeros(n_leg.len())],
        n_leg,
        u_leg,
        theta_leg,
    };
    let op = ctx.assemble_lb(&FluidView::Fields(&fluid)).unwrap();
    let bridge = BasisBridge::new(&ctx, &grid);
    let app = KronApplicator::new(&grid);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..3 {
        let leg: Vec<f64> = (0..bridge.total()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let state = bridge.to_state(&grid, &leg);
        let y = app.apply(&op, &state).unwrap();
        let y_leg = bridge.to_legendre(&grid, &y);
        let want = oracle.dot(&Array1::from_vec(leg));
        let scale = want.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for (got, w) in y_leg.iter().zip(want.iter()) {
            assert!(
                (got - w).abs() <= 1e-11 * scale,
                "collision mismatch: {got} vs {w} (scale {scale})"
            );
        }
    }
}

/// Zero the traces of a tensor-Legendre state on the velocity-domain
/// boundary by adjusting the highest coefficient of boundary cells.
fn zero_v_boundary_1x1v(mx: &Mesh1, mv: &Mesh1, leg: &mut [f64]) {
    let nv = mv.cells * (mv.k + 1);
    for cx in 0..mx.cells {
        for i in 0..=mx.k {
            // left boundary: cell 0, trace at the left end
            let mut t = 0.0;
            for j in 0..=mv.k {
                t += leg[dof(mx, mv, cx, i, 0, j)] * mv.trace_left(j);
            }
            let jfix = mv.k;
            leg[dof(mx, mv, cx, i, 0, jfix)] -= t / mv.trace_left(jfix);
            // right boundary: last cell, trace at the right end
            let mut t = 0.0;
            for j in 0..=mv.k {
                t += leg[dof(mx, mv, cx, i, mv.cells - 1, j)] * mv.trace_right(j);
            }
            leg[dof(mx, mv, cx, i, mv.cells - 1, jfix)] -= t / mv.trace_right(jfix);
        }
    }
    let _ = nv;
}

#[test]
fn collision_operator_annihilates_moment_functionals() {
    // random zero-boundary states; moments from the state itself
    let (k, lx, lv) = (2usize, 2usize, 3usize);
    let (ctx, grid) = slab_1x1v_ctx(k, lx, lv);
    let mx = Mesh1::new(ctx.config.x_domain, lx, k);
    let mv = Mesh1::new(ctx.config.v_domain, lv, k);
    let bridge = BasisBridge::new(&ctx, &grid);
    let app = KronApplicator::new(&grid);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for trial in 0..3 {
        // positive-density base plus perturbation keeps moments sane
        let base = |x: f64, v: f64| {
            let n = 1.0 + 0.2 * (std::f64::consts::PI * x).sin();
            n * (-(v - 0.4) * (v - 0.4) / 2.0).exp()
        };
        let mut leg = vec![0.0; bridge.total()];
        for cx in 0..mx.cells {
            for i in 0..=mx.k {
                for cv in 0..mv.cells {
                    for j in 0..=mv.k {
                        // quadrature projection of base plus noise
                        let (qx, qw) = gauss_legendre(k + 3);
                        let mut acc = 0.0;
                        for (ax, awx) in qx.iter().zip(&qw) {
                            let x = mx.lo(cx) + 0.5 * mx.h * (ax + 1.0);
                            for (av, awv) in qx.iter().zip(&qw) {
                                let v = mv.lo(cv) + 0.5 * mv.h * (av + 1.0);
                                acc += 0.25
                                    * mx.h
                                    * mv.h
                                    * awx
                                    * awv
                                    * base(x, v)
                                    * mx.psi(cx, i, x)
                                    * mv.psi(cv, j, v);
                            }
                        }
                        leg[dof(&mx, &mv, cx, i, cv, j)] =
                            acc + 0.002 * rng.gen_range(-1.0..1.0);
                    }
                }
            }
        }
        zero_v_boundary_1x1v(&mx, &mv, &mut leg);
        let state = bridge.to_state(&grid, &leg);
        let fluid = ctx.compute_moments(&state, &grid).unwrap();
        let op = ctx.assemble_lb(&FluidView::Fields(&fluid)).unwrap();
        let y = app.apply(&op, &state).unwrap();
        let number = ctx.contract_all(&y, &grid, &[0, 0]).unwrap();
        let momentum = ctx.contract_all(&y, &grid, &[0, 1]).unwrap();
        let energy = 0.5 * ctx.contract_all(&y, &grid, &[0, 2]).unwrap();
        let scale = y.iter().map(|v| v.abs()).fold(0.0f64, f64::max).max(1.0);
        assert!(number.abs() <= 1e-11 * scale, "trial {trial}: number {number:.3e}");
        assert!(momentum.abs() <= 1e-11 * scale, "trial {trial}: momentum {momentum:.3e}");
        assert!(energy.abs() <= 1e-11 * scale, "trial {trial}: energy {energy:.3e}");
    }
}

#[test]
fn vlasov_conserves_mass_and_kills_uniform_states() {
    let (k, lx, lv) = (2usize, 2usize, 2usize);
    let (ctx, grid) = slab_1x1v_ctx(k, lx, lv);
    let mx = Mesh1::new(ctx.config.x_domain, lx, k);
    let app = KronApplicator::new(&grid);
    // mass conservation for random states, any E
    let efield = sgdg::vplb::ElectricField {
        phi_nodes: Array1::zeros(mx.cells),
        e_cells: Array1::from_vec(vec![0.7, -0.2, 0.9, -1.3]),
        cell_width: mx.h,
    };
    let op = ctx.assemble_vlasov(&efield).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..4 {
        let state = Array1::from_iter(
            (0..grid.num_coefficients()).map(|_| rng.gen_range(-1.0..1.0)),
        );
        let y = app.apply(&op, &state).unwrap();
        let mass = ctx.contract_all(&y, &grid, &[0, 0]).unwrap();
        let scale = y.iter().map(|v| v.abs()).fold(0.0f64, f64::max).max(1.0);
        assert!(mass.abs() <= 1e-12 * scale, "mass functional {mass:.3e}");
    }
    // zero field and x-independent state: streaming annihilates it
    let zero_field = sgdg::vplb::ElectricField::zero(mx.cells, mx.h);
    let op0 = ctx.assemble_vlasov(&zero_field).unwrap();
    // x-uniform state: only x-root elements carry data, constant mode
    let mut state = Array1::zeros(grid.num_coefficients());
    let bs = grid.block_size();
    let k1 = k + 1;
    for (e, key) in grid.keys().iter().enumerate() {
        if key.level(0) == 0 {
            for jv in 0..k1 {
                // x-root constant component is i_x = 0
                state[e * bs + jv] = rng.gen_range(-1.0..1.0);
            }
        }
    }
    let y = app.apply(&op0, &state).unwrap();
    let max = y.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
    assert!(max <= 1e-12, "streaming of uniform state: {max:.3e}");
}

//! Log-Levy approximation kernels for the forward rates.
//!
//! Each log-rate is approximated at a fixed horizon `t = T_h` as
//!
//! ```text
//! Ghat_i(t) = det_i(t) + int_0^t Theta_i(t,s) dW(s)
//!           + sum_jumps I_i(t, s_l, x_l) - int int_{|x|>eps} I_i(t,s,x) nu(dx) ds
//! ```
//!
//! where the deterministic level `det_i`, the Gaussian kernel `Theta_i` and
//! the jump transform `I_i` are assembled from one Picard step of the
//! quotient processes `Z_j = delta_j L_j / (1 + delta_j L_j)` and (at second
//! order) the pair products `Y_kl = Z_k Z_l`, integrated by parts against
//! the running cumulant integrals `V_ij` and `Vbar_ikl`:
//!
//! * `A_j(s) = f'(G_j(0)) b_j^(0)(s) + 1/2 f''(G_j(0)) lambda_j^2 alpha
//!    + int (f(G_j(0)+lambda_j x) - f(G_j(0)) - f'(G_j(0)) lambda_j x) nu(dx)`
//! * `B_j(s) = f'(G_j(0)) sqrt(alpha) lambda_j`
//! * `C_j(s,x) = f(G_j(0) + lambda_j(s) x) - f(G_j(0))`
//!
//! with `f(x) = delta e^x / (1 + delta e^x)` and `b_j^(0)` the frozen
//! second-order drift; the pair coefficients follow the same pattern with
//! `g(x_k, x_l) = f_k(x_k) f_l(x_l)`.
//!
//! The first-order kernels drop every pair term. The frozen variant keeps
//! only the time-0 constants (`V * Z_j(0)`, `Vbar * Y_kl(0)`) and reduces
//! the noise kernels to `sqrt(alpha) lambda_i` and `lambda_i x`; it is the
//! classical frozen-drift approximation expressed in kernel form.
//!
//! All jump-size integrals run over the truncated measure `{|x| > eps}`,
//! the same measure the path engine samples, so compensators match the
//! simulated jumps exactly.

use crate::drift::DriftEngine;
use crate::error::{Error, Result};
use crate::kernels::CumulantKernels;
use crate::market::MarketSetup;
use crate::models::LevyModel;
use nalgebra::DMatrix;

/// Triangle index over `(i, h)` with `1 <= h <= i <= N`.
#[derive(Debug, Clone)]
pub struct Triangle {
    n: usize,
    offsets: Vec<usize>,
}

impl Triangle {
    pub fn new(n: usize) -> Self {
        let mut offsets = Vec::with_capacity(n + 1);
        let mut acc = 0;
        offsets.push(0);
        for i in 1..=n {
            acc += i;
            offsets.push(acc);
        }
        Self { n, offsets }
    }

    /// Flat slot of `(rate i, horizon h)`, `h <= i`.
    #[inline]
    pub fn slot(&self, i: usize, h: usize) -> usize {
        debug_assert!(1 <= h && h <= i && i <= self.n);
        self.offsets[i - 1] + (h - 1)
    }

    pub fn len(&self) -> usize {
        self.offsets[self.n]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_rates(&self) -> usize {
        self.n
    }
}

/// Gaussian factor mapping i.i.d. standard normals to the joint vector of
/// Wiener integrals of all `(i, h)` kernels.
pub(crate) struct GaussFactor {
    /// `len x dim` factor `F` with covariance `F F^T`.
    pub factor: DMatrix<f64>,
    pub dim: usize,
}

/// Kernel set for simulating every rate at every tenor horizon `T_h <= T_i`.
pub struct LogLevyKernels<'k> {
    k: &'k CumulantKernels,
    pub order: usize,
    pub frozen: bool,
    tri: Triangle,
    /// Deterministic log-level per `(i, h)`: initial log-rate, drift kernel
    /// integral and jump compensator combined.
    det: Vec<f64>,
    /// `Z_j(0)` and `delta_j L_j(0)` per rate.
    z0: Vec<f64>,
    w0: Vec<f64>,
    gauss: Option<GaussFactor>,
}

/// Per-path accumulated jump statistics, grouped by tenor interval.
///
/// `I_i(t, s, x)` is piecewise linear in `s` inside each interval, so the
/// sum over jumps splits into interval sums of `C_j(x)` and `(s - T_a)
/// C_j(x)` (and the pair analogues); that keeps the per-jump cost at
/// `O(N^2)` independent of the number of rate/horizon combinations.
pub struct JumpStats {
    pub sx: Vec<f64>,
    sc: Vec<f64>,
    scs: Vec<f64>,
    sp: Vec<f64>,
    sps: Vec<f64>,
    n_rates: usize,
    n_intervals: usize,
}

impl<'k> LogLevyKernels<'k> {
    /// Assemble the kernels. `order` is 1 or 2; `frozen = true` builds the
    /// frozen-drift kernels at the same order.
    pub fn build(
        model: &LevyModel,
        setup: &MarketSetup,
        k: &'k CumulantKernels,
        order: usize,
        frozen: bool,
    ) -> Result<Self> {
        if !(order == 1 || order == 2) {
            return Err(Error::Config(format!("log-Levy order must be 1 or 2, got {order}")));
        }
        let n = k.n_rates();
        let n_int = k.n_intervals();
        let eps = k.eps();
        if eps <= 0.0 {
            return Err(Error::Config("log-Levy kernels need a positive jump truncation".into()));
        }
        let tri = Triangle::new(n);

        let l0 = setup.initial_libors();
        let g0: Vec<f64> = l0.iter().map(|l| l.ln()).collect();
        let w0: Vec<f64> = (1..=n).map(|j| k.delta(j) * l0[j - 1]).collect();
        let z0: Vec<f64> = w0.iter().map(|w| w / (1.0 + w)).collect();
        let fp: Vec<f64> = w0.iter().map(|w| w / ((1.0 + w) * (1.0 + w))).collect();
        let fpp: Vec<f64> = w0
            .iter()
            .map(|w| w * (1.0 - w) / ((1.0 + w) * (1.0 + w) * (1.0 + w)))
            .collect();

        let drift = DriftEngine::new(k, setup);

        // Per-rate Picard coefficients, per interval. The x-integrals reuse
        // the previous interval's value whenever the loading is unchanged
        // (the common time-constant case).
        let mut a_coef = vec![vec![0.0; n_int]; n];
        let mut b_coef = vec![vec![0.0; n_int]; n];
        let mut c_mean = vec![vec![0.0; n_int]; n];
        for j in 1..=n {
            let mut prev: Option<(f64, f64, f64)> = None;
            for a in 0..n_int {
                let lam = k.lambda(j, a);
                let alpha = k.alpha(a);
                if lam == 0.0 {
                    continue;
                }
                let (quad_a, quad_c) = match prev {
                    Some((pl, qa, qc)) if pl == lam => (qa, qc),
                    _ => {
                        let w = w0[j - 1];
                        let z = z0[j - 1];
                        let f = fp[j - 1];
                        let c_j = |x: f64| {
                            let we = w * (lam * x).exp();
                            we / (1.0 + we) - z
                        };
                        let qa = model.tail_integral(
                            |x| c_j(x) - f * lam * x,
                            eps,
                            0.0,
                            0.0,
                            crate::quad::DEFAULT_TOL,
                        );
                        let qc = model.tail_integral(c_j, eps, 0.0, 0.0, crate::quad::DEFAULT_TOL);
                        prev = Some((lam, qa, qc));
                        (qa, qc)
                    }
                };
                a_coef[j - 1][a] = fp[j - 1] * drift.frozen_on(j, a)
                    + 0.5 * fpp[j - 1] * lam * lam * alpha
                    + quad_a;
                b_coef[j - 1][a] = fp[j - 1] * alpha.sqrt() * lam;
                c_mean[j - 1][a] = quad_c;
            }
        }

        // Pair coefficients (second order only).
        let n_pairs = n * (n - 1) / 2;
        let mut ap_coef = vec![vec![0.0; n_int]; if order == 2 { n_pairs } else { 0 }];
        let mut bp_coef = vec![vec![0.0; n_int]; if order == 2 { n_pairs } else { 0 }];
        let mut p_mean = vec![vec![0.0; n_int]; if order == 2 { n_pairs } else { 0 }];
        if order == 2 {
            for kk in 1..=n {
                for l in kk + 1..=n {
                    let p = k.pair_index(kk, l);
                    let mut prev: Option<(f64, f64, f64, f64)> = None;
                    for a in 0..n_int {
                        let (lk, ll) = (k.lambda(kk, a), k.lambda(l, a));
                        if lk == 0.0 && ll == 0.0 {
                            continue;
                        }
                        let alpha = k.alpha(a);
                        let (zk, zl) = (z0[kk - 1], z0[l - 1]);
                        let g_k = fp[kk - 1] * zl;
                        let g_l = zk * fp[l - 1];
                        let g_kk = fpp[kk - 1] * zl;
                        let g_ll = zk * fpp[l - 1];
                        let g_kl = fp[kk - 1] * fp[l - 1];
                        let (quad_a, quad_c) = match prev {
                            Some((plk, pll, qa, qc)) if plk == lk && pll == ll => (qa, qc),
                            _ => {
                                let (wk, wl) = (w0[kk - 1], w0[l - 1]);
                                let c_pair = |x: f64| {
                                    let ck = {
                                        let we = wk * (lk * x).exp();
                                        we / (1.0 + we) - zk
                                    };
                                    let cl = {
                                        let we = wl * (ll * x).exp();
                                        we / (1.0 + we) - zl
                                    };
                                    ck * cl + ck * zl + cl * zk
                                };
                                let lin = g_k * lk + g_l * ll;
                                let qa = model.tail_integral(
                                    |x| c_pair(x) - lin * x,
                                    eps,
                                    0.0,
                                    0.0,
                                    crate::quad::DEFAULT_TOL,
                                );
                                let qc = model.tail_integral(
                                    c_pair,
                                    eps,
                                    0.0,
                                    0.0,
                                    crate::quad::DEFAULT_TOL,
                                );
                                prev = Some((lk, ll, qa, qc));
                                (qa, qc)
                            }
                        };
                        ap_coef[p][a] = g_k * drift.frozen_on(kk, a)
                            + g_l * drift.frozen_on(l, a)
                            + 0.5
                                * alpha
                                * (g_kk * lk * lk + 2.0 * g_kl * lk * ll + g_ll * ll * ll)
                            + quad_a;
                        bp_coef[p][a] = (g_k * lk + g_l * ll) * alpha.sqrt();
                        p_mean[p][a] = quad_c;
                    }
                }
            }
        }

        // Deterministic level per (i, h): initial log-rate, the integrated
        // drift kernel, and the jump compensator with its sign flipped.
        let c1 = k.tail_mean();
        let mut det = vec![0.0; tri.len()];
        for i in 1..=n {
            for h in 1..=i {
                // G_i(0) - sum_j V_ij(0,T_h) Z_j(0) - sum Vbar Y_kl(0)
                let mut v = g0[i - 1];
                for j in i + 1..=n {
                    v -= k.v_between(i, j, 0, h) * z0[j - 1];
                }
                if order == 2 {
                    for kk in i + 1..=n {
                        for l in kk + 1..=n {
                            v -= k.vbar_between(i, kk, l, 0, h) * z0[kk - 1] * z0[l - 1];
                        }
                    }
                }
                // - int_0^{T_h} theta_i
                v -= k.theta_cum(i, h);
                for a in 0..h {
                    let len = k.interval_len(a);
                    // - lambda_i c1 * dt  (jump compensator, linear part)
                    v -= k.lambda(i, a) * c1 * len;
                    if frozen {
                        continue;
                    }
                    for j in i + 1..=n {
                        // int_a V_ij(s, T_h) ds with V linear in s
                        let int_v = len * k.v_between(i, j, a + 1, h)
                            + k.eta(i, j, a) * len * len * 0.5;
                        // - int V A_j ds + int V (int C_j nu) ds
                        v -= int_v * a_coef[j - 1][a];
                        v += int_v * c_mean[j - 1][a];
                    }
                    if order == 2 {
                        for kk in i + 1..=n {
                            for l in kk + 1..=n {
                                let p = k.pair_index(kk, l);
                                let int_v = len * k.vbar_between(i, kk, l, a + 1, h)
                                    + k.zeta(i, kk, l, a) * len * len * 0.5;
                                v -= int_v * ap_coef[p][a];
                                v += int_v * p_mean[p][a];
                            }
                        }
                    }
                }
                det[tri.slot(i, h)] = v;
            }
        }

        let gauss = Self::build_gauss(k, &tri, order, frozen, &b_coef, &bp_coef);

        Ok(Self {
            k,
            order,
            frozen,
            tri,
            det,
            z0,
            w0,
            gauss,
        })
    }

    /// Piecewise-linear Gaussian kernels and their exact joint covariance
    /// across all `(i, h)` slots; `None` when there is no diffusion.
    fn build_gauss(
        k: &CumulantKernels,
        tri: &Triangle,
        order: usize,
        frozen: bool,
        b_coef: &[Vec<f64>],
        bp_coef: &[Vec<f64>],
    ) -> Option<GaussFactor> {
        let n = k.n_rates();
        let n_int = k.n_intervals();
        if (0..n_int).all(|a| k.alpha(a) == 0.0) {
            return None;
        }
        // Theta_i^{(h)}(s) = p[a] + q[a] (s - T_a) on interval a < h
        let len = tri.len();
        let mut pc = vec![vec![0.0; n_int]; len];
        let mut qc = vec![vec![0.0; n_int]; len];
        for i in 1..=n {
            for h in 1..=i {
                let slot = tri.slot(i, h);
                for a in 0..h {
                    let mut p = k.alpha(a).sqrt() * k.lambda(i, a);
                    let mut q = 0.0;
                    if !frozen {
                        for j in i + 1..=n {
                            let b = b_coef[j - 1][a];
                            p -= k.v_between(i, j, a, h) * b;
                            q += k.eta(i, j, a) * b;
                        }
                        if order == 2 {
                            for kk in i + 1..=n {
                                for l in kk + 1..=n {
                                    let b = bp_coef[k.pair_index(kk, l)][a];
                                    p -= k.vbar_between(i, kk, l, a, h) * b;
                                    q += k.zeta(i, kk, l, a) * b;
                                }
                            }
                        }
                    }
                    pc[slot][a] = p;
                    qc[slot][a] = q;
                }
            }
        }
        let horizon_of_slot: Vec<usize> = {
            let mut v = vec![0; len];
            for i in 1..=n {
                for h in 1..=i {
                    v[tri.slot(i, h)] = h;
                }
            }
            v
        };
        let mut cov = DMatrix::zeros(len, len);
        for r in 0..len {
            for c in r..len {
                let upto = horizon_of_slot[r].min(horizon_of_slot[c]);
                let mut acc = 0.0;
                for a in 0..upto {
                    let d = k.interval_len(a);
                    let (p1, q1) = (pc[r][a], qc[r][a]);
                    let (p2, q2) = (pc[c][a], qc[c][a]);
                    acc += p1 * p2 * d
                        + (p1 * q2 + p2 * q1) * d * d * 0.5
                        + q1 * q2 * d * d * d / 3.0;
                }
                cov[(r, c)] = acc;
                cov[(c, r)] = acc;
            }
        }
        let scale = cov.diagonal().amax();
        if scale == 0.0 {
            return None;
        }
        let eig = cov.symmetric_eigen();
        // rank-deficient covariance: clip tiny/negative eigenvalues
        let mut cols = Vec::new();
        for (idx, ev) in eig.eigenvalues.iter().enumerate() {
            if *ev > 1e-14 * scale {
                cols.push((idx, ev.sqrt()));
            }
        }
        let dim = cols.len();
        let mut factor = DMatrix::zeros(len, dim);
        for (out_c, (idx, sd)) in cols.iter().enumerate() {
            for r in 0..len {
                factor[(r, out_c)] = eig.eigenvectors[(r, *idx)] * sd;
            }
        }
        Some(GaussFactor { factor, dim })
    }

    pub fn triangle(&self) -> &Triangle {
        &self.tri
    }

    pub fn kernels(&self) -> &CumulantKernels {
        self.k
    }

    /// Deterministic part of `Ghat_i(T_h)` (drift kernels and compensators
    /// included).
    pub fn det_log(&self, i: usize, h: usize) -> f64 {
        self.det[self.tri.slot(i, h)]
    }

    /// Number of standard normals one path consumes (the Gaussian factor
    /// rank; zero in the pure-jump case).
    pub fn gauss_dim(&self) -> usize {
        self.gauss.as_ref().map_or(0, |g| g.dim)
    }

    /// Map a standard normal vector to the per-slot Wiener integrals.
    pub fn gauss_map(&self, normals: &[f64]) -> Vec<f64> {
        match &self.gauss {
            None => vec![0.0; self.tri.len()],
            Some(g) => {
                let x = nalgebra::DVector::from_column_slice(normals);
                (&g.factor * x).iter().copied().collect()
            }
        }
    }

    /// The jump transform `I_i(T_h, s, x)` evaluated directly; used by the
    /// oracle tests, the path engine goes through [`JumpStats`].
    pub fn jump_transform(&self, i: usize, h: usize, s: f64, x: f64) -> f64 {
        let k = self.k;
        let a = self.interval_of(s);
        let mut v = k.lambda(i, a) * x;
        if self.frozen {
            return v;
        }
        let ds = s - k.interval_start(a);
        let n = k.n_rates();
        for j in i + 1..=n {
            let vij = k.v_between(i, j, a, h) - ds * k.eta(i, j, a);
            v -= vij * self.c_of(j, a, x);
        }
        if self.order == 2 {
            for kk in i + 1..=n {
                for l in kk + 1..=n {
                    let vb = k.vbar_between(i, kk, l, a, h) - ds * k.zeta(i, kk, l, a);
                    let (ck, cl) = (self.c_of(kk, a, x), self.c_of(l, a, x));
                    v -= vb * (ck * cl + ck * self.z0[l - 1] + cl * self.z0[kk - 1]);
                }
            }
        }
        v
    }

    #[inline]
    fn c_of(&self, j: usize, a: usize, x: f64) -> f64 {
        let lam = self.k.lambda(j, a);
        if lam == 0.0 {
            return 0.0;
        }
        let we = self.w0[j - 1] * (lam * x).exp();
        we / (1.0 + we) - self.z0[j - 1]
    }

    fn interval_of(&self, s: f64) -> usize {
        let n_int = self.k.n_intervals();
        let mut a = 0;
        while a + 1 < n_int && self.k.interval_start(a + 1) <= s {
            a += 1;
        }
        a
    }

    pub fn new_stats(&self) -> JumpStats {
        let n = self.k.n_rates();
        let n_int = self.k.n_intervals();
        let pairs = if self.order == 2 && !self.frozen { n * (n - 1) / 2 } else { 0 };
        JumpStats {
            sx: vec![0.0; n_int],
            sc: vec![0.0; n * n_int],
            scs: vec![0.0; n * n_int],
            sp: vec![0.0; pairs * n_int],
            sps: vec![0.0; pairs * n_int],
            n_rates: n,
            n_intervals: n_int,
        }
    }

    /// Fold one jump `(s, x)` into the per-interval statistics.
    pub fn accumulate(&self, stats: &mut JumpStats, s: f64, x: f64, scratch: &mut Vec<f64>) {
        let k = self.k;
        let a = self.interval_of(s);
        let n = stats.n_rates;
        stats.sx[a] += x;
        if self.frozen {
            return;
        }
        let ds = s - k.interval_start(a);

        scratch.clear();
        scratch.resize(n, 0.0);
        let mut last: Option<(f64, f64)> = None;
        for j in 1..=n {
            let lam = k.lambda(j, a);
            if lam == 0.0 {
                continue;
            }
            let e = match last {
                Some((pl, pe)) if pl == lam => pe,
                _ => {
                    let e = (lam * x).exp();
                    last = Some((lam, e));
                    e
                }
            };
            let we = self.w0[j - 1] * e;
            let c = we / (1.0 + we) - self.z0[j - 1];
            scratch[j - 1] = c;
            let at = (j - 1) * stats.n_intervals + a;
            stats.sc[at] += c;
            stats.scs[at] += ds * c;
        }
        if self.order == 2 {
            for kk in 1..=n {
                let ck = scratch[kk - 1];
                let zk = self.z0[kk - 1];
                if k.lambda(kk, a) == 0.0 {
                    continue;
                }
                for l in kk + 1..=n {
                    if k.lambda(l, a) == 0.0 {
                        continue;
                    }
                    let cl = scratch[l - 1];
                    let c_pair = ck * cl + ck * self.z0[l - 1] + cl * zk;
                    let at = k.pair_index(kk, l) * stats.n_intervals + a;
                    stats.sp[at] += c_pair;
                    stats.sps[at] += ds * c_pair;
                }
            }
        }
    }

    /// Sum of `I_i(T_h, s_l, x_l)` over the accumulated jumps.
    pub fn jump_sum(&self, i: usize, h: usize, stats: &JumpStats) -> f64 {
        let k = self.k;
        let n = stats.n_rates;
        let n_int = stats.n_intervals;
        let mut v = 0.0;
        for a in 0..h {
            v += k.lambda(i, a) * stats.sx[a];
            if self.frozen {
                continue;
            }
            for j in i + 1..=n {
                let at = (j - 1) * n_int + a;
                v -= k.v_between(i, j, a, h) * stats.sc[at] - k.eta(i, j, a) * stats.scs[at];
            }
            if self.order == 2 {
                for kk in i + 1..=n {
                    for l in kk + 1..=n {
                        let at = k.pair_index(kk, l) * n_int + a;
                        v -= k.vbar_between(i, kk, l, a, h) * stats.sp[at]
                            - k.zeta(i, kk, l, a) * stats.sps[at];
                    }
                }
            }
        }
        v
    }

    /// `Ghat_i(T_h)` for one path.
    pub fn log_rate(&self, i: usize, h: usize, stats: &JumpStats, gauss: &[f64]) -> f64 {
        self.det[self.tri.slot(i, h)] + gauss[self.tri.slot(i, h)] + self.jump_sum(i, h, stats)
    }
}

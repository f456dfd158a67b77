//! Precomputed cumulant kernels on the tenor grid.
//!
//! Everything the drift and the log-Levy kernels need from the driving
//! process is a cumulant evaluated at sums of loadings, constant on each
//! tenor interval:
//!
//! * `theta_i = kappa(lambda_i)` (full cumulant, diffusion included),
//! * `eta_ij = kappa(lambda_i + lambda_j) - kappa(lambda_i) - kappa(lambda_j)`,
//! * `zeta_ikl` = the 7-term alternating sum of jump cumulants over the
//!   nonempty subsets of `{lambda_i, lambda_k, lambda_l}`,
//! * optional higher-order subset coefficients for drift truncation beyond
//!   the second order,
//!
//! plus the running time integrals `V_ij(s,t)` and `Vbar_ikl(s,t)` of the
//! pair and triple kernels.
//!
//! When a jump truncation level `eps > 0` is set, all jump cumulants are
//! evaluated for the truncated measure (`int_{|x|>eps}`): the simulated
//! process *is* the truncated one, and using its own cumulants keeps the
//! simulated system a martingale by construction. The correction
//! `int_{|x|<=eps}(e^{ux}-1-ux) nu(dx)` is applied as a short Taylor series
//! whose coefficients are computed once by quadrature.

use crate::error::{Error, Result};
use crate::market::MarketSetup;
use crate::models::{LevyModel, LevyVariant};

/// Cumulant tables for one `(model, market, eps)` triple.
pub struct CumulantKernels {
    n_rates: usize,
    /// Interval lengths `T_{a+1} - T_a`, `a = 0..=N`.
    interval_len: Vec<f64>,
    interval_start: Vec<f64>,
    delta: Vec<f64>,
    /// `lambda[i-1][a]`.
    lambda: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    eps: f64,
    /// Small-jump Taylor coefficients `int_{|x|<=eps} x^k nu / k!`, k=2..6.
    smalljump: [f64; 5],
    /// `int_{|x|>eps} x nu(dx)`; compensator drift of the retained jumps.
    tail_mean: f64,
    /// `nu({|x|>eps})`.
    tail_intensity: f64,

    // Closed-form pieces of the jump cumulant, duplicated out of LevyModel
    // so the exponential-cost drift loop avoids enum matching overhead.
    variant: LevyVariant,

    theta: Vec<Vec<f64>>,
    theta_cum: Vec<Vec<f64>>,
    eta: Vec<Vec<f64>>,
    eta_cum: Vec<Vec<f64>>,
    zeta: Vec<Vec<f64>>,
    zeta_cum: Vec<Vec<f64>>,
    /// Subset coefficient tables for truncation orders 3..=max_order:
    /// `higher[q-3]` holds, per rate, the size-q subsets of `{i+1..N}` and
    /// their alternating cumulant coefficients per interval.
    higher: Vec<SubsetTable>,
    pair_base: Vec<usize>,
    tri_base: Vec<usize>,
}

pub(crate) struct SubsetTable {
    pub q: usize,
    /// `members[i-1]`: subset member indices (rates), flattened q at a time.
    pub members: Vec<Vec<u16>>,
    /// `coeff[i-1][a][subset]`.
    pub coeff: Vec<Vec<Vec<f64>>>,
}

fn subsets_of_size(pool: &[u16], q: usize) -> Vec<Vec<u16>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..q).collect();
    if q == 0 || q > pool.len() {
        return out;
    }
    loop {
        out.push(idx.iter().map(|&k| pool[k]).collect());
        // next combination
        let mut j = q;
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            if idx[j] != j + pool.len() - q {
                break;
            }
            if j == 0 {
                return out;
            }
        }
        idx[j] += 1;
        for k in j + 1..q {
            idx[k] = idx[k - 1] + 1;
        }
    }
}

impl CumulantKernels {
    /// Build all tables. `max_order` controls how far beyond the second
    /// order the truncated drift can go (orders 1 and 2 need no extra
    /// tables). `eps = 0` keeps the exact closed-form cumulants.
    pub fn build(
        model: &LevyModel,
        setup: &MarketSetup,
        eps: f64,
        max_order: usize,
    ) -> Result<Self> {
        let n = setup.n_rates();
        let n_intervals = n + 1;
        let tenor = &setup.tenor;

        let lambda: Vec<Vec<f64>> = (1..=n)
            .map(|i| (0..n_intervals).map(|a| setup.vol.on_interval(i, a)).collect())
            .collect();
        let alpha: Vec<f64> = (0..n_intervals)
            .map(|a| model.alpha(tenor.date(a)))
            .collect();

        // Largest cumulant argument the drift can ever produce is the sum of
        // all positive (resp. negative) loadings on one interval; fail fast
        // if that leaves the CGMY domain.
        if let Some((lo, hi)) = model.moment_bound() {
            for a in 0..n_intervals {
                let pos: f64 = lambda.iter().map(|r| r[a].max(0.0)).sum();
                let neg: f64 = lambda.iter().map(|r| (-r[a]).max(0.0)).sum();
                if pos > hi || neg > -lo {
                    return Err(Error::Domain(format!(
                        "loading sums ({pos}, -{neg}) exceed the cumulant domain [{lo}, {hi}]"
                    )));
                }
            }
        }

        let smalljump = if eps > 0.0 { model.small_jump_taylor(eps) } else { [0.0; 5] };
        let (tail_mean, tail_intensity) = if eps > 0.0 {
            (model.tail_mean(eps), model.tail_intensity(eps)?)
        } else {
            (0.0, f64::INFINITY)
        };

        let mut k = Self {
            n_rates: n,
            interval_len: (0..n_intervals).map(|a| tenor.delta(a)).collect(),
            interval_start: (0..n_intervals).map(|a| tenor.date(a)).collect(),
            delta: (1..=n).map(|i| tenor.delta(i)).collect(),
            lambda,
            alpha,
            eps,
            smalljump,
            tail_mean,
            tail_intensity,
            variant: model.variant().clone(),
            theta: Vec::new(),
            theta_cum: Vec::new(),
            eta: Vec::new(),
            eta_cum: Vec::new(),
            zeta: Vec::new(),
            zeta_cum: Vec::new(),
            higher: Vec::new(),
            pair_base: Vec::new(),
            tri_base: Vec::new(),
        };

        k.pair_base = (0..=n).map(|i| pair_base(i, n)).collect();
        k.tri_base = (0..=n).map(|i| tri_base(i, n)).collect();

        // theta
        for i in 1..=n {
            let row: Vec<f64> = (0..n_intervals)
                .map(|a| k.full_cum(a, k.lambda[i - 1][a]))
                .collect();
            k.theta.push(row);
        }
        // eta over pairs i < j
        for i in 1..=n {
            for j in i + 1..=n {
                let row: Vec<f64> = (0..n_intervals)
                    .map(|a| {
                        let (li, lj) = (k.lambda[i - 1][a], k.lambda[j - 1][a]);
                        k.full_cum(a, li + lj) - k.full_cum(a, li) - k.full_cum(a, lj)
                    })
                    .collect();
                k.eta.push(row);
            }
        }
        // zeta over triples i < kk < l (jump cumulants only)
        for i in 1..=n {
            for kk in i + 1..=n {
                for l in kk + 1..=n {
                    let row: Vec<f64> = (0..n_intervals)
                        .map(|a| {
                            let (li, lk, ll) =
                                (k.lambda[i - 1][a], k.lambda[kk - 1][a], k.lambda[l - 1][a]);
                            let jc = |u: f64| k.jump_cum(u);
                            jc(li + lk + ll) - jc(li + lk) - jc(li + ll) - jc(lk + ll)
                                + jc(li)
                                + jc(lk)
                                + jc(ll)
                        })
                        .collect();
                    k.zeta.push(row);
                }
            }
        }

        let cum = |rows: &Vec<Vec<f64>>, lens: &Vec<f64>| -> Vec<Vec<f64>> {
            rows.iter()
                .map(|row| {
                    let mut c = Vec::with_capacity(row.len() + 1);
                    c.push(0.0);
                    let mut acc = 0.0;
                    for (a, v) in row.iter().enumerate() {
                        acc += v * lens[a];
                        c.push(acc);
                    }
                    c
                })
                .collect()
        };
        k.theta_cum = cum(&k.theta, &k.interval_len);
        k.eta_cum = cum(&k.eta, &k.interval_len);
        k.zeta_cum = cum(&k.zeta, &k.interval_len);

        for q in 3..=max_order.min(n.saturating_sub(1)) {
            k.higher.push(k.build_subset_table(q));
        }

        Ok(k)
    }

    fn build_subset_table(&self, q: usize) -> SubsetTable {
        let n = self.n_rates;
        let n_intervals = self.interval_len.len();
        let mut members = Vec::with_capacity(n);
        let mut coeff = Vec::with_capacity(n);
        for i in 1..=n {
            let pool: Vec<u16> = (i as u16 + 1..=n as u16).collect();
            let subsets = subsets_of_size(&pool, q);
            let mut flat = Vec::with_capacity(subsets.len() * q);
            let mut per_interval = vec![Vec::with_capacity(subsets.len()); n_intervals];
            for s in &subsets {
                flat.extend_from_slice(s);
                // alternating sum over nonempty R subset of {i} union S:
                // sign (-1)^{q+1+|R|}
                for (a, slot) in per_interval.iter_mut().enumerate() {
                    let mut elems = Vec::with_capacity(q + 1);
                    elems.push(self.lambda[i - 1][a]);
                    for &j in s {
                        elems.push(self.lambda[j as usize - 1][a]);
                    }
                    let mut c = 0.0;
                    for mask in 1u32..(1 << (q + 1)) {
                        let mut lam = 0.0;
                        for (bit, lam_e) in elems.iter().enumerate() {
                            if mask & (1 << bit) != 0 {
                                lam += lam_e;
                            }
                        }
                        let r = mask.count_ones() as usize;
                        let sign = if (q + 1 + r) % 2 == 0 { 1.0 } else { -1.0 };
                        c += sign * self.jump_cum(lam);
                    }
                    slot.push(c);
                }
            }
            members.push(flat);
            coeff.push(per_interval);
        }
        SubsetTable { q, members, coeff }
    }

    /// Jump cumulant of the (possibly eps-truncated) measure.
    #[inline]
    pub fn jump_cum(&self, u: f64) -> f64 {
        let closed = match self.variant {
            LevyVariant::Cgmy { c, g, m, y } => {
                // gamma(-Y) folded into the constant at build would save a
                // call; powf dominates, so keep it readable.
                let gm = statrs::function::gamma::gamma(-y);
                let pos = m.powf(y) * ((1.0 - u / m).powf(y) - 1.0 + u * y / m);
                let neg = g.powf(y) * ((1.0 + u / g).powf(y) - 1.0 - u * y / g);
                c * gm * (pos + neg)
            }
            LevyVariant::Merton { intensity, mean, stdev } => {
                let e = mean * u + 0.5 * stdev * stdev * u * u;
                intensity * (e.exp_m1() - mean * u)
            }
        };
        if self.eps == 0.0 {
            closed
        } else {
            let u2 = u * u;
            let correction = u2
                * (self.smalljump[0]
                    + u * (self.smalljump[1]
                        + u * (self.smalljump[2]
                            + u * (self.smalljump[3] + u * self.smalljump[4]))));
            closed - correction
        }
    }

    /// Full cumulant on interval `a`.
    #[inline]
    pub fn full_cum(&self, a: usize, u: f64) -> f64 {
        0.5 * self.alpha[a] * u * u + self.jump_cum(u)
    }

    pub fn n_rates(&self) -> usize {
        self.n_rates
    }

    pub fn n_intervals(&self) -> usize {
        self.interval_len.len()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn max_order(&self) -> usize {
        if self.higher.is_empty() {
            2
        } else {
            2 + self.higher.len()
        }
    }

    pub fn interval_len(&self, a: usize) -> f64 {
        self.interval_len[a]
    }

    pub fn interval_start(&self, a: usize) -> f64 {
        self.interval_start[a]
    }

    pub fn delta(&self, i: usize) -> f64 {
        self.delta[i - 1]
    }

    pub fn lambda(&self, i: usize, a: usize) -> f64 {
        self.lambda[i - 1][a]
    }

    pub fn alpha(&self, a: usize) -> f64 {
        self.alpha[a]
    }

    pub fn tail_mean(&self) -> f64 {
        self.tail_mean
    }

    pub fn tail_intensity(&self) -> f64 {
        self.tail_intensity
    }

    pub fn theta(&self, i: usize, a: usize) -> f64 {
        self.theta[i - 1][a]
    }

    /// `int_0^{T_h} theta_i`.
    pub fn theta_cum(&self, i: usize, h: usize) -> f64 {
        self.theta_cum[i - 1][h]
    }

    /// Flat index of the pair `(i, j)`, `i < j`, shared with the kernels'
    /// consumers for pair-keyed scratch arrays.
    #[inline]
    pub fn pair_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j <= self.n_rates);
        self.pair_base[i] + (j - i - 1)
    }

    #[inline]
    fn tri_idx(&self, i: usize, k: usize, l: usize) -> usize {
        debug_assert!(i < k && k < l && l <= self.n_rates);
        let n = self.n_rates;
        self.tri_base[i] + pair_base_rel(i, k, n) + (l - k - 1)
    }

    pub fn eta(&self, i: usize, j: usize, a: usize) -> f64 {
        self.eta[self.pair_index(i, j)][a]
    }

    /// `V_ij(T_a, T_b) = int_{T_a}^{T_b} eta_ij`.
    pub fn v_between(&self, i: usize, j: usize, a: usize, b: usize) -> f64 {
        let row = &self.eta_cum[self.pair_index(i, j)];
        row[b] - row[a]
    }

    pub fn zeta(&self, i: usize, k: usize, l: usize, a: usize) -> f64 {
        self.zeta[self.tri_idx(i, k, l)][a]
    }

    /// `Vbar_ikl(T_a, T_b) = int_{T_a}^{T_b} zeta_ikl`.
    pub fn vbar_between(&self, i: usize, k: usize, l: usize, a: usize, b: usize) -> f64 {
        let row = &self.zeta_cum[self.tri_idx(i, k, l)];
        row[b] - row[a]
    }

    pub(crate) fn higher_tables(&self) -> &[SubsetTable] {
        &self.higher
    }
}

fn pair_base(i: usize, n: usize) -> usize {
    // number of pairs (i', j') with i' < i
    if i <= 1 {
        0
    } else {
        (0..i - 1).map(|k| n - 1 - k).sum()
    }
}

fn pair_base_rel(i: usize, k: usize, n: usize) -> usize {
    // within leading index i: triples whose middle index is < k
    (i + 1..k).map(|m| n - m).sum()
}

fn tri_base(i: usize, n: usize) -> usize {
    if i <= 1 {
        0
    } else {
        (1..i).map(|ii| {
            let live = n - ii;
            live * live.saturating_sub(1) / 2
        }).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{DiscountCurve, TenorStructure, VolLoading};
    use crate::models::Alpha;

    fn setup(n: usize, lambda: f64) -> MarketSetup {
        let tenor = TenorStructure::uniform(n, 0.5).unwrap();
        let curve = DiscountCurve::flat(0.04, &tenor);
        let vol = VolLoading::flat(lambda, &tenor);
        MarketSetup::new(tenor, curve, vol).unwrap()
    }

    fn merton() -> LevyModel {
        LevyModel::merton(5.0, 0.0, 0.2f64.sqrt(), Alpha::Constant(0.0)).unwrap()
    }

    #[test]
    fn zero_loadings_zero_kernels() {
        let k = CumulantKernels::build(&merton(), &setup(5, 0.0), 0.0, 3).unwrap();
        for a in 0..k.n_intervals() {
            for i in 1..=5 {
                assert_eq!(k.theta(i, a), 0.0);
                for j in i + 1..=5 {
                    assert_eq!(k.eta(i, j, a), 0.0);
                    for l in j + 1..=5 {
                        assert_eq!(k.zeta(i, j, l, a), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn eta_flat_merton_value() {
        let k = CumulantKernels::build(&merton(), &setup(10, 0.2), 0.0, 2).unwrap();
        let m = merton();
        let expected = m.jump_cumulant(0.4, 0.0).unwrap() - 2.0 * m.jump_cumulant(0.2, 0.0).unwrap();
        assert!((expected - 0.04056).abs() < 5e-6);
        // both rates still alive on interval 0
        assert!((k.eta(1, 2, 0) - expected).abs() < 1e-15);
    }

    #[test]
    fn v_grows_linearly_for_constant_loadings() {
        let k = CumulantKernels::build(&merton(), &setup(10, 0.2), 0.0, 2).unwrap();
        // both rates of the pair (9, 10) are alive on intervals 0..=8
        let v1 = k.v_between(9, 10, 0, 1);
        assert!(v1 > 0.0);
        for h in 1..=9 {
            let v = k.v_between(9, 10, 0, h);
            assert!((v - h as f64 * v1).abs() < 1e-15, "h = {h}");
        }
        assert_eq!(k.v_between(1, 9, 3, 3), 0.0);
        // additivity over adjacent windows
        let whole = k.v_between(9, 10, 0, 6);
        let split = k.v_between(9, 10, 0, 2) + k.v_between(9, 10, 2, 6);
        assert!((whole - split).abs() < 1e-15);
    }

    #[test]
    fn eta_vanishes_after_earlier_fixing() {
        let k = CumulantKernels::build(&merton(), &setup(10, 0.2), 0.0, 2).unwrap();
        // on interval 4, rate 3 is fixed: eta_{3,7} must vanish there
        assert_eq!(k.eta(3, 7, 4), 0.0);
        assert!(k.eta(3, 7, 2) != 0.0);
    }

    #[test]
    fn zeta_symmetry_in_trailing_indices() {
        // zeta is symmetric in all three loading arguments; with flat
        // loadings every triple on a live interval takes the same value
        let k = CumulantKernels::build(&merton(), &setup(6, 0.3), 0.0, 2).unwrap();
        let z = k.zeta(1, 2, 3, 0);
        assert!((k.zeta(1, 2, 4, 0) - z).abs() < 1e-16);
        assert!((k.zeta(2, 3, 4, 0) - z).abs() < 1e-16);
        assert!(z.abs() > 0.0);
    }

    #[test]
    fn truncated_cumulant_close_to_closed_form() {
        let model = LevyModel::cgmy(48.4201, 13.0, 13.0, 0.25, Alpha::Constant(0.0)).unwrap();
        let k0 = CumulantKernels::build(&model, &setup(5, 0.2), 0.0, 2).unwrap();
        let ke = CumulantKernels::build(&model, &setup(5, 0.2), 1e-3, 2).unwrap();
        for u in [0.2f64, 1.0, 6.0, 12.0] {
            let full = k0.jump_cum(u);
            let trunc = ke.jump_cum(u);
            // the small-jump part carries ~3e-4 of the variance
            assert!(trunc < full);
            assert!(full - trunc < 0.5 * u * u * 3.2e-4);
            // and it matches direct quadrature of the truncated measure
            let direct = model.tail_integral(
                |x| (u * x).exp_m1() - u * x,
                1e-3,
                u.max(0.0),
                (-u).max(0.0),
                1e-12,
            );
            assert!((trunc - direct).abs() < 1e-9, "u={u}: {trunc} vs {direct}");
        }
    }

    #[test]
    fn domain_guard_rejects_oversized_loadings() {
        let model = LevyModel::cgmy(48.4201, 13.0, 13.0, 0.25, Alpha::Constant(0.0)).unwrap();
        // 40 rates of 0.6 sum to 24 > 13
        assert!(CumulantKernels::build(&model, &setup(40, 0.6), 0.0, 2).is_err());
    }

    #[test]
    fn subset_enumeration() {
        let s = subsets_of_size(&[2, 3, 4, 5], 2);
        assert_eq!(s.len(), 6);
        assert_eq!(s[0], vec![2, 3]);
        assert_eq!(s[5], vec![4, 5]);
        assert!(subsets_of_size(&[1], 2).is_empty());
    }
}

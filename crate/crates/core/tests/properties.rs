//! Property-style checks: Picard convergence rate, kernel-order linearity,
//! and randomized algebraic invariants.

use levy_libor::drift::DriftEngine;
use levy_libor::sim::path_streams;
use levy_libor::{
    Alpha, CumulantKernels, DiscountCurve, JumpSampler, LevyModel, LogLevyKernels, MarketSetup,
    TenorStructure, VolLoading,
};
use proptest::prelude::*;

fn setup(n: usize, delta: f64, lambda: f64) -> MarketSetup {
    let tenor = TenorStructure::uniform(n, delta).unwrap();
    let curve = DiscountCurve::flat(0.04, &tenor);
    let vol = VolLoading::flat(lambda, &tenor);
    MarketSetup::new(tenor, curve, vol).unwrap()
}

fn merton() -> LevyModel {
    LevyModel::merton(5.0, 0.0, 0.2f64.sqrt(), Alpha::Constant(0.0)).unwrap()
}

/// One Picard step of the quotient `Z_j` versus the true quotient from a
/// finely resolved Euler path, on common jumps: the L2 gap shrinks like
/// O(h) as the horizon h goes to zero.
#[test]
fn picard_step_error_is_order_h() {
    let model = merton();
    let s = setup(2, 0.5, 0.4);
    let eps = 1e-3;
    let k = CumulantKernels::build(&model, &s, eps, 2).unwrap();
    let engine = DriftEngine::new(&k, &s);
    let sampler = JumpSampler::new(&model, eps).unwrap();
    let j = 1usize;

    let l0 = s.initial_libor(j).unwrap();
    let w0 = s.tenor.delta(j) * l0;
    let z0 = w0 / (1.0 + w0);
    let fp = w0 / ((1.0 + w0) * (1.0 + w0));
    let g0: Vec<f64> = s.initial_libors().iter().map(|l| l.ln()).collect();
    let lam = 0.4;

    // deterministic Picard pieces on interval 0 (alpha = 0 here)
    let c_j = |x: f64| {
        let we = w0 * (lam * x).exp();
        we / (1.0 + we) - z0
    };
    let a_j = engine.frozen_on(j, 0) * fp
        + model.tail_integral(|x| c_j(x) - fp * lam * x, eps, 0.0, 0.0, 1e-12);
    let c_comp = model.tail_integral(c_j, eps, 0.0, 0.0, 1e-12);
    let c1 = k.tail_mean();

    let horizons = [0.25, 0.125, 0.0625];
    let n_paths = 30_000usize;
    let mut l2 = Vec::new();
    for (hi, &h) in horizons.iter().enumerate() {
        let mut acc = 0.0;
        for p in 0..n_paths {
            // a fresh substream per (horizon, path) pair
            let mut streams = path_streams(7_000 + hi as u64, p as u64);
            let jumps = sampler.sample(h, &mut streams.jumps);

            // Picard step
            let jump_c: f64 = jumps.sizes.iter().map(|&x| c_j(x)).sum();
            let z1 = z0 + a_j * h + jump_c - h * c_comp;

            // true quotient via fine Euler with the exact drift
            let n_steps = 64usize;
            let dt = h / n_steps as f64;
            let mut g = g0.clone();
            let mut z = vec![z0, {
                let w = s.tenor.delta(2) * s.initial_libor(2).unwrap();
                w / (1.0 + w)
            }];
            let mut jp = 0usize;
            for step in 0..n_steps {
                let t1 = (step + 1) as f64 * dt;
                let mut dj = 0.0;
                while jp < jumps.times.len() && jumps.times[jp] <= t1 + 1e-15 {
                    dj += jumps.sizes[jp];
                    jp += 1;
                }
                dj -= c1 * dt;
                let b1 = engine.full_z(1, &z, 0);
                let b2 = engine.full_z(2, &z, 0);
                g[0] += b1 * dt + lam * dj;
                g[1] += b2 * dt + lam * dj;
                for (idx, gi) in g.iter().enumerate() {
                    let w = s.tenor.delta(idx + 1) * gi.exp();
                    z[idx] = w / (1.0 + w);
                }
            }
            let d = z1 - z[0];
            acc += d * d;
        }
        l2.push((acc / n_paths as f64).sqrt());
    }
    // log-log slope across the dyadic horizons
    let slope01 = (l2[0] / l2[1]).ln() / 2f64.ln();
    let slope12 = (l2[1] / l2[2]).ln() / 2f64.ln();
    let slope = 0.5 * (slope01 + slope12);
    assert!(
        (0.7..=1.7).contains(&slope),
        "L2 errors {l2:?}, slope {slope}"
    );
}

#[test]
fn orders_coincide_when_triple_kernels_vanish() {
    // with a Brownian-only driver the jump cumulant is identically zero,
    // so zeta == 0 and the first and second order kernel sets agree
    let model = LevyModel::merton(0.0, 0.0, 1.0, Alpha::Constant(1.0)).unwrap();
    let s = setup(6, 0.5, 0.3);
    let k = CumulantKernels::build(&model, &s, 1e-3, 2).unwrap();
    let k1 = LogLevyKernels::build(&model, &s, &k, 1, false).unwrap();
    let k2 = LogLevyKernels::build(&model, &s, &k, 2, false).unwrap();
    for i in 1..=6 {
        for h in 1..=i {
            assert!((k1.det_log(i, h) - k2.det_log(i, h)).abs() < 1e-14);
        }
    }
    assert_eq!(k1.gauss_dim(), k2.gauss_dim());
    let dim = k1.gauss_dim();
    for d in 0..dim {
        let mut e = vec![0.0; dim];
        e[d] = 1.0;
        let a = k1.gauss_map(&e);
        let b = k2.gauss_map(&e);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-13);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Truncation at p >= N - i reproduces the exact drift on random states.
    #[test]
    fn truncation_completes_to_full(
        lambda in 0.05f64..0.55,
        state in prop::collection::vec(0.001f64..0.15, 5),
    ) {
        let model = merton();
        let s = setup(5, 0.5, lambda);
        let k = CumulantKernels::build(&model, &s, 0.0, 4).unwrap();
        let engine = DriftEngine::new(&k, &s);
        for i in 1..=5usize {
            let full = engine.full(i, &state, 0.2).unwrap();
            let trunc = engine.truncated(i, &state, 0.2, (5 - i).max(1)).unwrap();
            prop_assert!((full - trunc).abs() < 1e-12, "i={}: {} vs {}", i, full, trunc);
        }
    }

    /// V integrals are additive over interval splits.
    #[test]
    fn v_additive_over_splits(
        lambdas in prop::collection::vec(0.02f64..0.5, 6),
        cut in 1usize..5,
    ) {
        let tenor = TenorStructure::uniform(6, 0.5).unwrap();
        let curve = DiscountCurve::flat(0.04, &tenor);
        let vol = VolLoading::per_rate(&lambdas, &tenor).unwrap();
        let s = MarketSetup::new(tenor, curve, vol).unwrap();
        let model = merton();
        let k = CumulantKernels::build(&model, &s, 0.0, 2).unwrap();
        for i in 1..=5usize {
            for j in i + 1..=6 {
                let whole = k.v_between(i, j, 0, 6);
                let split = k.v_between(i, j, 0, cut) + k.v_between(i, j, cut, 6);
                prop_assert!((whole - split).abs() < 1e-15);
                prop_assert!(k.v_between(i, j, cut, cut).abs() == 0.0);
            }
        }
    }

    /// Caplet minus FRA is the floorlet: nonnegative and nondecreasing in
    /// the strike, pathwise.
    #[test]
    fn caplet_fra_parity(
        l_fix in 0.001f64..0.2,
        k1 in 0.0f64..0.1,
        dk in 0.001f64..0.1,
    ) {
        let k2 = k1 + dk;
        let disc = 0.8;
        let delta = 0.5;
        let caplet = |k: f64| delta * disc * (l_fix - k).max(0.0);
        let fra = |k: f64| delta * disc * (l_fix - k);
        let f1 = caplet(k1) - fra(k1);
        let f2 = caplet(k2) - fra(k2);
        prop_assert!(f1 >= 0.0);
        prop_assert!(f2 >= f1 - 1e-15);
    }
}

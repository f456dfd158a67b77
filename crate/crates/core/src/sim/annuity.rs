//! Sampling of the frozen annuity stochastic exponential.
//!
//! Mechanically identical to the log-Levy scheme: shared jumps are folded
//! into per-interval `log r_j` sums, the Wiener part consumes one normal
//! per sub-step (the same positions as the Euler grid), and all annuities
//! `A_j(T_h)` come out of one pass.

use super::batch::AnnuityBatch;
use super::rng::path_streams;
use super::SimConfig;
use crate::annuity::AnnuityKernels;
use crate::error::{Error, Result};
use crate::market::MarketSetup;
use crate::models::LevyModel;
use crate::sampling::JumpSampler;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

pub fn simulate(
    model: &LevyModel,
    setup: &MarketSetup,
    kern: &AnnuityKernels<'_>,
    config: &SimConfig,
) -> Result<AnnuityBatch> {
    let kernels = kern.kernels();
    let n = kernels.n_rates();
    let sampler = JumpSampler::new(model, config.eps)?;
    let t_max = setup.tenor.date(n);

    let mut batch = AnnuityBatch::new("annuity", config.seed, n, config.paths);
    let slots: Vec<(usize, usize, usize)> = {
        let mut v = Vec::new();
        for j in 0..=n {
            for h in 1..=(j + 1).min(n) {
                v.push((j, h, batch.slot_of(j, h)));
            }
        }
        v
    };

    let errors: Vec<Option<Error>> = batch
        .rows_mut()
        .into_par_iter()
        .enumerate()
        .map(|(path, row)| {
            let mut streams = path_streams(config.seed, path as u64);
            let jumps = sampler.sample(t_max, &mut streams.jumps);

            let mut stats = kern.new_stats();
            for (t, x) in jumps.times.iter().zip(jumps.sizes.iter()) {
                kern.accumulate(&mut stats, *t, *x);
            }
            // per-interval Wiener increments, same consumption as Euler
            let mut dw = vec![0.0; n + 1];
            for (a, slot) in dw.iter_mut().enumerate().take(n) {
                if kernels.alpha(a) > 0.0 {
                    let dt = kernels.interval_len(a) / config.sub_steps as f64;
                    let mut acc = 0.0;
                    for _ in 0..config.sub_steps {
                        acc += dt.sqrt() * streams.gauss.sample::<f64, _>(StandardNormal);
                    }
                    *slot = acc;
                }
            }
            for &(j, h, slot) in &slots {
                let v = kern.log_annuity(j, h, &stats, &dw).exp();
                if !v.is_finite() {
                    return Some(Error::State(format!(
                        "annuity {j} overflowed at horizon {h} on path {path}"
                    )));
                }
                row[slot] = v;
            }
            None
        })
        .collect();
    if let Some(err) = errors.into_iter().flatten().next() {
        return Err(err);
    }
    Ok(batch)
}

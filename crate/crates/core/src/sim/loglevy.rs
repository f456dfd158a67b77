//! Direct sampling of the log-Levy kernels at the tenor horizons.
//!
//! Deterministic parts are precomputed in the kernel build; per path only
//! the shared jump realizations are folded into interval statistics and the
//! joint Gaussian vector is drawn from its exact covariance factor. No time
//! stepping and no drift evaluations happen inside the path loop, which is
//! what makes this scheme fast.

use super::batch::PathBatch;
use super::rng::path_streams;
use super::SimConfig;
use crate::approx::LogLevyKernels;
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
    kern: &LogLevyKernels<'_>,
    config: &SimConfig,
) -> Result<PathBatch> {
    let n = kern.kernels().n_rates();
    let sampler = JumpSampler::new(model, config.eps)?;
    let t_max = setup.tenor.date(n);
    let label = if kern.frozen {
        "frozen-kernel".to_string()
    } else {
        format!("loglevy-{}", kern.order)
    };
    let gauss_dim = kern.gauss_dim();

    let mut batch = PathBatch::new(label, config.seed, n, config.paths);
    let tri = batch.triangle().clone();
    let errors: Vec<Option<Error>> = batch
        .rows_mut()
        .into_par_iter()
        .enumerate()
        .map(|(path, row)| {
            let mut streams = path_streams(config.seed, path as u64);
            let jumps = sampler.sample(t_max, &mut streams.jumps);

            let mut stats = kern.new_stats();
            let mut scratch = Vec::new();
            for (t, x) in jumps.times.iter().zip(jumps.sizes.iter()) {
                kern.accumulate(&mut stats, *t, *x, &mut scratch);
            }
            let gauss = if gauss_dim > 0 {
                let normals: Vec<f64> = (0..gauss_dim)
                    .map(|_| streams.gauss.sample::<f64, _>(StandardNormal))
                    .collect();
                kern.gauss_map(&normals)
            } else {
                vec![0.0; tri.len()]
            };
            for i in 1..=n {
                for h in 1..=i {
                    let v = kern.log_rate(i, h, &stats, &gauss).exp();
                    if !v.is_finite() {
                        return Some(Error::State(format!(
                            "rate {i} overflowed at horizon {h} on path {path}"
                        )));
                    }
                    row[tri.slot(i, h)] = v;
                }
            }
            None
        })
        .collect();
    if let Some(err) = errors.into_iter().flatten().next() {
        return Err(err);
    }
    Ok(batch)
}

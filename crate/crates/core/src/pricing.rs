//! Product pricing from simulated batches under the terminal measure.
//!
//! Every payoff is discounted with the terminal bond: a payment of `X` at
//! `T_k` is worth `B_{N+1}(0) E[X * B_k(T_k)/B_{N+1}(T_k)]`, and the bond
//! ratios are exactly the annuity products `prod (1 + delta L)` the batches
//! carry. Estimators are plain Monte Carlo means with the pathwise sample
//! variance; scheme comparisons should pair payoffs on common paths and
//! look at the difference's standard error.

use crate::error::{Error, Result};
use crate::market::MarketSetup;
use crate::sim::{AnnuityBatch, PathBatch};
use std::time::Instant;

/// Monte Carlo price with its sampling error.
#[derive(Debug, Clone)]
pub struct PriceEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub paths: usize,
    pub wall_ms: f64,
    pub scheme: String,
    pub product: String,
}

impl PriceEstimate {
    /// Reduce per-path discounted payoffs in a fixed order.
    pub fn from_payoffs(
        payoffs: &[f64],
        scheme: impl Into<String>,
        product: impl Into<String>,
        wall_ms: f64,
    ) -> Self {
        let n = payoffs.len();
        let mean = payoffs.iter().sum::<f64>() / n as f64;
        let var = payoffs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
            / (n as f64 - 1.0).max(1.0);
        Self {
            mean,
            stderr: (var / n as f64).sqrt(),
            paths: n,
            wall_ms,
            scheme: scheme.into(),
            product: product.into(),
        }
    }
}

/// Mean and standard error of the pathwise difference `a - b` (common
/// random numbers estimator).
pub fn paired_diff(a: &[f64], b: &[f64]) -> (f64, f64) {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let mean = a.iter().zip(b).map(|(x, y)| x - y).sum::<f64>() / n;
    let var = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y - mean;
            d * d
        })
        .sum::<f64>()
        / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

fn check_rate_index(batch: &PathBatch, i: usize) -> Result<()> {
    if i < 1 || i > batch.n_rates {
        return Err(Error::Data(format!(
            "rate index {i} outside 1..={}",
            batch.n_rates
        )));
    }
    Ok(())
}

/// `prod_{l=i+1}^{N} (1 + delta_l L_l(T_h))` on one path.
fn annuity_product(batch: &PathBatch, setup: &MarketSetup, path: usize, i: usize, h: usize) -> f64 {
    let mut acc = 1.0;
    for l in i + 1..=batch.n_rates {
        acc *= 1.0 + setup.tenor.delta(l) * batch.libor(path, l, h);
    }
    acc
}

/// Per-path discounted FRA payoffs `delta_i B_{N+1}(0) prod_{l>i}(1 +
/// delta_l L_l(T_{i+1})) (L_i(T_i) - K)`.
pub fn fra_payoffs(batch: &PathBatch, setup: &MarketSetup, i: usize, strike: f64) -> Result<Vec<f64>> {
    check_rate_index(batch, i)?;
    let n = batch.n_rates;
    let scale = setup.tenor.delta(i) * setup.curve.discount(n + 1);
    // L_l(T_{i+1}) for l > i and L_i(T_i) live in the batch triangle
    Ok((0..batch.n_paths)
        .map(|p| {
            let disc = if i < n { annuity_product(batch, setup, p, i, i + 1) } else { 1.0 };
            scale * disc * (batch.libor(p, i, i) - strike)
        })
        .collect())
}

pub fn price_fra(batch: &PathBatch, setup: &MarketSetup, i: usize, strike: f64) -> Result<PriceEstimate> {
    let t = Instant::now();
    let payoffs = fra_payoffs(batch, setup, i, strike)?;
    let ms = t.elapsed().as_secs_f64() * 1e3;
    Ok(PriceEstimate::from_payoffs(&payoffs, batch.scheme.clone(), format!("fra[{i}]@{strike}"), ms))
}

/// Caplet payoffs: the FRA discounting with the positive part.
pub fn caplet_payoffs(
    batch: &PathBatch,
    setup: &MarketSetup,
    i: usize,
    strike: f64,
) -> Result<Vec<f64>> {
    check_rate_index(batch, i)?;
    let n = batch.n_rates;
    let scale = setup.tenor.delta(i) * setup.curve.discount(n + 1);
    Ok((0..batch.n_paths)
        .map(|p| {
            let disc = if i < n { annuity_product(batch, setup, p, i, i + 1) } else { 1.0 };
            scale * disc * (batch.libor(p, i, i) - strike).max(0.0)
        })
        .collect())
}

pub fn price_caplet(
    batch: &PathBatch,
    setup: &MarketSetup,
    i: usize,
    strike: f64,
) -> Result<PriceEstimate> {
    let t = Instant::now();
    let payoffs = caplet_payoffs(batch, setup, i, strike)?;
    let ms = t.elapsed().as_secs_f64() * 1e3;
    Ok(PriceEstimate::from_payoffs(
        &payoffs,
        batch.scheme.clone(),
        format!("caplet[{i}]@{strike}"),
        ms,
    ))
}

/// Payer swaption on the swap over `[T_i, T_m]` observed at `T_i`:
/// `B_{N+1}(0) (-sum_{k=i}^{m} c_k prod_{l=k}^{N}(1 + delta_l L_l(T_i)))^+`
/// with `c_i = -1`, `c_k = delta_k K` in between and `c_m = 1 + delta_m K`.
pub fn swaption_payoffs(
    batch: &PathBatch,
    setup: &MarketSetup,
    i: usize,
    m: usize,
    strike: f64,
) -> Result<Vec<f64>> {
    check_rate_index(batch, i)?;
    if !(i < m && m <= batch.n_rates) {
        return Err(Error::Data(format!("swaption needs i < m <= N, got ({i}, {m})")));
    }
    let n = batch.n_rates;
    let scale = setup.curve.discount(n + 1);
    Ok((0..batch.n_paths)
        .map(|p| {
            // suffix products prod_{l=k}^{N}(1 + delta_l L_l(T_i)) for k = i..=m
            let mut prods = vec![1.0; m - i + 1];
            let mut acc = 1.0;
            for l in (i..=n).rev() {
                acc *= 1.0 + setup.tenor.delta(l) * batch.libor(p, l, i);
                if l <= m {
                    prods[l - i] = acc;
                }
            }
            let mut value = prods[0];
            for k in i + 1..m {
                value -= setup.tenor.delta(k) * strike * prods[k - i];
            }
            value -= (1.0 + setup.tenor.delta(m) * strike) * prods[m - i];
            scale * value.max(0.0)
        })
        .collect())
}

pub fn price_swaption(
    batch: &PathBatch,
    setup: &MarketSetup,
    i: usize,
    m: usize,
    strike: f64,
) -> Result<PriceEstimate> {
    let t = Instant::now();
    let payoffs = swaption_payoffs(batch, setup, i, m, strike)?;
    let ms = t.elapsed().as_secs_f64() * 1e3;
    Ok(PriceEstimate::from_payoffs(
        &payoffs,
        batch.scheme.clone(),
        format!("swaption[{i},{m}]@{strike}"),
        ms,
    ))
}

/// Sticky ratchet caplet: strike is the running minimum of the prior
/// fixings `L_1(T_1)..L_{i-1}(T_{i-1})`.
pub fn ratchet_payoffs(batch: &PathBatch, setup: &MarketSetup, i: usize) -> Result<Vec<f64>> {
    check_rate_index(batch, i)?;
    if i < 2 {
        return Err(Error::Data("ratchet needs at least one prior fixing".into()));
    }
    let n = batch.n_rates;
    let scale = setup.tenor.delta(i) * setup.curve.discount(n + 1);
    Ok((0..batch.n_paths)
        .map(|p| {
            let mut strike = f64::INFINITY;
            for j in 1..i {
                strike = strike.min(batch.libor(p, j, j));
            }
            let disc = if i < n { annuity_product(batch, setup, p, i, i + 1) } else { 1.0 };
            scale * disc * (batch.libor(p, i, i) - strike).max(0.0)
        })
        .collect())
}

pub fn price_ratchet(batch: &PathBatch, setup: &MarketSetup, i: usize) -> Result<PriceEstimate> {
    let t = Instant::now();
    let payoffs = ratchet_payoffs(batch, setup, i)?;
    let ms = t.elapsed().as_secs_f64() * 1e3;
    Ok(PriceEstimate::from_payoffs(&payoffs, batch.scheme.clone(), format!("ratchet[{i}]"), ms))
}

/// Annuity-form caplet:
/// `B_{N+1}(0) E[(A_i(T_{i+1})/A_i(T_i)) (A_{i-1}(T_i) - (1 + delta_i K) A_i(T_i))^+]`.
pub fn caplet_annuity_payoffs(
    batch: &AnnuityBatch,
    setup: &MarketSetup,
    i: usize,
    strike: f64,
) -> Result<Vec<f64>> {
    if i < 1 || i > batch.n_rates {
        return Err(Error::Data(format!("rate index {i} outside 1..={}", batch.n_rates)));
    }
    let n = batch.n_rates;
    let scale = setup.curve.discount(n + 1);
    let cap = 1.0 + setup.tenor.delta(i) * strike;
    Ok((0..batch.n_paths)
        .map(|p| {
            let a_i_at_i = batch.annuity(p, i, i);
            // A_N is identically one and carries no T_{N+1} slot
            let ratio = if i < n { batch.annuity(p, i, i + 1) / a_i_at_i } else { 1.0 };
            let intrinsic = batch.annuity(p, i - 1, i) - cap * a_i_at_i;
            scale * ratio * intrinsic.max(0.0)
        })
        .collect())
}

pub fn price_caplet_annuity(
    batch: &AnnuityBatch,
    setup: &MarketSetup,
    i: usize,
    strike: f64,
) -> Result<PriceEstimate> {
    let t = Instant::now();
    let payoffs = caplet_annuity_payoffs(batch, setup, i, strike)?;
    let ms = t.elapsed().as_secs_f64() * 1e3;
    Ok(PriceEstimate::from_payoffs(
        &payoffs,
        batch.scheme.clone(),
        format!("caplet[{i}]@{strike}"),
        ms,
    ))
}

/// Annuity-form FRA (same expectation without the positive part).
pub fn fra_annuity_payoffs(
    batch: &AnnuityBatch,
    setup: &MarketSetup,
    i: usize,
    strike: f64,
) -> Result<Vec<f64>> {
    if i < 1 || i > batch.n_rates {
        return Err(Error::Data(format!("rate index {i} outside 1..={}", batch.n_rates)));
    }
    let n = batch.n_rates;
    let scale = setup.curve.discount(n + 1);
    let cap = 1.0 + setup.tenor.delta(i) * strike;
    Ok((0..batch.n_paths)
        .map(|p| {
            let a_i_at_i = batch.annuity(p, i, i);
            let ratio = if i < n { batch.annuity(p, i, i + 1) / a_i_at_i } else { 1.0 };
            scale * ratio * (batch.annuity(p, i - 1, i) - cap * a_i_at_i)
        })
        .collect())
}

/// Annuity-form payer swaption:
/// `B_{N+1}(0) E[(-sum_{k=i}^m c_k A_{k-1}(T_i))^+]`.
pub fn swaption_annuity_payoffs(
    batch: &AnnuityBatch,
    setup: &MarketSetup,
    i: usize,
    m: usize,
    strike: f64,
) -> Result<Vec<f64>> {
    if !(1 <= i && i < m && m <= batch.n_rates) {
        return Err(Error::Data(format!("swaption needs 1 <= i < m <= N, got ({i}, {m})")));
    }
    let scale = setup.curve.discount(batch.n_rates + 1);
    Ok((0..batch.n_paths)
        .map(|p| {
            let mut value = batch.annuity(p, i - 1, i);
            for k in i + 1..m {
                value -= setup.tenor.delta(k) * strike * batch.annuity(p, k - 1, i);
            }
            value -= (1.0 + setup.tenor.delta(m) * strike) * batch.annuity(p, m - 1, i);
            scale * value.max(0.0)
        })
        .collect())
}

pub fn price_swaption_annuity(
    batch: &AnnuityBatch,
    setup: &MarketSetup,
    i: usize,
    m: usize,
    strike: f64,
) -> Result<PriceEstimate> {
    let t = Instant::now();
    let payoffs = swaption_annuity_payoffs(batch, setup, i, m, strike)?;
    let ms = t.elapsed().as_secs_f64() * 1e3;
    Ok(PriceEstimate::from_payoffs(
        &payoffs,
        batch.scheme.clone(),
        format!("swaption[{i},{m}]@{strike}"),
        ms,
    ))
}

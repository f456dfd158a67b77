//! Terminal-measure log-LIBOR drift: exact, truncated and frozen.
//!
//! With `Z_j = delta_j L_j / (1 + delta_j L_j)` the exact drift of rate `i`
//! admits the subset representation
//!
//! ```text
//! b_i = -alpha/2 lambda_i^2 - sum_{j>i} Z_j alpha lambda_i lambda_j
//!       - sum_{R != {}, R subset {i..N}} s(R) kappa_hat(lambda_R)
//!             prod_{j in R, j>i} Z_j  prod_{j notin R, j>i} (1 - Z_j)
//! ```
//!
//! with `lambda_R = sum_{r in R} lambda_r` and `s(R) = +1` if `i in R`,
//! `-1` otherwise. This is the alternating-cumulant expansion resummed over
//! which higher rates each cumulant argument contains, and it is what the
//! Gray-code walk below evaluates: one jump-cumulant call per subset,
//! argument and product updated incrementally, `O(2^{N-i})` per call.
//!
//! Truncation at order `p` keeps subset terms with at most `p` higher
//! rates: order 1 is `-theta_i - sum_j Z_j eta_ij`, order 2 adds the
//! `Z_k Z_l zeta_ikl` pairs, and orders beyond use precomputed subset
//! coefficient tables. The diffusion enters only pairwise, through `eta`
//! built from full cumulants; all deeper terms are jump-only.

use crate::error::{Error, Result};
use crate::kernels::CumulantKernels;
use crate::market::MarketSetup;

/// Drift evaluator bound to one kernel set; caches the frozen drift.
pub struct DriftEngine<'k> {
    k: &'k CumulantKernels,
    z0: Vec<f64>,
    frozen: Vec<Vec<f64>>,
}

/// Running product over `{i+1..N}` where each factor is either `Z_j` or
/// `1 - Z_j`; zero factors are counted instead of multiplied so the Gray
/// walk can divide them back out.
struct ToggleProduct {
    nonzero: f64,
    zeros: u32,
}

impl ToggleProduct {
    fn mul(&mut self, v: f64) {
        if v == 0.0 {
            self.zeros += 1;
        } else {
            self.nonzero *= v;
        }
    }

    fn div(&mut self, v: f64) {
        if v == 0.0 {
            self.zeros -= 1;
        } else {
            self.nonzero /= v;
        }
    }

    fn value(&self) -> f64 {
        if self.zeros > 0 {
            0.0
        } else {
            self.nonzero
        }
    }
}

impl<'k> DriftEngine<'k> {
    pub fn new(k: &'k CumulantKernels, setup: &MarketSetup) -> Self {
        let n = k.n_rates();
        let z0: Vec<f64> = (1..=n)
            .map(|j| {
                let l = setup.initial_libor(j).expect("kernels match setup");
                let dl = k.delta(j) * l;
                dl / (1.0 + dl)
            })
            .collect();
        let mut engine = Self { k, z0, frozen: Vec::new() };
        engine.frozen = (1..=n)
            .map(|i| {
                (0..k.n_intervals())
                    .map(|a| engine.truncated_z(i, &engine.z0, a, 2))
                    .collect()
            })
            .collect();
        engine
    }

    pub fn kernels(&self) -> &CumulantKernels {
        self.k
    }

    /// Initial quotients `Z_j(0)`.
    pub fn z0(&self) -> &[f64] {
        &self.z0
    }

    /// Convert a LIBOR state vector into quotients, checking admissibility.
    pub fn z_from_state(&self, l: &[f64]) -> Result<Vec<f64>> {
        if l.len() != self.k.n_rates() {
            return Err(Error::Data(format!(
                "state has {} rates, expected {}",
                l.len(),
                self.k.n_rates()
            )));
        }
        l.iter()
            .enumerate()
            .map(|(idx, &lj)| {
                let dl = self.k.delta(idx + 1) * lj;
                if 1.0 + dl <= 0.0 {
                    return Err(Error::State(format!(
                        "1 + delta_{} L_{} = {} <= 0",
                        idx + 1,
                        idx + 1,
                        1.0 + dl
                    )));
                }
                Ok(dl / (1.0 + dl))
            })
            .collect()
    }

    /// Exact drift `b_i` from the LIBOR state at time `s`.
    pub fn full(&self, i: usize, l_state: &[f64], s: f64) -> Result<f64> {
        let z = self.z_from_state(l_state)?;
        Ok(self.full_z(i, &z, self.interval_of(s)))
    }

    /// Drift truncated at subset order `p >= 1`.
    pub fn truncated(&self, i: usize, l_state: &[f64], s: f64, p: usize) -> Result<f64> {
        if p < 1 {
            return Err(Error::Config("truncation order must be >= 1".into()));
        }
        if p > 2 && p.min(self.k.n_rates() - i) > self.k.max_order() {
            return Err(Error::Config(format!(
                "kernels built for order {}, requested {p}",
                self.k.max_order()
            )));
        }
        let z = self.z_from_state(l_state)?;
        Ok(self.truncated_z(i, &z, self.interval_of(s), p))
    }

    /// Frozen drift: the order-2 truncation evaluated at the initial state,
    /// cached per tenor interval.
    pub fn frozen(&self, i: usize, s: f64) -> f64 {
        self.frozen_on(i, self.interval_of(s))
    }

    pub fn frozen_on(&self, i: usize, a: usize) -> f64 {
        self.frozen[i - 1][a]
    }

    fn interval_of(&self, s: f64) -> usize {
        let n_int = self.k.n_intervals();
        let mut a = 0;
        while a + 1 < n_int && self.k.interval_start(a + 1) <= s {
            a += 1;
        }
        a
    }

    /// Exact drift on interval `a` given quotients `z[j-1] = Z_j`.
    pub fn full_z(&self, i: usize, z: &[f64], a: usize) -> f64 {
        let k = self.k;
        let n = k.n_rates();
        let alpha = k.alpha(a);
        let li = k.lambda(i, a);

        let mut acc = -0.5 * alpha * li * li;
        if alpha != 0.0 {
            for j in i + 1..=n {
                acc -= z[j - 1] * alpha * li * k.lambda(j, a);
            }
        }

        // Gray-code walk over subsets of {i, i+1, .., N}; bit 0 is rate i.
        let width = n - i + 1;
        let mut prod = ToggleProduct { nonzero: 1.0, zeros: 0 };
        for j in i + 1..=n {
            prod.mul(1.0 - z[j - 1]);
        }
        let mut lam = 0.0f64;
        let mut mask: u64 = 0;
        let mut subset_sum = 0.0f64;
        for step in 1u64..(1u64 << width) {
            let bit = step.trailing_zeros() as usize;
            let flipped = 1u64 << bit;
            let entering = mask & flipped == 0;
            mask ^= flipped;
            if bit == 0 {
                lam += if entering { li } else { -li };
            } else {
                let j = i + bit;
                let lj = k.lambda(j, a);
                lam += if entering { lj } else { -lj };
                let zj = z[j - 1];
                if entering {
                    prod.div(1.0 - zj);
                    prod.mul(zj);
                } else {
                    prod.div(zj);
                    prod.mul(1.0 - zj);
                }
            }
            let p = prod.value();
            if p != 0.0 {
                let sign = if mask & 1 == 1 { 1.0 } else { -1.0 };
                subset_sum += sign * p * k.jump_cum(lam);
            }
        }
        acc - subset_sum
    }

    /// Truncated drift on interval `a` given quotients.
    pub fn truncated_z(&self, i: usize, z: &[f64], a: usize, p: usize) -> f64 {
        let k = self.k;
        let n = k.n_rates();
        let mut acc = -k.theta(i, a);
        for j in i + 1..=n {
            acc -= z[j - 1] * k.eta(i, j, a);
        }
        if p >= 2 {
            for kk in i + 1..=n {
                let zk = z[kk - 1];
                if zk == 0.0 {
                    continue;
                }
                for l in kk + 1..=n {
                    acc -= zk * z[l - 1] * k.zeta(i, kk, l, a);
                }
            }
        }
        for table in k.higher_tables() {
            if table.q > p {
                break;
            }
            let members = &table.members[i - 1];
            let coeff = &table.coeff[i - 1][a];
            for (s_idx, chunk) in members.chunks_exact(table.q).enumerate() {
                let mut zp = 1.0;
                for &j in chunk {
                    zp *= z[j as usize - 1];
                }
                acc -= zp * coeff[s_idx];
            }
        }
        acc
    }
}

//! Tenor structure, initial discount curve and volatility loadings.
//!
//! Loadings are piecewise constant on the tenor grid and a rate stops
//! diffusing at its fixing date (`lambda_i(s) = 0` for `s > T_i`), so every
//! deterministic time integral downstream reduces to a finite sum over
//! tenor intervals.

use crate::error::{Error, Result};
use crate::models::LevyModel;
use std::path::Path;

/// Dates `T_0 = 0 < T_1 < ... < T_{N+1}` with day-count fractions
/// `delta_i = T_{i+1} - T_i`.
#[derive(Debug, Clone)]
pub struct TenorStructure {
    dates: Vec<f64>,
}

impl TenorStructure {
    pub fn new(dates: Vec<f64>) -> Result<Self> {
        if dates.len() < 3 {
            return Err(Error::Config("tenor needs at least T_0 < T_1 < T_2".into()));
        }
        if dates[0] != 0.0 {
            return Err(Error::Config("tenor must start at T_0 = 0".into()));
        }
        if !dates.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::Config("tenor dates must be strictly increasing".into()));
        }
        Ok(Self { dates })
    }

    /// Uniform grid with `n_rates` rates and constant accrual `delta`.
    pub fn uniform(n_rates: usize, delta: f64) -> Result<Self> {
        if delta <= 0.0 {
            return Err(Error::Config("delta must be positive".into()));
        }
        Self::new((0..=n_rates + 1).map(|k| k as f64 * delta).collect())
    }

    /// Number of modeled forward rates N.
    pub fn n_rates(&self) -> usize {
        self.dates.len() - 2
    }

    /// `T_h` for `h = 0..=N+1`.
    pub fn date(&self, h: usize) -> f64 {
        self.dates[h]
    }

    /// `delta_i = T_{i+1} - T_i` for `i = 0..=N`.
    pub fn delta(&self, i: usize) -> f64 {
        self.dates[i + 1] - self.dates[i]
    }

    /// Index of the interval `[T_a, T_{a+1})` containing `s` (clamped).
    pub fn interval_of(&self, s: f64) -> usize {
        let n = self.dates.len() - 1;
        let mut a = self.dates.iter().take_while(|&&d| d <= s).count();
        a = a.saturating_sub(1);
        a.min(n - 1)
    }
}

/// Zero-coupon prices `B(0, T_h)` on the tenor dates, `B(0, 0) = 1`.
#[derive(Debug, Clone)]
pub struct DiscountCurve {
    discounts: Vec<f64>,
}

impl DiscountCurve {
    /// `discounts[h] = B(0, T_h)` for `h = 0..=N+1`.
    pub fn new(discounts: Vec<f64>) -> Result<Self> {
        if discounts.is_empty() || (discounts[0] - 1.0).abs() > 1e-12 {
            return Err(Error::Config("curve must start at B(0,0) = 1".into()));
        }
        if !discounts.iter().all(|&b| b > 0.0 && b <= 1.0 + 1e-12) {
            return Err(Error::Config("discount factors must lie in (0, 1]".into()));
        }
        if !discounts.windows(2).all(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "discount factors must be nonincreasing in maturity".into(),
            ));
        }
        Ok(Self { discounts })
    }

    /// Flat continuously compounded curve `B(0, T) = e^{-r T}`.
    pub fn flat(rate: f64, tenor: &TenorStructure) -> Self {
        let discounts = (0..tenor.dates.len())
            .map(|h| (-rate * tenor.date(h)).exp())
            .collect();
        Self { discounts }
    }

    /// Load from a two-column CSV (maturity, discount factor) and
    /// log-linearly interpolate onto the tenor dates.
    pub fn from_csv(path: &Path, tenor: &TenorStructure) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("curve csv {}: {e}", path.display())))?;
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let parse = |v: Option<&str>| -> Result<f64> {
                v.and_then(|s| s.parse::<f64>().ok()).ok_or_else(|| {
                    Error::Config(format!("curve csv line {}: expected two numbers", lineno + 1))
                })
            };
            let t = parse(cols.next());
            let b = parse(cols.next());
            match (t, b) {
                (Ok(t), Ok(b)) => pts.push((t, b)),
                // tolerate a single header row
                _ if lineno == 0 => continue,
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
        }
        if pts.len() < 2 {
            return Err(Error::Config("curve csv needs at least two points".into()));
        }
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let interp = |t: f64| -> Result<f64> {
            if t == 0.0 {
                return Ok(1.0);
            }
            if t < pts[0].0 - 1e-12 || t > pts.last().unwrap().0 + 1e-12 {
                return Err(Error::Config(format!(
                    "curve csv does not cover tenor date {t}"
                )));
            }
            let k = pts.partition_point(|p| p.0 < t).clamp(1, pts.len() - 1);
            let (t0, b0) = pts[k - 1];
            let (t1, b1) = pts[k];
            let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
            Ok((b0.ln() * (1.0 - w) + b1.ln() * w).exp())
        };
        let discounts = (0..tenor.dates.len())
            .map(|h| interp(tenor.date(h)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(discounts)
    }

    /// `B(0, T_h)`.
    pub fn discount(&self, h: usize) -> f64 {
        self.discounts[h]
    }
}

/// Scalar loading factors per rate, piecewise constant per tenor interval.
#[derive(Debug, Clone)]
pub struct VolLoading {
    /// `values[i-1][a]` = loading of rate `i` on `[T_a, T_{a+1})`;
    /// zero for `a >= i` (the rate is fixed).
    values: Vec<Vec<f64>>,
}

impl VolLoading {
    /// Flat loading `lambda` for every live rate.
    pub fn flat(lambda: f64, tenor: &TenorStructure) -> Self {
        let n = tenor.n_rates();
        let values = (1..=n)
            .map(|i| (0..=n).map(|a| if a < i { lambda } else { 0.0 }).collect())
            .collect();
        Self { values }
    }

    /// Per-rate constant loadings (zeroed after each fixing date).
    pub fn per_rate(lambdas: &[f64], tenor: &TenorStructure) -> Result<Self> {
        let n = tenor.n_rates();
        if lambdas.len() != n {
            return Err(Error::Config(format!(
                "expected {n} loadings, got {}",
                lambdas.len()
            )));
        }
        let values = (1..=n)
            .map(|i| {
                (0..=n)
                    .map(|a| if a < i { lambdas[i - 1] } else { 0.0 })
                    .collect()
            })
            .collect();
        Ok(Self { values })
    }

    pub fn n_rates(&self) -> usize {
        self.values.len()
    }

    /// Loading of rate `i` on interval `a`.
    pub fn on_interval(&self, i: usize, a: usize) -> f64 {
        let row = &self.values[i - 1];
        if a < row.len() {
            row[a]
        } else {
            0.0
        }
    }

    /// Loading of rate `i` at time `s` (zero past the fixing date).
    pub fn at(&self, i: usize, s: f64, tenor: &TenorStructure) -> f64 {
        if s > tenor.date(i) {
            0.0
        } else {
            self.on_interval(i, tenor.interval_of(s))
        }
    }

    /// `max_i sup_s |lambda_i(s)|`.
    pub fn max_single(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|row| row.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `sup_s |sum_i lambda_i(s)|`, the bound entering the moment condition.
    pub fn max_total(&self) -> f64 {
        let n_intervals = self.values.iter().map(Vec::len).max().unwrap_or(0);
        (0..n_intervals)
            .map(|a| {
                self.values
                    .iter()
                    .map(|row| row.get(a).copied().unwrap_or(0.0))
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Tenor, curve and loadings bundled with the initial rates they imply.
#[derive(Debug, Clone)]
pub struct MarketSetup {
    pub tenor: TenorStructure,
    pub curve: DiscountCurve,
    pub vol: VolLoading,
}

impl MarketSetup {
    pub fn new(tenor: TenorStructure, curve: DiscountCurve, vol: VolLoading) -> Result<Self> {
        if vol.n_rates() != tenor.n_rates() {
            return Err(Error::Config("loadings do not match tenor".into()));
        }
        Ok(Self { tenor, curve, vol })
    }

    /// `L_i(0) = (B_i(0)/B_{i+1}(0) - 1) / delta_i`.
    pub fn initial_libor(&self, i: usize) -> Result<f64> {
        if i < 1 || i > self.tenor.n_rates() {
            return Err(Error::Data(format!(
                "rate index {i} out of 1..={}",
                self.tenor.n_rates()
            )));
        }
        Ok((self.curve.discount(i) / self.curve.discount(i + 1) - 1.0) / self.tenor.delta(i))
    }

    pub fn n_rates(&self) -> usize {
        self.tenor.n_rates()
    }

    /// All initial rates `L_1(0)..L_N(0)`.
    pub fn initial_libors(&self) -> Vec<f64> {
        (1..=self.n_rates())
            .map(|i| self.initial_libor(i).expect("index in range"))
            .collect()
    }
}

/// One named check of [`validate_setup`].
#[derive(Debug, Clone)]
pub struct ValidationCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Outcome of the model-wide bound checks (report-only, never fails hard).
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Check the exponential-moment condition `min(G, M) >= (1 + margin) *
/// sup_s|sum_i lambda_i(s)|` plus basic curve sanity.
pub fn validate_setup(model: &LevyModel, setup: &MarketSetup, margin: f64) -> ValidationReport {
    let mut checks = Vec::new();

    let mbar = setup.vol.max_total().max(setup.vol.max_single());
    match model.moment_bound() {
        Some((lo, hi)) => {
            let bound = hi.min(-lo);
            let needed = (1.0 + margin) * mbar;
            checks.push(ValidationCheck {
                name: "exponential-moment".into(),
                pass: bound >= needed,
                detail: format!(
                    "min(G,M) = {bound} vs (1+{margin}) * sup|sum lambda| = {needed}"
                ),
            });
        }
        None => checks.push(ValidationCheck {
            name: "exponential-moment".into(),
            pass: true,
            detail: "all exponential moments finite".into(),
        }),
    }

    let positive_rates = setup.initial_libors().iter().all(|&l| l >= 0.0);
    checks.push(ValidationCheck {
        name: "initial-rates-nonnegative".into(),
        pass: positive_rates,
        detail: "implied forwards from the initial curve".into(),
    });

    ValidationReport { checks }
}

/// The qualitative accuracy indicator `lambda_max^2 * t`.
pub fn validity_indicator(vol: &VolLoading, t: f64) -> f64 {
    let lmax = vol.max_single();
    lmax * lmax * t.max(0.0)
}

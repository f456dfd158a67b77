//! Compound Poisson sampling of the jumps above a truncation level.
//!
//! Jumps smaller than `eps` are dropped entirely; they are compensated, so
//! their expectation contribution is zero. What remains is a compound
//! Poisson process: a Poisson number of jumps with intensity
//! `t * nu({|x| > eps})`, uniform jump times, and sizes from the normalized
//! restricted measure.

use crate::error::{Error, Result};
use crate::models::{LevyModel, LevyVariant};
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

/// Jumps of one path over `(0, t]`, all sizes exceeding `eps` in magnitude.
#[derive(Debug, Clone, Default)]
pub struct JumpSample {
    /// Strictly increasing jump times in `(0, t]`.
    pub times: Vec<f64>,
    /// Jump sizes, parallel to `times`.
    pub sizes: Vec<f64>,
    /// Truncation level the sample was drawn with.
    pub eps: f64,
}

impl JumpSample {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

enum SizeSampler {
    /// Rejection from the eps-truncated power law `|x|^{-1-Y}` with
    /// acceptance `e^{-M x}` (x > 0) or `e^{-G|x|}` (x < 0). The proposal
    /// CDF inverts in closed form and the acceptance probability never
    /// exceeds one.
    CgmyRejection { g: f64, m: f64, y: f64 },
    /// Normal jump law conditioned on `|x| > eps` by resampling.
    MertonConditional { normal: Normal<f64> },
}

/// Prepared sampler for one `(model, eps)` pair; holds the big-jump
/// intensity so per-path sampling stays quadrature-free.
pub struct JumpSampler {
    eps: f64,
    intensity: f64,
    sizes: SizeSampler,
}

impl JumpSampler {
    pub fn new(model: &LevyModel, eps: f64) -> Result<Self> {
        if eps <= 0.0 {
            return Err(Error::Config("jump truncation eps must be positive".into()));
        }
        let intensity = model.tail_intensity(eps)?;
        let sizes = match *model.variant() {
            LevyVariant::Cgmy { g, m, y, .. } => SizeSampler::CgmyRejection { g, m, y },
            LevyVariant::Merton { mean, stdev, .. } => SizeSampler::MertonConditional {
                normal: Normal::new(mean, stdev)
                    .map_err(|e| Error::Config(format!("merton jump law: {e}")))?,
            },
        };
        Ok(Self { eps, intensity, sizes })
    }

    /// Expected number of jumps per unit time.
    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    fn sample_size<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.sizes {
            SizeSampler::CgmyRejection { g, m, y } => loop {
                let positive = rng.random::<bool>();
                let u: f64 = rng.random::<f64>();
                // inverse CDF of the proposal on (eps, inf): P(X > x) = (x/eps)^{-Y}
                let mag = self.eps * (1.0 - u).powf(-1.0 / y);
                let temper = if positive { *m } else { *g };
                if rng.random::<f64>() <= (-temper * mag).exp() {
                    return if positive { mag } else { -mag };
                }
            },
            SizeSampler::MertonConditional { normal } => loop {
                let x = normal.sample(rng);
                if x.abs() > self.eps {
                    return x;
                }
            },
        }
    }

    /// Draw the jumps over `(0, t]`.
    ///
    /// Consumption order (relevant for common random numbers): one Poisson
    /// count, then the jump times, then the sizes.
    pub fn sample<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> JumpSample {
        if t <= 0.0 || self.intensity == 0.0 {
            return JumpSample { times: Vec::new(), sizes: Vec::new(), eps: self.eps };
        }
        let count = Poisson::new(self.intensity * t)
            .expect("positive intensity")
            .sample(rng) as usize;
        let mut times: Vec<f64> = (0..count).map(|_| rng.random::<f64>() * t).collect();
        times.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite times"));
        // ties have probability zero; nudge so times stay strictly increasing
        for k in 1..times.len() {
            if times[k] <= times[k - 1] {
                times[k] = f64::from_bits(times[k - 1].to_bits() + 1);
            }
        }
        let sizes = (0..count).map(|_| self.sample_size(rng)).collect();
        JumpSample { times, sizes, eps: self.eps }
    }
}

/// One-shot convenience wrapper around [`JumpSampler`].
pub fn sample_jumps<R: Rng + ?Sized>(
    model: &LevyModel,
    eps: f64,
    t: f64,
    rng: &mut R,
) -> Result<JumpSample> {
    Ok(JumpSampler::new(model, eps)?.sample(t, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Alpha;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn paper_cgmy() -> LevyModel {
        LevyModel::cgmy(48.4201, 13.0, 13.0, 0.25, Alpha::Constant(0.0)).unwrap()
    }

    fn paper_merton() -> LevyModel {
        LevyModel::merton(5.0, 0.0, 0.2f64.sqrt(), Alpha::Constant(0.0)).unwrap()
    }

    #[test]
    fn zero_horizon_gives_empty_sample() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let s = sample_jumps(&paper_merton(), 1e-3, 0.0, &mut rng).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn times_sorted_and_sizes_above_eps() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let s = sample_jumps(&paper_cgmy(), 1e-3, 1.0, &mut rng).unwrap();
        assert!(s.len() > 100);
        assert!(s.times.windows(2).all(|w| w[0] < w[1]));
        assert!(s.sizes.iter().all(|x| x.abs() > 1e-3));
    }

    #[test]
    fn merton_mean_count_matches_conditional_intensity() {
        let model = paper_merton();
        let sampler = JumpSampler::new(&model, 1e-3).unwrap();
        let expected = 5.0 * model.merton_tail_prob(1e-3).unwrap();
        assert!((expected - 4.991).abs() < 5e-4);

        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let n_trials = 20_000usize;
        let mut total = 0usize;
        for _ in 0..n_trials {
            total += sampler.sample(1.0, &mut rng).len();
        }
        let mean = total as f64 / n_trials as f64;
        // Poisson stderr = sqrt(lambda / n)
        let stderr = (expected / n_trials as f64).sqrt();
        assert!((mean - expected).abs() < 3.0 * stderr, "mean {mean} vs {expected}");
    }

    #[test]
    fn compensated_sum_has_zero_mean_and_matching_variance() {
        let model = paper_cgmy();
        let eps = 1e-3;
        let sampler = JumpSampler::new(&model, eps).unwrap();
        let comp = model.tail_mean(eps);
        let expected_var = 1.0 - model.small_jump_variance(eps);

        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let n = 100_000usize;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        let mut sum4 = 0.0;
        for _ in 0..n {
            let s = sampler.sample(1.0, &mut rng);
            let x: f64 = s.sizes.iter().sum::<f64>() - comp;
            sum += x;
            sum2 += x * x;
            sum4 += x * x * x * x;
        }
        let mean = sum / n as f64;
        let m2 = sum2 / n as f64;
        let var_of_mean = (m2 - mean * mean) / n as f64;
        assert!(mean.abs() < 3.0 * var_of_mean.sqrt(), "mean {mean}");

        let var_of_m2 = (sum4 / n as f64 - m2 * m2) / n as f64;
        assert!(
            (m2 - expected_var).abs() < 3.0 * var_of_m2.sqrt(),
            "second moment {m2} vs {expected_var}"
        );
    }

    #[test]
    fn cgmy_rejection_matches_analytic_truncated_cdf() {
        // Kolmogorov-Smirnov distance between the empirical CDF of accepted
        // sizes and the quadrature CDF of the restricted measure.
        let model = paper_cgmy();
        let eps = 1e-3;
        let sampler = JumpSampler::new(&model, eps).unwrap();

        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let n = 100_000usize;
        let mut xs: Vec<f64> = (0..n).map(|_| sampler.sample_size(&mut rng)).collect();
        xs.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());

        // CDF on a log-spaced grid by cumulative quadrature, one grid per side
        let total = sampler.intensity();
        let grid_side = |sign: f64| -> (Vec<f64>, Vec<f64>) {
            let n_cells = 2000;
            let xmax = 6.0f64;
            let mut pts = Vec::with_capacity(n_cells + 1);
            for k in 0..=n_cells {
                let v = (xmax / eps).ln() * k as f64 / n_cells as f64;
                pts.push(eps * v.exp());
            }
            let mut cum = vec![0.0; n_cells + 1];
            for k in 1..=n_cells {
                let mass = crate::quad::integrate(
                    |x| model.levy_density(sign * x).unwrap(),
                    pts[k - 1],
                    pts[k],
                    1e-12,
                );
                cum[k] = cum[k - 1] + mass;
            }
            (pts, cum)
        };
        let (pos_pts, pos_cum) = grid_side(1.0);
        let (neg_pts, neg_cum) = grid_side(-1.0);
        let neg_total = *neg_cum.last().unwrap();

        let cdf = |x: f64| -> f64 {
            // mass of (-inf, x] under the normalized restricted measure
            let lookup = |pts: &[f64], cum: &[f64], mag: f64| -> f64 {
                match pts.binary_search_by(|p| p.partial_cmp(&mag).unwrap()) {
                    Ok(i) => cum[i],
                    Err(0) => 0.0,
                    Err(i) if i > pts.len() - 1 => *cum.last().unwrap(),
                    Err(i) => {
                        let w = (mag - pts[i - 1]) / (pts[i] - pts[i - 1]);
                        cum[i - 1] + w * (cum[i] - cum[i - 1])
                    }
                }
            };
            if x < 0.0 {
                (neg_total - lookup(&neg_pts, &neg_cum, -x)) / total
            } else {
                (neg_total + lookup(&pos_pts, &pos_cum, x)) / total
            }
        };

        let mut ks: f64 = 0.0;
        for (k, &x) in xs.iter().enumerate() {
            let f = cdf(x);
            let hi = (k + 1) as f64 / n as f64;
            let lo = k as f64 / n as f64;
            ks = ks.max((f - lo).abs()).max((hi - f).abs());
        }
        assert!(ks < 0.01, "KS distance {ks}");
    }
}

//! Driving Levy processes: CGMY (tempered stable) and Merton (compound
//! Poisson with Gaussian jumps), plus an optional Brownian component with
//! deterministic scale `alpha(t)`.
//!
//! Conventions:
//! * the process is a martingale, so the jump part enters compensated and
//!   every cumulant satisfies `kappa(0) = 0`, `kappa'(0) = 0`;
//! * the Merton cumulant uses `exp(mean*u + stdev^2*u^2/2)`, the only
//!   convention under which `intensity = 5`, `stdev = sqrt(1/5)` gives unit
//!   variance per year.

use crate::error::{Error, Result};
use crate::quad;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::gamma;

/// Deterministic, nonnegative diffusion scale `alpha(t)`.
///
/// Piecewise constant (right-continuous) so that all time integrals reduce
/// to finite sums over intervals.
#[derive(Debug, Clone)]
pub enum Alpha {
    Constant(f64),
    Piecewise { breaks: Vec<f64>, values: Vec<f64> },
}

impl Alpha {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Alpha::Constant(a) => *a,
            Alpha::Piecewise { breaks, values } => {
                let k = breaks.iter().take_while(|&&b| b <= t).count();
                values[k.min(values.len() - 1)]
            }
        }
    }
}

/// Parametric family of the jump part.
#[derive(Debug, Clone, PartialEq)]
pub enum LevyVariant {
    /// Tempered stable with density `C e^{-M x} / x^{1+Y}` for `x > 0` and
    /// `C e^{-G|x|} / |x|^{1+Y}` for `x < 0`; `Y` in (0,1) gives infinite
    /// activity and finite variation.
    Cgmy { c: f64, g: f64, m: f64, y: f64 },
    /// Compound Poisson with `N(mean, stdev^2)` jump sizes at `intensity`
    /// jumps per year.
    Merton { intensity: f64, mean: f64, stdev: f64 },
}

/// A driving Levy process specification (jump variant + diffusion scale).
#[derive(Debug, Clone)]
pub struct LevyModel {
    variant: LevyVariant,
    alpha: Alpha,
}

impl LevyModel {
    pub fn cgmy(c: f64, g: f64, m: f64, y: f64, alpha: Alpha) -> Result<Self> {
        if !(c > 0.0 && g > 0.0 && m > 0.0) {
            return Err(Error::Config("CGMY requires C, G, M > 0".into()));
        }
        if !(y > 0.0 && y < 1.0) {
            return Err(Error::Config(format!("CGMY requires Y in (0,1), got {y}")));
        }
        Ok(Self { variant: LevyVariant::Cgmy { c, g, m, y }, alpha })
    }

    /// CGMY with `C` chosen so the jump part has unit variance per year:
    /// `kappa''(0) = C Gamma(2-Y) (M^{Y-2} + G^{Y-2}) = 1`.
    ///
    /// For `G = M = 13`, `Y = 0.25` this gives `C = 48.42011449...`; quoting
    /// the rounded `C = 48.4201` instead leaves a ~3e-7 variance defect.
    pub fn cgmy_unit_variance(g: f64, m: f64, y: f64, alpha: Alpha) -> Result<Self> {
        if !(y > 0.0 && y < 1.0) {
            return Err(Error::Config(format!("CGMY requires Y in (0,1), got {y}")));
        }
        let c = 1.0 / (gamma(2.0 - y) * (m.powf(y - 2.0) + g.powf(y - 2.0)));
        Self::cgmy(c, g, m, y, alpha)
    }

    /// `intensity = 0` is allowed and gives a pure-diffusion configuration.
    pub fn merton(intensity: f64, mean: f64, stdev: f64, alpha: Alpha) -> Result<Self> {
        if !(intensity >= 0.0) {
            return Err(Error::Config("Merton jump intensity must be nonnegative".into()));
        }
        if !(stdev > 0.0) {
            return Err(Error::Config("Merton requires positive jump stdev".into()));
        }
        Ok(Self { variant: LevyVariant::Merton { intensity, mean, stdev }, alpha })
    }

    pub fn variant(&self) -> &LevyVariant {
        &self.variant
    }

    pub fn alpha(&self, s: f64) -> f64 {
        self.alpha.at(s)
    }

    /// Largest `u` for which the positive-jump exponential moment exists.
    /// `None` means all of R (Merton).
    pub fn moment_bound(&self) -> Option<(f64, f64)> {
        match self.variant {
            LevyVariant::Cgmy { g, m, .. } => Some((-g, m)),
            LevyVariant::Merton { .. } => None,
        }
    }

    fn check_domain(&self, u: f64) -> Result<()> {
        if let LevyVariant::Cgmy { g, m, .. } = self.variant {
            if !(u >= -g && u <= m) || !u.is_finite() {
                return Err(Error::Domain(format!(
                    "CGMY cumulant argument {u} outside [-G, M] = [{}, {}]",
                    -g, m
                )));
            }
        }
        Ok(())
    }

    /// Full cumulant `kappa_s(u) = alpha(s)/2 u^2 + jump_cumulant(u)`.
    pub fn cumulant(&self, u: f64, s: f64) -> Result<f64> {
        Ok(0.5 * self.alpha(s) * u * u + self.jump_cumulant(u, s)?)
    }

    /// Jump-only cumulant `int (e^{ux} - 1 - ux) nu(dx)` in closed form.
    pub fn jump_cumulant(&self, u: f64, _s: f64) -> Result<f64> {
        self.check_domain(u)?;
        Ok(self.jump_cumulant_unchecked(u))
    }

    pub(crate) fn jump_cumulant_unchecked(&self, u: f64) -> f64 {
        match self.variant {
            LevyVariant::Cgmy { c, g, m, y } => {
                let gamma_my = gamma(-y);
                let pos = m.powf(y) * ((1.0 - u / m).powf(y) - 1.0 + u * y / m);
                let neg = g.powf(y) * ((1.0 + u / g).powf(y) - 1.0 - u * y / g);
                c * gamma_my * (pos + neg)
            }
            LevyVariant::Merton { intensity, mean, stdev } => {
                let e = mean * u + 0.5 * stdev * stdev * u * u;
                intensity * (e.exp_m1() - mean * u)
            }
        }
    }

    /// Levy density `nu(x)` for scalar jumps; errors at `x = 0`.
    pub fn levy_density(&self, x: f64) -> Result<f64> {
        if x == 0.0 {
            return Err(Error::Domain("Levy density undefined at x = 0".into()));
        }
        Ok(match self.variant {
            LevyVariant::Cgmy { c, g, m, y } => {
                let ax = x.abs();
                let temper = if x > 0.0 { m } else { g };
                c * (-temper * ax).exp() / ax.powf(1.0 + y)
            }
            LevyVariant::Merton { intensity, mean, stdev } => {
                let z = (x - mean) / stdev;
                intensity * (-0.5 * z * z).exp() / (stdev * (2.0 * std::f64::consts::PI).sqrt())
            }
        })
    }

    /// Variance carried by jumps of size at most `eps`:
    /// `int_{|x|<=eps} x^2 nu(dx)`.
    pub fn small_jump_variance(&self, eps: f64) -> f64 {
        if eps <= 0.0 {
            return 0.0;
        }
        self.central_integral(|x| x * x, eps, quad::DEFAULT_TOL)
    }

    /// Taylor coefficients of the small-jump cumulant correction:
    /// `int_{|x|<=eps} x^k nu(dx) / k!` for `k = 2..=6`. The correction
    /// `sum_k u^k m_k/k!` reproduces `int_{|x|<=eps} (e^{ux}-1-ux) nu(dx)`
    /// to O((u eps)^5) relative accuracy, ample for `u*eps << 1`.
    pub(crate) fn small_jump_taylor(&self, eps: f64) -> [f64; 5] {
        let mut out = [0.0; 5];
        if eps <= 0.0 {
            return out;
        }
        let mut fact = 2.0;
        for (idx, k) in (2u32..=6).enumerate() {
            out[idx] = self.central_integral(|x| x.powi(k as i32), eps, 1e-14) / fact;
            fact *= (k + 1) as f64;
        }
        out
    }

    /// Total intensity of jumps larger than `eps`: `nu({|x| > eps})`.
    pub fn tail_intensity(&self, eps: f64) -> Result<f64> {
        let v = self.tail_integral(|_| 1.0, eps, 0.0, 0.0, quad::DEFAULT_TOL);
        if !v.is_finite() {
            return Err(Error::Config(format!(
                "non-finite big-jump intensity at eps = {eps}"
            )));
        }
        Ok(v)
    }

    /// First moment of the retained jumps: `int_{|x|>eps} x nu(dx)`.
    pub fn tail_mean(&self, eps: f64) -> f64 {
        self.tail_integral(|x| x, eps, 0.0, 0.0, quad::DEFAULT_TOL)
    }

    /// `int_{|x| > eps} f(x) nu(dx)` by adaptive quadrature.
    ///
    /// `growth_pos`/`growth_neg` bound the exponential growth of `f` on each
    /// side (|f(x)| <~ K e^{growth_pos x} for x -> +inf and similarly with
    /// |x| on the negative side); they set where the integral is cut off.
    /// For CGMY the growth must stay below the tempering rate on each side.
    pub fn tail_integral<F: Fn(f64) -> f64>(
        &self,
        f: F,
        eps: f64,
        growth_pos: f64,
        growth_neg: f64,
        tol: f64,
    ) -> f64 {
        assert!(eps > 0.0, "tail integral needs a positive truncation level");
        match self.variant {
            LevyVariant::Cgmy { c, g, m, y } => {
                // Substitute x = eps e^v on each side; the integrand becomes
                // smooth and the tempering gives a hard cutoff.
                let side = |temper: f64, sign: f64, growth: f64| -> f64 {
                    let rate = temper - growth;
                    assert!(rate > 0.0, "integrand growth exceeds CGMY tempering");
                    let vmax = (50.0 / rate / eps).max(2.0).ln();
                    let scale = c * eps.powf(-y);
                    quad::integrate(
                        |v| {
                            let x = eps * v.exp();
                            f(sign * x) * scale * (-y * v).exp() * (-temper * x).exp()
                        },
                        0.0,
                        vmax,
                        tol,
                    )
                };
                side(m, 1.0, growth_pos) + side(g, -1.0, growth_neg)
            }
            LevyVariant::Merton { intensity, mean, stdev } => {
                let dens = |x: f64| {
                    let z = (x - mean) / stdev;
                    intensity * (-0.5 * z * z).exp()
                        / (stdev * (2.0 * std::f64::consts::PI).sqrt())
                };
                let hi = mean + growth_pos * stdev * stdev + 12.0 * stdev;
                let lo = mean - growth_neg * stdev * stdev - 12.0 * stdev;
                let pos = if hi > eps {
                    quad::integrate(|x| f(x) * dens(x), eps, hi, tol)
                } else {
                    0.0
                };
                let neg = if lo < -eps {
                    quad::integrate(|x| f(x) * dens(x), lo, -eps, tol)
                } else {
                    0.0
                };
                pos + neg
            }
        }
    }

    /// `int_{0 < |x| <= eps} f(x) nu(dx)` for integrands with `f = O(x^2)`
    /// near zero (so the CGMY singularity is integrable).
    pub fn central_integral<F: Fn(f64) -> f64>(&self, f: F, eps: f64, tol: f64) -> f64 {
        if eps <= 0.0 {
            return 0.0;
        }
        match self.variant {
            LevyVariant::Cgmy { c, g, m, y } => {
                // x = eps e^{-v}: pushes the singularity to v = +inf where
                // the O(x^2) decay of f makes the integrand vanish; the
                // Jacobian x cancels one power of the density singularity.
                let side = |temper: f64, sign: f64| -> f64 {
                    let scale = c * eps.powf(-y);
                    quad::integrate(
                        |v| {
                            let x = eps * (-v).exp();
                            f(sign * x) * scale * (y * v).exp() * (-temper * x).exp()
                        },
                        0.0,
                        80.0,
                        tol,
                    )
                };
                side(m, 1.0) + side(g, -1.0)
            }
            LevyVariant::Merton { intensity, mean, stdev } => {
                let dens = |x: f64| {
                    let z = (x - mean) / stdev;
                    intensity * (-0.5 * z * z).exp()
                        / (stdev * (2.0 * std::f64::consts::PI).sqrt())
                };
                quad::integrate(|x| f(x) * dens(x), -eps, eps, tol)
            }
        }
    }

    /// Probability that a single Merton jump exceeds `eps` in magnitude.
    pub fn merton_tail_prob(&self, eps: f64) -> Option<f64> {
        if let LevyVariant::Merton { mean, stdev, .. } = self.variant {
            let n = Normal::new(mean, stdev).expect("validated at construction");
            Some(1.0 - (n.cdf(eps) - n.cdf(-eps)))
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_cgmy() -> LevyModel {
        LevyModel::cgmy(48.4201, 13.0, 13.0, 0.25, Alpha::Constant(0.0)).unwrap()
    }

    fn paper_merton() -> LevyModel {
        LevyModel::merton(5.0, 0.0, 0.2f64.sqrt(), Alpha::Constant(0.0)).unwrap()
    }

    #[test]
    fn cumulant_at_zero_vanishes() {
        assert_eq!(paper_cgmy().cumulant(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(paper_merton().cumulant(0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn merton_jump_cumulant_direct_value() {
        // intensity (exp(mean u + stdev^2 u^2 / 2) - 1 - mean u) at u = 0.2
        let m = paper_merton();
        let expected = 5.0 * ((0.5 * 0.2 * 0.04f64).exp() - 1.0);
        let got = m.jump_cumulant(0.2, 0.0).unwrap();
        assert!((got - expected).abs() < 1e-14);
        assert!((got - 0.02004).abs() < 5e-6);
    }

    #[test]
    fn pure_jump_cumulant_equals_full() {
        let m = paper_cgmy();
        for u in [-5.0, -1.0, 0.3, 2.0, 8.0] {
            assert_eq!(m.cumulant(u, 0.5).unwrap(), m.jump_cumulant(u, 0.5).unwrap());
        }
    }

    #[test]
    fn diffusion_part_adds_quadratic() {
        let m = LevyModel::merton(5.0, 0.0, 0.2f64.sqrt(), Alpha::Constant(0.3)).unwrap();
        let u = 0.7;
        let full = m.cumulant(u, 0.0).unwrap();
        let jump = m.jump_cumulant(u, 0.0).unwrap();
        assert!((full - jump - 0.5 * 0.3 * u * u).abs() < 1e-15);
    }

    #[test]
    fn cgmy_domain_error() {
        let m = paper_cgmy();
        assert!(m.cumulant(13.5, 0.0).is_err());
        assert!(m.cumulant(-14.0, 0.0).is_err());
        assert!(m.cumulant(12.9, 0.0).is_ok());
    }

    #[test]
    fn density_errors_at_zero_and_is_positive() {
        let m = paper_cgmy();
        assert!(m.levy_density(0.0).is_err());
        assert!(m.levy_density(0.01).unwrap() > 0.0);
        assert!(m.levy_density(-0.01).unwrap() > 0.0);
    }

    #[test]
    fn merton_density_bounded_near_zero() {
        let m = paper_merton();
        let sigma = 0.2f64.sqrt();
        let expected = 5.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        let got = m.levy_density(1e-12).unwrap();
        assert!((got - expected).abs() / expected < 1e-9);
    }

    #[test]
    fn cgmy_density_power_divergence() {
        // near zero the density behaves like C x^{-1.25}
        let m = paper_cgmy();
        let x = 1e-7;
        let ratio = m.levy_density(x).unwrap() / (48.4201 * x.powf(-1.25));
        assert!((ratio - 1.0).abs() < 1e-4);
    }

    #[test]
    fn small_jump_variance_matches_reference() {
        let v = paper_cgmy().small_jump_variance(1e-3);
        assert!((v - 3.11e-4).abs() / 3.11e-4 < 0.01, "got {v}");
    }

    #[test]
    fn small_jump_variance_vanishes_with_eps() {
        let m = paper_cgmy();
        assert!(m.small_jump_variance(1e-9) < 1e-8);
        assert_eq!(m.small_jump_variance(0.0), 0.0);
    }

    #[test]
    fn merton_small_jump_variance_vs_direct_quadrature() {
        let m = paper_merton();
        let sigma = 0.2f64.sqrt();
        let eps = 1e-3;
        let direct = quad::integrate(
            |x| {
                let z = x / sigma;
                5.0 * x * x * (-0.5 * z * z).exp()
                    / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            },
            -eps,
            eps,
            1e-14,
        );
        assert!((m.small_jump_variance(eps) - direct).abs() < 1e-12);
    }

    #[test]
    fn tail_intensity_merton_matches_normal_cdf() {
        let m = paper_merton();
        let eps = 1e-3;
        let by_quad = m.tail_intensity(eps).unwrap();
        let by_cdf = 5.0 * m.merton_tail_prob(eps).unwrap();
        assert!((by_quad - by_cdf).abs() < 1e-8);
        assert!((by_cdf - 4.991).abs() < 5e-4);
    }

    #[test]
    fn variance_splits_between_tail_and_center() {
        // int x^2 nu = kappa''(0) = 1 for the calibrated models
        for m in [paper_cgmy(), paper_merton()] {
            let eps = 1e-3;
            let total = m.small_jump_variance(eps)
                + m.tail_integral(|x| x * x, eps, 0.0, 0.0, 1e-12);
            assert!((total - 1.0).abs() < 1e-6, "got {total}");
        }
    }

    #[test]
    fn taylor_coefficients_reproduce_small_cumulant() {
        let m = paper_cgmy();
        let eps = 1e-3;
        let coef = m.small_jump_taylor(eps);
        for u in [0.2f64, 2.0, 12.0] {
            let series: f64 = coef
                .iter()
                .enumerate()
                .map(|(i, c)| c * u.powi(i as i32 + 2))
                .sum();
            let direct = m.central_integral(|x| (u * x).exp_m1() - u * x, eps, 1e-14);
            assert!((series - direct).abs() < 1e-12, "u={u}: {series} vs {direct}");
        }
    }
}

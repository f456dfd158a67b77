//! Multivariate Levy measures via Brownian subordination.
//!
//! Time-changing an m-dimensional Brownian motion by an independent
//! subordinator yields a pure-jump martingale Levy process whose measure has
//! absolutely continuous support: at a jump time all components jump, in an
//! uncorrelated (though not independent) way. This is the recommended
//! construction for multi-factor drivers; the pricing engine itself runs on
//! scalar drivers, so this module stands alone.

use crate::error::{Error, Result};
use crate::quad;
use rand::Rng;
use rand_distr::{Distribution, InverseGaussian, StandardNormal};

/// A driftless subordinator given by its Levy density `rho` on (0, inf)
/// and Laplace exponent `Xi(u) = int (e^{su} - 1) rho(ds)`, `u <= 0`
/// (extendable to small positive `u` where the integral converges).
pub trait Subordinator {
    /// Closed-form Laplace exponent.
    fn laplace(&self, u: f64) -> f64;
    /// Levy density `rho(s)`, `s > 0`.
    fn density(&self, s: f64) -> f64;
    /// Draw `S_t`.
    fn sample<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> f64;
}

/// Inverse Gaussian subordinator: `rho(ds) = c e^{-lam s} s^{-3/2} ds` with
/// `Xi(u) = -2 c sqrt(pi) (sqrt(lam - u) - sqrt(lam))`.
#[derive(Debug, Clone, Copy)]
pub struct InverseGaussianSubordinator {
    pub c: f64,
    pub lam: f64,
}

impl InverseGaussianSubordinator {
    pub fn new(c: f64, lam: f64) -> Result<Self> {
        if !(c > 0.0 && lam > 0.0) {
            return Err(Error::Config("IG subordinator needs c, lam > 0".into()));
        }
        Ok(Self { c, lam })
    }
}

impl Subordinator for InverseGaussianSubordinator {
    fn laplace(&self, u: f64) -> f64 {
        let pi = std::f64::consts::PI;
        -2.0 * self.c * pi.sqrt() * ((self.lam - u).sqrt() - self.lam.sqrt())
    }

    fn density(&self, s: f64) -> f64 {
        if s <= 0.0 {
            0.0
        } else {
            self.c * (-self.lam * s).exp() / s.powf(1.5)
        }
    }

    fn sample<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> f64 {
        // S_t is inverse Gaussian with mean c t sqrt(pi/lam) and shape
        // 2 pi c^2 t^2 (match of Laplace transforms).
        let pi = std::f64::consts::PI;
        let mean = self.c * t * (pi / self.lam).sqrt();
        let shape = 2.0 * pi * self.c * self.c * t * t;
        InverseGaussian::new(mean, shape)
            .expect("positive parameters")
            .sample(rng)
    }
}

/// The subordinated measure: characteristic exponent, Levy density and
/// direct sampling of `Y(t) = W(S_t)` in dimension `m`.
pub struct SubordinatedMeasure<S: Subordinator> {
    subordinator: S,
    dim: usize,
}

/// Build the measure for `Y(t) = W(S_t)`; checks `Xi(0) = 0`.
pub fn subordinate<S: Subordinator>(subordinator: S, dim: usize) -> Result<SubordinatedMeasure<S>> {
    if dim == 0 {
        return Err(Error::Config("dimension must be positive".into()));
    }
    let at_zero = subordinator.laplace(0.0);
    if at_zero.abs() > 1e-12 {
        return Err(Error::Config(format!(
            "not a subordinator Laplace exponent: Xi(0) = {at_zero}"
        )));
    }
    Ok(SubordinatedMeasure { subordinator, dim })
}

impl<S: Subordinator> SubordinatedMeasure<S> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Characteristic exponent `Phi(z) = Xi(-||z||^2 / 2)` (closed form).
    pub fn char_exponent(&self, z: &[f64]) -> f64 {
        let n2: f64 = z.iter().map(|v| v * v).sum();
        self.subordinator.laplace(-0.5 * n2)
    }

    /// `Phi(z)` by direct quadrature of `int (e^{-s||z||^2/2} - 1) rho(ds)`;
    /// the integrand is O(s^{-1/2}) at zero, handled by `s = v^2`.
    pub fn char_exponent_by_quadrature(&self, z: &[f64], tol: f64) -> f64 {
        let n2: f64 = z.iter().map(|v| v * v).sum();
        let f = |s: f64| (-0.5 * s * n2).exp_m1() * self.subordinator.density(s);
        // substitute s = v^2 on (0, 1], direct tail on [1, smax]
        let head = quad::integrate(|v| f(v * v) * 2.0 * v, 0.0, 1.0, tol);
        let tail = quad::integrate(f, 1.0, 500.0, tol);
        head + tail
    }

    /// Mixture Levy density `nu(x) = int (2 pi s)^{-m/2} e^{-||x||^2/2s} rho(ds)`.
    pub fn levy_density(&self, x: &[f64]) -> Result<f64> {
        let n2: f64 = x.iter().map(|v| v * v).sum();
        if n2 == 0.0 {
            return Err(Error::Domain("Levy density undefined at x = 0".into()));
        }
        let m = self.dim as f64;
        let two_pi = 2.0 * std::f64::consts::PI;
        let f = |s: f64| (two_pi * s).powf(-0.5 * m) * (-0.5 * n2 / s).exp() * self.subordinator.density(s);
        let head = quad::integrate(|v| f(v * v) * 2.0 * v, 0.0, 1.0, 1e-12);
        let tail = quad::integrate(f, 1.0, 500.0, 1e-12);
        Ok(head + tail)
    }

    /// Draw `Y(t) = W(S_t)`: one subordinator draw, then `m` conditionally
    /// independent Gaussians scaled by `sqrt(S_t)`.
    pub fn sample<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> Vec<f64> {
        let s = self.subordinator.sample(t, rng);
        let sd = s.sqrt();
        (0..self.dim)
            .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }
}

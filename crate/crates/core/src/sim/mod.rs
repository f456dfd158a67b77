//! Path generation: log-Euler stepping of the exact dynamics, direct
//! sampling of the log-Levy kernels, and the annuity scheme, all sharing
//! per-path jump realizations for common random numbers.

mod annuity;
mod batch;
mod euler;
mod loglevy;
mod rng;

pub use batch::{AnnuityBatch, PathBatch};
pub use rng::{master_key, path_streams, PathStreams};

use crate::annuity::AnnuityKernels;
use crate::approx::LogLevyKernels;
use crate::error::{Error, Result};
use crate::kernels::CumulantKernels;
use crate::market::MarketSetup;
use crate::models::LevyModel;

/// Which dynamics a batch is simulated under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Euler on the exact drift (exponential cost in N).
    EulerFull,
    /// Euler on the drift truncated at the given subset order.
    EulerTruncated(usize),
    /// Euler on the frozen (order-2, time-0) drift.
    EulerFrozen,
    /// Direct sampling of the log-Levy kernels at the given order (1 or 2).
    LogLevy(usize),
    /// Direct sampling of the frozen-drift kernels.
    FrozenKernel,
    /// Frozen annuity stochastic exponential (produces an annuity batch).
    Annuity,
}

impl Scheme {
    pub fn label(&self) -> String {
        match self {
            Scheme::EulerFull => "euler-full".into(),
            Scheme::EulerTruncated(p) => format!("euler-order-{p}"),
            Scheme::EulerFrozen => "euler-frozen".into(),
            Scheme::LogLevy(o) => format!("loglevy-{o}"),
            Scheme::FrozenKernel => "frozen-kernel".into(),
            Scheme::Annuity => "annuity".into(),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("euler-order-") {
            let p: usize = rest
                .parse()
                .map_err(|_| Error::Config(format!("bad drift order in scheme '{s}'")))?;
            return Ok(Scheme::EulerTruncated(p));
        }
        if let Some(rest) = s.strip_prefix("loglevy-") {
            let o: usize = rest
                .parse()
                .map_err(|_| Error::Config(format!("bad order in scheme '{s}'")))?;
            return Ok(Scheme::LogLevy(o));
        }
        match s {
            "euler-full" => Ok(Scheme::EulerFull),
            "euler-frozen" => Ok(Scheme::EulerFrozen),
            "frozen-kernel" => Ok(Scheme::FrozenKernel),
            "annuity" => Ok(Scheme::Annuity),
            _ => Err(Error::Config(format!("unknown scheme '{s}'"))),
        }
    }

    /// Truncation order the kernel tables must be built for.
    pub fn required_order(&self) -> usize {
        match self {
            Scheme::EulerTruncated(p) => (*p).max(2),
            _ => 2,
        }
    }
}

/// Simulation parameters shared by all schemes.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub paths: usize,
    /// Euler sub-steps per accrual period.
    pub sub_steps: usize,
    /// Jump truncation level.
    pub eps: f64,
    pub seed: u64,
    pub scheme: Scheme,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::Config("path count must be >= 1".into()));
        }
        if self.sub_steps == 0 {
            return Err(Error::Config("sub-steps must be >= 1".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config("jump truncation eps must be positive".into()));
        }
        Ok(())
    }
}

/// Simulate a LIBOR batch under any non-annuity scheme.
pub fn simulate_libor(
    model: &LevyModel,
    setup: &MarketSetup,
    kernels: &CumulantKernels,
    config: &SimConfig,
) -> Result<PathBatch> {
    config.validate()?;
    if (kernels.eps() - config.eps).abs() > 0.0 {
        return Err(Error::Config("kernels were built with a different eps".into()));
    }
    match config.scheme {
        Scheme::EulerFull => euler::simulate(model, setup, kernels, config, euler::DriftVariant::Full),
        Scheme::EulerTruncated(p) => {
            euler::simulate(model, setup, kernels, config, euler::DriftVariant::Truncated(p))
        }
        Scheme::EulerFrozen => {
            euler::simulate(model, setup, kernels, config, euler::DriftVariant::Frozen)
        }
        Scheme::LogLevy(order) => {
            let kern = LogLevyKernels::build(model, setup, kernels, order, false)?;
            loglevy::simulate(model, setup, &kern, config)
        }
        Scheme::FrozenKernel => {
            let kern = LogLevyKernels::build(model, setup, kernels, 2, true)?;
            loglevy::simulate(model, setup, &kern, config)
        }
        Scheme::Annuity => Err(Error::Config(
            "the annuity scheme produces an annuity batch; use simulate_annuity".into(),
        )),
    }
}

/// Simulate the annuity batch (frozen stochastic-exponential scheme).
pub fn simulate_annuity(
    model: &LevyModel,
    setup: &MarketSetup,
    kernels: &CumulantKernels,
    config: &SimConfig,
) -> Result<AnnuityBatch> {
    config.validate()?;
    let kern = AnnuityKernels::build(model, setup, kernels)?;
    annuity::simulate(model, setup, &kern, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_labels_roundtrip() {
        for s in [
            Scheme::EulerFull,
            Scheme::EulerTruncated(1),
            Scheme::EulerTruncated(3),
            Scheme::EulerFrozen,
            Scheme::LogLevy(1),
            Scheme::LogLevy(2),
            Scheme::FrozenKernel,
            Scheme::Annuity,
        ] {
            assert_eq!(Scheme::parse(&s.label()).unwrap(), s);
        }
        assert!(Scheme::parse("euler-order-x").is_err());
        assert!(Scheme::parse("midpoint").is_err());
    }
}

//! Simulation and pricing engine for Levy-driven LIBOR market models.

pub mod drift;
pub mod error;
pub mod kernels;
pub mod market;
pub mod models;
pub mod pricing;
pub mod quad;
pub mod sim;
pub mod sampling;
pub mod subordinate;
pub mod verify;

pub use drift::DriftEngine;
pub use error::{Error, Result};
pub use pricing::{paired_diff, PriceEstimate};
pub use sim::{simulate_annuity, simulate_libor, AnnuityBatch, PathBatch, Scheme, SimConfig};
pub use kernels::CumulantKernels;
pub use market::{
    validate_setup, validity_indicator, DiscountCurve, MarketSetup, TenorStructure, VolLoading,
};
pub use models::{Alpha, LevyModel, LevyVariant};
pub use sampling::{sample_jumps, JumpSample, JumpSampler};
pub mod annuity;
pub mod approx;
pub use annuity::AnnuityKernels;
pub use approx::LogLevyKernels;

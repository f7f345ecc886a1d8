//! Confidence statements for the bound curves and for `ε₀`.
//!
//! - [`multiplier_bootstrap_bands`]: uniform-in-`ε` bands for the
//!   identification region from Rademacher multiplier draws of the centered
//!   influence terms.
//! - [`imbens_manski_band`]: pointwise bands covering the ATE itself.
//! - [`estimate_epsilon0`]: the root of `ψ_l(ε)ψ_u(ε)` with a delta-method
//!   Wald interval.

mod bootstrap;
mod epsilon0;
mod imbens_manski;

pub use bootstrap::{
    bands_from_draws, critical_values, draw_statistics, multiplier_bootstrap_bands, BandSet, BootstrapDraws,
    BootstrapPlan, Multipliers,
};
pub use epsilon0::{estimate_epsilon0, locate_crossing, Crossing, EpsilonZero};
pub use imbens_manski::{imbens_manski_band, imbens_manski_critical};

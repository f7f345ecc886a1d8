//! Sensitivity analysis for the average treatment effect (ATE) when an
//! unknown proportion `ε` of units is arbitrarily confounded.
//!
//! The crate computes sharp lower and upper bounds on the ATE as functions of
//! `ε` (and of the confounding-severity parameter `δ`), estimates them with
//! cross-fitted influence-function estimators, attaches pointwise and uniform
//! confidence bands, and estimates the robustness summary `ε₀`: the smallest
//! proportion of confounded units at which the bounds contain zero.
//!
//! Layout:
//!
//! - [`data`], [`config`], [`folds`], [`rng`]: domain types, validation and
//!   deterministic randomness.
//! - [`nuisance`]: cross-fitted propensity and outcome regressions plus the
//!   per-fold quantile tables of `g`.
//! - [`bounds`]: `g`, the influence-function terms, sample and population
//!   bound estimators, rearrangement.
//! - [`inference`]: multiplier-bootstrap uniform bands, Imbens–Manski
//!   pointwise bands and the `ε₀` Z-estimator.
//! - [`oracle`]: brute-force LP checks on finite instances.
//! - [`simulation`]: the synthetic data-generating process, its ground truth
//!   and a Monte Carlo harness.
//! - [`analysis`]: the end-to-end pipeline used by the command line tool.

pub mod analysis;
pub mod bounds;
pub mod config;
pub mod data;
pub mod error;
pub mod exec;
pub mod folds;
pub mod inference;
pub mod normal;
pub mod nuisance;
pub mod oracle;
pub mod rng;
pub mod simulation;

pub use config::{LearnerKind, Model, SensitivityConfig};
pub use data::{validate_dataset, Dataset, RawDataset};
pub use error::{Error, Result};
pub use exec::Execution;
pub use folds::{make_folds, FoldPlan};
pub use rng::StreamRng;

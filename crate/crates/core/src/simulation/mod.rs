//! Synthetic data-generating process with a binary unmeasured confounder,
//! its exact observed-data nuisances, ground-truth bound curves and a Monte
//! Carlo harness.
//!
//! Sampling steps, with `Φ` the standard normal CDF:
//!
//! ```text
//! X₁, X₂ ~ N(0, 1) truncated to [−2, 2],   U ~ Bern(0.5)
//! S | X  ~ Bern(Φ(X₁))
//! A | X, U, S ~ Bern(0.5{Φ(X₁) + 0.5S + (1 − S)U})
//! Yᵃ | X, U   ~ Bern(0.25 + 0.5Φ(X₁ + X₂) + (a − 0.5)r − 0.1U)
//! Y = A·Y¹ + (1 − A)·Y⁰
//! ```
//!
//! so that `E(Y¹ − Y⁰) = r` while `E{μ₁(X) − μ₀(X)}` is smaller.

mod study;
mod truth;

pub use study::{aggregate, run_replicate, run_study, ReplicateRecord, SimReport};
pub use truth::{oracle_truth, oracle_truth_uncached, truth_population, TrueCurves, CACHE_ENV, QUADRATURE_POINTS};

use crate::data::{validate_dataset_for_folds, Dataset, RawDataset};
use crate::error::{Error, Result};
use crate::normal;
use crate::nuisance::{Target, TruthFn};
use ndarray::{Array2, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Truncation limit of both covariates.
pub const TRUNCATION: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgpConfig {
    /// True ATE.
    pub r: f64,
    pub n: usize,
    pub seed: u64,
}

impl DgpConfig {
    /// Rejects `r` for which some outcome probability leaves `[0, 1]`.
    pub fn new(r: f64, n: usize, seed: u64) -> Result<Self> {
        let cfg = Self { r, n, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.r.is_finite() {
            return Err(Error::InvalidConfig(format!("r must be finite, got {}", self.r)));
        }
        // X₁ + X₂ ranges over [−4, 4]; U and a take their extreme values
        let (phi_lo, phi_hi) = (normal::cdf(-2.0 * TRUNCATION), normal::cdf(2.0 * TRUNCATION));
        let lo = 0.25 + 0.5 * phi_lo - 0.5 * self.r.abs() - 0.1;
        let hi = 0.25 + 0.5 * phi_hi + 0.5 * self.r.abs();
        for value in [lo, hi] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::ProbabilityOutOfRange {
                    what: format!("outcome probability at r = {}", self.r),
                    value,
                });
            }
        }
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be positive".into()));
        }
        Ok(())
    }
}

/// Unobserved columns, row-aligned with the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentTable {
    pub u: Vec<u8>,
    pub s: Vec<u8>,
    pub y0: Vec<u8>,
    pub y1: Vec<u8>,
}

/// Standard normal truncated to `[−2, 2]` by inverting the CDF on the
/// truncated uniform range. Consumes one uniform draw.
pub fn sample_truncnorm<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let (lo, hi) = (normal::cdf(-TRUNCATION), normal::cdf(TRUNCATION));
    let u: f64 = rng.random();
    normal::quantile(lo + u * (hi - lo)).clamp(-TRUNCATION, TRUNCATION)
}

/// Density of the truncated normal on `[−2, 2]`.
pub fn truncnorm_pdf(x: f64) -> f64 {
    if x.abs() > TRUNCATION {
        return 0.0;
    }
    normal::pdf(x) / (normal::cdf(TRUNCATION) - normal::cdf(-TRUNCATION))
}

fn bern<R: Rng + ?Sized>(rng: &mut R, p: f64) -> u8 {
    u8::from(rng.random::<f64>() < p)
}

/// Outcome probability of `Yᵃ` given `(X, U)`.
fn outcome_probability(r: f64, x1: f64, x2: f64, a: u8, u: u8) -> f64 {
    0.25 + 0.5 * normal::cdf(x1 + x2) + (a as f64 - 0.5) * r - 0.1 * u as f64
}

/// `n` draws of the process with outcome range fixed to `[0, 1]`.
pub fn generate<R: Rng + ?Sized>(dgp: &DgpConfig, rng: &mut R) -> Result<(Dataset, LatentTable)> {
    dgp.validate()?;
    let n = dgp.n;
    let mut x = Array2::zeros((n, 2));
    let mut treatment = Vec::with_capacity(n);
    let mut outcome = Vec::with_capacity(n);
    let mut latent = LatentTable {
        u: Vec::with_capacity(n),
        s: Vec::with_capacity(n),
        y0: Vec::with_capacity(n),
        y1: Vec::with_capacity(n),
    };
    for i in 0..n {
        let (x1, x2) = (sample_truncnorm(rng), sample_truncnorm(rng));
        let u = bern(rng, 0.5);
        let phi = normal::cdf(x1);
        let s = bern(rng, phi);
        let a = bern(rng, 0.5 * (phi + 0.5 * s as f64 + (1 - s) as f64 * u as f64));
        let y0 = bern(rng, outcome_probability(dgp.r, x1, x2, 0, u));
        let y1 = bern(rng, outcome_probability(dgp.r, x1, x2, 1, u));
        x[[i, 0]] = x1;
        x[[i, 1]] = x2;
        treatment.push(a as f64);
        outcome.push(if a == 1 { y1 } else { y0 } as f64);
        latent.u.push(u);
        latent.s.push(s);
        latent.y0.push(y0);
        latent.y1.push(y1);
    }
    let raw = RawDataset {
        covariates: x,
        treatment,
        outcome,
        y_min: Some(0.0),
        y_max: Some(1.0),
    };
    Ok((validate_dataset_for_folds(raw, 1)?, latent))
}

/// Exact observed-data nuisances at one covariate point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrueNuisances {
    pub pi1: f64,
    pub mu0: f64,
    pub mu1: f64,
}

/// `π₁ = 0.5(Φ(x₁) + 0.5)` after averaging over `S` and `U`; `μ_a` replaces
/// `U` by its conditional mean given `A = a` and `X`.
pub fn true_nuisances(r: f64, x1: f64, x2: f64) -> TrueNuisances {
    let phi = normal::cdf(x1);
    let pi1 = 0.5 * (phi + 0.5);
    // P(A = a, U = 1 | X) / P(A = a | X)
    let u1 = 0.25 * (0.5 * phi + 1.0) / pi1;
    let u0 = 0.5 * (0.5 - 0.25 * phi) / (1.0 - pi1);
    let base = 0.25 + 0.5 * normal::cdf(x1 + x2);
    TrueNuisances {
        pi1,
        mu0: base - 0.5 * r - 0.1 * u0,
        mu1: base + 0.5 * r - 0.1 * u1,
    }
}

/// Truth function for the oracle learner.
pub fn truth_fn(r: f64) -> TruthFn {
    Arc::new(move |target: Target, row: ArrayView1<f64>| {
        let t = true_nuisances(r, row[0], row[1]);
        match target {
            Target::Propensity => t.pi1,
            Target::Outcome(0) => t.mu0,
            Target::Outcome(_) => t.mu1,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;

    #[test]
    fn rejects_extreme_effects() {
        assert!(DgpConfig::new(0.05, 100, 0).is_ok());
        assert!(DgpConfig::new(-0.29, 100, 0).is_ok());
        assert!(DgpConfig::new(0.31, 100, 0).is_err());
        assert!(DgpConfig::new(f64::NAN, 100, 0).is_err());
        assert!(DgpConfig::new(0.05, 0, 0).is_err());
    }

    #[test]
    fn truncnorm_stays_in_range() {
        let mut rng = StreamRng::new(1, 0).generator();
        assert!((0..100_000).all(|_| sample_truncnorm(&mut rng).abs() <= TRUNCATION));
    }

    #[test]
    fn generated_data_has_unit_range_and_consistent_outcomes() {
        let dgp = DgpConfig::new(0.05, 2000, 3).unwrap();
        let (data, latent) = generate(&dgp, &mut StreamRng::new(3, 0).generator()).unwrap();
        assert_eq!((data.y_min(), data.y_max()), (0.0, 1.0));
        for i in 0..data.n() {
            let a = data.treatment()[i];
            let y = if a == 1 { latent.y1[i] } else { latent.y0[i] };
            assert_eq!(data.outcome()[i], y as f64);
        }
    }

    #[test]
    fn nuisances_match_direct_marginalisation() {
        // enumerate S and U by hand at a few points
        for &(x1, x2) in &[(-1.5, 0.3), (0.0, 0.0), (1.2, -1.9)] {
            let phi = normal::cdf(x1);
            let mut p_a = [0.0; 2];
            let mut p_ay = [0.0; 2];
            for s in 0..2u8 {
                for u in 0..2u8 {
                    let w = if s == 1 { phi } else { 1.0 - phi } * 0.5;
                    let p1 = 0.5 * (phi + 0.5 * s as f64 + (1 - s) as f64 * u as f64);
                    for a in 0..2u8 {
                        let pa = if a == 1 { p1 } else { 1.0 - p1 };
                        p_a[a as usize] += w * pa;
                        p_ay[a as usize] += w * pa * outcome_probability(0.05, x1, x2, a, u);
                    }
                }
            }
            let t = true_nuisances(0.05, x1, x2);
            assert!((t.pi1 - p_a[1]).abs() < 1e-15);
            assert!((t.mu1 - p_ay[1] / p_a[1]).abs() < 1e-14);
            assert!((t.mu0 - p_ay[0] / p_a[0]).abs() < 1e-14);
        }
    }
}

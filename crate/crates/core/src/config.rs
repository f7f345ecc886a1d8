//! Analysis configuration.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Which conditional-independence restriction on the latent confounding
/// indicator `S` the bounds assume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    /// `S ⊥ (A, Y) | X`.
    #[serde(rename = "x")]
    XMixture,
    /// `S ⊥ Y | (A, X)`; wider bounds.
    #[serde(rename = "xa")]
    XaMixture,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::XMixture => "x",
            Model::XaMixture => "xa",
        })
    }
}

impl FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Model::XMixture),
            "xa" => Ok(Model::XaMixture),
            other => Err(Error::InvalidConfig(format!(
                "unknown model '{other}' (expected x or xa)"
            ))),
        }
    }
}

/// Registered nuisance learners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LearnerKind {
    /// Logistic regression (IRLS) for the propensity and both outcome
    /// regressions.
    #[serde(rename = "logistic")]
    Logistic,
    /// k-nearest-neighbour means for all three regressions.
    #[serde(rename = "knn")]
    Knn,
    /// Logistic propensity, k-nearest-neighbour outcome regressions.
    #[serde(rename = "logistic-knn")]
    LogisticKnn,
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LearnerKind::Logistic => "logistic",
            LearnerKind::Knn => "knn",
            LearnerKind::LogisticKnn => "logistic-knn",
        })
    }
}

impl FromStr for LearnerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logistic" => Ok(LearnerKind::Logistic),
            "knn" => Ok(LearnerKind::Knn),
            "logistic-knn" => Ok(LearnerKind::LogisticKnn),
            other => Err(Error::InvalidConfig(format!(
                "unknown learner '{other}' (expected logistic, knn or logistic-knn)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityConfig {
    /// Grid of confounding proportions for the bound curves and bands.
    pub eps_grid: Vec<f64>,
    /// Finer grid searched for `ε₀`; falls back to `eps_grid`.
    pub eps0_grid: Option<Vec<f64>>,
    pub delta_grid: Vec<f64>,
    pub model: Model,
    pub folds: usize,
    pub alpha: f64,
    pub bootstrap_reps: usize,
    /// Propensity clipping level `t`: predictions are forced into `[t, 1 - t]`.
    pub clip: f64,
    pub seed: u64,
    pub learner: LearnerKind,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            eps_grid: linspace(0.0, 0.2, 21),
            eps0_grid: None,
            delta_grid: vec![1.0],
            model: Model::XMixture,
            folds: 5,
            alpha: 0.05,
            bootstrap_reps: 1000,
            clip: 0.01,
            seed: 0,
            learner: LearnerKind::LogisticKnn,
        }
    }
}

impl SensitivityConfig {
    pub fn validate(&self) -> Result<()> {
        check_grid("eps_grid", &self.eps_grid)?;
        if let Some(g) = &self.eps0_grid {
            check_grid("eps0_grid", g)?;
        }
        check_grid("delta_grid", &self.delta_grid)?;
        if self.folds < 2 {
            return Err(Error::InvalidConfig(format!("folds must be >= 2, got {}", self.folds)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.bootstrap_reps == 0 {
            return Err(Error::InvalidConfig("bootstrap_reps must be positive".into()));
        }
        if !(self.clip > 0.0 && self.clip < 0.5) {
            return Err(Error::InvalidConfig(format!(
                "clip must lie in (0, 0.5), got {}",
                self.clip
            )));
        }
        Ok(())
    }

    pub fn eps0_grid(&self) -> &[f64] {
        self.eps0_grid.as_deref().unwrap_or(&self.eps_grid)
    }
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig(format!("{name} is empty")));
    }
    if let Some(v) = grid.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidConfig(format!("{name} value {v} outside [0, 1]")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig(format!("{name} must be strictly increasing")));
    }
    Ok(())
}

/// `count` equally spaced points from `start` to `end` inclusive. The end
/// point is exact.
pub fn linspace(start: f64, end: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![start],
        _ => {
            let step = (end - start) / (count - 1) as f64;
            (0..count)
                .map(|i| if i + 1 == count { end } else { start + step * i as f64 })
                .collect()
        }
    }
}

/// Parses `start:end:count`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let bad = || Error::InvalidConfig(format!("grid '{spec}' is not of the form start:end:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].parse().map_err(|_| bad())?;
    let end: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    if count == 0 || (count > 1 && end <= start) {
        return Err(bad());
    }
    Ok(linspace(start, end, count))
}

/// Parses a comma-separated list of reals.
pub fn parse_list(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("'{s}' is not a number")))
        })
        .collect()
}

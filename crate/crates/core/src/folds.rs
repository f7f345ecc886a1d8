//! Balanced random assignment of observations to cross-fitting folds.

use crate::error::{Error, Result};
use crate::rng::StreamRng;
use rand::seq::SliceRandom;

/// Fold labels in `0..folds`, one per observation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    labels: Vec<usize>,
    folds: usize,
}

impl FoldPlan {
    /// Builds a plan from explicit labels; every fold in `0..folds` must be
    /// nonempty.
    pub fn from_labels(labels: Vec<usize>, folds: usize) -> Result<Self> {
        if folds < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 folds, got {folds}")));
        }
        let mut sizes = vec![0usize; folds];
        for &l in &labels {
            if l >= folds {
                return Err(Error::InvalidConfig(format!("fold label {l} >= {folds}")));
            }
            sizes[l] += 1;
        }
        if let Some(k) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidConfig(format!("fold {k} is empty")));
        }
        Ok(Self { labels, folds })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn folds(&self) -> usize {
        self.folds
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn fold_of(&self, i: usize) -> usize {
        self.labels[i]
    }

    /// Indices in fold `k`, ascending.
    pub fn members(&self, k: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == k).collect()
    }

    /// Indices outside fold `k`, ascending.
    pub fn complement(&self, k: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] != k).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.folds];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// Uniformly random balanced partition of `0..n` into `folds` groups whose
/// sizes differ by at most one.
pub fn make_folds(n: usize, folds: usize, rng: StreamRng) -> Result<FoldPlan> {
    if folds < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 folds, got {folds}")));
    }
    if n < folds {
        return Err(Error::TooFewObservations { have: n, need: folds });
    }
    let mut labels: Vec<usize> = (0..n).map(|i| i % folds).collect();
    labels.shuffle(&mut rng.generator());
    FoldPlan::from_labels(labels, folds)
}

//! Observed data `(X, A, Y)` and its validation.

use crate::error::{Error, Result};
use ndarray::Array2;

/// Default number of cross-fitting folds.
pub const DEFAULT_FOLDS: usize = 5;

/// Unvalidated input. `y_min`/`y_max` default to the observed range.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub covariates: Array2<f64>,
    pub treatment: Vec<f64>,
    pub outcome: Vec<f64>,
    pub y_min: Option<f64>,
    pub y_max: Option<f64>,
}

/// A validated dataset: binary treatment with both arms present, finite
/// entries, outcomes inside the declared `[y_min, y_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    covariates: Array2<f64>,
    treatment: Vec<u8>,
    outcome: Vec<f64>,
    y_min: f64,
    y_max: f64,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.outcome.len()
    }

    pub fn n_covariates(&self) -> usize {
        self.covariates.ncols()
    }

    pub fn covariates(&self) -> &Array2<f64> {
        &self.covariates
    }

    pub fn treatment(&self) -> &[u8] {
        &self.treatment
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn y_range(&self) -> f64 {
        self.y_max - self.y_min
    }

    /// Back to the raw form with the range made explicit.
    pub fn to_raw(&self) -> RawDataset {
        RawDataset {
            covariates: self.covariates.clone(),
            treatment: self.treatment.iter().map(|&a| a as f64).collect(),
            outcome: self.outcome.clone(),
            y_min: Some(self.y_min),
            y_max: Some(self.y_max),
        }
    }

    /// Copy keeping only `rows`, in the given order. The outcome range is kept.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            covariates: self.covariates.select(ndarray::Axis(0), rows),
            treatment: rows.iter().map(|&i| self.treatment[i]).collect(),
            outcome: rows.iter().map(|&i| self.outcome[i]).collect(),
            y_min: self.y_min,
            y_max: self.y_max,
        }
    }
}

/// Validates with the minimum sample size implied by [`DEFAULT_FOLDS`].
pub fn validate_dataset(raw: RawDataset) -> Result<Dataset> {
    validate_dataset_for_folds(raw, DEFAULT_FOLDS)
}

/// Validates, requiring at least two observations per fold.
pub fn validate_dataset_for_folds(raw: RawDataset, folds: usize) -> Result<Dataset> {
    let n = raw.outcome.len();
    if raw.treatment.len() != n || raw.covariates.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "covariates have {} rows, treatment {}, outcome {}",
            raw.covariates.nrows(),
            raw.treatment.len(),
            n
        )));
    }
    let need = 2 * folds.max(1);
    if n < need {
        return Err(Error::TooFewObservations { have: n, need });
    }

    for (i, row) in raw.covariates.outer_iter().enumerate() {
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEntry {
                row: i,
                column: format!("covariate {j}"),
            });
        }
        if !raw.treatment[i].is_finite() {
            return Err(Error::NonFiniteEntry {
                row: i,
                column: "treatment".into(),
            });
        }
        if !raw.outcome[i].is_finite() {
            return Err(Error::NonFiniteEntry {
                row: i,
                column: "outcome".into(),
            });
        }
    }

    let mut treatment = Vec::with_capacity(n);
    for (i, &a) in raw.treatment.iter().enumerate() {
        let arm = if a == 0.0 {
            0
        } else if a == 1.0 {
            1
        } else {
            return Err(Error::NonBinaryTreatment {
                row: Some(i),
                reason: format!("value {a} is not 0 or 1"),
            });
        };
        treatment.push(arm);
    }
    let treated = treatment.iter().filter(|&&a| a == 1).count();
    if treated == 0 || treated == n {
        return Err(Error::NonBinaryTreatment {
            row: None,
            reason: format!("every unit has treatment {}", treatment[0]),
        });
    }

    let observed_min = raw.outcome.iter().copied().fold(f64::INFINITY, f64::min);
    let observed_max = raw.outcome.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let y_min = raw.y_min.unwrap_or(observed_min);
    let y_max = raw.y_max.unwrap_or(observed_max);
    if !y_min.is_finite() || !y_max.is_finite() || y_min >= y_max {
        return Err(Error::DegenerateOutcomeRange { y_min, y_max });
    }
    if let Some(i) = raw.outcome.iter().position(|&y| y < y_min || y > y_max) {
        return Err(Error::OutcomeOutOfRange {
            row: i,
            value: raw.outcome[i],
            y_min,
            y_max,
        });
    }

    Ok(Dataset {
        covariates: raw.covariates,
        treatment,
        outcome: raw.outcome,
        y_min,
        y_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn raw10() -> RawDataset {
        let x = Array2::from_shape_fn((10, 2), |(i, j)| (i * 2 + j) as f64 / 10.0);
        RawDataset {
            covariates: x,
            treatment: (0..10).map(|i| (i % 2) as f64).collect(),
            outcome: (0..10).map(|i| i as f64 / 9.0).collect(),
            y_min: Some(0.0),
            y_max: Some(1.0),
        }
    }

    #[test]
    fn valid_input_passes_unchanged() {
        let raw = raw10();
        let d = validate_dataset(raw.clone()).unwrap();
        assert_eq!(d.to_raw(), raw);
    }

    #[test]
    fn idempotent() {
        let mut raw = raw10();
        raw.y_min = None;
        raw.y_max = None;
        let once = validate_dataset(raw).unwrap();
        let twice = validate_dataset(once.to_raw()).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn range_defaults_to_observed() {
        let mut raw = raw10();
        raw.y_min = None;
        raw.y_max = None;
        raw.outcome[3] = -2.0;
        raw.outcome[4] = 5.0;
        let d = validate_dataset(raw).unwrap();
        assert_eq!((d.y_min(), d.y_max()), (-2.0, 5.0));
    }

    #[test]
    fn all_zero_treatment_rejected() {
        let mut raw = raw10();
        raw.treatment = vec![0.0; 10];
        assert!(matches!(
            validate_dataset(raw),
            Err(Error::NonBinaryTreatment { row: None, .. })
        ));
    }

    #[test]
    fn non_binary_treatment_names_row() {
        let mut raw = raw10();
        raw.treatment[6] = 2.0;
        assert!(matches!(
            validate_dataset(raw),
            Err(Error::NonBinaryTreatment { row: Some(6), .. })
        ));
    }

    #[test]
    fn outcome_out_of_range() {
        let mut raw = raw10();
        raw.outcome[2] = 1.5;
        raw.outcome[7] = 1.7;
        assert!(matches!(
            validate_dataset(raw),
            Err(Error::OutcomeOutOfRange { row: 2, .. })
        ));
    }

    #[test]
    fn non_finite_entries() {
        let mut raw = raw10();
        raw.covariates[[4, 1]] = f64::NAN;
        assert!(matches!(
            validate_dataset(raw),
            Err(Error::NonFiniteEntry { row: 4, .. })
        ));
        let mut raw = raw10();
        raw.outcome[8] = f64::INFINITY;
        assert!(matches!(
            validate_dataset(raw),
            Err(Error::NonFiniteEntry { row: 8, .. })
        ));
    }

    #[test]
    fn too_few_rows() {
        let mut raw = raw10();
        raw.covariates = raw.covariates.slice(ndarray::s![..9, ..]).to_owned();
        raw.treatment.truncate(9);
        raw.outcome.truncate(9);
        assert_eq!(
            validate_dataset(raw),
            Err(Error::TooFewObservations { have: 9, need: 10 })
        );
    }

    #[test]
    fn constant_outcome_without_declared_range() {
        let mut raw = raw10();
        raw.outcome = vec![0.3; 10];
        raw.y_min = None;
        raw.y_max = None;
        assert!(matches!(
            validate_dataset(raw),
            Err(Error::DegenerateOutcomeRange { .. })
        ));
    }
}

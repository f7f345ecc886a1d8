use crate::error::{Error, Result};

/// Empirical distribution of a sample, queried through its left-continuous
/// generalized inverse `inf{x : F(x) ≥ τ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable {
    sorted: Vec<f64>,
}

impl QuantileTable {
    pub fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        Self { sorted: values }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// τ = 0 gives the minimum, τ = 1 the maximum.
    pub fn quantile(&self, tau: f64) -> Result<f64> {
        let m = self.sorted.len();
        if m == 0 {
            return Err(Error::EmptyTable);
        }
        Ok(self.sorted[quantile_index(tau, m)])
    }
}

/// Index of the left-continuous τ-quantile in a sorted sample of size `m`:
/// the smallest `j` with `(j + 1) / m ≥ τ`. A relative slack of 1e-9 keeps
/// grid values such as 0.3 from being pushed up an order statistic by
/// rounding in `τ·m`.
pub(crate) fn quantile_index(tau: f64, m: usize) -> usize {
    let scaled = tau.clamp(0.0, 1.0) * m as f64;
    let j = (scaled - 1e-9 * scaled.max(1.0)).ceil() as isize - 1;
    j.clamp(0, m as isize - 1) as usize
}

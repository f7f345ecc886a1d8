//! k-nearest-neighbour regression on standardized covariates.

use super::logistic::standardization;
use super::{Learner, Predictor, Target};
use crate::error::{Error, Result};
use ndarray::{Array2, ArrayView1, ArrayView2};

/// `k = ⌈m^{4/5} / 2⌉` for a training set of size `m`, capped at `m`.
pub fn default_k(m: usize) -> usize {
    (((m as f64).powf(0.8) / 2.0).ceil() as usize).clamp(1, m.max(1))
}

#[derive(Debug, Clone, Default)]
pub struct KnnLearner {
    /// Fixed neighbourhood size; `None` uses [`default_k`].
    pub k: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct KnnModel {
    center: Vec<f64>,
    scale: Vec<f64>,
    train: Array2<f64>,
    target: Vec<f64>,
    k: usize,
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }
}

impl Predictor for KnnModel {
    fn predict(&self, row: ArrayView1<f64>) -> f64 {
        let query: Vec<f64> = row
            .iter()
            .enumerate()
            .map(|(j, v)| (v - self.center[j]) / self.scale[j])
            .collect();
        let mut dist: Vec<(f64, usize)> = self
            .train
            .outer_iter()
            .enumerate()
            .map(|(i, t)| {
                let d: f64 = t.iter().zip(&query).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, i)
            })
            .collect();
        // ties broken by training index so predictions are reproducible
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, cmp);
        }
        dist[..self.k].iter().map(|&(_, i)| self.target[i]).sum::<f64>() / self.k as f64
    }
}

pub fn fit_knn(x: ArrayView2<f64>, y: &[f64], k: Option<usize>) -> Result<KnnModel> {
    let m = x.nrows();
    if m == 0 || y.len() != m {
        return Err(Error::LearnerFailure("k-NN needs matching nonempty data".into()));
    }
    let k = k.unwrap_or_else(|| default_k(m)).clamp(1, m);
    let (center, scale) = standardization(x);
    let train = Array2::from_shape_fn(x.dim(), |(i, j)| (x[[i, j]] - center[j]) / scale[j]);
    Ok(KnnModel {
        center,
        scale,
        train,
        target: y.to_vec(),
        k,
    })
}

impl Learner for KnnLearner {
    fn name(&self) -> &str {
        "knn"
    }

    fn fit(&self, _target: Target, x: ArrayView2<f64>, y: &[f64]) -> Result<Box<dyn Predictor>> {
        Ok(Box::new(fit_knn(x, y, self.k)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr1;

    #[test]
    fn k_rule() {
        assert_eq!(default_k(1), 1);
        assert_eq!(default_k(400), 61);
        assert_eq!(default_k(4000), ((4000f64).powf(0.8) / 2.0).ceil() as usize);
    }

    #[test]
    fn brute_force_neighbours() {
        let x = Array2::from_shape_vec((5, 1), vec![0.0, 1.0, 2.0, 3.0, 10.0]).unwrap();
        let y = [0.0, 1.0, 2.0, 3.0, 4.0];
        let m = fit_knn(x.view(), &y, Some(2)).unwrap();
        // nearest two to 2.4 are 2 and 3
        assert!((m.predict(arr1(&[2.4]).view()) - 2.5).abs() < 1e-12);
        let m = fit_knn(x.view(), &y, Some(5)).unwrap();
        assert!((m.predict(arr1(&[100.0]).view()) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn predictions_stay_in_target_hull() {
        let x = Array2::from_shape_fn((30, 2), |(i, j)| ((i * 7 + j * 3) % 11) as f64);
        let y: Vec<f64> = (0..30).map(|i| (i % 4) as f64 / 3.0).collect();
        let m = fit_knn(x.view(), &y, None).unwrap();
        for i in 0..30 {
            let p = m.predict(x.row(i));
            assert!((0.0..=1.0).contains(&p));
        }
    }
}

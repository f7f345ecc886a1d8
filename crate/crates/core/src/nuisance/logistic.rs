//! Logistic regression fitted by iteratively reweighted least squares.
//!
//! Targets may be fractional (quasi-binomial), so the same learner serves
//! binary treatment and outcomes rescaled to `[0, 1]`.

use super::{Learner, Predictor, Target};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use ndarray::{ArrayView1, ArrayView2};

const MAX_ITER: usize = 100;
const TOL: f64 = 1e-10;
const RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, Default)]
pub struct LogisticLearner;

#[derive(Debug, Clone)]
pub struct LogisticModel {
    center: Vec<f64>,
    scale: Vec<f64>,
    /// Intercept first.
    coef: Vec<f64>,
}

impl LogisticModel {
    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    fn linear(&self, row: ArrayView1<f64>) -> f64 {
        let mut eta = self.coef[0];
        for (j, &x) in row.iter().enumerate() {
            eta += self.coef[j + 1] * (x - self.center[j]) / self.scale[j];
        }
        eta
    }
}

impl Predictor for LogisticModel {
    fn predict(&self, row: ArrayView1<f64>) -> f64 {
        sigmoid(self.linear(row))
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn standardization(x: ArrayView2<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = x.nrows() as f64;
    let mut center = Vec::with_capacity(x.ncols());
    let mut scale = Vec::with_capacity(x.ncols());
    for col in x.columns() {
        let m = col.sum() / n;
        let v = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        center.push(m);
        scale.push(if v > 1e-24 { v.sqrt() } else { 1.0 });
    }
    (center, scale)
}

/// Penalised negative log-likelihood.
fn objective(z: &DMatrix<f64>, y: &[f64], beta: &DVector<f64>) -> f64 {
    let eta = z * beta;
    let mut nll = 0.0;
    for (i, &t) in eta.iter().enumerate() {
        // log(1 + e^t) - y t, computed stably
        let softplus = if t > 0.0 {
            t + (-t).exp().ln_1p()
        } else {
            t.exp().ln_1p()
        };
        nll += softplus - y[i] * t;
    }
    nll + 0.5 * RIDGE * beta.iter().skip(1).map(|b| b * b).sum::<f64>()
}

pub fn fit_logistic(x: ArrayView2<f64>, y: &[f64]) -> Result<LogisticModel> {
    let n = x.nrows();
    let p = x.ncols();
    if n == 0 || y.len() != n {
        return Err(Error::LearnerFailure(
            "logistic regression needs matching nonempty data".into(),
        ));
    }
    if let Some(v) = y.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::LearnerFailure(format!("logistic target {v} outside [0, 1]")));
    }
    let (center, scale) = standardization(x);
    let z = DMatrix::from_fn(n, p + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            (x[[i, j - 1]] - center[j - 1]) / scale[j - 1]
        }
    });

    let mut beta = DVector::zeros(p + 1);
    let mut current = objective(&z, y, &beta);
    for _ in 0..MAX_ITER {
        let eta = &z * &beta;
        let mut grad = DVector::zeros(p + 1);
        let mut hess = DMatrix::zeros(p + 1, p + 1);
        for i in 0..n {
            let mu = sigmoid(eta[i]);
            let w = (mu * (1.0 - mu)).max(1e-12);
            let row = z.row(i);
            grad += row.transpose() * (y[i] - mu);
            hess += row.transpose() * row * w;
        }
        for j in 1..=p {
            grad[j] -= RIDGE * beta[j];
            hess[(j, j)] += RIDGE;
        }
        let step = hess
            .cholesky()
            .ok_or_else(|| Error::LearnerFailure("singular IRLS system".into()))?
            .solve(&grad);

        // step halving keeps the penalised likelihood monotone
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let candidate = &beta + &step * t;
            let value = objective(&z, y, &candidate);
            if value <= current + 1e-12 * current.abs().max(1.0) {
                beta = candidate;
                current = value;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::LearnerFailure("IRLS line search stalled".into()));
        }
        if step.amax() * t < TOL {
            return Ok(LogisticModel {
                center,
                scale,
                coef: beta.iter().copied().collect(),
            });
        }
    }
    Err(Error::LearnerFailure(format!(
        "IRLS did not converge in {MAX_ITER} iterations"
    )))
}

impl Learner for LogisticLearner {
    fn name(&self) -> &str {
        "logistic"
    }

    fn fit(&self, _target: Target, x: ArrayView2<f64>, y: &[f64]) -> Result<Box<dyn Predictor>> {
        Ok(Box::new(fit_logistic(x, y)?))
    }
}

//! Cross-fitted nuisance regressions and per-fold quantile tables of `g`.
//!
//! For each fold `k` the propensity `π(1|x)` and the arm-specific outcome
//! regressions `μ_a(x)` are fitted on the observations outside fold `k` and
//! evaluated on fold `k`. The same fold-`k` fit, evaluated on its own training
//! rows, supplies the empirical distribution of `ĝ` whose quantiles trim the
//! bound estimators for observations in fold `k`.
//!
//! Outcomes are mapped to `[0, 1]` before reaching a [`Learner`] and mapped
//! back afterwards, so learners only ever see bounded targets.

mod knn;
mod logistic;
mod quantile;

pub use knn::{default_k, fit_knn, KnnLearner, KnnModel};
pub use logistic::{fit_logistic, LogisticLearner, LogisticModel};
pub use quantile::QuantileTable;

use crate::bounds::{g_value, EtaPoint};
use crate::config::{LearnerKind, Model, SensitivityConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::folds::{make_folds, FoldPlan};
use crate::rng::StreamRng;
use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use std::fmt;
use std::sync::Arc;

/// What a learner is asked to regress.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// `P(A = 1 | X)`.
    Propensity,
    /// `E(Y | A = arm, X)` on the `[0, 1]` scale.
    Outcome(u8),
}

pub trait Predictor: Send + Sync {
    /// Prediction in `[0, 1]` for one covariate row.
    fn predict(&self, row: ArrayView1<f64>) -> f64;
}

pub trait Learner: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    /// Fits on rows of `x` against targets `y ∈ [0, 1]`. Must be a pure
    /// function of its inputs.
    fn fit(&self, target: Target, x: ArrayView2<f64>, y: &[f64]) -> Result<Box<dyn Predictor>>;
}

/// Predicts the training mean everywhere.
#[derive(Debug, Clone, Default)]
pub struct ConstantLearner;

struct Constant(f64);

impl Predictor for Constant {
    fn predict(&self, _row: ArrayView1<f64>) -> f64 {
        self.0
    }
}

impl Learner for ConstantLearner {
    fn name(&self) -> &str {
        "constant"
    }

    fn fit(&self, _target: Target, _x: ArrayView2<f64>, y: &[f64]) -> Result<Box<dyn Predictor>> {
        if y.is_empty() {
            return Err(Error::LearnerFailure("constant learner needs data".into()));
        }
        Ok(Box::new(Constant(y.iter().sum::<f64>() / y.len() as f64)))
    }
}

/// Truth function injected in place of a fitted regression. Outcome values
/// are expected on the `[0, 1]` scale.
pub type TruthFn = Arc<dyn Fn(Target, ArrayView1<f64>) -> f64 + Send + Sync>;

/// Ignores the training data and returns a known function.
#[derive(Clone)]
pub struct OracleLearner {
    truth: TruthFn,
}

impl OracleLearner {
    pub fn new(truth: TruthFn) -> Self {
        Self { truth }
    }
}

impl fmt::Debug for OracleLearner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("OracleLearner")
    }
}

struct OraclePredictor {
    truth: TruthFn,
    target: Target,
}

impl Predictor for OraclePredictor {
    fn predict(&self, row: ArrayView1<f64>) -> f64 {
        (self.truth)(self.target, row)
    }
}

impl Learner for OracleLearner {
    fn name(&self) -> &str {
        "oracle"
    }

    fn fit(&self, target: Target, _x: ArrayView2<f64>, _y: &[f64]) -> Result<Box<dyn Predictor>> {
        Ok(Box::new(OraclePredictor {
            truth: Arc::clone(&self.truth),
            target,
        }))
    }
}

/// Learners for the propensity score and for the two outcome regressions.
#[derive(Debug, Clone)]
pub struct LearnerSet {
    pub propensity: Arc<dyn Learner>,
    pub outcome: Arc<dyn Learner>,
}

impl LearnerSet {
    pub fn from_kind(kind: LearnerKind) -> Self {
        match kind {
            LearnerKind::Logistic => Self::uniform(Arc::new(LogisticLearner)),
            LearnerKind::Knn => Self::uniform(Arc::new(KnnLearner::default())),
            LearnerKind::LogisticKnn => Self {
                propensity: Arc::new(LogisticLearner),
                outcome: Arc::new(KnnLearner::default()),
            },
        }
    }

    pub fn uniform(learner: Arc<dyn Learner>) -> Self {
        Self {
            propensity: Arc::clone(&learner),
            outcome: learner,
        }
    }

    pub fn oracle(truth: TruthFn) -> Self {
        Self::uniform(Arc::new(OracleLearner::new(truth)))
    }
}

/// Out-of-fold nuisance predictions and the per-fold quantile tables.
#[derive(Debug, Clone)]
pub struct NuisanceFit {
    pi1_hat: Vec<f64>,
    mu0_hat: Vec<f64>,
    mu1_hat: Vec<f64>,
    fold_plan: FoldPlan,
    /// `ĝ` at `δ = 1` over training rows, X model.
    x_tables: Vec<QuantileTable>,
    /// `ĝ(Aᵢ, ·)` at `δ = 1` over training rows, XA model.
    xa_tables: Vec<QuantileTable>,
    clip: f64,
    y_min: f64,
    y_max: f64,
}

impl NuisanceFit {
    /// Assembles a fit from known values. Predictions are clipped exactly as
    /// in [`fit_cross_fitted`]; tables are built from the supplied values.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        pi1: Vec<f64>,
        mu0: Vec<f64>,
        mu1: Vec<f64>,
        treatment: &[u8],
        fold_plan: FoldPlan,
        clip: f64,
        y_min: f64,
        y_max: f64,
    ) -> Result<Self> {
        let n = fold_plan.n();
        if [pi1.len(), mu0.len(), mu1.len(), treatment.len()]
            .iter()
            .any(|&l| l != n)
        {
            return Err(Error::DimensionMismatch(
                "nuisance vectors and fold plan differ in length".into(),
            ));
        }
        let pi1: Vec<f64> = pi1.iter().map(|&p| p.clamp(clip, 1.0 - clip)).collect();
        let mu0: Vec<f64> = mu0.iter().map(|&m| m.clamp(y_min, y_max)).collect();
        let mu1: Vec<f64> = mu1.iter().map(|&m| m.clamp(y_min, y_max)).collect();
        let (x_tables, xa_tables) = build_tables(&fold_plan, |_, i| EtaPoint {
            pi1: pi1[i],
            mu0: mu0[i],
            mu1: mu1[i],
            a: treatment[i],
            y: f64::NAN,
            y_min,
            y_max,
        });
        Ok(Self {
            pi1_hat: pi1,
            mu0_hat: mu0,
            mu1_hat: mu1,
            fold_plan,
            x_tables,
            xa_tables,
            clip,
            y_min,
            y_max,
        })
    }

    pub fn pi1_hat(&self) -> &[f64] {
        &self.pi1_hat
    }

    pub fn mu0_hat(&self) -> &[f64] {
        &self.mu0_hat
    }

    pub fn mu1_hat(&self) -> &[f64] {
        &self.mu1_hat
    }

    pub fn fold_plan(&self) -> &FoldPlan {
        &self.fold_plan
    }

    pub fn n(&self) -> usize {
        self.pi1_hat.len()
    }

    pub fn clip(&self) -> f64 {
        self.clip
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn quantile_table(&self, fold: usize, model: Model) -> Option<&QuantileTable> {
        match model {
            Model::XMixture => self.x_tables.get(fold),
            Model::XaMixture => self.xa_tables.get(fold),
        }
    }

    /// `η̂` at observation `i` together with its observed `(a, y)`.
    pub fn eta(&self, data: &Dataset, i: usize) -> EtaPoint {
        EtaPoint {
            pi1: self.pi1_hat[i],
            mu0: self.mu0_hat[i],
            mu1: self.mu1_hat[i],
            a: data.treatment()[i],
            y: data.outcome()[i],
            y_min: self.y_min,
            y_max: self.y_max,
        }
    }

    /// Fails unless the fit was built for a dataset of this size and range.
    pub fn check_aligned(&self, data: &Dataset) -> Result<()> {
        if self.n() != data.n() {
            return Err(Error::MisalignedFit(format!(
                "fit has {} rows, data has {}",
                self.n(),
                data.n()
            )));
        }
        if self.y_min != data.y_min() || self.y_max != data.y_max() {
            return Err(Error::MisalignedFit("outcome ranges differ".into()));
        }
        Ok(())
    }
}

/// Left-continuous empirical `τ`-quantile of fold `k`'s training `ĝ` values
/// at `δ = 1`. Quantiles at other `δ` are `δ` times this value.
pub fn predict_quantile(fit: &NuisanceFit, fold: usize, tau: f64, model: Model) -> Result<f64> {
    fit.quantile_table(fold, model).ok_or(Error::EmptyTable)?.quantile(tau)
}

/// Cross-fits with the learners named in `cfg`; `rng` draws the fold plan.
pub fn fit_cross_fitted(data: &Dataset, cfg: &SensitivityConfig, rng: StreamRng) -> Result<NuisanceFit> {
    fit_cross_fitted_with(
        data,
        cfg,
        &LearnerSet::from_kind(cfg.learner),
        rng,
        Execution::default(),
    )
}

pub fn fit_cross_fitted_with(
    data: &Dataset,
    cfg: &SensitivityConfig,
    learners: &LearnerSet,
    rng: StreamRng,
    exec: Execution,
) -> Result<NuisanceFit> {
    let plan = make_folds(data.n(), cfg.folds, rng)?;
    fit_with_plan(data, plan, cfg.clip, learners, exec)
}

/// X and XA tables of `ĝ` at `δ = 1`; `eta(k, i)` is fold `k`'s fit at row `i`.
fn build_tables(plan: &FoldPlan, eta: impl Fn(usize, usize) -> EtaPoint) -> (Vec<QuantileTable>, Vec<QuantileTable>) {
    (0..plan.folds())
        .map(|k| {
            let train = plan.complement(k);
            let table = |model| QuantileTable::new(train.iter().map(|&i| g_value(&eta(k, i), 1.0, model)).collect());
            (table(Model::XMixture), table(Model::XaMixture))
        })
        .unzip()
}

struct FoldFit {
    pi1: Vec<f64>,
    mu0: Vec<f64>,
    mu1: Vec<f64>,
}

/// Cross-fits against an explicit fold plan.
pub fn fit_with_plan(
    data: &Dataset,
    plan: FoldPlan,
    clip: f64,
    learners: &LearnerSet,
    exec: Execution,
) -> Result<NuisanceFit> {
    if plan.n() != data.n() {
        return Err(Error::MisalignedFit(format!(
            "fold plan has {} rows, data has {}",
            plan.n(),
            data.n()
        )));
    }
    let fits = exec.try_map(plan.folds(), |k| fit_fold(data, &plan, k, clip, learners))?;

    let n = data.n();
    let (mut pi1, mut mu0, mut mu1) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        let f = &fits[plan.fold_of(i)];
        pi1[i] = f.pi1[i];
        mu0[i] = f.mu0[i];
        mu1[i] = f.mu1[i];
    }

    let (y_min, y_max) = (data.y_min(), data.y_max());
    let (x_tables, xa_tables) = build_tables(&plan, |k, i| EtaPoint {
        pi1: fits[k].pi1[i],
        mu0: fits[k].mu0[i],
        mu1: fits[k].mu1[i],
        a: data.treatment()[i],
        y: data.outcome()[i],
        y_min,
        y_max,
    });

    Ok(NuisanceFit {
        pi1_hat: pi1,
        mu0_hat: mu0,
        mu1_hat: mu1,
        fold_plan: plan,
        x_tables,
        xa_tables,
        clip,
        y_min,
        y_max,
    })
}

/// Fits fold `k`'s training complement and predicts every row, clipped.
fn fit_fold(data: &Dataset, plan: &FoldPlan, k: usize, clip: f64, learners: &LearnerSet) -> Result<FoldFit> {
    let x = data.covariates();
    let a = data.treatment();
    let train = plan.complement(k);
    let arm_rows = |arm: u8| -> Vec<usize> { train.iter().copied().filter(|&i| a[i] == arm).collect() };
    let (treated, control) = (arm_rows(1), arm_rows(0));
    if treated.is_empty() || control.is_empty() {
        return Err(Error::DegenerateFold { fold: k });
    }

    let x_train: Array2<f64> = x.select(Axis(0), &train);
    let a_train: Vec<f64> = train.iter().map(|&i| f64::from(a[i])).collect();
    let propensity = learners.propensity.fit(Target::Propensity, x_train.view(), &a_train)?;

    let (y_min, range) = (data.y_min(), data.y_range());
    let outcome_fit = |arm: u8, rows: &[usize]| {
        let xs = x.select(Axis(0), rows);
        let ys: Vec<f64> = rows.iter().map(|&i| (data.outcome()[i] - y_min) / range).collect();
        learners.outcome.fit(Target::Outcome(arm), xs.view(), &ys)
    };
    let m0 = outcome_fit(0, &control)?;
    let m1 = outcome_fit(1, &treated)?;

    let n = data.n();
    let mut out = FoldFit {
        pi1: Vec::with_capacity(n),
        mu0: Vec::with_capacity(n),
        mu1: Vec::with_capacity(n),
    };
    for row in x.outer_iter() {
        let p = propensity.predict(row);
        let (r0, r1) = (m0.predict(row), m1.predict(row));
        if !(p.is_finite() && r0.is_finite() && r1.is_finite()) {
            return Err(Error::LearnerFailure(format!("non-finite prediction in fold {k}")));
        }
        out.pi1.push(p.clamp(clip, 1.0 - clip));
        out.mu0.push(y_min + range * r0.clamp(0.0, 1.0));
        out.mu1.push(y_min + range * r1.clamp(0.0, 1.0));
    }
    Ok(out)
}

//! End-to-end pipeline: one cross-fitted nuisance fit shared by every model
//! and `δ`, then curves, bands and `ε₀` per (model, `δ`) cell.

use crate::bounds::{estimate_bounds_with, rearrange, BoundsCurve};
use crate::config::{Model, SensitivityConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::inference::{estimate_epsilon0, multiplier_bootstrap_bands, BandSet, BootstrapPlan, EpsilonZero};
use crate::nuisance::{fit_cross_fitted_with, LearnerSet, NuisanceFit};
use crate::rng::{streams, StreamRng};

/// Results for one model. `bands[d]` and `eps0[d]` belong to
/// `curve.delta_grid[d]`.
#[derive(Debug, Clone)]
pub struct ModelAnalysis {
    pub model: Model,
    /// Rearranged curves; the bands are centred on these.
    pub curve: BoundsCurve,
    pub bands: Vec<BandSet>,
    /// `NoCrossing` and `DegenerateDerivative` are kept here rather than
    /// failing the whole analysis.
    pub eps0: Vec<Result<EpsilonZero>>,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub fit: NuisanceFit,
    pub models: Vec<ModelAnalysis>,
}

/// Bootstrap stream of one (model, `δ`) cell.
pub fn bootstrap_stream(seed: u64, model: Model, d: usize) -> StreamRng {
    let m = match model {
        Model::XMixture => 0,
        Model::XaMixture => 1,
    };
    StreamRng::new(seed, streams::BOOTSTRAP).child(m).child(d as u64)
}

/// Runs the pipeline for `models` (falling back to `cfg.model` when empty).
pub fn run_analysis(
    data: &Dataset,
    cfg: &SensitivityConfig,
    models: &[Model],
    learners: &LearnerSet,
    exec: Execution,
) -> Result<Analysis> {
    cfg.validate()?;
    let fit = fit_cross_fitted_with(data, cfg, learners, StreamRng::new(cfg.seed, streams::FOLDS), exec)?;
    let models = if models.is_empty() {
        std::slice::from_ref(&cfg.model)
    } else {
        models
    };
    let models = models
        .iter()
        .map(|&model| analyze_model(data, &fit, cfg, model, exec))
        .collect::<Result<_>>()?;
    Ok(Analysis { fit, models })
}

/// Curves, bands and `ε₀` for one model on an existing fit.
pub fn analyze_model(
    data: &Dataset,
    fit: &NuisanceFit,
    cfg: &SensitivityConfig,
    model: Model,
    exec: Execution,
) -> Result<ModelAnalysis> {
    let curve = rearrange(&estimate_bounds_with(
        data,
        fit,
        model,
        &cfg.eps_grid,
        &cfg.delta_grid,
        exec,
    )?);
    let mut bands = Vec::with_capacity(cfg.delta_grid.len());
    let mut eps0 = Vec::with_capacity(cfg.delta_grid.len());
    for (d, &delta) in cfg.delta_grid.iter().enumerate() {
        let plan = BootstrapPlan {
            exec,
            ..BootstrapPlan::new(cfg.bootstrap_reps, bootstrap_stream(cfg.seed, model, d))
        };
        bands.push(multiplier_bootstrap_bands(data, fit, &curve, d, cfg.alpha, &plan)?);
        let e = estimate_epsilon0(data, fit, model, delta, cfg.eps0_grid(), cfg.alpha, exec);
        if let Err(err) = &e {
            if !matches!(err, Error::NoCrossing { .. } | Error::DegenerateDerivative { .. }) {
                return Err(err.clone());
            }
        }
        eps0.push(e);
    }
    Ok(ModelAnalysis {
        model,
        curve,
        bands,
        eps0,
    })
}

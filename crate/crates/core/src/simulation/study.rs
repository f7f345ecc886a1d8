//! Monte Carlo study: repeated draws, full analysis per draw, aggregate
//! bias, RMSE and coverage against the quadrature truth.

use super::{generate, oracle_truth, DgpConfig, TrueCurves};
use crate::analysis::analyze_model;
use crate::config::{Model, SensitivityConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::nuisance::{fit_cross_fitted_with, LearnerSet};
use crate::rng::{streams, StreamRng};
use serde::Serialize;

/// What one replicate contributes to the report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRecord {
    /// Rearranged estimates on the study grid.
    pub psi_l: Vec<f64>,
    pub psi_u: Vec<f64>,
    /// Band contains `[ψ_l(ε), ψ_u(ε)]` at every grid `ε`.
    pub uniform_covers: bool,
    /// `(ε̂₀, CI)`; `None` when no crossing or a degenerate derivative
    /// prevented an estimate.
    pub eps0: Option<(f64, (f64, f64))>,
}

/// Study summary. Bias columns are absolute integrated bias × 100,
/// RMSE columns are √n × integrated RMSE.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub n: usize,
    pub r: f64,
    pub delta: f64,
    pub model: Model,
    pub reps: usize,
    pub grid_size: usize,
    pub bias_lower: f64,
    pub bias_upper: f64,
    pub bias_eps0: f64,
    pub rmse_lower: f64,
    pub rmse_upper: f64,
    pub rmse_eps0: f64,
    pub uniform_coverage: f64,
    pub eps0_coverage: f64,
    /// Replicates without an `ε̂₀`. They count as non-covering and are left
    /// out of the `ε₀` bias and RMSE.
    pub eps0_missing: usize,
    pub true_eps0: Option<f64>,
}

/// Analysis of replicate `j` of the study; `dgp.seed` roots every stream.
pub fn run_replicate(
    dgp: &DgpConfig,
    cfg: &SensitivityConfig,
    learners: &LearnerSet,
    truth: &TrueCurves,
    j: usize,
    exec: Execution,
) -> Result<ReplicateRecord> {
    let root = StreamRng::new(dgp.seed, streams::SIMULATION).child(j as u64);
    let (data, _) = generate(dgp, &mut root.child(0).generator())?;
    let cfg = SensitivityConfig {
        seed: root.child(1).seed,
        ..cfg.clone()
    };
    let fit = fit_cross_fitted_with(&data, &cfg, learners, StreamRng::new(cfg.seed, streams::FOLDS), exec)?;
    let m = analyze_model(&data, &fit, &cfg, cfg.model, exec)?;
    let bands = &m.bands[0];
    let uniform_covers = (0..truth.eps_grid.len())
        .all(|e| bands.uniform_lower[e] <= truth.psi_l[e] && truth.psi_u[e] <= bands.uniform_upper[e]);
    let eps0 = match &m.eps0[0] {
        Ok(z) => Some((z.estimate, z.ci)),
        Err(Error::NoCrossing { .. } | Error::DegenerateDerivative { .. }) => None,
        Err(e) => return Err(e.clone()),
    };
    Ok(ReplicateRecord {
        psi_l: m.curve.psi_l.column(0).to_vec(),
        psi_u: m.curve.psi_u.column(0).to_vec(),
        uniform_covers,
        eps0,
    })
}

/// Runs `reps` replicates at the single `δ` in `cfg.delta_grid`. A failing
/// replicate aborts the study with its index.
pub fn run_study(
    dgp: &DgpConfig,
    cfg: &SensitivityConfig,
    reps: usize,
    learners: &LearnerSet,
    exec: Execution,
) -> Result<SimReport> {
    dgp.validate()?;
    cfg.validate()?;
    if cfg.delta_grid.len() != 1 {
        return Err(Error::InvalidConfig("a study runs at exactly one delta".into()));
    }
    if reps == 0 {
        return Err(Error::InvalidConfig("a study needs at least one replicate".into()));
    }
    let truth = oracle_truth(dgp.r, &cfg.eps_grid, cfg.delta_grid[0], cfg.model)?;
    // replicates are the parallel unit; inner work stays on one thread
    let records = exec.try_map(reps, |j| {
        run_replicate(dgp, cfg, learners, &truth, j, Execution::Sequential).map_err(|e| Error::Replicate {
            index: j,
            source: Box::new(e),
        })
    })?;
    Ok(aggregate(&records, &truth, dgp, cfg))
}

fn integrated(records: &[ReplicateRecord], truth: &[f64], pick: impl Fn(&ReplicateRecord) -> &[f64]) -> (f64, f64) {
    let j = records.len() as f64;
    let (mut bias, mut rmse) = (0.0, 0.0);
    for (e, &t) in truth.iter().enumerate() {
        let errs = records.iter().map(|r| pick(r)[e] - t);
        bias += (errs.clone().sum::<f64>() / j).abs();
        rmse += (errs.map(|d| d * d).sum::<f64>() / j).sqrt();
    }
    let i = truth.len() as f64;
    (bias / i, rmse / i)
}

/// Deterministic reduction of replicate records in index order.
pub fn aggregate(
    records: &[ReplicateRecord],
    truth: &TrueCurves,
    dgp: &DgpConfig,
    cfg: &SensitivityConfig,
) -> SimReport {
    let root_n = (dgp.n as f64).sqrt();
    let j = records.len() as f64;
    let (bias_l, rmse_l) = integrated(records, &truth.psi_l, |r| &r.psi_l);
    let (bias_u, rmse_u) = integrated(records, &truth.psi_u, |r| &r.psi_u);

    let estimates: Vec<(f64, (f64, f64))> = records.iter().filter_map(|r| r.eps0).collect();
    let (bias_e, rmse_e, covered) = match truth.eps0 {
        Some(t) if !estimates.is_empty() => {
            let k = estimates.len() as f64;
            let bias = (estimates.iter().map(|(e, _)| e - t).sum::<f64>() / k).abs();
            let rmse = (estimates.iter().map(|(e, _)| (e - t).powi(2)).sum::<f64>() / k).sqrt();
            let covered = estimates.iter().filter(|(_, (lo, hi))| *lo <= t && t <= *hi).count();
            (bias, rmse, covered)
        }
        _ => (f64::NAN, f64::NAN, 0),
    };

    SimReport {
        n: dgp.n,
        r: dgp.r,
        delta: cfg.delta_grid[0],
        model: cfg.model,
        reps: records.len(),
        grid_size: truth.eps_grid.len(),
        bias_lower: 100.0 * bias_l,
        bias_upper: 100.0 * bias_u,
        bias_eps0: 100.0 * bias_e,
        rmse_lower: root_n * rmse_l,
        rmse_upper: root_n * rmse_u,
        rmse_eps0: root_n * rmse_e,
        uniform_coverage: records.iter().filter(|r| r.uniform_covers).count() as f64 / j,
        eps0_coverage: covered as f64 / j,
        eps0_missing: records.len() - estimates.len(),
        true_eps0: truth.eps0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth() -> TrueCurves {
        TrueCurves {
            eps_grid: vec![0.0, 0.1],
            psi_l: vec![0.1, 0.0],
            psi_u: vec![0.1, 0.2],
            ate: 0.1,
            eps0: Some(0.1),
        }
    }

    fn record(shift: f64, covers: bool, eps0: Option<(f64, (f64, f64))>) -> ReplicateRecord {
        ReplicateRecord {
            psi_l: vec![0.1 + shift, shift],
            psi_u: vec![0.1 + shift, 0.2 + shift],
            uniform_covers: covers,
            eps0,
        }
    }

    #[test]
    fn aggregate_hand_computed() {
        let dgp = DgpConfig::new(0.05, 100, 0).unwrap();
        let cfg = SensitivityConfig::default();
        let recs = [
            record(0.01, true, Some((0.12, (0.05, 0.2)))),
            record(-0.03, false, Some((0.06, (0.07, 0.09)))),
            record(0.0, true, None),
        ];
        let rep = aggregate(&recs, &truth(), &dgp, &cfg);
        // mean error −0.02/3 at both grid points
        assert!((rep.bias_lower - 100.0 * 0.02 / 3.0).abs() < 1e-12);
        let rmse = ((0.01f64.powi(2) + 0.03f64.powi(2)) / 3.0).sqrt();
        assert!((rep.rmse_upper - 10.0 * rmse).abs() < 1e-12);
        assert!((rep.uniform_coverage - 2.0 / 3.0).abs() < 1e-15);
        assert!((rep.eps0_coverage - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(rep.eps0_missing, 1);
        // ε₀ errors +0.02 and −0.04
        assert!((rep.bias_eps0 - 1.0).abs() < 1e-12);
        assert!((rep.rmse_eps0 - 10.0 * (0.001f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_replicate_has_binary_coverage() {
        let dgp = DgpConfig::new(0.05, 100, 0).unwrap();
        let rep = aggregate(
            &[record(0.0, true, None)],
            &truth(),
            &dgp,
            &SensitivityConfig::default(),
        );
        assert_eq!(rep.uniform_coverage, 1.0);
        assert_eq!(rep.eps0_coverage, 0.0);
        assert!(rep.bias_eps0.is_nan());
    }

    #[test]
    fn rejects_multiple_deltas() {
        let dgp = DgpConfig::new(0.05, 100, 0).unwrap();
        let cfg = SensitivityConfig {
            delta_grid: vec![0.5, 1.0],
            ..SensitivityConfig::default()
        };
        let err = run_study(
            &dgp,
            &cfg,
            1,
            &LearnerSet::from_kind(cfg.learner),
            Execution::Sequential,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }
}

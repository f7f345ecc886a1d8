//! The multiplier bootstrap against a straight-line reimplementation written
//! from the definitions, plus its test hooks and reproducibility.

use confound_bounds::bounds::{estimate_bounds_with, BoundsCurve};
use confound_bounds::config::{linspace, Model};
use confound_bounds::folds::FoldPlan;
use confound_bounds::inference::{
    bands_from_draws, critical_values, draw_statistics, multiplier_bootstrap_bands, BootstrapPlan, Multipliers,
};
use confound_bounds::nuisance::{fit_with_plan, predict_quantile, LearnerSet, NuisanceFit};
use confound_bounds::rng::streams;
use confound_bounds::simulation::{generate, truth_fn, DgpConfig};
use confound_bounds::{Dataset, Execution, StreamRng};
use rand::Rng;

const REPS: usize = 199;

fn twenty_rows() -> (Dataset, NuisanceFit) {
    let dgp = DgpConfig::new(0.05, 20, 5).unwrap();
    let (data, _) = generate(&dgp, &mut StreamRng::new(5, streams::SIMULATION).generator()).unwrap();
    let labels = (0..20).map(|i| i % 2).collect();
    let plan = FoldPlan::from_labels(labels, 2).unwrap();
    let fit = fit_with_plan(
        &data,
        plan,
        0.01,
        &LearnerSet::oracle(truth_fn(0.05)),
        Execution::Sequential,
    )
    .unwrap();
    (data, fit)
}

/// Centered lower and upper influence values of the X model written out
/// from the definitions.
fn centered_by_hand(data: &Dataset, fit: &NuisanceFit, eps: f64, delta: f64) -> (Vec<f64>, Vec<f64>) {
    let n = data.n();
    let (lo, hi) = (data.y_min(), data.y_max());
    let labels = fit.fold_plan().labels();
    let folds = fit.fold_plan().folds();
    let mut phi_l = vec![0.0; n];
    let mut phi_u = vec![0.0; n];
    let mut adj_l = vec![0.0; n];
    let mut adj_u = vec![0.0; n];
    for i in 0..n {
        let (p1, m0, m1) = (fit.pi1_hat()[i], fit.mu0_hat()[i], fit.mu1_hat()[i]);
        let (a, y) = (data.treatment()[i] as f64, data.outcome()[i]);
        let p0 = 1.0 - p1;
        let (pa, ma, pother) = if a == 1.0 { (p1, m1, p0) } else { (p0, m0, p1) };
        let nu = (2.0 * a - 1.0) * (y - ma) / pa + m1 - m0;
        let g = p0 * (hi - m1) + p1 * (m0 - lo);
        let tau = delta * (a * (m0 - lo) + (1.0 - a) * (hi - m1)) + delta * (1.0 - 2.0 * a) * (y - ma) * pother / pa;
        let k = labels[i];
        let q_lo = predict_quantile(fit, k, eps, Model::XMixture).unwrap();
        let q_hi = predict_quantile(fit, k, 1.0 - eps, Model::XMixture).unwrap();
        let kappa = if eps > 0.0 && g <= q_lo { 1.0 } else { 0.0 };
        let lambda = if eps > 0.0 && g > q_hi { 1.0 } else { 0.0 };
        phi_l[i] = nu + kappa * tau - eps * delta * (hi - lo);
        phi_u[i] = nu + lambda * tau;
        adj_l[i] = (eps - kappa) * delta * q_lo;
        adj_u[i] = (eps - lambda) * delta * q_hi;
    }
    let fold_mean = |v: &[f64]| {
        (0..folds)
            .map(|k| {
                let members: Vec<f64> = (0..n).filter(|&i| labels[i] == k).map(|i| v[i]).collect();
                members.iter().sum::<f64>() / members.len() as f64
            })
            .sum::<f64>()
            / folds as f64
    };
    let (psi_l, psi_u) = (fold_mean(&phi_l), fold_mean(&phi_u));
    (
        (0..n).map(|i| phi_l[i] + adj_l[i] - psi_l).collect(),
        (0..n).map(|i| phi_u[i] + adj_u[i] - psi_u).collect(),
    )
}

fn critical_by_hand(data: &Dataset, fit: &NuisanceFit, curve: &BoundsCurve, alpha: f64, rng: StreamRng) -> (f64, f64) {
    let n = data.n();
    let delta = curve.delta_grid[0];
    let rows: Vec<(Vec<f64>, Vec<f64>)> = curve
        .eps_grid
        .iter()
        .map(|&e| {
            let (l, u) = centered_by_hand(data, fit, e, delta);
            let sl = (l.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
            let su = (u.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
            (l.iter().map(|v| v / sl).collect(), u.iter().map(|v| -v / su).collect())
        })
        .collect();
    let mut lower = Vec::with_capacity(REPS);
    let mut upper = Vec::with_capacity(REPS);
    for b in 0..REPS {
        let mut g = rng.child(b as u64).generator();
        let zeta: Vec<f64> = (0..n).map(|_| if g.random::<bool>() { 1.0 } else { -1.0 }).collect();
        let xi: Vec<f64> = (0..n).map(|_| if g.random::<bool>() { 1.0 } else { -1.0 }).collect();
        let mut sup_l = f64::NEG_INFINITY;
        let mut sup_u = f64::NEG_INFINITY;
        for (l, u) in &rows {
            let mut sl = 0.0;
            let mut su = 0.0;
            for i in 0..n {
                sl += zeta[i] * l[i];
                su += xi[i] * u[i];
            }
            sup_l = sup_l.max(sl / (n as f64).sqrt());
            sup_u = sup_u.max(su / (n as f64).sqrt());
        }
        lower.push(sup_l);
        upper.push(sup_u);
    }
    lower.sort_by(f64::total_cmp);
    upper.sort_by(f64::total_cmp);
    // 0.975 · 199 is not an integer, so the ceiling index is unambiguous
    let k = ((1.0 - alpha / 2.0) * REPS as f64).ceil() as usize - 1;
    (lower[k], upper[k])
}

#[test]
fn critical_values_match_straight_line_reimplementation() {
    let (data, fit) = twenty_rows();
    let eps = linspace(0.0, 0.2, 5);
    let curve = estimate_bounds_with(&data, &fit, Model::XMixture, &eps, &[1.0], Execution::Sequential).unwrap();
    let rng = StreamRng::new(99, streams::BOOTSTRAP);
    let plan = BootstrapPlan::new(REPS, rng);
    let draws = draw_statistics(&data, &fit, &curve, 0, &plan).unwrap();
    let (c, d) = critical_values(&draws, 0.05).unwrap();
    let (c_ref, d_ref) = critical_by_hand(&data, &fit, &curve, 0.05, rng);
    assert!((c - c_ref).abs() <= 1e-12, "{c} vs {c_ref}");
    assert!((d - d_ref).abs() <= 1e-12, "{d} vs {d_ref}");

    let bands = bands_from_draws(&curve, 0, 0.05, &draws).unwrap();
    for e in 0..eps.len() {
        let (l, u) = centered_by_hand(&data, &fit, eps[e], 1.0);
        let sl = (l.iter().map(|v| v * v).sum::<f64>() / 20.0).sqrt();
        let su = (u.iter().map(|v| v * v).sum::<f64>() / 20.0).sqrt();
        assert!((curve.sigma_l[[e, 0]] - sl).abs() < 1e-12);
        assert!((curve.sigma_u[[e, 0]] - su).abs() < 1e-12);
        let expect_lo = curve.psi_l[[e, 0]] - c_ref.max(0.0) * sl / 20f64.sqrt();
        assert!((bands.uniform_lower[e] - expect_lo).abs() < 1e-12);
    }
}

#[test]
fn zero_multipliers_annihilate_every_replicate() {
    let (data, fit) = twenty_rows();
    let curve = estimate_bounds_with(
        &data,
        &fit,
        Model::XMixture,
        &linspace(0.0, 0.2, 5),
        &[1.0],
        Execution::Sequential,
    )
    .unwrap();
    let plan = BootstrapPlan {
        multipliers: Multipliers::Zero,
        ..BootstrapPlan::new(50, StreamRng::new(1, streams::BOOTSTRAP))
    };
    let draws = draw_statistics(&data, &fit, &curve, 0, &plan).unwrap();
    assert!(draws.lower.iter().chain(&draws.upper).all(|&s| s == 0.0));
    let bands = bands_from_draws(&curve, 0, 0.05, &draws).unwrap();
    assert_eq!(bands.uniform_lower, curve.psi_l.column(0).to_vec());
    assert_eq!(bands.uniform_upper, curve.psi_u.column(0).to_vec());
}

#[test]
fn critical_values_shrink_as_alpha_grows() {
    let (data, fit) = twenty_rows();
    let curve = estimate_bounds_with(
        &data,
        &fit,
        Model::XMixture,
        &linspace(0.0, 0.2, 5),
        &[1.0],
        Execution::Sequential,
    )
    .unwrap();
    let draws = draw_statistics(&data, &fit, &curve, 0, &BootstrapPlan::new(500, StreamRng::new(2, 3))).unwrap();
    let (c05, d05) = critical_values(&draws, 0.05).unwrap();
    let (c10, d10) = critical_values(&draws, 0.10).unwrap();
    assert!(c05 >= c10 && d05 >= d10);
}

#[test]
fn bands_are_bit_reproducible_across_runs_and_schedules() {
    let (data, fit) = twenty_rows();
    let curve = estimate_bounds_with(
        &data,
        &fit,
        Model::XaMixture,
        &linspace(0.0, 0.2, 5),
        &[1.0],
        Execution::Sequential,
    )
    .unwrap();
    let rng = StreamRng::new(7, streams::BOOTSTRAP);
    let seq = BootstrapPlan {
        exec: Execution::Sequential,
        ..BootstrapPlan::new(300, rng)
    };
    let par = BootstrapPlan {
        exec: Execution::Parallel,
        ..seq
    };
    let a = multiplier_bootstrap_bands(&data, &fit, &curve, 0, 0.05, &seq).unwrap();
    let b = multiplier_bootstrap_bands(&data, &fit, &curve, 0, 0.05, &seq).unwrap();
    let c = multiplier_bootstrap_bands(&data, &fit, &curve, 0, 0.05, &par).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn constant_data_reports_zero_variance() {
    let (data, fit) = twenty_rows();
    // outcomes equal to both regressions make every influence term vanish
    let raw = confound_bounds::RawDataset {
        covariates: data.covariates().clone(),
        treatment: data.treatment().iter().map(|&a| a as f64).collect(),
        outcome: vec![0.5; 20],
        y_min: Some(0.0),
        y_max: Some(1.0),
    };
    let flat = confound_bounds::validate_dataset(raw).unwrap();
    let flat_fit = confound_bounds::nuisance::NuisanceFit::from_parts(
        fit.pi1_hat().to_vec(),
        vec![0.5; 20],
        vec![0.5; 20],
        flat.treatment(),
        fit.fold_plan().clone(),
        0.01,
        0.0,
        1.0,
    )
    .unwrap();
    let curve = estimate_bounds_with(&flat, &flat_fit, Model::XMixture, &[0.0], &[0.0], Execution::Sequential).unwrap();
    let err = draw_statistics(
        &flat,
        &flat_fit,
        &curve,
        0,
        &BootstrapPlan::new(10, StreamRng::new(0, 3)),
    )
    .unwrap_err();
    assert!(matches!(err, confound_bounds::Error::ZeroVariance { .. }));
}

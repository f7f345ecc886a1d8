//! Randomised battery over all oracle checks.

use super::counterfactual::{check_ate_identity, CounterfactualTable, LatentMix};
use super::{check_nesting, lp_sharp_bounds, lp_sharp_bounds_exhaustive, FiniteInstance};
use crate::bounds::plug_in_bounds;
use crate::config::{linspace, Model};
use crate::exec::Execution;
use crate::rng::{streams, StreamRng};
use rand::Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    pub instances: usize,
    pub seed: u64,
    pub max_support: usize,
    pub eps_points: usize,
    /// Added to every plug-in upper bound before comparison. Nonzero values
    /// exist only to exercise the failure path.
    pub corrupt_offset: f64,
    pub exec: Execution,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            instances: 100,
            seed: 0,
            max_support: 12,
            eps_points: 11,
            corrupt_offset: 0.0,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub name: &'static str,
    pub tolerance: f64,
    pub evaluated: usize,
    pub worst: f64,
    pub failures: usize,
}

impl CheckSummary {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub check: &'static str,
    pub index: usize,
    pub violation: f64,
    pub instance: FiniteInstance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub checks: Vec<CheckSummary>,
    pub first_failure: Option<Failure>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.first_failure.is_none()
    }
}

const CHECKS: [(&str, f64); 7] = [
    ("plug-in equals LP, X model", 1e-10),
    ("plug-in equals LP, XA model", 1e-10),
    ("greedy equals vertex enumeration", 1e-10),
    ("XA bounds contain X bounds", 1e-12),
    ("ATE identity through S", 1e-12),
    ("edge identities", 1e-12),
    ("LP bounds monotone in eps", 1e-12),
];

/// Violation per check (`None` when the check does not apply) together with
/// the instance each check ran on.
fn evaluate(index: usize, opts: &SuiteOptions) -> Vec<Option<(f64, FiniteInstance)>> {
    let mut rng = StreamRng::new(opts.seed, streams::ORACLE)
        .child(index as u64)
        .generator();
    let inst = FiniteInstance::random(&mut rng, opts.max_support);
    let n_x = rng.random_range(1..=8);
    let table_inst = FiniteInstance::from_table(CounterfactualTable::random(&mut rng, n_x, LatentMix::Mixed), 1.0);
    let grid = linspace(0.0, 1.0, opts.eps_points.max(2));
    let delta = inst.delta;
    let pop = inst.to_population().expect("generated instances are valid");

    let equivalence = |model| {
        grid.iter()
            .map(|&e| {
                let (pl, pu) = plug_in_bounds(&pop, e, delta, model);
                let (ll, lu) = lp_sharp_bounds(&inst, e, delta, model);
                (pl - ll).abs().max((pu + opts.corrupt_offset - lu).abs())
            })
            .fold(0.0, f64::max)
    };

    let vertices = (inst.points.len() <= 4).then(|| {
        let mut worst: f64 = 0.0;
        for model in [Model::XMixture, Model::XaMixture] {
            for &e in &grid {
                let (gl, gu) = lp_sharp_bounds(&inst, e, delta, model);
                let (vl, vu) = lp_sharp_bounds_exhaustive(&inst, e, delta, model);
                worst = worst.max((gl - vl).abs()).max((gu - vu).abs());
            }
        }
        worst
    });

    let edges = {
        let ate = inst.ate();
        let range = inst.y_max - inst.y_min;
        let mut worst: f64 = 0.0;
        for model in [Model::XMixture, Model::XaMixture] {
            let (l0, u0) = plug_in_bounds(&pop, 0.0, delta, model);
            let (l1, u1) = plug_in_bounds(&pop, 1.0, delta, model);
            worst = worst.max((l0 - ate).abs()).max((u0 - ate).abs());
            worst = worst.max((u1 - l1 - delta * range).abs());
            for &e in &grid {
                let (l, u) = plug_in_bounds(&pop, e, 0.0, model);
                worst = worst.max((l - ate).abs()).max((u - ate).abs());
            }
        }
        worst
    };

    let monotone = {
        let mut worst: f64 = 0.0;
        for model in [Model::XMixture, Model::XaMixture] {
            let b: Vec<(f64, f64)> = grid.iter().map(|&e| lp_sharp_bounds(&inst, e, delta, model)).collect();
            for w in b.windows(2) {
                worst = worst.max(w[1].0 - w[0].0).max(w[0].1 - w[1].1);
            }
        }
        worst
    };

    let identity = check_ate_identity(table_inst.table.as_ref().expect("built from a table"));

    vec![
        Some((equivalence(Model::XMixture), inst.clone())),
        Some((equivalence(Model::XaMixture), inst.clone())),
        vertices.map(|v| (v, inst.clone())),
        Some((check_nesting(&inst, &grid, delta), inst.clone())),
        Some((identity, table_inst)),
        Some((edges, inst.clone())),
        Some((monotone, inst)),
    ]
}

pub fn run_suite(opts: &SuiteOptions) -> SuiteReport {
    let results = opts.exec.map(opts.instances, |i| evaluate(i, opts));
    let mut checks: Vec<CheckSummary> = CHECKS
        .iter()
        .map(|&(name, tolerance)| CheckSummary {
            name,
            tolerance,
            evaluated: 0,
            worst: 0.0,
            failures: 0,
        })
        .collect();
    let mut first_failure = None;
    for (index, per_check) in results.into_iter().enumerate() {
        for (summary, outcome) in checks.iter_mut().zip(per_check) {
            let Some((violation, instance)) = outcome else { continue };
            summary.evaluated += 1;
            summary.worst = summary.worst.max(violation);
            // NaN counts as a failure
            if !(violation <= summary.tolerance) {
                summary.failures += 1;
                if first_failure.is_none() {
                    first_failure = Some(Failure {
                        check: summary.name,
                        index,
                        violation,
                        instance,
                    });
                }
            }
        }
    }
    SuiteReport { checks, first_failure }
}

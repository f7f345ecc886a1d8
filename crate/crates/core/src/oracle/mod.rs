//! Brute-force checks of the identification results on finite instances.
//!
//! The sharp bounds are the values of a linear program over the confounded
//! mass `w(x) = P(S = 0, X = x)`:
//!
//! ```text
//! optimize  Σ_x w(x)·b(x)   subject to   0 ≤ w(x) ≤ p(x),  Σ_x w(x) = ε
//! ```
//!
//! where `b(x)` is the bias a confounded unit at `x` contributes when the
//! unobservable regressions `λ_a` sit at their extreme admissible values.
//! The LP is a fractional knapsack, solved greedily and, for tiny supports,
//! by enumerating every vertex of the feasible polytope. None of this code
//! goes through `g` or quantiles, so agreement with
//! [`crate::bounds::plug_in_bounds`] is a genuine cross-check.

mod counterfactual;
mod suite;

pub use counterfactual::{check_ate_identity, CounterfactualCell, CounterfactualTable, LatentMix};
pub use suite::{run_suite, CheckSummary, Failure, SuiteOptions, SuiteReport};

use crate::bounds::{DiscretePopulation, PopulationAtom};
use crate::config::Model;
use crate::error::Result;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportPoint {
    pub p: f64,
    pub pi1: f64,
    pub mu0: f64,
    pub mu1: f64,
}

/// Finite covariate distribution with exact nuisances, optionally backed by
/// a full counterfactual table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteInstance {
    pub y_min: f64,
    pub y_max: f64,
    pub delta: f64,
    pub points: Vec<SupportPoint>,
    pub table: Option<CounterfactualTable>,
}

impl FiniteInstance {
    /// Random instance with `1..=max_support` points. About a third of the
    /// points repeat their predecessor so ties in `g` are common.
    pub fn random<R: Rng>(rng: &mut R, max_support: usize) -> Self {
        let m = rng.random_range(1..=max_support);
        let y_min = if rng.random::<bool>() {
            0.0
        } else {
            rng.random_range(-2.0..1.0)
        };
        let y_max = if y_min == 0.0 && rng.random::<bool>() {
            1.0
        } else {
            y_min + rng.random_range(0.5..3.0)
        };
        let delta = match rng.random_range(0..5) {
            0 => 1.0,
            1 => 0.0,
            _ => rng.random::<f64>(),
        };
        let mut points: Vec<SupportPoint> = Vec::with_capacity(m);
        for i in 0..m {
            let fresh = SupportPoint {
                p: rng.random_range(0.05..1.0),
                pi1: rng.random_range(0.05..0.95),
                mu0: rng.random_range(y_min..=y_max),
                mu1: rng.random_range(y_min..=y_max),
            };
            let point = if i > 0 && rng.random::<f64>() < 0.3 {
                SupportPoint {
                    p: fresh.p,
                    ..points[i - 1]
                }
            } else {
                fresh
            };
            points.push(point);
        }
        let total: f64 = points.iter().map(|p| p.p).sum();
        for p in &mut points {
            p.p /= total;
        }
        Self {
            y_min,
            y_max,
            delta,
            points,
            table: None,
        }
    }

    /// Instance whose nuisances are read off a counterfactual table.
    pub fn from_table(table: CounterfactualTable, delta: f64) -> Self {
        let points = table.observed_nuisances();
        Self {
            y_min: table.y_min,
            y_max: table.y_max,
            delta,
            points,
            table: Some(table),
        }
    }

    pub fn ate(&self) -> f64 {
        self.points.iter().map(|s| s.p * (s.mu1 - s.mu0)).sum()
    }

    pub fn to_population(&self) -> Result<DiscretePopulation> {
        let atoms = self
            .points
            .iter()
            .map(|s| PopulationAtom {
                p: s.p,
                pi1: s.pi1,
                mu0: s.mu0,
                mu1: s.mu1,
            })
            .collect();
        DiscretePopulation::new(atoms, self.y_min, self.y_max)
    }

    /// LP atoms `(capacity, upper coefficient, lower coefficient)`.
    ///
    /// With `λ_a ∈ [δy_min + (1−δ)μ_a, δy_max + (1−δ)μ_a]` a confounded unit
    /// shifts the effect by `(1−A)(λ₁ − μ₁) − A(λ₀ − μ₀)`. The X model averages
    /// over `A` within `x`; the XA model lets `S` depend on `A` too, so each
    /// `(a, x)` cell is its own atom.
    pub fn lp_atoms(&self, delta: f64, model: Model) -> Vec<(f64, f64, f64)> {
        let mut atoms = Vec::new();
        for s in &self.points {
            let lam1_hi = delta * self.y_max + (1.0 - delta) * s.mu1;
            let lam1_lo = delta * self.y_min + (1.0 - delta) * s.mu1;
            let lam0_hi = delta * self.y_max + (1.0 - delta) * s.mu0;
            let lam0_lo = delta * self.y_min + (1.0 - delta) * s.mu0;
            // bias of a confounded control and a confounded treated unit
            let control = (lam1_hi - s.mu1, lam1_lo - s.mu1);
            let treated = (-(lam0_lo - s.mu0), -(lam0_hi - s.mu0));
            let pi0 = 1.0 - s.pi1;
            match model {
                Model::XMixture => atoms.push((
                    s.p,
                    pi0 * control.0 + s.pi1 * treated.0,
                    pi0 * control.1 + s.pi1 * treated.1,
                )),
                Model::XaMixture => {
                    atoms.push((s.p * pi0, control.0, control.1));
                    atoms.push((s.p * s.pi1, treated.0, treated.1));
                }
            }
        }
        atoms
    }
}

/// Greedy optimum of `Σ wᵢcᵢ` over `0 ≤ wᵢ ≤ capᵢ`, `Σ wᵢ = ε`.
pub fn knapsack_greedy(items: &[(f64, f64)], eps: f64, maximize: bool) -> f64 {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&i, &j| {
        let c = items[i].1.total_cmp(&items[j].1);
        if maximize {
            c.reverse()
        } else {
            c
        }
    });
    let mut remaining = eps;
    let mut value = 0.0;
    for i in order {
        if remaining <= 0.0 {
            break;
        }
        let (cap, c) = items[i];
        let w = cap.min(remaining);
        value += w * c;
        remaining -= w;
    }
    value
}

/// Same optimum by enumerating vertices: every vertex has at most one
/// fractional coordinate, all others at 0 or their capacity.
pub fn knapsack_vertices(items: &[(f64, f64)], eps: f64, maximize: bool) -> f64 {
    let m = items.len();
    assert!(m <= 16, "vertex enumeration is exponential");
    let tol = 1e-12;
    let mut best = if maximize { f64::NEG_INFINITY } else { f64::INFINITY };
    for mask in 0u32..(1 << m) {
        let (mut mass, mut value) = (0.0, 0.0);
        for (i, &(cap, c)) in items.iter().enumerate() {
            if mask & (1 << i) != 0 {
                mass += cap;
                value += cap * c;
            }
        }
        let rest = eps - mass;
        let mut candidates = Vec::new();
        if rest.abs() <= tol {
            candidates.push(value);
        }
        for (i, &(cap, c)) in items.iter().enumerate() {
            if mask & (1 << i) == 0 && rest >= -tol && rest <= cap + tol {
                candidates.push(value + rest.clamp(0.0, cap) * c);
            }
        }
        for v in candidates {
            best = if maximize { best.max(v) } else { best.min(v) };
        }
    }
    best
}

/// Sharp `(ψ_l, ψ_u)` from the LP, solved greedily.
pub fn lp_sharp_bounds(inst: &FiniteInstance, eps: f64, delta: f64, model: Model) -> (f64, f64) {
    let atoms = inst.lp_atoms(delta, model);
    let upper: Vec<(f64, f64)> = atoms.iter().map(|a| (a.0, a.1)).collect();
    let lower: Vec<(f64, f64)> = atoms.iter().map(|a| (a.0, a.2)).collect();
    let ate = inst.ate();
    (
        ate + knapsack_greedy(&lower, eps, false),
        ate + knapsack_greedy(&upper, eps, true),
    )
}

/// Sharp `(ψ_l, ψ_u)` by vertex enumeration.
pub fn lp_sharp_bounds_exhaustive(inst: &FiniteInstance, eps: f64, delta: f64, model: Model) -> (f64, f64) {
    let atoms = inst.lp_atoms(delta, model);
    let upper: Vec<(f64, f64)> = atoms.iter().map(|a| (a.0, a.1)).collect();
    let lower: Vec<(f64, f64)> = atoms.iter().map(|a| (a.0, a.2)).collect();
    let ate = inst.ate();
    (
        ate + knapsack_vertices(&lower, eps, false),
        ate + knapsack_vertices(&upper, eps, true),
    )
}

/// Largest amount by which the XA bounds fail to contain the X bounds.
pub fn check_nesting(inst: &FiniteInstance, eps_grid: &[f64], delta: f64) -> f64 {
    eps_grid
        .iter()
        .map(|&eps| {
            let (xl, xu) = lp_sharp_bounds(inst, eps, delta, Model::XMixture);
            let (al, au) = lp_sharp_bounds(inst, eps, delta, Model::XaMixture);
            (al - xl).max(xu - au).max(0.0)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::plug_in_bounds;
    use crate::rng::StreamRng;

    fn uniform_four() -> FiniteInstance {
        FiniteInstance {
            y_min: 0.0,
            y_max: 1.0,
            delta: 1.0,
            points: [0.1, 0.2, 0.3, 0.4]
                .iter()
                .map(|&g| SupportPoint {
                    p: 0.25,
                    pi1: 0.5,
                    mu0: g,
                    mu1: 1.0 - g,
                })
                .collect(),
            table: None,
        }
    }

    #[test]
    fn four_point_trims() {
        let inst = uniform_four();
        let (lo, hi) = lp_sharp_bounds(&inst, 0.25, 1.0, Model::XMixture);
        assert!((hi - inst.ate() - 0.1).abs() < 1e-15);
        // min trim 0.025 less the offset 0.25
        assert!((lo - inst.ate() - (0.025 - 0.25)).abs() < 1e-15);
        let (vl, vh) = lp_sharp_bounds_exhaustive(&inst, 0.25, 1.0, Model::XMixture);
        assert!((vl - lo).abs() < 1e-15 && (vh - hi).abs() < 1e-15);
    }

    #[test]
    fn edges() {
        let inst = uniform_four();
        for model in [Model::XMixture, Model::XaMixture] {
            let (lo, hi) = lp_sharp_bounds(&inst, 0.0, 1.0, model);
            assert_eq!((lo, hi), (inst.ate(), inst.ate()));
            let (lo, hi) = lp_sharp_bounds(&inst, 1.0, 1.0, model);
            assert!((hi - lo - 1.0).abs() < 1e-15);
        }
        assert!(check_nesting(&inst, &[0.0, 1.0], 1.0) < 1e-15);
    }

    #[test]
    fn greedy_matches_vertices_and_plug_in() {
        let mut rng = StreamRng::new(11, 0).generator();
        for _ in 0..200 {
            let inst = FiniteInstance::random(&mut rng, 4);
            let pop = inst.to_population().unwrap();
            for k in 0..=10 {
                let eps = k as f64 / 10.0;
                for model in [Model::XMixture, Model::XaMixture] {
                    let g = lp_sharp_bounds(&inst, eps, inst.delta, model);
                    let v = lp_sharp_bounds_exhaustive(&inst, eps, inst.delta, model);
                    let p = plug_in_bounds(&pop, eps, inst.delta, model);
                    assert!((g.0 - v.0).abs() < 1e-10 && (g.1 - v.1).abs() < 1e-10);
                    assert!((g.0 - p.0).abs() < 1e-10 && (g.1 - p.1).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn random_instances_are_valid() {
        let mut rng = StreamRng::new(12, 0).generator();
        for _ in 0..100 {
            let inst = FiniteInstance::random(&mut rng, 12);
            assert!(inst.to_population().is_ok());
            assert!((1..=12).contains(&inst.points.len()));
        }
    }

    #[test]
    fn random_nesting() {
        let mut rng = StreamRng::new(13, 0).generator();
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        for _ in 0..50 {
            let inst = FiniteInstance::random(&mut rng, 12);
            assert!(check_nesting(&inst, &grid, inst.delta) <= 1e-12);
        }
    }
}

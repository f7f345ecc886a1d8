//! Exact bounds for a distribution with finite covariate support.

use super::{g_value, EtaPoint};
use crate::config::Model;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationAtom {
    pub p: f64,
    pub pi1: f64,
    pub mu0: f64,
    pub mu1: f64,
}

/// Finite distribution of `X` with the exact nuisances at each support point.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePopulation {
    atoms: Vec<PopulationAtom>,
    y_min: f64,
    y_max: f64,
}

impl DiscretePopulation {
    pub fn new(atoms: Vec<PopulationAtom>, y_min: f64, y_max: f64) -> Result<Self> {
        if !(y_min < y_max) {
            return Err(Error::DegenerateOutcomeRange { y_min, y_max });
        }
        let total: f64 = atoms.iter().map(|a| a.p).sum();
        if atoms.is_empty() || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("support masses sum to {total}, not 1")));
        }
        for a in &atoms {
            if !(a.p >= 0.0 && a.pi1 > 0.0 && a.pi1 < 1.0) {
                return Err(Error::ProbabilityOutOfRange {
                    what: "support mass or propensity".into(),
                    value: if a.p < 0.0 { a.p } else { a.pi1 },
                });
            }
            if !(y_min..=y_max).contains(&a.mu0) || !(y_min..=y_max).contains(&a.mu1) {
                return Err(Error::InvalidConfig(
                    "outcome regression outside the outcome range".into(),
                ));
            }
        }
        Ok(Self { atoms, y_min, y_max })
    }

    pub fn atoms(&self) -> &[PopulationAtom] {
        &self.atoms
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    /// `E[μ₁(X) − μ₀(X)]`.
    pub fn ate(&self) -> f64 {
        self.atoms.iter().map(|a| a.p * (a.mu1 - a.mu0)).sum()
    }

    fn eta(&self, atom: &PopulationAtom, a: u8) -> EtaPoint {
        EtaPoint {
            pi1: atom.pi1,
            mu0: atom.mu0,
            mu1: atom.mu1,
            a,
            y: f64::NAN,
            y_min: self.y_min,
            y_max: self.y_max,
        }
    }

    /// `(mass, g)` pairs. Under the XA model each `x` splits into `(1, x)`
    /// with mass `p·π₁` and `(0, x)` with mass `p·π₀`.
    pub fn g_distribution(&self, delta: f64, model: Model) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.atoms.len() * 2);
        for atom in &self.atoms {
            match model {
                Model::XMixture => out.push((atom.p, g_value(&self.eta(atom, 0), delta, model))),
                Model::XaMixture => {
                    out.push((atom.p * atom.pi1, g_value(&self.eta(atom, 1), delta, model)));
                    out.push((atom.p * (1.0 - atom.pi1), g_value(&self.eta(atom, 0), delta, model)));
                }
            }
        }
        out
    }
}

/// Left-continuous `τ`-quantile of a finite weighted distribution; `τ = 0`
/// maps to the smallest point carrying mass.
fn weighted_quantile(sorted: &[(f64, f64)], tau: f64) -> f64 {
    let mut cum = 0.0;
    let mut last = sorted[0].1;
    for &(p, g) in sorted {
        if p <= 0.0 {
            continue;
        }
        cum += p;
        last = g;
        if cum >= tau - 1e-12 {
            return g;
        }
    }
    last
}

fn sorted_by_g(dist: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut v = dist.to_vec();
    v.sort_by(|a, b| a.1.total_cmp(&b.1));
    v
}

/// `E[g·1{g > q_{1−ε}}]` with the atom at the quantile split so the trimmed
/// mass is exactly `ε`.
fn upper_trim(sorted: &[(f64, f64)], eps: f64) -> f64 {
    let q = weighted_quantile(sorted, 1.0 - eps);
    let (mut mass, mut sum) = (0.0, 0.0);
    for &(p, g) in sorted.iter().filter(|(_, g)| *g > q) {
        mass += p;
        sum += p * g;
    }
    sum + (eps - mass) * q
}

/// `E[g·1{g ≤ q_ε}]` with the atom at the quantile split so the trimmed
/// mass is exactly `ε`.
fn lower_trim(sorted: &[(f64, f64)], eps: f64) -> f64 {
    let q = weighted_quantile(sorted, eps);
    let (mut mass, mut sum) = (0.0, 0.0);
    for &(p, g) in sorted.iter().filter(|(_, g)| *g < q) {
        mass += p;
        sum += p * g;
    }
    sum + (eps - mass) * q
}

/// Population `(ψ_l(ε), ψ_u(ε))` at severity `δ`.
pub fn plug_in_bounds(pop: &DiscretePopulation, eps: f64, delta: f64, model: Model) -> (f64, f64) {
    let ate = pop.ate();
    if eps <= 0.0 {
        return (ate, ate);
    }
    let sorted = sorted_by_g(&pop.g_distribution(delta, model));
    let range = pop.y_max - pop.y_min;
    (
        ate + lower_trim(&sorted, eps) - eps * delta * range,
        ate + upper_trim(&sorted, eps),
    )
}

/// Width `[E{g | g > q_{1−ε}} − E{g | g ≤ q_ε} + δR]·ε` with literal
/// conditional means. Agrees with [`plug_in_bounds`] whenever `ε` is a
/// cumulative mass of the sorted support, so no atom is split.
pub fn conditional_mean_width(pop: &DiscretePopulation, eps: f64, delta: f64, model: Model) -> f64 {
    if eps <= 0.0 {
        return 0.0;
    }
    let sorted = sorted_by_g(&pop.g_distribution(delta, model));
    let conditional_mean = |keep: &dyn Fn(f64) -> bool| {
        let (m, s) = sorted
            .iter()
            .filter(|(_, g)| keep(*g))
            .fold((0.0, 0.0), |(m, s), &(p, g)| (m + p, s + p * g));
        s / m
    };
    let q_hi = weighted_quantile(&sorted, 1.0 - eps);
    let q_lo = weighted_quantile(&sorted, eps);
    let top = if eps >= 1.0 {
        conditional_mean(&|_| true)
    } else {
        conditional_mean(&|g| g > q_hi)
    };
    let bottom = conditional_mean(&|g| g <= q_lo);
    (top - bottom + delta * (pop.y_max - pop.y_min)) * eps
}

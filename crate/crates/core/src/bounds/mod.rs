//! Bound functionals: `g`, the influence-function pieces `ν` and `τ`, the
//! cross-fitted sample estimator, the exact population evaluator and
//! monotone rearrangement.
//!
//! Severity terms follow the `δ` parametrisation
//! `L_a = δ(y_min − μ_a) ≤ 0 ≤ U_a = δ(y_max − μ_a)`. With
//! `R = y_max − y_min` the bounds are
//!
//! ```text
//! ψ_l(ε) = E[μ₁ − μ₀ + 1{g ≤ q_ε} g] − εδR
//! ψ_u(ε) = E[μ₁ − μ₀ + 1{g > q_{1−ε}} g]
//! ```
//!
//! where `g = π₀U₁ − π₁L₀` under the X-mixture model and
//! `g(A) = (1−A)U₁ − A·L₀` under the XA-mixture model.

mod estimate;
mod population;

pub(crate) use estimate::fold_average;
pub use estimate::{
    bound_width, estimate_bounds, estimate_bounds_with, rearrange, sort_nondecreasing, sort_nonincreasing, BaseTerms,
    BoundsCurve, ObservationTerms,
};
pub use population::{conditional_mean_width, plug_in_bounds, DiscretePopulation, PopulationAtom};

use crate::config::Model;

/// Nuisance values at one unit, with the observed `(a, y)` where relevant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaPoint {
    pub pi1: f64,
    pub mu0: f64,
    pub mu1: f64,
    pub a: u8,
    pub y: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl EtaPoint {
    pub fn pi0(&self) -> f64 {
        1.0 - self.pi1
    }

    /// `π(a|X)`.
    pub fn pi(&self, a: u8) -> f64 {
        if a == 1 {
            self.pi1
        } else {
            self.pi0()
        }
    }

    /// `μ_a(X)`.
    pub fn mu(&self, a: u8) -> f64 {
        if a == 1 {
            self.mu1
        } else {
            self.mu0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LuTerms {
    pub l0: f64,
    pub l1: f64,
    pub u0: f64,
    pub u1: f64,
}

pub fn lu_terms(p: &EtaPoint, delta: f64) -> LuTerms {
    LuTerms {
        l0: delta * (p.y_min - p.mu0),
        l1: delta * (p.y_min - p.mu1),
        u0: delta * (p.y_max - p.mu0),
        u1: delta * (p.y_max - p.mu1),
    }
}

/// `g` under `model`; the XA form reads the treatment from `p.a`.
pub fn g_value(p: &EtaPoint, delta: f64, model: Model) -> f64 {
    let t = lu_terms(p, delta);
    match model {
        Model::XMixture => p.pi0() * t.u1 - p.pi1 * t.l0,
        Model::XaMixture => g_arm(&t, p.a),
    }
}

/// XA-model `g(a, X)`: `U₁` for controls, `−L₀` for treated.
fn g_arm(t: &LuTerms, a: u8) -> f64 {
    if a == 1 {
        -t.l0
    } else {
        t.u1
    }
}

/// Uncentered influence function of `E{μ₁(X) − μ₀(X)}`.
pub fn nu_if(p: &EtaPoint) -> f64 {
    let sign = if p.a == 1 { 1.0 } else { -1.0 };
    sign * (p.y - p.mu(p.a)) / p.pi(p.a) + p.mu1 - p.mu0
}

/// The part of `τ` carried by the observed arm: `δ[A(μ₀ − y_min) + (1−A)(y_max − μ₁)]`.
pub(crate) fn tau_plugin(p: &EtaPoint, delta: f64) -> f64 {
    if p.a == 1 {
        delta * (p.mu0 - p.y_min)
    } else {
        delta * (p.y_max - p.mu1)
    }
}

/// The residual correction of `τ`: `δ(1−2A)(Y − μ_A)π(1−A|X)/π(A|X)`.
pub(crate) fn tau_correction(p: &EtaPoint, delta: f64) -> f64 {
    let sign = if p.a == 1 { -1.0 } else { 1.0 };
    delta * sign * (p.y - p.mu(p.a)) * p.pi(1 - p.a) / p.pi(p.a)
}

/// Uncentered influence function of `E{g(η)}` (X model).
pub fn tau_if(p: &EtaPoint, delta: f64) -> f64 {
    tau_correction(p, delta) + tau_plugin(p, delta)
}

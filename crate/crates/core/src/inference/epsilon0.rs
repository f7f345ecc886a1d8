use crate::bounds::{estimate_bounds_with, fold_average, rearrange, BaseTerms};
use crate::config::Model;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::normal;
use crate::nuisance::NuisanceFit;

/// Estimated smallest confounding proportion at which the bounds contain 0.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonZero {
    pub estimate: f64,
    pub std_error: f64,
    pub ci: (f64, f64),
    /// `ψ̂_l(ε̂₀)·ψ̂_u(ε̂₀)` from the unrearranged estimator.
    pub moment_residual: f64,
    /// Derivative of `ψ_l ψ_u` at `ε̂₀`.
    pub derivative: f64,
    /// The point estimate at the start of the grid already straddles zero.
    pub boundary: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub eps: f64,
    pub boundary: bool,
}

/// First zero of `ψ_l·ψ_u` along monotone curves, linearly interpolated
/// between the bracketing grid points. A positive effect at the first grid
/// point is followed down the lower curve, a negative one up the upper curve.
pub fn locate_crossing(eps: &[f64], psi_l: &[f64], psi_u: &[f64]) -> Result<Crossing> {
    let (first, last) = (eps[0], eps[eps.len() - 1]);
    if psi_l[0] * psi_u[0] <= 0.0 {
        return Ok(Crossing {
            eps: first,
            boundary: true,
        });
    }
    let (curve, sign) = if psi_l[0] > 0.0 { (psi_l, 1.0) } else { (psi_u, -1.0) };
    let j = (1..eps.len())
        .find(|&j| sign * curve[j] <= 0.0)
        .ok_or(Error::NoCrossing { lo: first, hi: last })?;
    let (c0, c1) = (curve[j - 1], curve[j]);
    let t = c0 / (c0 - c1);
    Ok(Crossing {
        eps: eps[j - 1] + t * (eps[j] - eps[j - 1]),
        boundary: false,
    })
}

/// `ε̂₀` on `grid` at severity `δ`, with a Wald interval at level `1 − α`.
///
/// The root is searched on the rearranged curves; the standard error uses
/// the direct estimator evaluated at `ε̂₀`.
pub fn estimate_epsilon0(
    data: &Dataset,
    fit: &NuisanceFit,
    model: Model,
    delta: f64,
    grid: &[f64],
    alpha: f64,
    exec: Execution,
) -> Result<EpsilonZero> {
    let curve = rearrange(&estimate_bounds_with(data, fit, model, grid, &[delta], exec)?);
    let lo = curve.psi_l.column(0).to_vec();
    let hi = curve.psi_u.column(0).to_vec();
    let crossing = locate_crossing(grid, &lo, &hi)?;
    let eps = crossing.eps;

    let t = BaseTerms::new(data, fit)?.terms(fit, model, eps, delta)?;
    let (psi_l, psi_u) = (t.psi_l, t.psi_u);
    let plan = fit.fold_plan();
    let (q_lo, q_hi) = (fold_average(&t.q_lo, plan), fold_average(&t.q_hi, plan));
    let derivative = psi_u * (q_lo - delta * data.y_range()) + psi_l * q_hi;

    let n = data.n() as f64;
    let variance = (0..data.n())
        .map(|i| {
            let v = psi_u * t.centered_lower(i) + psi_l * t.centered_upper(i);
            v * v
        })
        .sum::<f64>()
        / n;
    let std_error = if derivative.abs() < 1e-8 {
        if !crossing.boundary {
            return Err(Error::DegenerateDerivative { value: derivative });
        }
        0.0
    } else {
        (variance / n).sqrt() / derivative.abs()
    };
    let z = normal::quantile(1.0 - alpha / 2.0);
    Ok(EpsilonZero {
        estimate: eps,
        std_error,
        ci: ((eps - z * std_error).max(0.0), (eps + z * std_error).min(1.0)),
        moment_residual: psi_l * psi_u,
        derivative,
        boundary: crossing.boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_root() {
        let eps: Vec<f64> = (0..=20).map(|i| i as f64 * 0.01).collect();
        let lo: Vec<f64> = eps.iter().map(|e| 0.1 - 2.0 * e).collect();
        let hi: Vec<f64> = eps.iter().map(|e| 0.1 + e).collect();
        let c = locate_crossing(&eps, &lo, &hi).unwrap();
        assert!((c.eps - 0.05).abs() < 1e-12);
        assert!(!c.boundary);
    }

    #[test]
    fn negative_effect_follows_upper_curve() {
        let eps = [0.0, 0.1, 0.2];
        let lo = [-0.1, -0.2, -0.3];
        let hi = [-0.1, -0.05, 0.05];
        let c = locate_crossing(&eps, &lo, &hi).unwrap();
        assert!((c.eps - 0.15).abs() < 1e-12);
    }

    #[test]
    fn zero_point_estimate_is_boundary() {
        let c = locate_crossing(&[0.0, 0.1], &[0.0, -0.1], &[0.0, 0.1]).unwrap();
        assert_eq!(
            c,
            Crossing {
                eps: 0.0,
                boundary: true
            }
        );
    }

    #[test]
    fn no_crossing() {
        let err = locate_crossing(&[0.0, 0.1], &[0.5, 0.4], &[0.5, 0.6]).unwrap_err();
        assert_eq!(err, Error::NoCrossing { lo: 0.0, hi: 0.1 });
    }
}

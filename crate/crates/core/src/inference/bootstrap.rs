use super::imbens_manski::imbens_manski_band;
use crate::bounds::{BaseTerms, BoundsCurve};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::nuisance::{NuisanceFit, QuantileTable};
use crate::rng::StreamRng;
use rand::Rng;

/// Multiplier distribution. `Zero` is a test hook that annihilates every
/// replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Multipliers {
    #[default]
    Rademacher,
    Zero,
}

/// How to draw bootstrap replicates. Replicate `b` draws its multipliers
/// from `rng.child(b)`, so results do not depend on scheduling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapPlan {
    pub reps: usize,
    pub rng: StreamRng,
    pub multipliers: Multipliers,
    pub exec: Execution,
}

impl BootstrapPlan {
    pub fn new(reps: usize, rng: StreamRng) -> Self {
        Self {
            reps,
            rng,
            multipliers: Multipliers::Rademacher,
            exec: Execution::default(),
        }
    }
}

/// Per-replicate supremum statistics, in replicate order.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapDraws {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Uniform and pointwise bands at one `δ`, indexed by `ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSet {
    pub alpha: f64,
    pub c_alpha: f64,
    pub d_alpha: f64,
    pub uniform_lower: Vec<f64>,
    pub uniform_upper: Vec<f64>,
    pub pointwise_lower: Vec<f64>,
    pub pointwise_upper: Vec<f64>,
}

/// Studentized centered influence values, `[ε][i]`. Upper rows carry the
/// sign flip of the upper statistic.
struct Standardized {
    lower: Vec<Vec<f64>>,
    upper: Vec<Vec<f64>>,
}

fn standardize(data: &Dataset, fit: &NuisanceFit, curve: &BoundsCurve, d: usize) -> Result<Standardized> {
    let base = BaseTerms::new(data, fit)?;
    let delta = curve.delta_grid[d];
    let mut out = Standardized {
        lower: Vec::with_capacity(curve.eps_grid.len()),
        upper: Vec::with_capacity(curve.eps_grid.len()),
    };
    for &eps in &curve.eps_grid {
        let t = base.terms(fit, curve.model, eps, delta)?;
        let (sl, su) = (t.sigma_l(), t.sigma_u());
        for (side, s) in [("lower", sl), ("upper", su)] {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::ZeroVariance { side, eps });
            }
        }
        out.lower
            .push((0..base.n()).map(|i| t.centered_lower(i) / sl).collect());
        out.upper
            .push((0..base.n()).map(|i| -t.centered_upper(i) / su).collect());
    }
    Ok(out)
}

/// `sup_ε n^{-1/2} Σ_i w_i z_i(ε)`.
fn sup_statistic(rows: &[Vec<f64>], w: &[f64]) -> f64 {
    let root_n = (w.len() as f64).sqrt();
    rows.iter()
        .map(|z| z.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / root_n)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Supremum statistics of every replicate at `δ = curve.delta_grid[d]`.
pub fn draw_statistics(
    data: &Dataset,
    fit: &NuisanceFit,
    curve: &BoundsCurve,
    d: usize,
    plan: &BootstrapPlan,
) -> Result<BootstrapDraws> {
    let z = standardize(data, fit, curve, d)?;
    let n = data.n();
    let multipliers = plan.multipliers;
    let stats = plan.exec.map(plan.reps, |b| {
        let mut g = plan.rng.child(b as u64).generator();
        let mut draw = || -> Vec<f64> {
            (0..n)
                .map(|_| match multipliers {
                    Multipliers::Rademacher => {
                        if g.random::<bool>() {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                    Multipliers::Zero => 0.0,
                })
                .collect()
        };
        let (zeta, xi) = (draw(), draw());
        (sup_statistic(&z.lower, &zeta), sup_statistic(&z.upper, &xi))
    });
    let (lower, upper) = stats.into_iter().unzip();
    Ok(BootstrapDraws { lower, upper })
}

/// `(ĉ_α, d̂_α)`: the `(1 − α/2)` quantiles of the replicate statistics.
pub fn critical_values(draws: &BootstrapDraws, alpha: f64) -> Result<(f64, f64)> {
    let tau = 1.0 - alpha / 2.0;
    Ok((
        QuantileTable::new(draws.lower.clone()).quantile(tau)?,
        QuantileTable::new(draws.upper.clone()).quantile(tau)?,
    ))
}

/// Uniform multiplier-bootstrap bands and pointwise Imbens–Manski bands at
/// `δ = curve.delta_grid[d]`, both around the grid-order estimates of
/// `curve`. Critical values are floored at zero so bands always contain the
/// estimates.
pub fn multiplier_bootstrap_bands(
    data: &Dataset,
    fit: &NuisanceFit,
    curve: &BoundsCurve,
    d: usize,
    alpha: f64,
    plan: &BootstrapPlan,
) -> Result<BandSet> {
    let draws = draw_statistics(data, fit, curve, d, plan)?;
    bands_from_draws(curve, d, alpha, &draws)
}

/// Bands from already drawn replicate statistics.
pub fn bands_from_draws(curve: &BoundsCurve, d: usize, alpha: f64, draws: &BootstrapDraws) -> Result<BandSet> {
    let (c, dd) = critical_values(draws, alpha)?;
    let (c, dd) = (c.max(0.0), dd.max(0.0));
    let root_n = (curve.n as f64).sqrt();
    let m = curve.eps_grid.len();
    let mut bands = BandSet {
        alpha,
        c_alpha: c,
        d_alpha: dd,
        uniform_lower: Vec::with_capacity(m),
        uniform_upper: Vec::with_capacity(m),
        pointwise_lower: Vec::with_capacity(m),
        pointwise_upper: Vec::with_capacity(m),
    };
    for e in 0..m {
        bands
            .uniform_lower
            .push(curve.psi_l[[e, d]] - c * curve.sigma_l[[e, d]] / root_n);
        bands
            .uniform_upper
            .push(curve.psi_u[[e, d]] + dd * curve.sigma_u[[e, d]] / root_n);
        let (lo, hi) = imbens_manski_band(curve, e, d, alpha)?;
        bands.pointwise_lower.push(lo);
        bands.pointwise_upper.push(hi);
    }
    Ok(bands)
}

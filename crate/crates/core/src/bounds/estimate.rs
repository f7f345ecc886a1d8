use super::{g_value, nu_if, tau_correction, tau_plugin, EtaPoint};
use crate::config::{Model, SensitivityConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::folds::FoldPlan;
use crate::nuisance::NuisanceFit;
use ndarray::Array2;

/// Per-observation quantities that do not depend on `(ε, δ)`. Everything
/// `δ`-dependent is linear in `δ` and stored at `δ = 1`.
#[derive(Debug, Clone)]
pub struct BaseTerms {
    nu: Vec<f64>,
    g_x: Vec<f64>,
    /// XA `g` at the observed arm and at the other arm.
    g_own: Vec<f64>,
    g_other: Vec<f64>,
    plugin: Vec<f64>,
    correction: Vec<f64>,
    folds: Vec<usize>,
    range: f64,
}

impl BaseTerms {
    pub fn new(data: &Dataset, fit: &NuisanceFit) -> Result<Self> {
        fit.check_aligned(data)?;
        let n = data.n();
        let mut b = Self {
            nu: Vec::with_capacity(n),
            g_x: Vec::with_capacity(n),
            g_own: Vec::with_capacity(n),
            g_other: Vec::with_capacity(n),
            plugin: Vec::with_capacity(n),
            correction: Vec::with_capacity(n),
            folds: fit.fold_plan().labels().to_vec(),
            range: data.y_range(),
        };
        for i in 0..n {
            let p = fit.eta(data, i);
            let other = EtaPoint { a: 1 - p.a, ..p };
            b.nu.push(nu_if(&p));
            b.g_x.push(g_value(&p, 1.0, Model::XMixture));
            b.g_own.push(g_value(&p, 1.0, Model::XaMixture));
            b.g_other.push(g_value(&other, 1.0, Model::XaMixture));
            b.plugin.push(tau_plugin(&p, 1.0));
            b.correction.push(tau_correction(&p, 1.0));
        }
        Ok(b)
    }

    pub fn n(&self) -> usize {
        self.nu.len()
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    /// Influence terms at one `(ε, δ)`.
    pub fn terms(&self, fit: &NuisanceFit, model: Model, eps: f64, delta: f64) -> Result<ObservationTerms> {
        let plan = fit.fold_plan();
        let mut q_lo_fold = Vec::with_capacity(plan.folds());
        let mut q_hi_fold = Vec::with_capacity(plan.folds());
        for k in 0..plan.folds() {
            let table = fit.quantile_table(k, model).ok_or(Error::EmptyTable)?;
            q_lo_fold.push(table.quantile(eps)?);
            q_hi_fold.push(table.quantile(1.0 - eps)?);
        }
        let (own, other) = match model {
            Model::XMixture => (&self.g_x, &self.g_x),
            Model::XaMixture => (&self.g_own, &self.g_other),
        };
        // the ε = 0 trim is empty and the ε = 1 trim is everything,
        // whatever the sample quantiles say
        let lower = |g: f64, q: f64| f64::from(u8::from(eps >= 1.0 || (eps > 0.0 && g <= q)));
        let upper = |g: f64, q: f64| f64::from(u8::from(eps >= 1.0 || (eps > 0.0 && g > q)));

        let n = self.n();
        let offset = eps * delta * self.range;
        let mut t = ObservationTerms {
            eps,
            delta,
            phi_l: Vec::with_capacity(n),
            phi_u: Vec::with_capacity(n),
            kappa: Vec::with_capacity(n),
            lambda: Vec::with_capacity(n),
            q_lo: Vec::with_capacity(n),
            q_hi: Vec::with_capacity(n),
            psi_l: 0.0,
            psi_u: 0.0,
        };
        for i in 0..n {
            let k = self.folds[i];
            let (ql, qh) = (q_lo_fold[k], q_hi_fold[k]);
            let (kappa_own, kappa_other) = (lower(own[i], ql), lower(other[i], ql));
            let (lambda_own, lambda_other) = (upper(own[i], qh), upper(other[i], qh));
            t.phi_l
                .push(self.nu[i] + delta * (kappa_own * self.plugin[i] + kappa_other * self.correction[i]) - offset);
            t.phi_u
                .push(self.nu[i] + delta * (lambda_own * self.plugin[i] + lambda_other * self.correction[i]));
            t.kappa.push(kappa_own);
            t.lambda.push(lambda_own);
            t.q_lo.push(delta * ql);
            t.q_hi.push(delta * qh);
        }
        t.psi_l = fold_average(&t.phi_l, plan);
        t.psi_u = fold_average(&t.phi_u, plan);
        Ok(t)
    }
}

/// `(1/B) Σ_k P_n^k[v]`.
pub(crate) fn fold_average(v: &[f64], plan: &FoldPlan) -> f64 {
    let mut sums = vec![0.0; plan.folds()];
    for (i, x) in v.iter().enumerate() {
        sums[plan.fold_of(i)] += x;
    }
    let sizes = plan.sizes();
    sums.iter().zip(&sizes).map(|(s, &m)| s / m as f64).sum::<f64>() / plan.folds() as f64
}

/// Influence terms at one `(ε, δ)`, with fold-specific quantiles already
/// scaled by `δ`.
#[derive(Debug, Clone)]
pub struct ObservationTerms {
    pub eps: f64,
    pub delta: f64,
    pub phi_l: Vec<f64>,
    pub phi_u: Vec<f64>,
    /// Lower-trim indicator at the observation's own `(A, X)` point.
    pub kappa: Vec<f64>,
    /// Upper-trim indicator at the observation's own `(A, X)` point.
    pub lambda: Vec<f64>,
    pub q_lo: Vec<f64>,
    pub q_hi: Vec<f64>,
    pub psi_l: f64,
    pub psi_u: f64,
}

impl ObservationTerms {
    /// Centered lower influence value `φ_l − κq_ε + εq_ε − ψ̂_l`.
    pub fn centered_lower(&self, i: usize) -> f64 {
        self.phi_l[i] - self.kappa[i] * self.q_lo[i] + self.eps * self.q_lo[i] - self.psi_l
    }

    /// Centered upper influence value `φ_u − λq_{1−ε} + εq_{1−ε} − ψ̂_u`.
    pub fn centered_upper(&self, i: usize) -> f64 {
        self.phi_u[i] - self.lambda[i] * self.q_hi[i] + self.eps * self.q_hi[i] - self.psi_u
    }

    pub fn sigma_l(&self) -> f64 {
        root_mean_square((0..self.phi_l.len()).map(|i| self.centered_lower(i)))
    }

    pub fn sigma_u(&self) -> f64 {
        root_mean_square((0..self.phi_u.len()).map(|i| self.centered_upper(i)))
    }
}

fn root_mean_square(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len() as f64;
    (values.map(|v| v * v).sum::<f64>() / n).sqrt()
}

/// Bound estimates over an `(ε, δ)` grid; matrices are indexed `[ε, δ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsCurve {
    pub model: Model,
    pub eps_grid: Vec<f64>,
    pub delta_grid: Vec<f64>,
    pub psi_l: Array2<f64>,
    pub psi_u: Array2<f64>,
    pub sigma_l: Array2<f64>,
    pub sigma_u: Array2<f64>,
    pub rearranged: bool,
    pub n: usize,
}

impl BoundsCurve {
    pub fn eps_index(&self, eps: f64) -> Option<usize> {
        self.eps_grid.iter().position(|&e| (e - eps).abs() <= 1e-12)
    }

    pub fn delta_index(&self, delta: f64) -> Option<usize> {
        self.delta_grid.iter().position(|&d| (d - delta).abs() <= 1e-12)
    }
}

pub fn estimate_bounds(data: &Dataset, fit: &NuisanceFit, cfg: &SensitivityConfig) -> Result<BoundsCurve> {
    estimate_bounds_with(
        data,
        fit,
        cfg.model,
        &cfg.eps_grid,
        &cfg.delta_grid,
        Execution::default(),
    )
}

/// Cross-fitted bound estimates and standard deviations over the grid.
pub fn estimate_bounds_with(
    data: &Dataset,
    fit: &NuisanceFit,
    model: Model,
    eps_grid: &[f64],
    delta_grid: &[f64],
    exec: Execution,
) -> Result<BoundsCurve> {
    let base = BaseTerms::new(data, fit)?;
    let cells = exec.try_map(eps_grid.len() * delta_grid.len(), |c| {
        let (e, d) = (c / delta_grid.len(), c % delta_grid.len());
        let t = base.terms(fit, model, eps_grid[e], delta_grid[d])?;
        Ok([t.psi_l, t.psi_u, t.sigma_l(), t.sigma_u()])
    })?;
    let shape = (eps_grid.len(), delta_grid.len());
    let pick = |j: usize| Array2::from_shape_fn(shape, |(e, d)| cells[e * shape.1 + d][j]);
    Ok(BoundsCurve {
        model,
        eps_grid: eps_grid.to_vec(),
        delta_grid: delta_grid.to_vec(),
        psi_l: pick(0),
        psi_u: pick(1),
        sigma_l: pick(2),
        sigma_u: pick(3),
        rearranged: false,
        n: data.n(),
    })
}

/// `ψ_u − ψ_l` at a grid point.
pub fn bound_width(curve: &BoundsCurve, eps: f64, delta: f64) -> Option<f64> {
    let (e, d) = (curve.eps_index(eps)?, curve.delta_index(delta)?);
    Some(curve.psi_u[[e, d]] - curve.psi_l[[e, d]])
}

/// Values sorted into nonincreasing order.
pub fn sort_nonincreasing(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

/// Values sorted into nondecreasing order.
pub fn sort_nondecreasing(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    out.sort_by(f64::total_cmp);
    out
}

/// Monotone rearrangement in `ε` for every `δ`: `ψ_l` nonincreasing, `ψ_u`
/// nondecreasing. Standard deviations are left in grid order.
pub fn rearrange(curve: &BoundsCurve) -> BoundsCurve {
    let mut out = curve.clone();
    for d in 0..curve.delta_grid.len() {
        let lo = sort_nonincreasing(&curve.psi_l.column(d).to_vec());
        let hi = sort_nondecreasing(&curve.psi_u.column(d).to_vec());
        for e in 0..curve.eps_grid.len() {
            out.psi_l[[e, d]] = lo[e];
            out.psi_u[[e, d]] = hi[e];
        }
    }
    out.rearranged = true;
    out
}

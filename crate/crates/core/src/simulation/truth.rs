//! Ground truth by quadrature over the covariate distribution.
//!
//! The covariate square is discretised with the midpoint rule; each cell
//! becomes an atom carrying the exact nuisances at its centre, and the bounds
//! of the resulting finite population are evaluated exactly.

use super::{true_nuisances, truncnorm_pdf, TRUNCATION};
use crate::bounds::{plug_in_bounds, DiscretePopulation, PopulationAtom};
use crate::config::Model;
use crate::error::{Error, Result};
use std::fs;
use std::path::{Path, PathBuf};

/// Midpoint nodes per covariate.
pub const QUADRATURE_POINTS: usize = 400;

/// Directory for cached truth curves; unset disables caching.
pub const CACHE_ENV: &str = "CONFOUND_BOUNDS_CACHE";

#[derive(Debug, Clone, PartialEq)]
pub struct TrueCurves {
    pub eps_grid: Vec<f64>,
    pub psi_l: Vec<f64>,
    pub psi_u: Vec<f64>,
    /// `E{μ₁(X) − μ₀(X)}`, the common value at `ε = 0`.
    pub ate: f64,
    /// `None` when the bounds exclude zero for every `ε ∈ [0, 1]`.
    pub eps0: Option<f64>,
}

/// Finite population approximating the covariate law with `points²` atoms.
pub fn truth_population(r: f64, points: usize) -> Result<DiscretePopulation> {
    let h = 2.0 * TRUNCATION / points as f64;
    let nodes: Vec<f64> = (0..points).map(|k| -TRUNCATION + (k as f64 + 0.5) * h).collect();
    let raw: Vec<f64> = nodes.iter().map(|&x| truncnorm_pdf(x)).collect();
    let total: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let mut atoms = Vec::with_capacity(points * points);
    for (i, &x1) in nodes.iter().enumerate() {
        for (j, &x2) in nodes.iter().enumerate() {
            let t = true_nuisances(r, x1, x2);
            atoms.push(PopulationAtom {
                p: w[i] * w[j],
                pi1: t.pi1,
                mu0: t.mu0,
                mu1: t.mu1,
            });
        }
    }
    DiscretePopulation::new(atoms, 0.0, 1.0)
}

/// Zero of the bound that starts on the same side as the ATE, by bisection
/// on `[0, 1]`. Both bounds are monotone in `ε`.
fn population_eps0(pop: &DiscretePopulation, delta: f64, model: Model) -> Option<f64> {
    let ate = pop.ate();
    if ate == 0.0 {
        return Some(0.0);
    }
    let f = |e: f64| {
        let (lo, hi) = plug_in_bounds(pop, e, delta, model);
        if ate > 0.0 {
            lo
        } else {
            -hi
        }
    };
    let (mut a, mut b) = (0.0, 1.0);
    if f(b) > 0.0 {
        return None;
    }
    while b - a > 1e-12 {
        let m = 0.5 * (a + b);
        if f(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

pub fn oracle_truth_uncached(r: f64, eps_grid: &[f64], delta: f64, model: Model) -> Result<TrueCurves> {
    let pop = truth_population(r, QUADRATURE_POINTS)?;
    let (psi_l, psi_u) = eps_grid.iter().map(|&e| plug_in_bounds(&pop, e, delta, model)).unzip();
    Ok(TrueCurves {
        eps_grid: eps_grid.to_vec(),
        psi_l,
        psi_u,
        ate: pop.ate(),
        eps0: population_eps0(&pop, delta, model),
    })
}

/// True curves and `ε₀`, read from or written to the directory named by
/// [`CACHE_ENV`] when it is set. Unreadable cache entries are recomputed.
pub fn oracle_truth(r: f64, eps_grid: &[f64], delta: f64, model: Model) -> Result<TrueCurves> {
    let Some(dir) = std::env::var_os(CACHE_ENV).filter(|d| !d.is_empty()) else {
        return oracle_truth_uncached(r, eps_grid, delta, model);
    };
    let path = cache_path(Path::new(&dir), r, eps_grid, delta, model);
    if let Some(hit) = fs::read_to_string(&path).ok().and_then(|s| parse_cache(&s, eps_grid)) {
        return Ok(hit);
    }
    let truth = oracle_truth_uncached(r, eps_grid, delta, model)?;
    fs::create_dir_all(&dir)?;
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, render_cache(&truth))?;
    fs::rename(&tmp, &path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(truth)
}

fn cache_path(dir: &Path, r: f64, eps_grid: &[f64], delta: f64, model: Model) -> PathBuf {
    // FNV-1a over the bit patterns of every input that changes the result
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bits: u64| {
        for b in bits.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    eat(r.to_bits());
    eat(delta.to_bits());
    eat(QUADRATURE_POINTS as u64);
    eat(eps_grid.len() as u64);
    eps_grid.iter().for_each(|e| eat(e.to_bits()));
    dir.join(format!("truth-{model}-{h:016x}.txt"))
}

fn render_cache(t: &TrueCurves) -> String {
    let mut s = format!("ate {:e}\n", t.ate);
    match t.eps0 {
        Some(e) => s.push_str(&format!("eps0 {e:e}\n")),
        None => s.push_str("eps0 none\n"),
    }
    for i in 0..t.eps_grid.len() {
        s.push_str(&format!("{:e} {:e} {:e}\n", t.eps_grid[i], t.psi_l[i], t.psi_u[i]));
    }
    s
}

fn parse_cache(s: &str, eps_grid: &[f64]) -> Option<TrueCurves> {
    let mut lines = s.lines();
    let ate = lines.next()?.strip_prefix("ate ")?.parse().ok()?;
    let eps0 = match lines.next()?.strip_prefix("eps0 ")? {
        "none" => None,
        v => Some(v.parse().ok()?),
    };
    let (mut grid, mut psi_l, mut psi_u) = (vec![], vec![], vec![]);
    for line in lines {
        let v: Vec<f64> = line.split(' ').map(str::parse).collect::<Result<_, _>>().ok()?;
        if v.len() != 3 {
            return None;
        }
        grid.push(v[0]);
        psi_l.push(v[1]);
        psi_u.push(v[2]);
    }
    (grid == eps_grid).then_some(TrueCurves {
        eps_grid: grid,
        psi_l,
        psi_u,
        ate,
        eps0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::linspace;

    #[test]
    fn cache_round_trips_exactly() {
        let t = TrueCurves {
            eps_grid: linspace(0.0, 0.2, 5),
            psi_l: vec![0.1, 0.05, 1.0 / 3.0, -0.02, -0.1],
            psi_u: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            ate: 0.1,
            eps0: Some(0.0407),
        };
        assert_eq!(parse_cache(&render_cache(&t), &t.eps_grid), Some(t.clone()));
        let none = TrueCurves {
            eps0: None,
            ..t.clone()
        };
        assert_eq!(parse_cache(&render_cache(&none), &t.eps_grid), Some(none));
        // a different grid is a miss
        assert_eq!(parse_cache(&render_cache(&t), &[0.0]), None);
        assert_eq!(parse_cache("garbage", &t.eps_grid), None);
    }

    #[test]
    fn quadrature_masses_sum_to_one() {
        let pop = truth_population(0.05, 50).unwrap();
        let total: f64 = pop.atoms().iter().map(|a| a.p).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cache_keys_separate_inputs() {
        let g = linspace(0.0, 0.2, 3);
        let dir = Path::new("/tmp");
        let a = cache_path(dir, 0.05, &g, 1.0, Model::XMixture);
        assert_ne!(a, cache_path(dir, 0.06, &g, 1.0, Model::XMixture));
        assert_ne!(a, cache_path(dir, 0.05, &g, 0.5, Model::XMixture));
        assert_ne!(a, cache_path(dir, 0.05, &g, 1.0, Model::XaMixture));
        assert_ne!(a, cache_path(dir, 0.05, &g[..2], 1.0, Model::XMixture));
    }

    #[test]
    fn reference_design_truth() {
        let t = oracle_truth_uncached(0.05, &linspace(0.0, 0.2, 21), 1.0, Model::XMixture).unwrap();
        assert!((t.ate - 0.0228).abs() < 5e-4);
        assert!((t.eps0.unwrap() - 0.0407).abs() < 5e-4);
        assert_eq!(t.psi_l[0], t.ate);
    }
}

//! Full counterfactual tables and the identity expressing the ATE through
//! the latent confounding indicator `S`.

use super::SupportPoint;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// One joint cell of `(X, S, A, Y⁰, Y¹)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualCell {
    pub x: usize,
    pub s: u8,
    pub a: u8,
    pub y0: f64,
    pub y1: f64,
    pub p: f64,
}

/// Joint law of `(X, S, A, Y⁰, Y¹)` on finite support. Within `S = 1`
/// cells `A` is independent of `(Y⁰, Y¹)` given `X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualTable {
    pub y_min: f64,
    pub y_max: f64,
    pub n_x: usize,
    pub cells: Vec<CounterfactualCell>,
}

/// How the latent indicator is drawn in [`CounterfactualTable::random`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatentMix {
    Mixed,
    AllUnconfounded,
    AllConfounded,
}

impl CounterfactualTable {
    /// Random table with `n_x` covariate points and three outcome levels.
    /// Every cell has positive mass, so all conditional means exist.
    pub fn random<R: Rng>(rng: &mut R, n_x: usize, mix: LatentMix) -> Self {
        let y_min = rng.random_range(-1.0..0.5);
        let y_max = y_min + rng.random_range(0.5..2.0);
        let levels = [y_min, rng.random_range(y_min..y_max), y_max];
        let mut cells = Vec::new();
        let weights = |rng: &mut R, k: usize| -> Vec<f64> {
            let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
            let t: f64 = w.iter().sum();
            w.into_iter().map(|v| v / t).collect()
        };
        let px = weights(rng, n_x);
        for (x, &p_x) in px.iter().enumerate() {
            let s1 = match mix {
                LatentMix::Mixed => rng.random_range(0.1..0.9),
                LatentMix::AllUnconfounded => 1.0,
                LatentMix::AllConfounded => 0.0,
            };
            if s1 > 0.0 {
                let a1 = rng.random_range(0.1..0.9);
                let joint = weights(rng, 9);
                for a in 0..2u8 {
                    let pa = if a == 1 { a1 } else { 1.0 - a1 };
                    for (k, &r) in joint.iter().enumerate() {
                        cells.push(CounterfactualCell {
                            x,
                            s: 1,
                            a,
                            y0: levels[k / 3],
                            y1: levels[k % 3],
                            p: p_x * s1 * pa * r,
                        });
                    }
                }
            }
            if s1 < 1.0 {
                let joint = weights(rng, 18);
                for (k, &r) in joint.iter().enumerate() {
                    cells.push(CounterfactualCell {
                        x,
                        s: 0,
                        a: (k / 9) as u8,
                        y0: levels[(k % 9) / 3],
                        y1: levels[k % 3],
                        p: p_x * (1.0 - s1) * r,
                    });
                }
            }
        }
        Self {
            y_min,
            y_max,
            n_x,
            cells,
        }
    }

    /// `E(f | condition)` over the cells selected by `keep`.
    fn conditional(
        &self,
        keep: impl Fn(&CounterfactualCell) -> bool,
        f: impl Fn(&CounterfactualCell) -> f64,
    ) -> Option<f64> {
        let (mut m, mut s) = (0.0, 0.0);
        for c in self.cells.iter().filter(|c| keep(c)) {
            m += c.p;
            s += c.p * f(c);
        }
        (m > 0.0).then(|| s / m)
    }

    /// Observable `p(x)`, `π(1|x)`, `μ_a(x) = E(Y^a | A = a, x)`.
    pub fn observed_nuisances(&self) -> Vec<SupportPoint> {
        (0..self.n_x)
            .map(|x| {
                let p: f64 = self.cells.iter().filter(|c| c.x == x).map(|c| c.p).sum();
                SupportPoint {
                    p,
                    pi1: self.conditional(|c| c.x == x, |c| f64::from(c.a)).unwrap_or(0.5),
                    mu0: self
                        .conditional(|c| c.x == x && c.a == 0, |c| c.y0)
                        .unwrap_or(self.y_min),
                    mu1: self
                        .conditional(|c| c.x == x && c.a == 1, |c| c.y1)
                        .unwrap_or(self.y_min),
                }
            })
            .collect()
    }
}

/// `|E(Y¹ − Y⁰) − RHS|` where
/// `RHS = E((1−S)(Y − λ_{1−A}(X))(2A−1) + S{E(Y|A=1,X,S=1) − E(Y|A=0,X,S=1)})`
/// and `λ_a(x) = E(Y^a | A = 1−a, X = x, S = 0)`.
pub fn check_ate_identity(table: &CounterfactualTable) -> f64 {
    let lhs: f64 = table.cells.iter().map(|c| c.p * (c.y1 - c.y0)).sum();
    let lambda = |a: u8, x: usize| {
        table.conditional(
            |c| c.x == x && c.s == 0 && c.a == 1 - a,
            |c| if a == 1 { c.y1 } else { c.y0 },
        )
    };
    let unconfounded = |a: u8, x: usize| {
        table.conditional(
            |c| c.x == x && c.s == 1 && c.a == a,
            |c| if a == 1 { c.y1 } else { c.y0 },
        )
    };
    let rhs: f64 = table
        .cells
        .iter()
        .map(|c| {
            if c.s == 0 {
                let y = if c.a == 1 { c.y1 } else { c.y0 };
                let lam = lambda(1 - c.a, c.x).expect("confounded cell implies the opposite arm exists");
                c.p * (y - lam) * (2.0 * f64::from(c.a) - 1.0)
            } else {
                let m1 = unconfounded(1, c.x).expect("unconfounded cells cover both arms");
                let m0 = unconfounded(0, c.x).expect("unconfounded cells cover both arms");
                c.p * (m1 - m0)
            }
        })
        .sum();
    (lhs - rhs).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;

    #[test]
    fn identity_holds_for_every_latent_mix() {
        let mut rng = StreamRng::new(21, 0).generator();
        for mix in [LatentMix::AllUnconfounded, LatentMix::AllConfounded, LatentMix::Mixed] {
            for _ in 0..50 {
                let t = CounterfactualTable::random(&mut rng, 8, mix);
                assert!(check_ate_identity(&t) <= 1e-12, "{mix:?}");
            }
        }
    }

    #[test]
    fn all_unconfounded_reduces_to_g_formula() {
        let mut rng = StreamRng::new(22, 0).generator();
        let t = CounterfactualTable::random(&mut rng, 5, LatentMix::AllUnconfounded);
        let g_formula: f64 = t.observed_nuisances().iter().map(|s| s.p * (s.mu1 - s.mu0)).sum();
        let ate: f64 = t.cells.iter().map(|c| c.p * (c.y1 - c.y0)).sum();
        assert!((g_formula - ate).abs() < 1e-12);
    }

    #[test]
    fn broken_table_is_detected() {
        let mut rng = StreamRng::new(23, 0).generator();
        let mut t = CounterfactualTable::random(&mut rng, 4, LatentMix::Mixed);
        // raising Y¹ of an untreated unconfounded unit breaks A ⊥ Y¹ given S = 1
        let i = t
            .cells
            .iter()
            .position(|c| c.s == 1 && c.a == 0 && c.y1 < t.y_max)
            .unwrap();
        t.cells[i].y1 = t.y_max;
        assert!(check_ate_identity(&t) > 1e-6);
    }
}

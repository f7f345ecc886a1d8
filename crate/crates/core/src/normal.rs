//! Standard normal distribution helpers.

use statrs::distribution::{ContinuousCDF, Normal};
use std::sync::OnceLock;

fn std_normal() -> &'static Normal {
    static N: OnceLock<Normal> = OnceLock::new();
    N.get_or_init(|| Normal::new(0.0, 1.0).expect("valid parameters"))
}

/// Φ(x).
pub fn cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

/// Φ⁻¹(p) for p in (0, 1).
pub fn quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

/// φ(x).
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

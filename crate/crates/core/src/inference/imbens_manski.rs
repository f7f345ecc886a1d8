use crate::bounds::BoundsCurve;
use crate::error::{Error, Result};
use crate::normal;

/// `C` solving `Φ(C + w) − Φ(−C) = 1 − α` for standardized width
/// `w = √n(ψ_u − ψ_l)/max(σ_l, σ_u)`. The root lies in `[z_{1−α}, z_{1−α/2}]`;
/// bisection starts from a wider bracket so quantile rounding cannot exclude it.
pub fn imbens_manski_critical(std_width: f64, alpha: f64) -> Result<f64> {
    if std_width.is_nan() || !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::NoRoot(format!("width {std_width}, alpha {alpha}")));
    }
    let w = std_width.max(0.0);
    let f = |c: f64| normal::cdf(c + w) - normal::cdf(-c) - (1.0 - alpha);
    let one_sided = normal::quantile(1.0 - alpha);
    if w.is_infinite() {
        return Ok(one_sided);
    }
    let (mut lo, mut hi) = (one_sided - 1.0, normal::quantile(1.0 - alpha / 2.0) + 1.0);
    if !(f(lo) < 0.0 && f(hi) > 0.0) {
        return Err(Error::NoRoot(format!("critical value not bracketed at width {w}")));
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Pointwise interval for the ATE at grid cell `(e, d)` of `curve`.
pub fn imbens_manski_band(curve: &BoundsCurve, e: usize, d: usize, alpha: f64) -> Result<(f64, f64)> {
    let (lo, hi) = (curve.psi_l[[e, d]], curve.psi_u[[e, d]]);
    let (sl, su) = (curve.sigma_l[[e, d]], curve.sigma_u[[e, d]]);
    let root_n = (curve.n as f64).sqrt();
    let width = root_n * (hi - lo).max(0.0) / sl.max(su);
    let c = imbens_manski_critical(width, alpha)?;
    Ok((lo - c * sl / root_n, hi + c * su / root_n))
}

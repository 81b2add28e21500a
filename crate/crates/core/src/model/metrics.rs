//! Amplitude-based quality metrics.

use super::field::ComplexField;
use crate::error::{Error, Result};

/// `sqrt( sum (|a| - |b|)^2 / sum |b|^2 )`. Uses moduli only, so a global
/// phase on `a` has no effect.
pub fn amplitude_rmse(a: &ComplexField, b: &ComplexField) -> Result<f64> {
    rmse_scaled(a, b, 1.0)
}

/// Optimal real scale `s` minimizing `sum (s|a| - |b|)^2`.
pub fn amplitude_scale(a: &ComplexField, b: &ComplexField) -> Result<f64> {
    check_dims(a, b)?;
    let (mut ab, mut aa) = (0.0, 0.0);
    for (x, y) in a.values().iter().zip(b.values()) {
        ab += x.norm() * y.norm();
        aa += x.norm_sqr();
    }
    if aa == 0.0 {
        return Err(Error::UndefinedMetric("estimate is identically zero".into()));
    }
    Ok(ab / aa)
}

/// [`amplitude_rmse`] after removing the unknown global intensity scale of
/// the estimate. Reconstructions from normalized captures carry an arbitrary
/// gain relative to the ground truth, so this is the score used for runs.
pub fn aligned_amplitude_rmse(estimate: &ComplexField, truth: &ComplexField) -> Result<f64> {
    let s = amplitude_scale(estimate, truth)?;
    rmse_scaled(estimate, truth, s)
}

fn rmse_scaled(a: &ComplexField, b: &ComplexField, scale: f64) -> Result<f64> {
    check_dims(a, b)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in a.values().iter().zip(b.values()) {
        let d = scale * x.norm() - y.norm();
        num += d * d;
        den += y.norm_sqr();
    }
    if den == 0.0 {
        return Err(Error::UndefinedMetric("reference field is identically zero".into()));
    }
    Ok((num / den).sqrt())
}

fn check_dims(a: &ComplexField, b: &ComplexField) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            expected: b.dims(),
            got: a.dims(),
        });
    }
    Ok(())
}

use serde::{Deserialize, Serialize};

use crate::model::OpticsConfig;

/// Pixel-size check against the raw and synthetic Nyquist limits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingReport {
    /// Camera pixel projected onto the sample (um).
    pub effective_pixel: f64,
    /// `lambda / (2 NA_obj)` (um).
    pub nyquist_raw: f64,
    /// `lambda / (2 NA_syn)` (um).
    pub nyquist_synthetic: f64,
    pub ok_raw: bool,
    pub ok_synthetic: bool,
    /// Smallest power of two that brings the sub-pixel pitch under the
    /// synthetic Nyquist limit.
    pub recommended_subfactor: u32,
}

pub fn check_sampling(optics: &OpticsConfig, synthetic_na: f64) -> SamplingReport {
    let lambda = optics.wavelength_um();
    let effective_pixel = optics.effective_pixel_um();
    let nyquist_raw = lambda / (2.0 * optics.na_obj);
    let nyquist_synthetic = lambda / (2.0 * synthetic_na);
    let mut sub = 1u32;
    while effective_pixel / sub as f64 > nyquist_synthetic && sub < (1 << 30) {
        sub *= 2;
    }
    SamplingReport {
        effective_pixel,
        nyquist_raw,
        nyquist_synthetic,
        ok_raw: effective_pixel <= nyquist_raw,
        ok_synthetic: effective_pixel <= nyquist_synthetic,
        recommended_subfactor: sub,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_setup_raw_sampling_is_fine() {
        let r = check_sampling(&OpticsConfig::default(), 0.5);
        assert!((r.effective_pixel - 0.9375).abs() < 1e-12);
        assert!((r.nyquist_raw - 3.155_65).abs() < 1e-6);
        assert!(r.ok_raw);
    }

    #[test]
    fn default_setup_needs_half_pixels_for_synthetic_na() {
        let r = check_sampling(&OpticsConfig::default(), 0.5);
        assert!((r.nyquist_synthetic - 0.631_13).abs() < 1e-6);
        assert!(!r.ok_synthetic);
        assert_eq!(r.recommended_subfactor, 2);
    }

    #[test]
    fn huge_magnification_is_always_fine() {
        let optics = OpticsConfig {
            magnification: 1e9,
            ..Default::default()
        };
        let r = check_sampling(&optics, 0.5);
        assert!(r.effective_pixel < 1e-8);
        assert!(r.ok_raw && r.ok_synthetic);
        assert_eq!(r.recommended_subfactor, 1);
    }
}

use crate::error::{Error, Result};
use crate::model::{Image2D, Mask};

use super::otsu::otsu_threshold;

/// Fraction of pixels above `eta` beyond which a dark-field frame counts as
/// hit by stray light.
pub const AFFECTED_FRACTION: f64 = 1e-4;
/// A stray class covering more than this share of the frame is not local
/// stray light; the mask is dropped.
pub const MAX_MASK_FRACTION: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct StrayDetection {
    pub affected: bool,
    /// 1 (true) marks stray-light pixels.
    pub mask: Mask,
    pub threshold: Option<f64>,
    pub warning: Option<String>,
}

impl StrayDetection {
    fn clean(img: &Image2D, affected: bool, warning: Option<String>) -> Self {
        let (w, h) = img.dims();
        Self {
            affected,
            mask: Mask::filled(w, h, false),
            threshold: None,
            warning,
        }
    }
}

/// Flags a dark-field frame as stray-light affected and binarizes it.
///
/// Bright-field frames are never flagged. A dark-field frame is affected when
/// more than [`AFFECTED_FRACTION`] of its pixels exceed `eta`; the mask is
/// then the bright Otsu class.
pub fn detect_stray_mask(img: &Image2D, is_df: bool, eta: f64) -> Result<StrayDetection> {
    img.ensure_normalized()?;
    if !is_df {
        return Ok(StrayDetection::clean(img, false, None));
    }
    let n = img.values().len();
    let above = img.values().iter().filter(|&&v| v > eta).count();
    if (above as f64) / (n as f64) <= AFFECTED_FRACTION {
        return Ok(StrayDetection::clean(img, false, None));
    }
    let t = match otsu_threshold(img, 256) {
        Ok(t) => t,
        Err(Error::DegenerateHistogram) => {
            log::debug!("stray-light binarization skipped: constant frame");
            return Ok(StrayDetection::clean(
                img,
                false,
                Some("degenerate histogram; stray mask skipped".into()),
            ));
        }
        Err(e) => return Err(e),
    };
    let (w, h) = img.dims();
    let bits: Vec<bool> = img.values().iter().map(|&v| v >= t).collect();
    let mask = Mask::from_bits(w, h, bits)?;
    if mask.count_true() as f64 > MAX_MASK_FRACTION * n as f64 {
        log::debug!("stray class covers {} of {n} pixels; mask rejected", mask.count_true());
        return Ok(StrayDetection {
            affected: true,
            mask: Mask::filled(w, h, false),
            threshold: Some(t),
            warning: Some(format!(
                "stray class covers {:.1}% of the frame; mask rejected",
                100.0 * mask.count_true() as f64 / n as f64
            )),
        });
    }
    Ok(StrayDetection {
        affected: true,
        mask,
        threshold: Some(t),
        warning: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Domain;

    fn norm(w: usize, h: usize, f: impl FnMut(usize, usize) -> f64) -> Image2D {
        Image2D::from_fn(w, h, Domain::Normalized, f)
    }

    #[test]
    fn dim_dark_field_is_clean() {
        let img = norm(32, 32, |x, y| 0.05 * ((x + y) % 7) as f64 / 6.0);
        let d = detect_stray_mask(&img, true, 0.1).unwrap();
        assert!(!d.affected);
        assert!(!d.mask.any());
    }

    #[test]
    fn bright_field_is_never_flagged() {
        let img = norm(32, 32, |x, _| if x < 5 { 0.9 } else { 0.4 });
        let d = detect_stray_mask(&img, false, 0.1).unwrap();
        assert!(!d.affected);
        assert!(!d.mask.any());
    }

    #[test]
    fn disk_is_recovered() {
        let inside = |x: usize, y: usize| {
            let dx = x as f64 - 20.0;
            let dy = y as f64 - 12.0;
            dx * dx + dy * dy <= 36.0
        };
        let img = norm(48, 40, |x, y| if inside(x, y) { 0.62 } else { 0.02 });
        let d = detect_stray_mask(&img, true, 0.1).unwrap();
        assert!(d.affected);
        let agree = (0..40)
            .flat_map(|y| (0..48).map(move |x| (x, y)))
            .filter(|&(x, y)| d.mask.get(x, y) == inside(x, y))
            .count();
        assert!(agree as f64 / (48.0 * 40.0) >= 0.99);
    }

    #[test]
    fn widespread_bright_class_is_rejected() {
        let img = norm(20, 20, |x, _| if x < 14 { 0.5 } else { 0.02 });
        let d = detect_stray_mask(&img, true, 0.1).unwrap();
        assert!(d.affected);
        assert!(!d.mask.any());
        assert!(d.warning.is_some());
    }

    #[test]
    fn constant_bright_frame_warns() {
        let img = norm(10, 10, |_, _| 0.5);
        let d = detect_stray_mask(&img, true, 0.1).unwrap();
        assert!(!d.affected);
        assert!(d.warning.is_some());
    }
}

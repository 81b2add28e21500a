//! Capture-stack cleaning ahead of reconstruction.

mod classify;
mod hot_pixels;
mod otsu;
mod sampling;
mod saturation;
mod stray;
mod threshold;
mod uniformity;

pub use classify::{classify_illumination, Illumination};
pub use hot_pixels::{detect_hot_pixels, replace_hot_pixels, MAD_FACTOR, MIN_HOT_LEVEL};
pub use otsu::{otsu_threshold, quantize};
pub use sampling::{check_sampling, SamplingReport};
pub use saturation::mark_saturation;
pub use stray::{detect_stray_mask, StrayDetection, AFFECTED_FRACTION, MAX_MASK_FRACTION};
pub use threshold::{apply_threshold, threshold_bound, ThresholdParams};
pub use uniformity::{
    auto_regions, uniformity_alpha, uniformity_alpha_excluding, weighted_subtract, UniformityRecord,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{normalize_image, Capture, CaptureStack, Domain, Image2D, Mask, RegionSpec};

/// Share of invalid pixels above which the stack is considered poorly exposed.
pub const INVALID_FRACTION_WARNING: f64 = 0.15;
pub const DEFAULT_ETA: f64 = 0.1;

/// Per-image masks aligned with the capture order.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskSet {
    /// true = usable pixel.
    pub validity: Vec<Mask>,
    /// true = stray-light pixel.
    pub stray: Vec<Mask>,
    pub affected: Vec<bool>,
}

impl MaskSet {
    /// All pixels valid, no stray light.
    pub fn trivial(count: usize, width: usize, height: usize) -> Self {
        Self {
            validity: vec![Mask::filled(width, height, true); count],
            stray: vec![Mask::filled(width, height, false); count],
            affected: vec![false; count],
        }
    }

    pub fn len(&self) -> usize {
        self.affected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.affected.is_empty()
    }

    pub fn invalid_fraction(&self) -> f64 {
        let total: usize = self.validity.iter().map(Mask::len).sum();
        if total == 0 {
            return 0.0;
        }
        let bad: usize = self.validity.iter().map(Mask::count_false).sum();
        bad as f64 / total as f64
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subtraction {
    /// Least-squares weighted dark frame.
    #[default]
    Uniformity,
    /// Dark frame subtracted with unit weight.
    Direct,
    Skip,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessParams {
    pub eta: f64,
    /// `None` picks half the bound computed from the stack.
    pub i_th: Option<f64>,
    /// `None` picks the two darkest corners of the first bright-field frame.
    pub regions: Option<RegionSpec>,
    pub subtraction: Subtraction,
}

impl Default for PreprocessParams {
    fn default() -> Self {
        Self {
            eta: DEFAULT_ETA,
            i_th: None,
            regions: None,
            subtraction: Subtraction::Uniformity,
        }
    }
}

impl PreprocessParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::InvalidParameter(format!("eta {} outside (0, 1)", self.eta)));
        }
        if let Some(t) = self.i_th {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidParameter(format!("i_th {t} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageReport {
    pub index: usize,
    pub row: usize,
    pub col: usize,
    pub illumination: Illumination,
    pub alpha: Option<f64>,
    pub affected: bool,
    pub stray_pixels: usize,
    pub hot_pixels: usize,
    pub invalid_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailedImage {
    pub index: usize,
    pub row: usize,
    pub col: usize,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub eta: f64,
    pub subtraction: Subtraction,
    pub regions: Option<RegionSpec>,
    pub threshold: ThresholdParams,
    pub bound_after_threshold: f64,
    pub invalid_fraction: f64,
    pub images: Vec<ImageReport>,
    pub failed: Vec<FailedImage>,
    pub warnings: Vec<String>,
}

impl PreprocessReport {
    pub fn affected_count(&self) -> usize {
        self.images.iter().filter(|r| r.affected).count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Preprocessed {
    /// Normalized captures; the dark frame, if any, is normalized too.
    pub stack: CaptureStack,
    pub masks: MaskSet,
    pub uniformity: Option<UniformityRecord>,
    pub report: PreprocessReport,
}

struct Stage1 {
    image: Image2D,
    validity: Mask,
    stray: StrayDetection,
    illumination: Illumination,
    hot: usize,
}

fn normalize_any(img: &Image2D) -> Result<Image2D> {
    match img.domain() {
        Domain::RawCounts { bit_depth } => normalize_image(img, bit_depth),
        Domain::Normalized => Ok(img.clone()),
    }
}

fn validity_of(img: &Image2D) -> Mask {
    match img.domain() {
        Domain::RawCounts { bit_depth } => mark_saturation(img, bit_depth),
        Domain::Normalized => {
            let (w, h) = img.dims();
            Mask::filled(w, h, true)
        }
    }
}

fn stage1(c: &Capture, stack: &CaptureStack, eta: f64) -> Result<Stage1> {
    let validity = validity_of(&c.image);
    let normalized = normalize_any(&c.image)?;
    let hot = detect_hot_pixels(&normalized).len();
    let image = replace_hot_pixels(&normalized)?;
    let illumination = classify_illumination(c.wavevector, &stack.optics);
    let stray = detect_stray_mask(&image, illumination == Illumination::DarkField, eta)?;
    Ok(Stage1 {
        image,
        validity,
        stray,
        illumination,
        hot,
    })
}

/// Normalization, saturation masking, hot-pixel repair, stray-light masks,
/// dark-frame subtraction and thresholding, in that order.
///
/// Images whose processing fails are dropped and listed in the report; the
/// call fails when more than half of the stack is lost.
pub fn preprocess_stack(stack: &CaptureStack, params: &PreprocessParams) -> Result<Preprocessed> {
    params.validate()?;
    let (w, h) = stack.image_dims()?;
    let mut warnings = Vec::new();

    let dark = match (&stack.dark, params.subtraction) {
        (_, Subtraction::Skip) => None,
        (Some(d), _) => Some(replace_hot_pixels(&normalize_any(d)?)?),
        (None, _) => {
            return Err(Error::InvalidParameter(
                "dark frame required for dark subtraction".into(),
            ))
        }
    };

    let mut kept: Vec<(usize, Stage1)> = Vec::with_capacity(stack.len());
    let mut failed = Vec::new();
    for (i, c) in stack.captures.iter().enumerate() {
        match stage1(c, stack, params.eta) {
            Ok(s) => kept.push((i, s)),
            Err(e) => {
                warnings.push(format!("image {i} dropped: {e}"));
                failed.push(FailedImage {
                    index: i,
                    row: c.led.row,
                    col: c.led.col,
                    error: e.to_string(),
                });
            }
        }
    }
    if 2 * failed.len() > stack.len() {
        return Err(Error::TooManyFailures {
            failed: failed.len(),
            total: stack.len(),
        });
    }
    for (i, s) in &kept {
        if let Some(msg) = &s.stray.warning {
            warnings.push(format!("image {i}: {msg}"));
        }
    }

    let bound = threshold_bound(kept.iter().map(|(_, s)| &s.image))?;
    let i_th = params.i_th.unwrap_or(0.5 * bound.max(0.0));
    if i_th > bound {
        warnings.push(format!("i_th {i_th} exceeds the admissible bound {bound:.5}"));
    }

    let regions = match (&dark, &params.regions) {
        (None, _) => None,
        (Some(_), Some(r)) => {
            r.validate(w, h)?;
            Some(r.clone())
        }
        (Some(_), None) => {
            let reference = kept
                .iter()
                .find(|(_, s)| s.illumination == Illumination::BrightField)
                .or(kept.first())
                .map(|(_, s)| &s.image)
                .expect("at least one image survives");
            Some(auto_regions(reference))
        }
    };
    let dark_is_zero = dark.as_ref().is_some_and(|d| d.values().iter().all(|&v| v == 0.0));
    if dark_is_zero {
        log::info!("dark frame is identically zero; subtraction skipped");
    }

    let mut captures = Vec::with_capacity(kept.len());
    let mut masks = MaskSet {
        validity: Vec::with_capacity(kept.len()),
        stray: Vec::with_capacity(kept.len()),
        affected: Vec::with_capacity(kept.len()),
    };
    let mut alphas = Vec::new();
    let mut images = Vec::with_capacity(kept.len());
    for (i, s) in kept {
        let src = &stack.captures[i];
        let alpha = match (&dark, &regions) {
            (Some(_), _) if dark_is_zero => Some(0.0),
            (Some(_), _) if params.subtraction == Subtraction::Direct => Some(1.0),
            (Some(d), Some(r)) => {
                let a = uniformity_alpha_excluding(&s.image, d, r, Some(&s.stray.mask))?;
                if a < 0.0 {
                    warnings.push(format!("image {i}: negative dark weight {a:.4}"));
                }
                Some(a)
            }
            _ => None,
        };
        let subtracted = match (&dark, alpha) {
            (Some(d), Some(a)) if a != 0.0 => weighted_subtract(&s.image, d, a)?,
            _ => s.image,
        };
        let image = apply_threshold(&subtracted, i_th)?;
        images.push(ImageReport {
            index: i,
            row: src.led.row,
            col: src.led.col,
            illumination: s.illumination,
            alpha,
            affected: s.stray.affected,
            stray_pixels: s.stray.mask.count_true(),
            hot_pixels: s.hot,
            invalid_fraction: s.validity.count_false() as f64 / s.validity.len() as f64,
        });
        if let Some(a) = alpha {
            alphas.push(a);
        }
        masks.validity.push(s.validity);
        masks.stray.push(s.stray.mask);
        masks.affected.push(s.stray.affected);
        captures.push(Capture {
            image,
            ..src.clone()
        });
    }

    let bound_after_threshold = threshold_bound(captures.iter().map(|c| &c.image))?;
    log::info!("threshold bound {bound:.5} before, {bound_after_threshold:.5} after i_th = {i_th:.5}");
    let invalid_fraction = masks.invalid_fraction();
    if invalid_fraction > INVALID_FRACTION_WARNING {
        warnings.push(format!(
            "{:.1}% of pixels are under- or overexposed, above the 15% guideline",
            100.0 * invalid_fraction
        ));
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    let uniformity = regions.clone().map(|regions| UniformityRecord {
        alpha: alphas,
        regions,
    });
    Ok(Preprocessed {
        stack: CaptureStack {
            optics: stack.optics,
            down_factor: stack.down_factor,
            captures,
            dark,
        },
        masks,
        uniformity,
        report: PreprocessReport {
            eta: params.eta,
            subtraction: params.subtraction,
            regions,
            threshold: ThresholdParams { i_th, bound },
            bound_after_threshold,
            invalid_fraction,
            images,
            failed,
            warnings,
        },
    })
}

/// Normalization only: every pixel valid, no stray masks.
pub fn normalize_stack(stack: &CaptureStack) -> Result<(CaptureStack, MaskSet)> {
    let (w, h) = stack.image_dims()?;
    let captures = stack
        .captures
        .iter()
        .map(|c| {
            Ok(Capture {
                image: normalize_any(&c.image)?,
                ..c.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let dark = stack.dark.as_ref().map(normalize_any).transpose()?;
    Ok((
        CaptureStack {
            optics: stack.optics,
            down_factor: stack.down_factor,
            captures,
            dark,
        },
        MaskSet::trivial(stack.len(), w, h),
    ))
}

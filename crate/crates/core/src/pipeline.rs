//! End-to-end runs: preprocessing variant, reconstruction and scoring.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::metrics::aligned_amplitude_rmse;
use crate::model::{CaptureStack, ComplexField};
use crate::preprocess::{normalize_stack, preprocess_stack, PreprocessParams, PreprocessReport, Subtraction};
use crate::reconstruct::{convergence_metric, epry_reconstruct, EpryParams, Reconstruction};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Normalization only; every pixel trusted.
    Raw,
    /// The whole cleaning chain with least-squares dark weights.
    #[default]
    Full,
    /// The whole chain but the dark frame is subtracted with unit weight.
    DirectSubtraction,
}

#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub variant: Variant,
    pub report: Option<PreprocessReport>,
    pub reconstruction: Reconstruction,
    pub object: ComplexField,
    /// Scale-aligned amplitude error against the ground truth, when given.
    pub rmse: Option<f64>,
    pub fidelity: f64,
}

pub fn run_pipeline(
    stack: &CaptureStack,
    variant: Variant,
    preprocess: &PreprocessParams,
    epry: &EpryParams,
    truth: Option<&ComplexField>,
) -> Result<PipelineRun> {
    let (clean, masks, report) = match variant {
        Variant::Raw => {
            let (s, m) = normalize_stack(stack)?;
            (s, m, None)
        }
        Variant::Full | Variant::DirectSubtraction => {
            let mut params = preprocess.clone();
            if variant == Variant::DirectSubtraction {
                params.subtraction = Subtraction::Direct;
            }
            let p = preprocess_stack(stack, &params)?;
            (p.stack, p.masks, Some(p.report))
        }
    };
    let reconstruction = epry_reconstruct(&clean, &masks, epry)?;
    let object = reconstruction.object();
    let rmse = truth.map(|t| aligned_amplitude_rmse(&object, t)).transpose()?;
    Ok(PipelineRun {
        variant,
        report,
        fidelity: convergence_metric(&reconstruction),
        reconstruction,
        object,
        rmse,
    })
}

/// Samples `values` (row-major, `width` wide) at `samples` evenly spaced
/// points from `from` to `to`, nearest neighbour.
pub fn line_profile(
    values: &[f64],
    width: usize,
    from: (f64, f64),
    to: (f64, f64),
    samples: usize,
) -> Result<Vec<f64>> {
    if width == 0 || values.len() % width != 0 || samples == 0 {
        return Err(Error::InvalidParameter("empty profile".into()));
    }
    let height = values.len() / width;
    let inside = |p: (f64, f64)| p.0 >= 0.0 && p.1 >= 0.0 && p.0 <= (width - 1) as f64 && p.1 <= (height - 1) as f64;
    if !inside(from) || !inside(to) {
        return Err(Error::InvalidParameter(format!(
            "profile {from:?} -> {to:?} leaves the {width}x{height} image"
        )));
    }
    Ok((0..samples)
        .map(|i| {
            let t = if samples == 1 { 0.0 } else { i as f64 / (samples - 1) as f64 };
            let x = (from.0 + t * (to.0 - from.0)).round() as usize;
            let y = (from.1 + t * (to.1 - from.1)).round() as usize;
            values[y * width + x]
        })
        .collect())
}

/// Horizontal midline of a `width` x `height` image.
pub fn midline(width: usize, height: usize) -> ((f64, f64), (f64, f64), usize) {
    let y = (height / 2) as f64;
    ((0.0, y), ((width - 1) as f64, y), width)
}

/// Peak-to-valley spread of a profile.
pub fn profile_contrast(profile: &[f64]) -> f64 {
    let max = profile.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = profile.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

//! Grayscale previews of complex fields.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::Result;
use fpmforge_core::model::fft::fft2c;
use fpmforge_core::ComplexField;

use crate::io::write_png16;

fn to_u16(v: f64) -> u16 {
    (v.clamp(0.0, 1.0) * 65535.0).round() as u16
}

fn stretch(values: &[f64]) -> Vec<u16> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    values
        .iter()
        .map(|&v| if span > 0.0 { to_u16((v - lo) / span) } else { 0 })
        .collect()
}

/// Amplitude scaled by its maximum.
pub fn amplitude_samples(field: &ComplexField) -> Vec<u16> {
    let amp = field.amplitude();
    let max = amp.iter().copied().fold(0.0, f64::max);
    amp.iter().map(|&a| if max > 0.0 { to_u16(a / max) } else { 0 }).collect()
}

/// Phase mapped linearly from [-pi, pi] to the full gray range.
pub fn phase_samples(field: &ComplexField) -> Vec<u16> {
    field.phase().iter().map(|&p| to_u16((p + PI) / (2.0 * PI))).collect()
}

/// log(1 + |F|) of the centered spectrum, stretched to the full range.
pub fn spectrum_samples(field: &ComplexField) -> Vec<u16> {
    let spec = fft2c(field);
    let logmag: Vec<f64> = spec.values().iter().map(|c| c.norm().ln_1p()).collect();
    stretch(&logmag)
}

pub fn write_amplitude(path: &Path, field: &ComplexField) -> Result<()> {
    let (w, h) = field.dims();
    write_png16(path, w, h, &amplitude_samples(field))
}

pub fn write_phase(path: &Path, field: &ComplexField) -> Result<()> {
    let (w, h) = field.dims();
    write_png16(path, w, h, &phase_samples(field))
}

pub fn write_spectrum(path: &Path, field: &ComplexField) -> Result<()> {
    let (w, h) = field.dims();
    write_png16(path, w, h, &spectrum_samples(field))
}

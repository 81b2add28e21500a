use num_complex::Complex64;

use super::WaveVector;
use crate::error::{Error, Result};
use crate::model::fft::{fft2c, Fft2};
use crate::model::{full_scale, ComplexField, Domain, Image2D, OpticsConfig};

/// Offset, in spectrum samples, of the sub-aperture centre selected by `k`.
/// A tilt of `+f` shifts the object spectrum by `+f`, so the pupil sees the
/// band centred on `-f`. Rounded to the nearest sample.
pub fn spectrum_offset(k: WaveVector, optics: &OpticsConfig, freq_step: (f64, f64)) -> (i64, i64) {
    let (fx, fy) = k.frequency(optics);
    (
        (-fx / freq_step.0).round() as i64,
        (-fy / freq_step.1).round() as i64,
    )
}

/// Top-left corner of a `crop`-sized window whose own centre sample lands on
/// `grid centre + offset`.
pub fn crop_origin(grid: (usize, usize), crop: (usize, usize), offset: (i64, i64)) -> Result<(usize, usize)> {
    let x0 = (grid.0 / 2) as i64 + offset.0 - (crop.0 / 2) as i64;
    let y0 = (grid.1 / 2) as i64 + offset.1 - (crop.1 / 2) as i64;
    if x0 < 0 || y0 < 0 || x0 as usize + crop.0 > grid.0 || y0 as usize + crop.1 > grid.1 {
        return Err(Error::ShiftOutOfRange { offset, crop, grid });
    }
    Ok((x0 as usize, y0 as usize))
}

/// Number of pupil samples per camera pixel along each axis.
pub(crate) fn sensor_bin(hr: (usize, usize), pupil: (usize, usize), down_factor: usize) -> Result<usize> {
    if down_factor == 0 || hr.0 % down_factor != 0 || hr.1 % down_factor != 0 {
        return Err(Error::InvalidParameter(format!(
            "down factor {down_factor} does not divide the {}x{} grid",
            hr.0, hr.1
        )));
    }
    let lr = (hr.0 / down_factor, hr.1 / down_factor);
    if pupil.0 % lr.0 != 0 || pupil.1 % lr.1 != 0 || pupil.0 / lr.0 != pupil.1 / lr.1 {
        return Err(Error::InvalidParameter(format!(
            "pupil grid {pupil:?} is not an integer multiple of the camera grid {lr:?}"
        )));
    }
    Ok(pupil.0 / lr.0)
}

/// Continuous camera-plane intensity (before exposure and quantization).
///
/// The crop is as large as the pupil grid. When the pupil samples the camera
/// pixel more finely than one sample per pixel, the squared modulus is
/// block-summed back onto the camera grid. Returns `(width, height, values)`.
pub fn model_intensity(
    spectrum_hr: &ComplexField,
    pupil: &ComplexField,
    k: WaveVector,
    optics: &OpticsConfig,
    down_factor: usize,
) -> Result<(usize, usize, Vec<f64>)> {
    let hr = spectrum_hr.dims();
    let bin = sensor_bin(hr, pupil.dims(), down_factor)?;
    k.validate()?;
    let hr_pixel = optics.effective_pixel_um() / down_factor as f64;
    let step = (1.0 / (hr.0 as f64 * hr_pixel), 1.0 / (hr.1 as f64 * hr_pixel));
    let offset = spectrum_offset(k, optics, step);
    let (pw, ph) = pupil.dims();
    let (x0, y0) = crop_origin(hr, (pw, ph), offset)?;

    let mut buf = vec![Complex64::default(); pw * ph];
    for y in 0..ph {
        let src = &spectrum_hr.values()[(y0 + y) * hr.0 + x0..][..pw];
        let p = &pupil.values()[y * pw..][..pw];
        for x in 0..pw {
            buf[y * pw + x] = src[x] * p[x];
        }
    }
    Fft2::new(pw, ph).inverse(&mut buf);

    let (lw, lh) = (pw / bin, ph / bin);
    let mut out = vec![0.0; lw * lh];
    for y in 0..ph {
        for x in 0..pw {
            out[(y / bin) * lw + x / bin] += buf[y * pw + x].norm_sqr();
        }
    }
    Ok((lw, lh, out))
}

/// Simulated raw capture of `object_hr` under illumination `k`.
///
/// Counts are `round(exposure * I)` clipped to the sensor full scale, where
/// `I` is [`model_intensity`].
pub fn forward_capture(
    object_hr: &ComplexField,
    pupil: &ComplexField,
    k: WaveVector,
    optics: &OpticsConfig,
    down_factor: usize,
    exposure: f64,
) -> Result<Image2D> {
    optics.validate()?;
    let spectrum = fft2c(object_hr);
    capture_from_spectrum(&spectrum, pupil, k, optics, down_factor, exposure)
}

pub(crate) fn capture_from_spectrum(
    spectrum: &ComplexField,
    pupil: &ComplexField,
    k: WaveVector,
    optics: &OpticsConfig,
    down_factor: usize,
    exposure: f64,
) -> Result<Image2D> {
    if !(exposure >= 0.0 && exposure.is_finite()) {
        return Err(Error::InvalidParameter(format!("exposure must be non-negative, got {exposure}")));
    }
    let (w, h, intensity) = model_intensity(spectrum, pupil, k, optics, down_factor)?;
    let fs = full_scale(optics.bit_depth);
    let counts = intensity
        .into_iter()
        .map(|v| (v * exposure).round().clamp(0.0, fs))
        .collect();
    Image2D::new(
        w,
        h,
        counts,
        Domain::RawCounts {
            bit_depth: optics.bit_depth,
        },
    )
}

//! Embedded pupil recovery with the stray-light aware amplitude constraint.

mod update;

pub use update::{amplitude_update, subsampled_constraint};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::fft::{ifft2c, Fft2};
use crate::model::{CaptureStack, ComplexField, Domain, Space};
use crate::preprocess::MaskSet;
use crate::simulator::{crop_origin, make_pupil, spectrum_offset, PupilGrid};

const DENOM_GUARD: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpryParams {
    pub iterations: usize,
    pub eta: f64,
    pub sub_factor: usize,
    pub object_step: f64,
    pub pupil_step: f64,
    pub enable_pupil_recovery: bool,
}

impl Default for EpryParams {
    fn default() -> Self {
        Self {
            iterations: 30,
            eta: 0.1,
            sub_factor: 1,
            object_step: 1.0,
            pupil_step: 1.0,
            enable_pupil_recovery: true,
        }
    }
}

impl EpryParams {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be at least 1".into()));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::InvalidParameter(format!("eta {} outside (0, 1)", self.eta)));
        }
        if !matches!(self.sub_factor, 1 | 2) {
            return Err(Error::InvalidParameter(format!("sub factor {} not in {{1, 2}}", self.sub_factor)));
        }
        if !(self.object_step.is_finite() && self.pupil_step.is_finite()) {
            return Err(Error::InvalidParameter("step sizes must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub object_spectrum: ComplexField,
    pub pupil: ComplexField,
    /// Data fidelity after each iteration.
    pub error_log: Vec<f64>,
    pub iterations_run: usize,
}

impl Reconstruction {
    /// High-resolution complex object in real space.
    pub fn object(&self) -> ComplexField {
        ifft2c(&self.object_spectrum)
    }
}

/// Last logged data fidelity.
pub fn convergence_metric(recon: &Reconstruction) -> f64 {
    recon.error_log.last().copied().unwrap_or(f64::NAN)
}

/// Capture indices ordered by illumination NA, ties by capture order.
fn update_order(stack: &CaptureStack) -> Vec<usize> {
    let mut order: Vec<usize> = (0..stack.len()).collect();
    order.sort_by(|&a, &b| {
        stack.captures[a]
            .wavevector
            .na()
            .total_cmp(&stack.captures[b].wavevector.na())
    });
    order
}

struct Frame {
    origin: (usize, usize),
    /// Measurement divided by exposure.
    meas: Vec<f64>,
    eta: f64,
    stray: Vec<bool>,
    valid: Vec<bool>,
}

/// Reconstructs the high-resolution object spectrum and the pupil from a
/// normalized capture stack.
///
/// The object starts from the on-axis frame (square root of the intensity,
/// zero phase) and the pupil from the ideal NA disk. Frames are visited from
/// the centre outwards. Each frame's exposure divides its measurement, so the
/// object is estimated at unit exposure.
pub fn epry_reconstruct(stack: &CaptureStack, masks: &MaskSet, params: &EpryParams) -> Result<Reconstruction> {
    params.validate()?;
    stack.optics.validate()?;
    let (lw, lh) = stack.image_dims()?;
    if masks.len() != stack.len() || masks.validity.len() != stack.len() || masks.stray.len() != stack.len() {
        return Err(Error::InvalidParameter(format!(
            "{} masks for {} captures",
            masks.len(),
            stack.len()
        )));
    }
    let down = stack.down_factor;
    let sub = params.sub_factor;
    if down == 0 || sub > down {
        return Err(Error::InvalidParameter(format!(
            "sub factor {sub} exceeds down factor {down}"
        )));
    }
    let hr = (lw * down, lh * down);
    let crop = (lw * sub, lh * sub);
    let eff = stack.optics.effective_pixel_um();
    let hr_pixel = eff / down as f64;
    let step = (1.0 / (hr.0 as f64 * hr_pixel), 1.0 / (hr.1 as f64 * hr_pixel));

    let mut pupil = make_pupil(
        &stack.optics,
        PupilGrid {
            width: crop.0,
            height: crop.1,
            pixel_um: eff / sub as f64,
        },
    )?
    .into_values();
    let support: Vec<bool> = pupil.iter().map(|p| p.norm_sqr() > 0.0).collect();

    let mut frames = Vec::with_capacity(stack.len());
    for (i, c) in stack.captures.iter().enumerate() {
        if c.image.domain() != Domain::Normalized {
            return Err(Error::MalformedInput(format!("capture {i} is not normalized")));
        }
        if !(c.exposure > 0.0 && c.exposure.is_finite()) {
            return Err(Error::InvalidParameter(format!("capture {i} has exposure {}", c.exposure)));
        }
        for m in [&masks.validity[i], &masks.stray[i]] {
            if m.dims() != (lw, lh) {
                return Err(Error::DimensionMismatch {
                    expected: (lw, lh),
                    got: m.dims(),
                });
            }
        }
        let offset = spectrum_offset(c.wavevector, &stack.optics, step);
        frames.push(Frame {
            origin: crop_origin(hr, crop, offset)?,
            meas: c.image.values().iter().map(|v| v / c.exposure).collect(),
            eta: params.eta / c.exposure,
            stray: masks.stray[i].bits().to_vec(),
            valid: masks.validity[i].bits().to_vec(),
        });
    }
    let order = update_order(stack);

    // Initial guess: spectrum of the on-axis amplitude, centred in the HR grid.
    let axis = order[0];
    let lr_fft = Fft2::new(lw, lh);
    let mut init: Vec<Complex64> = frames[axis].meas.iter().map(|v| Complex64::new(v.sqrt(), 0.0)).collect();
    lr_fft.forward(&mut init);
    let mut spectrum = vec![Complex64::default(); hr.0 * hr.1];
    let (ix, iy) = crop_origin(hr, (lw, lh), (0, 0))?;
    for y in 0..lh {
        spectrum[(iy + y) * hr.0 + ix..][..lw].copy_from_slice(&init[y * lw..][..lw]);
    }

    let fft = Fft2::new(crop.0, crop.1);
    let n_crop = crop.0 * crop.1;
    let mut region = vec![Complex64::default(); n_crop];
    let mut psi = vec![Complex64::default(); n_crop];
    let mut error_log = Vec::with_capacity(params.iterations);

    for iteration in 0..params.iterations {
        let (mut num, mut den) = (0.0, 0.0);
        for &j in &order {
            let f = &frames[j];
            let (x0, y0) = f.origin;
            for y in 0..crop.1 {
                region[y * crop.0..][..crop.0].copy_from_slice(&spectrum[(y0 + y) * hr.0 + x0..][..crop.0]);
            }
            for ((out, o), p) in psi.iter_mut().zip(&region).zip(&pupil) {
                *out = o * p;
            }
            let psi_hat = psi.clone();
            fft.inverse(&mut psi);
            let (mut updated, sim) = update::constrain(&psi, lw, sub, &f.meas, &f.stray, &f.valid, f.eta);
            for p in 0..f.meas.len() {
                if f.valid[p] && !f.stray[p] {
                    let d = sim[p].sqrt() - f.meas[p].sqrt();
                    num += d * d;
                    den += f.meas[p];
                }
            }
            fft.forward(&mut updated);

            let p_max = pupil.iter().map(|p| p.norm_sqr()).fold(0.0, f64::max) + DENOM_GUARD;
            let o_max = region.iter().map(|o| o.norm_sqr()).fold(0.0, f64::max) + DENOM_GUARD;
            for y in 0..crop.1 {
                let row = &mut spectrum[(y0 + y) * hr.0 + x0..][..crop.0];
                for x in 0..crop.0 {
                    let q = y * crop.0 + x;
                    let delta = updated[q] - psi_hat[q];
                    row[x] += params.object_step * pupil[q].conj() / p_max * delta;
                    if params.enable_pupil_recovery {
                        pupil[q] += params.pupil_step * region[q].conj() / o_max * delta;
                    }
                }
            }
            if params.enable_pupil_recovery {
                for (p, &inside) in pupil.iter_mut().zip(&support) {
                    if !inside {
                        *p = Complex64::default();
                    }
                }
            }
        }
        let fidelity = if den > 0.0 { num / den } else { 0.0 };
        if !fidelity.is_finite()
            || !spectrum.iter().all(|v| v.is_finite())
            || !pupil.iter().all(|v| v.is_finite())
        {
            return Err(Error::Diverged { iteration: iteration + 1 });
        }
        log::debug!("iteration {}: fidelity {fidelity:.3e}", iteration + 1);
        error_log.push(fidelity);
    }

    Ok(Reconstruction {
        object_spectrum: ComplexField::from_raw(hr.0, hr.1, spectrum, Space::Fourier),
        pupil: ComplexField::from_raw(crop.0, crop.1, pupil, Space::Fourier),
        iterations_run: error_log.len(),
        error_log,
    })
}

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{ComplexField, Image2D, Mask};

/// Intensity the constraint imposes on one camera pixel, or `None` when the
/// simulated value is kept as is.
#[inline]
pub(crate) fn target_intensity(sim: f64, meas: f64, stray: bool, valid: bool, eta: f64) -> Option<f64> {
    if !valid {
        None
    } else if sim <= eta && meas <= eta {
        Some(meas)
    } else if stray {
        None
    } else {
        Some(meas)
    }
}

fn check_dims(field: (usize, usize), i_c: &Image2D, m: &Mask, valid: &Mask) -> Result<()> {
    for got in [i_c.dims(), m.dims(), valid.dims()] {
        if got != field {
            return Err(Error::DimensionMismatch { expected: field, got });
        }
    }
    Ok(())
}

/// Applies the constraint to `values`, a field sampled `sub` times finer than
/// the camera grid of width `cw`. Returns the updated field and the simulated
/// camera-pixel intensities it was compared against.
pub(crate) fn constrain(
    values: &[Complex64],
    cw: usize,
    sub: usize,
    meas: &[f64],
    stray: &[bool],
    valid: &[bool],
    eta: f64,
) -> (Vec<Complex64>, Vec<f64>) {
    if sub == 1 {
        let mut sim = Vec::with_capacity(values.len());
        let out = values
            .iter()
            .enumerate()
            .map(|(p, &phi)| {
                let s = phi.norm_sqr();
                sim.push(s);
                match target_intensity(s, meas[p], stray[p], valid[p], eta) {
                    None => phi,
                    Some(t) => {
                        let amp = phi.norm();
                        if amp == 0.0 {
                            Complex64::new(t.sqrt(), 0.0)
                        } else {
                            phi * (t.sqrt() / amp)
                        }
                    }
                }
            })
            .collect();
        return (out, sim);
    }
    let fw = cw * sub;
    let mut sim = vec![0.0; meas.len()];
    for (p, v) in values.iter().enumerate() {
        sim[(p / fw / sub) * cw + (p % fw) / sub] += v.norm_sqr();
    }
    let per_block = (sub * sub) as f64;
    let targets: Vec<Option<f64>> = (0..meas.len())
        .map(|c| target_intensity(sim[c], meas[c], stray[c], valid[c], eta))
        .collect();
    let out = values
        .iter()
        .enumerate()
        .map(|(p, &phi)| {
            let c = (p / fw / sub) * cw + (p % fw) / sub;
            match targets[c] {
                None => phi,
                Some(t) if sim[c] == 0.0 => Complex64::new((t / per_block).sqrt(), 0.0),
                Some(t) => phi * (t / sim[c]).sqrt(),
            }
        })
        .collect();
    (out, sim)
}

/// Stray-light aware modulus replacement on the camera grid.
///
/// Dim pixels (both simulated and measured intensity at most `eta`) always
/// take the measurement. Otherwise stray pixels (`m` set) keep the simulated
/// value and the rest take the measurement. Invalid pixels are left alone.
/// The phase of `phi_e` is kept; where `phi_e` is zero the phase is zero.
pub fn amplitude_update(phi_e: &ComplexField, i_c: &Image2D, m: &Mask, valid: &Mask, eta: f64) -> Result<ComplexField> {
    check_dims(phi_e.dims(), i_c, m, valid)?;
    let (values, _) = constrain(phi_e.values(), phi_e.width(), 1, i_c.values(), m.bits(), valid.bits(), eta);
    Ok(ComplexField::from_raw(phi_e.width(), phi_e.height(), values, phi_e.space()))
}

/// [`amplitude_update`] for a field sampled `sub_factor` times finer than the
/// camera. The constraint acts on block sums; fine pixels in a block are
/// scaled together so their phases survive. Blocks with no simulated energy
/// receive the target spread evenly, with zero phase.
pub fn subsampled_constraint(
    phi_e_fine: &ComplexField,
    i_c_coarse: &Image2D,
    sub_factor: usize,
    m: &Mask,
    valid: &Mask,
    eta: f64,
) -> Result<ComplexField> {
    if sub_factor == 0 {
        return Err(Error::InvalidParameter("sub factor must be at least 1".into()));
    }
    let (cw, ch) = i_c_coarse.dims();
    let fine = (cw * sub_factor, ch * sub_factor);
    if phi_e_fine.dims() != fine {
        return Err(Error::DimensionMismatch {
            expected: fine,
            got: phi_e_fine.dims(),
        });
    }
    check_dims((cw, ch), i_c_coarse, m, valid)?;
    let (values, _) = constrain(
        phi_e_fine.values(),
        cw,
        sub_factor,
        i_c_coarse.values(),
        m.bits(),
        valid.bits(),
        eta,
    );
    Ok(ComplexField::from_raw(fine.0, fine.1, values, phi_e_fine.space()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Domain, Space};

    fn field(values: Vec<Complex64>, w: usize) -> ComplexField {
        let h = values.len() / w;
        ComplexField::new(w, h, values, Space::Spatial).unwrap()
    }

    fn img(values: Vec<f64>, w: usize) -> Image2D {
        let h = values.len() / w;
        Image2D::new(w, h, values, Domain::Normalized).unwrap()
    }

    #[test]
    fn dim_pixels_take_the_measurement() {
        let phi = field(vec![Complex64::from_polar(0.1, 0.7), Complex64::from_polar(0.2, -2.0)], 2);
        let ic = img(vec![0.04, 0.09], 2);
        let m = Mask::filled(2, 1, false);
        let v = Mask::filled(2, 1, true);
        let out = amplitude_update(&phi, &ic, &m, &v, 0.1).unwrap();
        assert!((out.values()[0] - Complex64::from_polar(0.2, 0.7)).norm() < 1e-15);
        assert!((out.values()[1] - Complex64::from_polar(0.3, -2.0)).norm() < 1e-15);
    }

    #[test]
    fn bright_stray_pixel_is_kept() {
        let phi = field(vec![Complex64::new(0.5, 0.3)], 1);
        let out = amplitude_update(&phi, &img(vec![0.9], 1), &Mask::filled(1, 1, true), &Mask::filled(1, 1, true), 0.1)
            .unwrap();
        assert_eq!(out.values()[0], phi.values()[0]);
    }

    #[test]
    fn zero_field_gets_zero_phase() {
        let phi = field(vec![Complex64::new(0.0, 0.0)], 1);
        let out = amplitude_update(&phi, &img(vec![0.04], 1), &Mask::filled(1, 1, false), &Mask::filled(1, 1, true), 0.1)
            .unwrap();
        assert!((out.values()[0] - Complex64::new(0.2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn invalid_pixel_is_kept() {
        let phi = field(vec![Complex64::new(0.01, -0.02)], 1);
        let out = amplitude_update(&phi, &img(vec![1.0], 1), &Mask::filled(1, 1, false), &Mask::filled(1, 1, false), 0.1)
            .unwrap();
        assert_eq!(out.values()[0], phi.values()[0]);
    }

    #[test]
    fn uniform_block_scaling() {
        let phi = field(vec![Complex64::from_polar(0.1, 0.3); 16], 4);
        // block intensity 4 * 0.01, target four times that
        let ic = img(vec![0.16; 4], 2);
        let out = subsampled_constraint(&phi, &ic, 2, &Mask::filled(2, 2, false), &Mask::filled(2, 2, true), 1.0).unwrap();
        for v in out.values() {
            assert!((v - Complex64::from_polar(0.2, 0.3)).norm() < 1e-15);
        }
    }

    #[test]
    fn zero_block_is_spread_evenly() {
        let phi = field(vec![Complex64::new(0.0, 0.0); 4], 2);
        let out = subsampled_constraint(&phi, &img(vec![0.08], 1), 2, &Mask::filled(1, 1, false), &Mask::filled(1, 1, true), 0.1)
            .unwrap();
        for v in out.values() {
            assert!((v - Complex64::new(0.02f64.sqrt(), 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn subsampled_rejects_bad_dims() {
        let phi = field(vec![Complex64::new(0.0, 0.0); 9], 3);
        let r = subsampled_constraint(&phi, &img(vec![0.0; 4], 2), 2, &Mask::filled(2, 2, false), &Mask::filled(2, 2, true), 0.1);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }
}

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ComplexField, OpticsConfig, Space};

/// Sampling of the field a pupil acts on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PupilGrid {
    pub width: usize,
    pub height: usize,
    /// Spatial pitch of the field in micrometres.
    pub pixel_um: f64,
}

impl PupilGrid {
    /// Frequency spacing `(dfx, dfy)` in cycles/um.
    pub fn frequency_step(&self) -> (f64, f64) {
        (
            1.0 / (self.width as f64 * self.pixel_um),
            1.0 / (self.height as f64 * self.pixel_um),
        )
    }
}

/// Ideal circular pupil: 1 inside `NA / lambda`, 0 outside, DC at the grid center.
pub fn make_pupil(optics: &OpticsConfig, grid: PupilGrid) -> Result<ComplexField> {
    make_pupil_with_defocus(optics, grid, 0.0)
}

/// Circular pupil carrying the angular-spectrum phase of a defocus `z` (um).
pub fn make_pupil_with_defocus(optics: &OpticsConfig, grid: PupilGrid, defocus_um: f64) -> Result<ComplexField> {
    optics.validate()?;
    if grid.width == 0 || grid.height == 0 || !(grid.pixel_um > 0.0) {
        return Err(Error::InvalidParameter(format!("invalid pupil grid {grid:?}")));
    }
    let fc = optics.cutoff_frequency();
    let nyquist = 0.5 / grid.pixel_um;
    if fc > nyquist {
        return Err(Error::PupilTooLarge {
            radius: fc,
            nyquist,
        });
    }
    let (dfx, dfy) = grid.frequency_step();
    let k = 1.0 / optics.wavelength_um();
    let (cx, cy) = ((grid.width / 2) as f64, (grid.height / 2) as f64);
    Ok(ComplexField::from_fn(grid.width, grid.height, Space::Fourier, |x, y| {
        let fx = (x as f64 - cx) * dfx;
        let fy = (y as f64 - cy) * dfy;
        let f2 = fx * fx + fy * fy;
        if f2 <= fc * fc {
            if defocus_um == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                let kz = (k * k - f2).max(0.0).sqrt() - k;
                Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * defocus_um * kz)
            }
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn camera_grid(n: usize) -> PupilGrid {
        PupilGrid {
            width: n,
            height: n,
            pixel_um: OpticsConfig::default().effective_pixel_um(),
        }
    }

    fn support(p: &ComplexField) -> usize {
        p.values().iter().filter(|v| v.norm() > 0.0).count()
    }

    #[test]
    fn vanishing_aperture_keeps_only_dc() {
        let optics = OpticsConfig {
            na_obj: 1e-9,
            ..Default::default()
        };
        let p = make_pupil(&optics, camera_grid(16)).unwrap();
        assert_eq!(support(&p), 1);
        assert_eq!(p.get(8, 8), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn support_area_matches_disk() {
        // Pixel-counting oracle: radius in frequency samples, count lattice
        // points independently and compare with pi r^2.
        let optics = OpticsConfig::default();
        let grid = camera_grid(64);
        let p = make_pupil(&optics, grid).unwrap();
        let r_px = optics.cutoff_frequency() / grid.frequency_step().0;
        let mut lattice = 0;
        for y in -32i64..32 {
            for x in -32i64..32 {
                if ((x * x + y * y) as f64).sqrt() <= r_px {
                    lattice += 1;
                }
            }
        }
        assert_eq!(support(&p), lattice);
        let disk = std::f64::consts::PI * r_px * r_px;
        // one pixel-wide ring of slack along the boundary
        assert!((support(&p) as f64 - disk).abs() <= 2.0 * std::f64::consts::PI * r_px);
    }

    #[test]
    fn doubling_wavelength_halves_radius() {
        let grid = camera_grid(128);
        let base = OpticsConfig::default();
        let doubled = OpticsConfig {
            wavelength_nm: base.wavelength_nm * 2.0,
            ..base
        };
        let radius = |o: &OpticsConfig| {
            let p = make_pupil(o, grid).unwrap();
            (0..64).rev().find(|&d| p.get(64 + d, 64).norm() > 0.0).unwrap()
        };
        let (r1, r2) = (radius(&base), radius(&doubled));
        assert!((r1 as f64 / 2.0 - r2 as f64).abs() <= 1.0, "{r1} vs {r2}");
    }

    #[test]
    fn oversized_pupil_is_rejected() {
        let optics = OpticsConfig {
            na_obj: 0.9,
            ..Default::default()
        };
        let grid = PupilGrid {
            width: 32,
            height: 32,
            pixel_um: 2.0,
        };
        assert!(matches!(make_pupil(&optics, grid), Err(Error::PupilTooLarge { .. })));
    }

    #[test]
    fn defocus_is_pure_phase() {
        let p = make_pupil_with_defocus(&OpticsConfig::default(), camera_grid(32), 5.0).unwrap();
        let q = make_pupil(&OpticsConfig::default(), camera_grid(32)).unwrap();
        for (a, b) in p.values().iter().zip(q.values()) {
            assert!((a.norm() - b.norm()).abs() < 1e-12);
        }
    }
}

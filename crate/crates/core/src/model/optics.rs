use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Objective, camera and illumination wavelength.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticsConfig {
    pub na_obj: f64,
    pub magnification: f64,
    /// Physical camera pixel pitch in micrometres.
    pub camera_pixel_um: f64,
    pub bit_depth: u32,
    pub wavelength_nm: f64,
}

impl Default for OpticsConfig {
    /// 4x / 0.1 NA objective, 3.75 um 8-bit camera, red LEDs at 631.13 nm.
    fn default() -> Self {
        Self {
            na_obj: 0.1,
            magnification: 4.0,
            camera_pixel_um: 3.75,
            bit_depth: 8,
            wavelength_nm: 631.13,
        }
    }
}

impl OpticsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.na_obj > 0.0 && self.na_obj < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "na_obj must lie in (0, 1), got {}",
                self.na_obj
            )));
        }
        if !(self.magnification > 0.0 && self.magnification.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "magnification must be positive, got {}",
                self.magnification
            )));
        }
        if !(self.camera_pixel_um > 0.0 && self.camera_pixel_um.is_finite()) {
            return Err(Error::InvalidParameter("camera_pixel_um must be positive".into()));
        }
        if !(self.wavelength_nm > 0.0 && self.wavelength_nm.is_finite()) {
            return Err(Error::InvalidParameter("wavelength_nm must be positive".into()));
        }
        if ![8, 12, 16].contains(&self.bit_depth) {
            return Err(Error::InvalidParameter(format!(
                "bit_depth must be 8, 12 or 16, got {}",
                self.bit_depth
            )));
        }
        Ok(())
    }

    pub fn wavelength_um(&self) -> f64 {
        self.wavelength_nm * 1e-3
    }

    /// Camera pixel projected onto the sample plane.
    pub fn effective_pixel_um(&self) -> f64 {
        self.camera_pixel_um / self.magnification
    }

    /// Pupil cutoff frequency in cycles per micrometre.
    pub fn cutoff_frequency(&self) -> f64 {
        self.na_obj / self.wavelength_um()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub fn new(x0: usize, y0: usize, w: usize, h: usize) -> Self {
        Self { x0, y0, w, h }
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.w > 0 && self.h > 0 && self.x0 + self.w <= width && self.y0 + self.h <= height
    }

    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.y0..self.y0 + self.h).flat_map(move |y| (self.x0..self.x0 + self.w).map(move |x| (x, y)))
    }
}

/// Rectangles over which background statistics are gathered.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegionSpec {
    pub rects: Vec<Rect>,
}

impl RegionSpec {
    pub fn new(rects: Vec<Rect>) -> Self {
        Self { rects }
    }

    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        if self.rects.is_empty() {
            return Err(Error::InvalidParameter("region list is empty".into()));
        }
        if let Some(r) = self.rects.iter().find(|r| !r.fits(width, height)) {
            return Err(Error::InvalidParameter(format!(
                "region {r:?} does not fit inside a {width}x{height} image"
            )));
        }
        Ok(())
    }
}

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    Spatial,
    Fourier,
}

/// Complex 2-D grid, row-major. Fourier-space grids keep DC at
/// `(width / 2, height / 2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    width: usize,
    height: usize,
    values: Vec<Complex64>,
    space: Space,
}

impl ComplexField {
    pub fn new(width: usize, height: usize, values: Vec<Complex64>, space: Space) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::MalformedInput(format!(
                "field dimensions must be positive, got {width}x{height}"
            )));
        }
        if values.len() != width * height {
            return Err(Error::MalformedInput(format!(
                "expected {} values for a {width}x{height} field, got {}",
                width * height,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::MalformedInput(format!("non-finite value at index {i}")));
        }
        Ok(Self {
            width,
            height,
            values,
            space,
        })
    }

    pub fn zeros(width: usize, height: usize, space: Space) -> Self {
        assert!(width > 0 && height > 0, "field dimensions must be positive");
        Self {
            width,
            height,
            values: vec![Complex64::new(0.0, 0.0); width * height],
            space,
        }
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        space: Space,
        mut f: impl FnMut(usize, usize) -> Complex64,
    ) -> Self {
        assert!(width > 0 && height > 0, "field dimensions must be positive");
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            values,
            space,
        }
    }

    /// Builds a field without the finiteness scan; callers guarantee it.
    pub(crate) fn from_raw(width: usize, height: usize, values: Vec<Complex64>, space: Space) -> Self {
        debug_assert_eq!(values.len(), width * height);
        Self {
            width,
            height,
            values,
            space,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn space(&self) -> Space {
        self.space
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Complex64 {
        self.values[y * self.width + x]
    }

    pub fn with_space(mut self, space: Space) -> Self {
        self.space = space;
        self
    }

    /// DC position for Fourier-space grids.
    pub fn center(&self) -> (usize, usize) {
        (self.width / 2, self.height / 2)
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn amplitude(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn phase(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.arg()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

use serde::{Deserialize, Serialize};

use super::image::Image2D;
use super::optics::OpticsConfig;
use crate::error::{Error, Result};
use crate::simulator::WaveVector;

/// Position of an LED in the matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LedIndex {
    pub row: usize,
    pub col: usize,
}

impl LedIndex {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

/// One LED exposure.
#[derive(Clone, Debug, PartialEq)]
pub struct Capture {
    pub led: LedIndex,
    pub wavevector: WaveVector,
    /// Relative exposure gain of this frame.
    pub exposure: f64,
    pub image: Image2D,
}

/// Ordered per-LED captures plus the (already averaged) dark frame.
#[derive(Clone, Debug, PartialEq)]
pub struct CaptureStack {
    pub optics: OpticsConfig,
    /// Ratio between the reconstruction grid and the camera grid.
    pub down_factor: usize,
    pub captures: Vec<Capture>,
    pub dark: Option<Image2D>,
}

impl CaptureStack {
    pub fn len(&self) -> usize {
        self.captures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.captures.is_empty()
    }

    /// Camera-grid dimensions shared by every capture.
    pub fn image_dims(&self) -> Result<(usize, usize)> {
        let first = self
            .captures
            .first()
            .ok_or_else(|| Error::InvalidParameter("capture stack is empty".into()))?;
        let dims = first.image.dims();
        for c in &self.captures {
            first.image.ensure_same_dims(c.image.dims())?;
        }
        if let Some(dark) = &self.dark {
            if dark.dims() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    got: dark.dims(),
                });
            }
        }
        Ok(dims)
    }

    pub fn images(&self) -> impl Iterator<Item = &Image2D> {
        self.captures.iter().map(|c| &c.image)
    }
}

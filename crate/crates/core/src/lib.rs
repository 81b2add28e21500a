//! Fourier ptychographic microscopy toolkit.
//!
//! The crate is split along the data flow of an FPM experiment:
//!
//! * [`model`] holds the shared numeric types (images, complex fields,
//!   optics), the centered unitary FFT and the quality metrics.
//! * [`simulator`] fabricates LED-array captures from a known object,
//!   including sensor noise, dark current, stray light and hot pixels.
//! * [`preprocess`] cleans a raw capture stack: saturation masking,
//!   hot-pixel repair, stray-light masks, dark-frame weighted subtraction
//!   and thresholding.
//! * [`reconstruct`] runs the embedded pupil recovery loop with the
//!   stray-light aware amplitude constraint.
//! * [`pipeline`] wires the three stages together for end-to-end runs.

pub mod error;
pub mod model;
pub mod pipeline;
pub mod preprocess;
pub mod reconstruct;
pub mod simulator;

pub use error::{Error, Result};
pub use model::{
    CaptureStack, Capture, ComplexField, Domain, Image2D, LedIndex, Mask, OpticsConfig, Rect,
    RegionSpec, Space,
};

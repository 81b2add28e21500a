//! Shared numeric types, the centered FFT, metrics and the field dump format.

pub mod cf2d;
pub mod fft;
mod field;
mod image;
pub mod metrics;
mod optics;
mod stack;

pub use field::{ComplexField, Space};
pub use image::{full_scale, normalize_image, Domain, Image2D, Mask};
pub use optics::{OpticsConfig, Rect, RegionSpec};
pub use stack::{Capture, CaptureStack, LedIndex};

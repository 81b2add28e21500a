//! Centered, unitary 2-D DFT.
//!
//! `fft2c(x) = fftshift(FFT2(ifftshift(x))) / sqrt(N)`, so the DC sample sits at
//! `(width / 2, height / 2)` and energy is preserved in both directions.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::{ComplexField, Space};

/// Reusable plans for one grid size.
pub struct Fft2 {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish()
    }
}

impl Fft2 {
    pub fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            width,
            height,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Centered forward transform in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, true);
    }

    /// Centered inverse transform in place.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    fn transform(&self, data: &mut [Complex64], forward: bool) {
        let (w, h) = (self.width, self.height);
        assert_eq!(data.len(), w * h, "buffer does not match plan dimensions");

        // ifftshift: move the center sample to the origin.
        let mut buf = vec![Complex64::default(); w * h];
        for y in 0..h {
            let sy = (y + h / 2) % h;
            for x in 0..w {
                let sx = (x + w / 2) % w;
                buf[y * w + x] = data[sy * w + sx];
            }
        }

        let (row, col) = if forward {
            (&self.row_fwd, &self.col_fwd)
        } else {
            (&self.row_inv, &self.col_inv)
        };
        let mut scratch = vec![Complex64::default(); row.get_inplace_scratch_len()];
        for line in buf.chunks_exact_mut(w) {
            row.process_with_scratch(line, &mut scratch);
        }
        let mut column = vec![Complex64::default(); h];
        scratch.resize(col.get_inplace_scratch_len(), Complex64::default());
        for x in 0..w {
            for y in 0..h {
                column[y] = buf[y * w + x];
            }
            col.process_with_scratch(&mut column, &mut scratch);
            for y in 0..h {
                buf[y * w + x] = column[y];
            }
        }

        // fftshift back, folding in the unitary scale.
        let scale = 1.0 / ((w * h) as f64).sqrt();
        for y in 0..h {
            let sy = (y + h / 2) % h;
            for x in 0..w {
                let sx = (x + w / 2) % w;
                data[sy * w + sx] = buf[y * w + x] * scale;
            }
        }
    }
}

pub fn fft2c(field: &ComplexField) -> ComplexField {
    let (w, h) = field.dims();
    let mut values = field.values().to_vec();
    Fft2::new(w, h).forward(&mut values);
    ComplexField::from_raw(w, h, values, Space::Fourier)
}

pub fn ifft2c(field: &ComplexField) -> ComplexField {
    let (w, h) = field.dims();
    let mut values = field.values().to_vec();
    Fft2::new(w, h).inverse(&mut values);
    ComplexField::from_raw(w, h, values, Space::Spatial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Direct centered DFT, O(N^2) per output sample.
    fn naive_fft2c(field: &ComplexField) -> Vec<Complex64> {
        let (w, h) = field.dims();
        let (cx, cy) = ((w / 2) as f64, (h / 2) as f64);
        let mut out = vec![c(0.0, 0.0); w * h];
        for v in 0..h {
            for u in 0..w {
                let mut acc = c(0.0, 0.0);
                for y in 0..h {
                    for x in 0..w {
                        let ph = -2.0
                            * std::f64::consts::PI
                            * ((u as f64 - cx) * (x as f64 - cx) / w as f64
                                + (v as f64 - cy) * (y as f64 - cy) / h as f64);
                        acc += field.get(x, y) * Complex64::from_polar(1.0, ph);
                    }
                }
                out[v * w + u] = acc / ((w * h) as f64).sqrt();
            }
        }
        out
    }

    #[test]
    fn ones_4x4_concentrate_at_center() {
        let ones = ComplexField::from_fn(4, 4, Space::Spatial, |_, _| c(1.0, 0.0));
        let spec = fft2c(&ones);
        for y in 0..4 {
            for x in 0..4 {
                let v = spec.get(x, y);
                if (x, y) == (2, 2) {
                    assert!((v - c(4.0, 0.0)).norm() < 1e-12);
                } else {
                    assert!(v.norm() < 1e-12, "({x},{y}) = {v}");
                }
            }
        }
    }

    #[test]
    fn centered_impulse_gives_flat_spectrum() {
        for (w, h) in [(8, 8), (7, 5), (6, 9)] {
            let delta = ComplexField::from_fn(w, h, Space::Spatial, |x, y| {
                if (x, y) == (w / 2, h / 2) {
                    c(1.0, 0.0)
                } else {
                    c(0.0, 0.0)
                }
            });
            let spec = fft2c(&delta);
            let expected = 1.0 / ((w * h) as f64).sqrt();
            for v in spec.values() {
                assert!((v - c(expected, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn matches_direct_dft_on_odd_and_even_grids() {
        for (w, h) in [(4, 6), (5, 3), (7, 7)] {
            let field = ComplexField::from_fn(w, h, Space::Spatial, |x, y| {
                c((x * 3 + y) as f64 * 0.1, (x as f64 - y as f64) * 0.05)
            });
            let fast = fft2c(&field);
            let slow = naive_fft2c(&field);
            for (a, b) in fast.values().iter().zip(&slow) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    fn field_strategy() -> impl Strategy<Value = ComplexField> {
        (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
            proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), w * h).prop_map(move |v| {
                ComplexField::new(
                    w,
                    h,
                    v.into_iter().map(|(re, im)| c(re, im)).collect(),
                    Space::Spatial,
                )
                .unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn round_trip_and_parseval(field in field_strategy()) {
            let spec = fft2c(&field);
            let back = ifft2c(&spec);
            let e = field.energy();
            prop_assume!(e > 1e-12);
            let err: f64 = field.values().iter().zip(back.values()).map(|(a, b)| (a - b).norm_sqr()).sum();
            prop_assert!((err / e).sqrt() < 1e-10);
            prop_assert!(((spec.energy() - e) / e).abs() < 1e-10);
        }
    }
}

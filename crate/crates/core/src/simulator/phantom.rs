//! Default test object: resolution-target bars in amplitude, smooth blobs in phase.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::model::{ComplexField, Space};

/// Amplitude of the opaque background inside the support window.
const FLOOR: f64 = 0.35;

/// `n x n` phantom. The object is confined to a smoothly tapered central
/// square covering roughly the middle 45 % of the field, so the corners are
/// signal free. Inside it, four bar groups with periods of 16, 11, 8 and 6
/// samples (scaled with `n / 256`) modulate the amplitude between `0.35` and
/// `1`, and three Gaussian bumps give a phase in `[0, 1]` rad.
pub fn resolution_phantom(n: usize) -> ComplexField {
    let s = n as f64 / 256.0;
    let c = n as f64 / 2.0;
    let inner = 40.0 * s;
    let taper = 18.0 * s;

    let window = |x: f64, y: f64| {
        let edge = |d: f64| {
            let d = d.abs();
            if d <= inner {
                1.0
            } else if d >= inner + taper {
                0.0
            } else {
                0.5 * (1.0 + (PI * (d - inner) / taper).cos())
            }
        };
        edge(x - c) * edge(y - c)
    };

    let bars = |x: f64, y: f64| {
        let (u, v) = (x - c, y - c);
        let (period, coord) = match (u < 0.0, v < 0.0) {
            (true, true) => (16.0, u),
            (false, true) => (11.0, v),
            (true, false) => (8.0, v),
            (false, false) => (6.0, u),
        };
        let phase = (coord / (period * s)).rem_euclid(1.0);
        if phase < 0.5 {
            1.0
        } else {
            0.0
        }
    };

    let bumps = [(-18.0, -12.0, 14.0, 1.0), (15.0, 10.0, 11.0, 0.8), (8.0, -22.0, 9.0, 0.6)];
    let blob = |x: f64, y: f64| {
        bumps
            .iter()
            .map(|&(bx, by, r, a)| {
                let dx = x - c - bx * s;
                let dy = y - c - by * s;
                a * (-(dx * dx + dy * dy) / (2.0 * (r * s).powi(2))).exp()
            })
            .sum::<f64>()
    };
    let blob_max = (0..n)
        .flat_map(|y| (0..n).map(move |x| (x, y)))
        .map(|(x, y)| blob(x as f64, y as f64))
        .fold(0.0, f64::max)
        .max(1e-12);

    ComplexField::from_fn(n, n, Space::Spatial, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let w = window(xf, yf);
        let amp = w * (FLOOR + (1.0 - FLOOR) * bars(xf, yf));
        let phase = w * blob(xf, yf) / blob_max;
        Complex64::from_polar(amp, phase)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corners_are_empty_and_ranges_hold() {
        let p = resolution_phantom(256);
        for y in 0..60 {
            for x in 0..60 {
                assert_eq!(p.get(x, y).norm(), 0.0);
                assert_eq!(p.get(255 - x, 255 - y).norm(), 0.0);
            }
        }
        let max_amp = p.amplitude().into_iter().fold(0.0, f64::max);
        assert!((max_amp - 1.0).abs() < 1e-12);
        let max_phase = p.phase().into_iter().fold(0.0, f64::max);
        assert!(max_phase <= 1.0 + 1e-12 && max_phase > 0.9);
    }
}

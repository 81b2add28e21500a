use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{full_scale, CaptureStack, Domain, Image2D};

/// Frames averaged into the synthetic dark frame.
pub const DARK_EXPOSURES: usize = 20;

const HOT_PIXEL_STREAM: u64 = u64::MAX - 1;
const DARK_STREAM: u64 = u64::MAX - 2;

/// Additive disk of stray light on one capture.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrayBlob {
    pub image_index: usize,
    pub center: (f64, f64),
    pub radius: f64,
    /// Normalized intensity added inside the disk.
    pub peak: f64,
}

impl StrayBlob {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        let dx = x as f64 - self.center.0;
        let dy = y as f64 - self.center.1;
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HotPixels {
    pub count: usize,
    /// Normalized intensity added at each defect.
    pub peak: f64,
}

/// Fixed-pattern dark current: `mean + gradient * (x / (w - 1) - 0.5)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DarkModel {
    pub mean: f64,
    pub gradient: f64,
}

impl DarkModel {
    pub fn render(&self, width: usize, height: usize) -> Image2D {
        Image2D::from_fn(width, height, Domain::Normalized, |x, _| {
            let t = if width > 1 {
                x as f64 / (width - 1) as f64 - 0.5
            } else {
                0.0
            };
            (self.mean + self.gradient * t).clamp(0.0, 1.0)
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSpec {
    /// Per-frame read noise, normalized units.
    pub gaussian_sigma: f64,
    /// Dark current at unit exposure; scaled by each frame's exposure.
    pub dark_offset: Option<Image2D>,
    pub stray_blobs: Vec<StrayBlob>,
    pub hot_pixels: HotPixels,
    /// Round and clip to the sensor range. When false the perturbed values are
    /// left continuous.
    pub clip: bool,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none(seed: u64) -> Self {
        Self {
            gaussian_sigma: 0.0,
            dark_offset: None,
            stray_blobs: Vec::new(),
            hot_pixels: HotPixels::default(),
            clip: true,
            seed,
        }
    }

    fn validate(&self, stack: &CaptureStack, dims: (usize, usize)) -> Result<()> {
        if !(self.gaussian_sigma >= 0.0) {
            return Err(Error::InvalidParameter("gaussian_sigma must be non-negative".into()));
        }
        if let Some(d) = &self.dark_offset {
            d.ensure_normalized()?;
            if d.dims() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    got: d.dims(),
                });
            }
        }
        for b in &self.stray_blobs {
            if b.image_index >= stack.len() {
                return Err(Error::InvalidParameter(format!(
                    "stray blob targets image {} but the stack holds {}",
                    b.image_index,
                    stack.len()
                )));
            }
            if !(b.peak > 0.0 && b.peak <= 1.0) || !(b.radius >= 0.0) {
                return Err(Error::InvalidParameter(format!("invalid stray blob {b:?}")));
            }
        }
        Ok(())
    }
}

fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Adds dark current, read noise, stray light and hot pixels to every raw
/// capture, and synthesizes the averaged dark frame.
///
/// Each image draws from its own ChaCha stream keyed by `(seed, index)`, so the
/// result is independent of processing order.
pub fn inject_noise(stack: &CaptureStack, spec: &NoiseSpec) -> Result<CaptureStack> {
    let (w, h) = stack.image_dims()?;
    spec.validate(stack, (w, h))?;
    let bit_depth = stack.optics.bit_depth;
    let fs = full_scale(bit_depth);

    let hot: Vec<usize> = {
        let mut rng = substream(spec.seed, HOT_PIXEL_STREAM);
        (0..spec.hot_pixels.count).map(|_| rng.random_range(0..w * h)).collect()
    };
    let hot_counts = spec.hot_pixels.peak * fs;

    let finish = |v: f64| {
        if spec.clip {
            v.round().clamp(0.0, fs)
        } else {
            v
        }
    };

    let mut out = stack.clone();
    for (i, capture) in out.captures.iter_mut().enumerate() {
        match capture.image.domain() {
            Domain::RawCounts { bit_depth: b } if b == bit_depth => {}
            _ => {
                return Err(Error::MalformedInput(format!(
                    "capture {i} is not a {bit_depth}-bit raw image"
                )))
            }
        }
        let mut rng = substream(spec.seed, i as u64);
        let mut values = capture.image.values().to_vec();
        if let Some(dark) = &spec.dark_offset {
            for (v, d) in values.iter_mut().zip(dark.values()) {
                *v += d * capture.exposure * fs;
            }
        }
        if spec.gaussian_sigma > 0.0 {
            for v in values.iter_mut() {
                let n: f64 = rng.sample(StandardNormal);
                *v += spec.gaussian_sigma * fs * n;
            }
        }
        for blob in spec.stray_blobs.iter().filter(|b| b.image_index == i) {
            for y in 0..h {
                for x in 0..w {
                    if blob.contains(x, y) {
                        values[y * w + x] += blob.peak * fs;
                    }
                }
            }
        }
        for &p in &hot {
            values[p] += hot_counts;
        }
        for v in values.iter_mut() {
            *v = finish(*v);
        }
        capture.image = Image2D::new(w, h, values, Domain::RawCounts { bit_depth })?;
    }

    // Dark frame: fixed pattern plus the mean of DARK_EXPOSURES noisy reads.
    let mut rng = substream(spec.seed, DARK_STREAM);
    let mut dark = vec![0.0; w * h];
    if let Some(d) = &spec.dark_offset {
        for (v, dv) in dark.iter_mut().zip(d.values()) {
            *v = dv * fs;
        }
    }
    if spec.gaussian_sigma > 0.0 {
        for v in dark.iter_mut() {
            let mut acc = 0.0;
            for _ in 0..DARK_EXPOSURES {
                let n: f64 = rng.sample(StandardNormal);
                acc += n;
            }
            *v += spec.gaussian_sigma * fs * acc / DARK_EXPOSURES as f64;
        }
    }
    for &p in &hot {
        dark[p] += hot_counts;
    }
    for v in dark.iter_mut() {
        *v = finish(*v);
    }
    out.dark = Some(Image2D::new(w, h, dark, Domain::RawCounts { bit_depth })?);
    Ok(out)
}

/// Places one blob on `round(fraction * candidates.len())` of the candidate
/// images, chosen without replacement. Radii and peaks are drawn uniformly
/// from the given ranges; blobs stay fully inside the frame.
pub fn random_blobs(
    candidates: &[usize],
    fraction: f64,
    dims: (usize, usize),
    radius: (f64, f64),
    peak: (f64, f64),
    seed: u64,
) -> Vec<StrayBlob> {
    let n = ((fraction * candidates.len() as f64).round() as usize).min(candidates.len());
    let mut rng = substream(seed, u64::MAX - 3);
    let mut pool = candidates.to_vec();
    let mut blobs = Vec::with_capacity(n);
    for _ in 0..n {
        let pick = rng.random_range(0..pool.len());
        let image_index = pool.swap_remove(pick);
        let r = if radius.1 > radius.0 {
            rng.random_range(radius.0..radius.1)
        } else {
            radius.0
        };
        let margin = r.ceil() + 1.0;
        let span = |n: usize| (margin, (n as f64 - margin).max(margin + 1e-9));
        let (xl, xh) = span(dims.0);
        let (yl, yh) = span(dims.1);
        let p = if peak.1 > peak.0 {
            rng.random_range(peak.0..peak.1)
        } else {
            peak.0
        };
        blobs.push(StrayBlob {
            image_index,
            center: (rng.random_range(xl..xh).round(), rng.random_range(yl..yh).round()),
            radius: r,
            peak: p,
        });
    }
    blobs.sort_by_key(|b| b.image_index);
    blobs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Capture, LedIndex, OpticsConfig};
    use crate::simulator::WaveVector;

    fn stack(n: usize, exposure: f64) -> CaptureStack {
        let optics = OpticsConfig::default();
        let captures = (0..n)
            .map(|i| Capture {
                led: LedIndex::new(0, i),
                wavevector: WaveVector::AXIAL,
                exposure,
                image: Image2D::from_fn(8, 6, Domain::RawCounts { bit_depth: 8 }, |x, y| {
                    ((x * 7 + y * 3 + i) % 120) as f64
                }),
            })
            .collect();
        CaptureStack {
            optics,
            down_factor: 1,
            captures,
            dark: None,
        }
    }

    #[test]
    fn zero_spec_is_identity() {
        let s = stack(3, 1.0);
        let out = inject_noise(&s, &NoiseSpec::none(9)).unwrap();
        for (a, b) in s.captures.iter().zip(&out.captures) {
            assert_eq!(a.image, b.image);
        }
        assert!(out.dark.unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let s = stack(4, 1.3);
        let spec = NoiseSpec {
            gaussian_sigma: 0.01,
            dark_offset: Some(DarkModel { mean: 0.02, gradient: 0.01 }.render(8, 6)),
            stray_blobs: vec![StrayBlob {
                image_index: 2,
                center: (3.0, 3.0),
                radius: 2.0,
                peak: 0.5,
            }],
            hot_pixels: HotPixels { count: 2, peak: 0.7 },
            clip: true,
            seed: 42,
        };
        let a = inject_noise(&s, &spec).unwrap();
        let b = inject_noise(&s, &spec).unwrap();
        assert_eq!(a, b);
        let c = inject_noise(&s, &NoiseSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn constant_dark_adds_exact_counts() {
        // 0.2 * 255 = 51 counts at unit exposure, 102 at exposure 2
        for exposure in [1.0, 2.0] {
            let s = stack(2, exposure);
            let spec = NoiseSpec {
                dark_offset: Some(DarkModel { mean: 0.2, gradient: 0.0 }.render(8, 6)),
                clip: false,
                ..NoiseSpec::none(1)
            };
            let out = inject_noise(&s, &spec).unwrap();
            for (a, b) in s.captures.iter().zip(&out.captures) {
                for (x, y) in a.image.values().iter().zip(b.image.values()) {
                    assert!((y - x - 51.0 * exposure).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn blob_index_out_of_range() {
        let s = stack(2, 1.0);
        let spec = NoiseSpec {
            stray_blobs: vec![StrayBlob {
                image_index: 5,
                center: (1.0, 1.0),
                radius: 1.0,
                peak: 0.5,
            }],
            ..NoiseSpec::none(0)
        };
        assert!(inject_noise(&s, &spec).is_err());
    }

    #[test]
    fn perturbation_is_additive_before_clip() {
        // unclipped output minus input does not depend on the input content
        let s1 = stack(2, 1.0);
        let mut s2 = s1.clone();
        for c in s2.captures.iter_mut() {
            c.image = c.image.map(|v| v * 0.5);
        }
        let spec = NoiseSpec {
            gaussian_sigma: 0.02,
            clip: false,
            ..NoiseSpec::none(5)
        };
        let o1 = inject_noise(&s1, &spec).unwrap();
        let o2 = inject_noise(&s2, &spec).unwrap();
        for i in 0..2 {
            let d1: Vec<f64> = o1.captures[i].image.values().iter().zip(s1.captures[i].image.values()).map(|(a, b)| a - b).collect();
            let d2: Vec<f64> = o2.captures[i].image.values().iter().zip(s2.captures[i].image.values()).map(|(a, b)| a - b).collect();
            for (a, b) in d1.iter().zip(&d2) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn dark_frame_noise_is_averaged() {
        let s = CaptureStack {
            captures: vec![Capture {
                image: Image2D::zeros(64, 64, Domain::RawCounts { bit_depth: 16 }),
                ..stack(1, 1.0).captures[0].clone()
            }],
            optics: OpticsConfig {
                bit_depth: 16,
                ..Default::default()
            },
            ..stack(1, 1.0)
        };
        let spec = NoiseSpec {
            gaussian_sigma: 0.01,
            dark_offset: Some(DarkModel { mean: 0.1, gradient: 0.0 }.render(64, 64)),
            clip: false,
            ..NoiseSpec::none(3)
        };
        let out = inject_noise(&s, &spec).unwrap();
        let dark = out.dark.unwrap().map(|v| v / 65535.0);
        let frame = out.captures[0].image.map(|v| v / 65535.0);
        let ratio = frame.std_dev() / dark.std_dev();
        let expected = (DARK_EXPOSURES as f64).sqrt();
        assert!((ratio / expected - 1.0).abs() < 0.15, "ratio {ratio}");
    }

    #[test]
    fn random_blobs_respect_fraction_and_bounds() {
        let candidates: Vec<usize> = (10..60).collect();
        let blobs = random_blobs(&candidates, 0.1, (64, 64), (4.0, 8.0), (0.3, 0.9), 7);
        assert_eq!(blobs.len(), 5);
        for b in &blobs {
            assert!(candidates.contains(&b.image_index));
            assert!(b.center.0 - b.radius >= 0.0 && b.center.0 + b.radius < 64.0);
            assert!((0.3..0.9).contains(&b.peak));
        }
        let again = random_blobs(&candidates, 0.1, (64, 64), (4.0, 8.0), (0.3, 0.9), 7);
        assert_eq!(blobs, again);
    }
}

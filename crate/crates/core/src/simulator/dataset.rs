use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::forward::{capture_from_spectrum, crop_origin, spectrum_offset};
use super::noise::{inject_noise, random_blobs, DarkModel, HotPixels, NoiseSpec, StrayBlob};
use super::phantom::resolution_phantom;
use super::pupil::{make_pupil_with_defocus, PupilGrid};
use super::{led_wavevectors, ActiveRange, LedGeometry};
use crate::error::{Error, Result};
use crate::model::fft::{fft2c, ifft2c};
use crate::model::{full_scale, Capture, CaptureStack, ComplexField, OpticsConfig, Space};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub optics: OpticsConfig,
    pub led: LedGeometry,
    pub active: ActiveRange,
    /// Side of the square object grid.
    pub hr_size: usize,
    /// Object grid samples per camera pixel.
    pub down_factor: usize,
    /// Field samples per camera pixel used by the sensor model; intensity is
    /// block-summed over them.
    pub sensor_subpixels: usize,
    /// Normalized intensity recorded for a unit-amplitude on-axis plane wave.
    pub signal_level: f64,
    /// Relative exposure of dark-field frames.
    pub df_exposure: f64,
    /// Half-width of the uniform per-frame exposure jitter (fraction).
    pub exposure_jitter: f64,
    pub defocus_um: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        let led = LedGeometry::default();
        Self {
            optics: OpticsConfig::default(),
            led,
            active: ActiveRange::centered(&led, 15),
            hr_size: 256,
            down_factor: 4,
            sensor_subpixels: 1,
            signal_level: 0.6,
            df_exposure: 1.0,
            exposure_jitter: 0.15,
            defocus_um: 0.0,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        self.optics.validate()?;
        self.led.validate()?;
        if self.hr_size == 0 || self.down_factor == 0 || self.hr_size % self.down_factor != 0 {
            return Err(Error::InvalidParameter(format!(
                "hr_size {} must be a positive multiple of down_factor {}",
                self.hr_size, self.down_factor
            )));
        }
        if self.sensor_subpixels == 0 {
            return Err(Error::InvalidParameter("sensor_subpixels must be at least 1".into()));
        }
        if !(self.signal_level > 0.0) || !(self.df_exposure > 0.0) {
            return Err(Error::InvalidParameter("signal_level and df_exposure must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.exposure_jitter) {
            return Err(Error::InvalidParameter("exposure_jitter must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn camera_size(&self) -> usize {
        self.hr_size / self.down_factor
    }
}

/// Noise recipe expanded into a [`NoiseSpec`] once the stack is known.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub gaussian_sigma: f64,
    pub dark: DarkModel,
    /// Fraction of dark-field frames that receive one stray-light disk.
    pub stray_fraction: f64,
    pub blob_radius: (f64, f64),
    pub blob_peak: (f64, f64),
    pub hot_pixels: HotPixels,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            gaussian_sigma: 0.01,
            dark: DarkModel {
                mean: 0.02,
                gradient: 0.02,
            },
            stray_fraction: 0.1,
            blob_radius: (4.0, 8.0),
            blob_peak: (0.3, 0.9),
            hot_pixels: HotPixels { count: 4, peak: 0.8 },
        }
    }
}

impl NoiseConfig {
    pub fn zero() -> Self {
        Self {
            gaussian_sigma: 0.0,
            dark: DarkModel::default(),
            stray_fraction: 0.0,
            blob_radius: (0.0, 0.0),
            blob_peak: (0.0, 0.0),
            hot_pixels: HotPixels::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimulatedDataset {
    /// Raw captures in center-outward order, with the averaged dark frame.
    pub stack: CaptureStack,
    pub truth: ComplexField,
    pub led: LedGeometry,
    pub active: ActiveRange,
    pub blobs: Vec<StrayBlob>,
}

/// Band-limits the default phantom to the synthetic aperture, images it
/// under every active LED and applies the noise recipe.
pub fn simulate(cfg: &SimulationConfig, noise: Option<&NoiseConfig>, seed: u64) -> Result<SimulatedDataset> {
    cfg.validate()?;
    let optics = cfg.optics;
    let leds = led_wavevectors(&cfg.led, &cfg.active)?;
    let n = cfg.hr_size;
    let lr = cfg.camera_size();
    let sub = cfg.sensor_subpixels;

    let grid = PupilGrid {
        width: lr * sub,
        height: lr * sub,
        pixel_um: optics.effective_pixel_um() / sub as f64,
    };
    let pupil = make_pupil_with_defocus(&optics, grid, cfg.defocus_um)?;

    // Keep only what some sub-aperture can see.
    let hr_pixel = optics.effective_pixel_um() / cfg.down_factor as f64;
    let step = (1.0 / (n as f64 * hr_pixel), 1.0 / (n as f64 * hr_pixel));
    let mut spectrum = fft2c(&resolution_phantom(n));
    let mut covered = vec![false; n * n];
    let (pw, ph) = pupil.dims();
    for (_, k) in &leds {
        let (x0, y0) = crop_origin((n, n), (pw, ph), spectrum_offset(*k, &optics, step))?;
        for y in 0..ph {
            for x in 0..pw {
                if pupil.get(x, y).norm() > 0.0 {
                    covered[(y0 + y) * n + x0 + x] = true;
                }
            }
        }
    }
    let filtered: Vec<_> = spectrum
        .values()
        .iter()
        .zip(&covered)
        .map(|(v, &c)| if c { *v } else { Default::default() })
        .collect();
    spectrum = ComplexField::new(n, n, filtered, Space::Fourier)?;
    let truth = ifft2c(&spectrum);

    let gain = cfg.signal_level * full_scale(optics.bit_depth) / (cfg.down_factor * cfg.down_factor) as f64;
    let mut jitter = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_e7b0_5e00_0000);
    let mut captures = Vec::with_capacity(leds.len());
    for (led, k) in &leds {
        let base = if k.na() > optics.na_obj { cfg.df_exposure } else { 1.0 };
        let u: f64 = jitter.random_range(-1.0..=1.0);
        let exposure = base * (1.0 + cfg.exposure_jitter * u);
        let image = capture_from_spectrum(&spectrum, &pupil, *k, &optics, cfg.down_factor, gain * exposure)?;
        captures.push(Capture {
            led: *led,
            wavevector: *k,
            exposure,
            image,
        });
    }
    let clean = CaptureStack {
        optics,
        down_factor: cfg.down_factor,
        captures,
        dark: None,
    };

    let (stack, blobs) = match noise {
        None => (inject_noise(&clean, &NoiseSpec::none(seed))?, Vec::new()),
        Some(nc) => {
            let df: Vec<usize> = clean
                .captures
                .iter()
                .enumerate()
                .filter(|(_, c)| c.wavevector.na() > optics.na_obj)
                .map(|(i, _)| i)
                .collect();
            let blobs = random_blobs(&df, nc.stray_fraction, (lr, lr), nc.blob_radius, nc.blob_peak, seed);
            let spec = NoiseSpec {
                gaussian_sigma: nc.gaussian_sigma,
                dark_offset: (nc.dark.mean != 0.0 || nc.dark.gradient != 0.0).then(|| nc.dark.render(lr, lr)),
                stray_blobs: blobs.clone(),
                hot_pixels: nc.hot_pixels,
                clip: true,
                seed,
            };
            (inject_noise(&clean, &spec)?, blobs)
        }
    };

    Ok(SimulatedDataset {
        stack,
        truth,
        led: cfg.led,
        active: cfg.active,
        blobs,
    })
}

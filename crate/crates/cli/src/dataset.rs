//! Dataset directories: `manifest.json`, one PNG per LED, the dark frame and
//! an optional ground-truth field.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use fpmforge_core::model::full_scale;
use fpmforge_core::preprocess::{MaskSet, Preprocessed};
use fpmforge_core::simulator::{ActiveRange, LedGeometry, SimulatedDataset, StrayBlob};
use fpmforge_core::{Capture, CaptureStack, ComplexField, Domain, Image2D, LedIndex, Mask, OpticsConfig, Space};
use serde::{Deserialize, Serialize};

use crate::io::{read_field, read_json, read_png, write_field, write_json, write_png16, write_png8};

pub const MANIFEST: &str = "manifest.json";
pub const DARK: &str = "dark.png";
pub const TRUTH: &str = "truth.cf2d";
pub const BLOBS: &str = "stray_blobs.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Sensor counts, left-shifted into 16-bit PNG samples.
    Raw,
    /// Normalized intensities scaled to the full 16-bit range.
    Processed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageEntry {
    pub file: String,
    pub row: usize,
    pub col: usize,
    pub exposure: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validity_mask: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stray_mask: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affected: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub stage: Stage,
    pub wavelength_nm: f64,
    pub na_obj: f64,
    pub magnification: f64,
    pub camera_pixel_um: f64,
    pub bit_depth: u32,
    pub down_factor: usize,
    pub led: LedGeometry,
    pub active: ActiveRange,
    pub images: Vec<ImageEntry>,
    pub dark_frame: Option<String>,
    pub ground_truth: Option<String>,
}

impl Manifest {
    pub fn optics(&self) -> OpticsConfig {
        OpticsConfig {
            na_obj: self.na_obj,
            magnification: self.magnification,
            camera_pixel_um: self.camera_pixel_um,
            bit_depth: self.bit_depth,
            wavelength_nm: self.wavelength_nm,
        }
    }

    fn set_optics(&mut self, o: &OpticsConfig) {
        self.wavelength_nm = o.wavelength_nm;
        self.na_obj = o.na_obj;
        self.magnification = o.magnification;
        self.camera_pixel_um = o.camera_pixel_um;
        self.bit_depth = o.bit_depth;
    }

    /// Structural checks that do not touch the file system.
    pub fn validate(&self) -> Result<()> {
        self.optics().validate()?;
        self.led.validate()?;
        let a = &self.active;
        ensure!(
            a.rows > 0 && a.cols > 0 && a.row0 + a.rows <= self.led.rows && a.col0 + a.cols <= self.led.cols,
            "active range {a:?} does not fit the {}x{} matrix",
            self.led.rows,
            self.led.cols
        );
        let mut seen = BTreeSet::new();
        for e in &self.images {
            let inside = (a.row0..a.row0 + a.rows).contains(&e.row) && (a.col0..a.col0 + a.cols).contains(&e.col);
            ensure!(inside, "{}: LED ({}, {}) is outside the active range", e.file, e.row, e.col);
            ensure!(seen.insert((e.row, e.col)), "LED ({}, {}) listed twice", e.row, e.col);
            ensure!(e.exposure > 0.0 && e.exposure.is_finite(), "{}: exposure must be positive", e.file);
        }
        if self.stage == Stage::Raw {
            ensure!(
                self.images.len() == a.rows * a.cols,
                "{} images for {} active LEDs",
                self.images.len(),
                a.rows * a.cols
            );
        }
        ensure!(!self.images.is_empty(), "manifest lists no images");
        Ok(())
    }
}

pub fn image_name(led: LedIndex) -> String {
    format!("img_r{:02}_c{:02}.png", led.row, led.col)
}

fn shift(bit_depth: u32) -> u32 {
    16 - bit_depth
}

fn encode_raw(img: &Image2D, bit_depth: u32) -> Vec<u16> {
    let fs = full_scale(bit_depth);
    img.values()
        .iter()
        .map(|v| ((v.round().clamp(0.0, fs) as u32) << shift(bit_depth)) as u16)
        .collect()
}

fn encode_normalized(img: &Image2D) -> Vec<u16> {
    img.values().iter().map(|v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16).collect()
}

fn encode_mask(mask: &Mask) -> Vec<u8> {
    mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect()
}

fn decode(path: &Path, stage: Stage, bit_depth: u32, dims: Option<(usize, usize)>) -> Result<Image2D> {
    let (w, h, samples) = read_png(path)?;
    if let Some(d) = dims {
        ensure!((w, h) == d, "{}: {w}x{h} image, expected {}x{}", path.display(), d.0, d.1);
    }
    let img = match stage {
        Stage::Raw => {
            let s = shift(bit_depth);
            Image2D::new(
                w,
                h,
                samples.iter().map(|&v| (v >> s) as f64).collect(),
                Domain::RawCounts { bit_depth },
            )?
        }
        Stage::Processed => Image2D::new(
            w,
            h,
            samples.iter().map(|&v| v as f64 / 65535.0).collect(),
            Domain::Normalized,
        )?,
    };
    Ok(img)
}

fn decode_mask(path: &Path, dims: (usize, usize)) -> Result<Mask> {
    let (w, h, samples) = read_png(path)?;
    ensure!((w, h) == dims, "{}: mask is {w}x{h}", path.display());
    Ok(Mask::from_bits(w, h, samples.iter().map(|&v| v > 0).collect())?)
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub stack: CaptureStack,
    /// Present for processed datasets.
    pub masks: Option<MaskSet>,
    pub truth: Option<ComplexField>,
}

/// Reads and checks a dataset directory. Referenced files must exist.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let manifest: Manifest = read_json(&dir.join(MANIFEST))?;
    manifest.validate().with_context(|| format!("invalid manifest in {}", dir.display()))?;
    let optics = manifest.optics();
    let mut captures = Vec::with_capacity(manifest.images.len());
    let mut dims = None;
    let mut masks = MaskSet {
        validity: Vec::new(),
        stray: Vec::new(),
        affected: Vec::new(),
    };
    for e in &manifest.images {
        let image = decode(&dir.join(&e.file), manifest.stage, optics.bit_depth, dims)?;
        dims = Some(image.dims());
        let led = LedIndex::new(e.row, e.col);
        if manifest.stage == Stage::Processed {
            let d = image.dims();
            let (Some(v), Some(s)) = (&e.validity_mask, &e.stray_mask) else {
                bail!("{}: processed image without masks", e.file);
            };
            masks.validity.push(decode_mask(&dir.join(v), d)?);
            masks.stray.push(decode_mask(&dir.join(s), d)?);
            masks.affected.push(e.affected.unwrap_or(false));
        }
        captures.push(Capture {
            led,
            wavevector: manifest.led.wavevector(led),
            exposure: e.exposure,
            image,
        });
    }
    let dark = manifest
        .dark_frame
        .as_ref()
        .map(|f| decode(&dir.join(f), manifest.stage, optics.bit_depth, dims))
        .transpose()?;
    let truth = manifest
        .ground_truth
        .as_ref()
        .map(|f| read_field(&dir.join(f), Space::Spatial))
        .transpose()?;
    let stack = CaptureStack {
        optics,
        down_factor: manifest.down_factor,
        captures,
        dark,
    };
    stack.image_dims()?;
    Ok(Dataset {
        dir: dir.to_path_buf(),
        masks: (manifest.stage == Stage::Processed).then_some(masks),
        manifest,
        stack,
        truth,
    })
}

/// Writes a simulated raw dataset.
pub fn write_simulated(dir: &Path, ds: &SimulatedDataset) -> Result<Manifest> {
    let optics = ds.stack.optics;
    let (w, h) = ds.stack.image_dims()?;
    let mut images = Vec::with_capacity(ds.stack.len());
    for c in &ds.stack.captures {
        let file = image_name(c.led);
        write_png16(&dir.join(&file), w, h, &encode_raw(&c.image, optics.bit_depth))?;
        images.push(ImageEntry {
            file,
            row: c.led.row,
            col: c.led.col,
            exposure: c.exposure,
            validity_mask: None,
            stray_mask: None,
            affected: None,
        });
    }
    let dark_frame = match &ds.stack.dark {
        Some(d) => {
            write_png16(&dir.join(DARK), w, h, &encode_raw(d, optics.bit_depth))?;
            Some(DARK.to_string())
        }
        None => None,
    };
    write_field(&dir.join(TRUTH), &ds.truth)?;
    write_json(&dir.join(BLOBS), &ds.blobs)?;
    let mut manifest = Manifest {
        stage: Stage::Raw,
        wavelength_nm: 0.0,
        na_obj: 0.0,
        magnification: 0.0,
        camera_pixel_um: 0.0,
        bit_depth: 0,
        down_factor: ds.stack.down_factor,
        led: ds.led,
        active: ds.active,
        images,
        dark_frame,
        ground_truth: Some(TRUTH.to_string()),
    };
    manifest.set_optics(&optics);
    write_json(&dir.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

/// Writes a preprocessed stack with its masks. `source` supplies the LED
/// geometry; the ground truth is referenced relative to `dir`.
pub fn write_processed(dir: &Path, source: &Dataset, pre: &Preprocessed) -> Result<Manifest> {
    let (w, h) = pre.stack.image_dims()?;
    let mut images = Vec::with_capacity(pre.stack.len());
    for (i, c) in pre.stack.captures.iter().enumerate() {
        let file = image_name(c.led);
        let stem = file.trim_end_matches(".png").trim_start_matches("img_");
        let validity = format!("valid_{stem}.png");
        let stray = format!("stray_{stem}.png");
        write_png16(&dir.join(&file), w, h, &encode_normalized(&c.image))?;
        write_png8(&dir.join(&validity), w, h, &encode_mask(&pre.masks.validity[i]))?;
        write_png8(&dir.join(&stray), w, h, &encode_mask(&pre.masks.stray[i]))?;
        images.push(ImageEntry {
            file,
            row: c.led.row,
            col: c.led.col,
            exposure: c.exposure,
            validity_mask: Some(validity),
            stray_mask: Some(stray),
            affected: Some(pre.masks.affected[i]),
        });
    }
    let dark_frame = match &pre.stack.dark {
        Some(d) => {
            write_png16(&dir.join(DARK), w, h, &encode_normalized(d))?;
            Some(DARK.to_string())
        }
        None => None,
    };
    let ground_truth = match &source.truth {
        Some(t) => {
            write_field(&dir.join(TRUTH), t)?;
            Some(TRUTH.to_string())
        }
        None => None,
    };
    let manifest = Manifest {
        stage: Stage::Processed,
        images,
        dark_frame,
        ground_truth,
        ..source.manifest.clone()
    };
    write_json(&dir.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

pub fn read_blobs(dir: &Path) -> Result<Vec<StrayBlob>> {
    read_json(&dir.join(BLOBS))
}

//! Browser bindings: simulate a small capture stack, preview preprocessing
//! on one frame, and run a short reconstruction. Images come back as RGBA
//! bytes ready for `ImageData`.

use fpmforge_core::pipeline::{run_pipeline, Variant};
use fpmforge_core::preprocess::{
    classify_illumination, normalize_stack, preprocess_stack, Illumination, PreprocessParams, Subtraction,
};
use fpmforge_core::reconstruct::EpryParams;
use fpmforge_core::simulator::{simulate, ActiveRange, NoiseConfig, SimulatedDataset, SimulationConfig};
use fpmforge_core::ComplexField;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Gray values in [0, 1] as opaque RGBA.
pub fn gray_rgba(values: &[f64]) -> Vec<u8> {
    values
        .iter()
        .flat_map(|&v| {
            let g = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
            [g, g, g, 255]
        })
        .collect()
}

fn stretched(values: &[f64]) -> Vec<f64> {
    let max = values.iter().copied().fold(0.0, f64::max);
    values.iter().map(|&v| if max > 0.0 { v / max } else { 0.0 }).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct FrameStats {
    pub index: usize,
    pub row: usize,
    pub col: usize,
    pub dark_field: bool,
    pub affected: bool,
    pub alpha: Option<f64>,
    pub i_th: f64,
    pub bound: f64,
    pub stray_pixels: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunStats {
    pub variant: Variant,
    pub iterations: usize,
    pub fidelity: f64,
    pub rmse: Option<f64>,
}

/// Simulated stack held between calls.
#[wasm_bindgen]
pub struct Demo {
    data: SimulatedDataset,
    width: usize,
    height: usize,
    hr_size: usize,
    last_preview: Option<FrameStats>,
    last_run: Option<RunStats>,
}

impl Demo {
    /// `leds` per side of the centred LED patch; `noisy` adds the default
    /// noise recipe (sensor noise, dark current, stray blobs, hot pixels).
    pub fn build(hr_size: usize, leds: usize, noisy: bool, seed: u64) -> Result<Demo, String> {
        let mut cfg = SimulationConfig {
            hr_size,
            ..SimulationConfig::default()
        };
        cfg.active = ActiveRange::centered(&cfg.led, leds);
        let noise = noisy.then(NoiseConfig::default);
        let data = simulate(&cfg, noise.as_ref(), seed).map_err(|e| e.to_string())?;
        let (width, height) = data.stack.image_dims().map_err(|e| e.to_string())?;
        Ok(Demo {
            data,
            width,
            height,
            hr_size,
            last_preview: None,
            last_run: None,
        })
    }

    fn check(&self, index: usize) -> Result<(), String> {
        if index >= self.data.stack.len() {
            return Err(format!("frame {index} out of range (0..{})", self.data.stack.len()));
        }
        Ok(())
    }

    /// Normalized capture, contrast-stretched.
    pub fn frame(&self, index: usize) -> Result<Vec<u8>, String> {
        self.check(index)?;
        let (norm, _) = normalize_stack(&self.data.stack).map_err(|e| e.to_string())?;
        Ok(gray_rgba(&stretched(norm.captures[index].image.values())))
    }

    /// Preprocessed frame with stray-masked pixels tinted red, plus stats.
    pub fn preview(&self, index: usize, eta: f64, i_th: Option<f64>) -> Result<(Vec<u8>, FrameStats), String> {
        self.check(index)?;
        let params = PreprocessParams {
            eta,
            i_th,
            ..PreprocessParams::default()
        };
        let pre = preprocess_stack(&self.data.stack, &params).map_err(|e| e.to_string())?;
        let pos = pre
            .report
            .images
            .iter()
            .position(|r| r.index == index)
            .ok_or_else(|| format!("frame {index} was dropped during preprocessing"))?;
        let img = stretched(pre.stack.captures[pos].image.values());
        let mask = pre.masks.stray[pos].bits();
        let mut rgba = gray_rgba(&img);
        for (p, &m) in mask.iter().enumerate() {
            if m {
                rgba[4 * p] = 255;
                rgba[4 * p + 1] /= 3;
                rgba[4 * p + 2] /= 3;
            }
        }
        let r = &pre.report.images[pos];
        let c = &self.data.stack.captures[index];
        let stats = FrameStats {
            index,
            row: r.row,
            col: r.col,
            dark_field: classify_illumination(c.wavevector, &self.data.stack.optics) == Illumination::DarkField,
            affected: r.affected,
            alpha: r.alpha,
            i_th: pre.report.threshold.i_th,
            bound: pre.report.threshold.bound,
            stray_pixels: r.stray_pixels,
        };
        Ok((rgba, stats))
    }

    /// Short reconstruction; returns amplitude and phase RGBA images of
    /// side `hr_size`.
    pub fn reconstruct(&self, iterations: usize, preprocess: bool, direct: bool) -> Result<(Vec<u8>, Vec<u8>, RunStats), String> {
        let variant = match (preprocess, direct) {
            (false, _) => Variant::Raw,
            (true, false) => Variant::Full,
            (true, true) => Variant::DirectSubtraction,
        };
        let params = PreprocessParams {
            subtraction: if direct { Subtraction::Direct } else { Subtraction::Uniformity },
            ..PreprocessParams::default()
        };
        let epry = EpryParams {
            iterations,
            ..EpryParams::default()
        };
        let run = run_pipeline(&self.data.stack, variant, &params, &epry, Some(&self.data.truth)).map_err(|e| e.to_string())?;
        let (amp, phase) = render(&run.object);
        Ok((
            amp,
            phase,
            RunStats {
                variant,
                iterations: run.reconstruction.iterations_run,
                fidelity: run.fidelity,
                rmse: run.rmse,
            },
        ))
    }
}

fn render(object: &ComplexField) -> (Vec<u8>, Vec<u8>) {
    let amp = gray_rgba(&stretched(&object.amplitude()));
    let phase: Vec<f64> = object
        .phase()
        .iter()
        .map(|p| (p + std::f64::consts::PI) / (2.0 * std::f64::consts::PI))
        .collect();
    (amp, gray_rgba(&phase))
}

fn js_err(e: String) -> JsError {
    JsError::new(&e)
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).unwrap_or_else(|e| format!("{{\"error\":\"{e}\"}}"))
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(hr_size: usize, leds: usize, noisy: bool, seed: u64) -> Result<Demo, JsError> {
        Demo::build(hr_size, leds, noisy, seed).map_err(js_err)
    }

    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.height
    }

    #[wasm_bindgen(getter)]
    pub fn hr_size(&self) -> usize {
        self.hr_size
    }

    #[wasm_bindgen(getter)]
    pub fn frames(&self) -> usize {
        self.data.stack.len()
    }

    #[wasm_bindgen(js_name = frameRgba)]
    pub fn frame_rgba(&self, index: usize) -> Result<Vec<u8>, JsError> {
        self.frame(index).map_err(js_err)
    }

    /// Preprocessed frame; a negative `i_th` picks the automatic threshold.
    /// Stats land in `lastPreview`.
    #[wasm_bindgen(js_name = previewRgba)]
    pub fn preview_rgba(&mut self, index: usize, eta: f64, i_th: f64) -> Result<Vec<u8>, JsError> {
        let i_th = (i_th >= 0.0).then_some(i_th);
        let (rgba, stats) = self.preview(index, eta, i_th).map_err(js_err)?;
        self.last_preview = Some(stats);
        Ok(rgba)
    }

    #[wasm_bindgen(js_name = lastPreview)]
    pub fn last_preview(&self) -> String {
        to_json(&self.last_preview)
    }

    /// Amplitude then phase RGBA, each `hr_size * hr_size * 4` bytes.
    /// Stats land in `lastRun`.
    #[wasm_bindgen(js_name = reconstructRgba)]
    pub fn reconstruct_rgba(&mut self, iterations: usize, preprocess: bool, direct: bool) -> Result<Vec<u8>, JsError> {
        let (mut amp, phase, stats) = self.reconstruct(iterations, preprocess, direct).map_err(js_err)?;
        self.last_run = Some(stats);
        amp.extend(phase);
        Ok(amp)
    }

    #[wasm_bindgen(js_name = lastRun)]
    pub fn last_run(&self) -> String {
        to_json(&self.last_run)
    }
}

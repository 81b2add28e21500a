//! Run configuration: one JSON document, unknown keys rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fpmforge_core::preprocess::{PreprocessParams, Subtraction};
use fpmforge_core::reconstruct::EpryParams;
use fpmforge_core::simulator::{NoiseConfig, SimulationConfig};
use fpmforge_core::{Rect, RegionSpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Either the literal string `"auto"` or a value.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum AutoOr<T> {
    #[default]
    Auto,
    Value(T),
}

impl<T> AutoOr<T> {
    pub fn value(&self) -> Option<&T> {
        match self {
            AutoOr::Auto => None,
            AutoOr::Value(v) => Some(v),
        }
    }
}

impl<T: Serialize> Serialize for AutoOr<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            AutoOr::Auto => s.serialize_str("auto"),
            AutoOr::Value(v) => v.serialize(s),
        }
    }
}

impl<'de, T: DeserializeOwned> Deserialize<'de> for AutoOr<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = serde_json::Value::deserialize(d)?;
        if raw.as_str() == Some("auto") {
            return Ok(AutoOr::Auto);
        }
        serde_json::from_value(raw)
            .map(AutoOr::Value)
            .map_err(|e| serde::de::Error::custom(format!("expected \"auto\" or a value: {e}")))
    }
}

/// Reconstruction settings; the constraint threshold is the top-level `eta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpryConfig {
    pub iterations: usize,
    pub sub_factor: usize,
    pub object_step: f64,
    pub pupil_step: f64,
    pub enable_pupil_recovery: bool,
}

impl Default for EpryConfig {
    fn default() -> Self {
        let p = EpryParams::default();
        Self {
            iterations: p.iterations,
            sub_factor: p.sub_factor,
            object_step: p.object_step,
            pupil_step: p.pupil_step,
            enable_pupil_recovery: p.enable_pupil_recovery,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileLine {
    pub from: (f64, f64),
    pub to: (f64, f64),
    pub samples: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub values: Vec<f64>,
    /// Phase-profile line on the reconstructed object; the horizontal
    /// central part of the midline when absent.
    pub profile: Option<ProfileLine>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub eta: f64,
    pub i_th: AutoOr<f64>,
    pub regions: AutoOr<Vec<Rect>>,
    pub subtraction: Subtraction,
    pub epry: EpryConfig,
    pub simulation: SimulationConfig,
    /// `null` simulates a noiseless dataset.
    pub noise: Option<NoiseConfig>,
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub sweep: SweepConfig,
    /// Run directories for `report`.
    pub runs: Vec<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            eta: fpmforge_core::preprocess::DEFAULT_ETA,
            i_th: AutoOr::Auto,
            regions: AutoOr::Auto,
            subtraction: Subtraction::Uniformity,
            epry: EpryConfig::default(),
            simulation: SimulationConfig::default(),
            noise: None,
            output: None,
            seed: 0,
            sweep: SweepConfig::default(),
            runs: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        cfg.validate().with_context(|| format!("invalid config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.preprocess_params().validate()?;
        self.epry_params().validate()?;
        if let AutoOr::Value(r) = &self.regions {
            if r.is_empty() {
                bail!("regions: list must not be empty");
            }
        }
        if self.sweep.values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            bail!("sweep.values: thresholds must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn preprocess_params(&self) -> PreprocessParams {
        PreprocessParams {
            eta: self.eta,
            i_th: self.i_th.value().copied(),
            regions: self.regions.value().map(|r| RegionSpec::new(r.clone())),
            subtraction: self.subtraction,
        }
    }

    pub fn epry_params(&self) -> EpryParams {
        EpryParams {
            iterations: self.epry.iterations,
            eta: self.eta,
            sub_factor: self.epry.sub_factor,
            object_step: self.epry.object_step,
            pupil_step: self.epry.pupil_step,
            enable_pupil_recovery: self.epry.enable_pupil_recovery,
        }
    }
}

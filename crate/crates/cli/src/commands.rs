//! The six sub-commands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use fpmforge_core::pipeline::{line_profile, midline, profile_contrast, run_pipeline, Variant};
use fpmforge_core::preprocess::{normalize_stack, preprocess_stack, PreprocessParams, PreprocessReport, Subtraction};
use fpmforge_core::reconstruct::{convergence_metric, epry_reconstruct, EpryParams, Reconstruction};
use fpmforge_core::model::metrics::aligned_amplitude_rmse;
use fpmforge_core::simulator::simulate;
use fpmforge_core::ComplexField;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::dataset::{load_dataset, write_processed, write_simulated};
use crate::io::{read_json, write_csv, write_field, write_json};
use crate::render::{write_amplitude, write_phase, write_spectrum};

pub const RUN_SUMMARY: &str = "run_summary.json";
pub const PREPROCESS_REPORT: &str = "preprocess_report.json";
pub const PROCESSED_DIR: &str = "processed";
pub const RUN_DIR: &str = "run";

/// Column order of `report.csv`; `report.json` rows use the same keys.
pub const REPORT_COLUMNS: [&str; 9] = [
    "run",
    "variant",
    "iterations",
    "final_fidelity",
    "rmse",
    "eta",
    "i_th",
    "subtraction",
    "affected_images",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Simulate,
    Preprocess,
    Reconstruct,
    Pipeline,
    SweepThreshold,
    Report,
}

#[derive(Clone, Debug)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub dataset: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub skip_uniformity: bool,
    pub no_preprocess: bool,
}

/// A finished command and the warnings it raised.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub warnings: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.warnings.is_empty() {
            0
        } else {
            2
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreprocessSummary {
    pub eta: f64,
    pub i_th: f64,
    pub bound: f64,
    pub subtraction: Subtraction,
    pub affected_images: usize,
    pub invalid_fraction: f64,
    pub dropped_images: usize,
    pub warnings: usize,
}

impl From<&PreprocessReport> for PreprocessSummary {
    fn from(r: &PreprocessReport) -> Self {
        Self {
            eta: r.eta,
            i_th: r.threshold.i_th,
            bound: r.threshold.bound,
            subtraction: r.subtraction,
            affected_images: r.affected_count(),
            invalid_fraction: r.invalid_fraction,
            dropped_images: r.failed.len(),
            warnings: r.warnings.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub command: String,
    pub variant: Variant,
    pub images: usize,
    pub iterations: usize,
    pub final_fidelity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
    pub wall_time_s: f64,
    pub epry: EpryParams,
    pub preprocess: Option<PreprocessSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub run: String,
    pub variant: Variant,
    pub iterations: usize,
    pub final_fidelity: f64,
    pub rmse: Option<f64>,
    pub eta: f64,
    pub i_th: Option<f64>,
    pub subtraction: Option<Subtraction>,
    pub affected_images: Option<usize>,
}

pub fn run(inv: &Invocation) -> Result<Outcome> {
    let cfg = RunConfig::load(&inv.config)?;
    match inv.command {
        Command::Simulate => cmd_simulate(inv, &cfg),
        Command::Preprocess => cmd_preprocess(inv, &cfg),
        Command::Reconstruct => cmd_reconstruct(inv, &cfg),
        Command::Pipeline => cmd_pipeline(inv, &cfg),
        Command::SweepThreshold => cmd_sweep_threshold(inv, &cfg),
        Command::Report => cmd_report(inv, &cfg),
    }
}

fn out_dir(inv: &Invocation, cfg: &RunConfig, fallback: Option<PathBuf>) -> Result<PathBuf> {
    inv.out
        .clone()
        .or_else(|| cfg.output.clone())
        .or(fallback)
        .context("no output directory: pass --out or set \"output\" in the config")
}

fn dataset_dir(inv: &Invocation) -> Result<&Path> {
    inv.dataset.as_deref().context("this command needs --dataset <dir>")
}

fn preprocess_params(inv: &Invocation, cfg: &RunConfig) -> PreprocessParams {
    let mut p = cfg.preprocess_params();
    if inv.skip_uniformity {
        p.subtraction = Subtraction::Skip;
    }
    p
}

fn variant_of(subtraction: Subtraction) -> Variant {
    match subtraction {
        Subtraction::Direct => Variant::DirectSubtraction,
        Subtraction::Uniformity | Subtraction::Skip => Variant::Full,
    }
}

fn cmd_simulate(inv: &Invocation, cfg: &RunConfig) -> Result<Outcome> {
    let out = out_dir(inv, cfg, None)?;
    let seed = inv.seed.unwrap_or(cfg.seed);
    let ds = simulate(&cfg.simulation, cfg.noise.as_ref(), seed)?;
    let manifest = write_simulated(&out, &ds)?;
    log::info!("wrote {} images to {}", manifest.images.len(), out.display());
    Ok(Outcome::default())
}

fn cmd_preprocess(inv: &Invocation, cfg: &RunConfig) -> Result<Outcome> {
    let dir = dataset_dir(inv)?;
    let ds = load_dataset(dir)?;
    if ds.masks.is_some() {
        bail!("{} is already preprocessed", dir.display());
    }
    let out = out_dir(inv, cfg, Some(dir.join(PROCESSED_DIR)))?;
    let pre = preprocess_stack(&ds.stack, &preprocess_params(inv, cfg))?;
    write_processed(&out, &ds, &pre)?;
    write_json(&out.join(PREPROCESS_REPORT), &pre.report)?;
    Ok(Outcome {
        warnings: pre.report.warnings.clone(),
    })
}

fn write_reconstruction(out: &Path, recon: &Reconstruction, object: &ComplexField, summary: &RunSummary) -> Result<()> {
    write_field(&out.join("object.cf2d"), object)?;
    write_field(&out.join("pupil.cf2d"), &recon.pupil)?;
    write_amplitude(&out.join("amplitude.png"), object)?;
    write_phase(&out.join("phase.png"), object)?;
    write_spectrum(&out.join("spectrum.png"), object)?;
    let rows: Vec<Vec<String>> = recon
        .error_log
        .iter()
        .enumerate()
        .map(|(i, f)| vec![(i + 1).to_string(), f.to_string()])
        .collect();
    write_csv(&out.join("error_log.csv"), &["iteration".into(), "fidelity".into()], &rows)?;
    write_json(&out.join(RUN_SUMMARY), summary)
}

fn cmd_reconstruct(inv: &Invocation, cfg: &RunConfig) -> Result<Outcome> {
    let dir = dataset_dir(inv)?;
    let ds = load_dataset(dir)?;
    let out = out_dir(inv, cfg, Some(dir.join(RUN_DIR)))?;
    let epry = cfg.epry_params();
    let started = Instant::now();
    let (stack, masks, report, variant) = match ds.masks {
        Some(m) if !inv.no_preprocess => {
            let report_path = dir.join(PREPROCESS_REPORT);
            let report: Option<PreprocessReport> =
                if report_path.exists() { Some(read_json(&report_path)?) } else { None };
            let variant = report.as_ref().map_or(Variant::Full, |r| variant_of(r.subtraction));
            (ds.stack, m, report, variant)
        }
        Some(_) => bail!("--no-preprocess needs a raw dataset"),
        None => {
            let (s, m) = normalize_stack(&ds.stack)?;
            (s, m, None, Variant::Raw)
        }
    };
    let recon = epry_reconstruct(&stack, &masks, &epry)?;
    let object = recon.object();
    let rmse = ds.truth.as_ref().map(|t| aligned_amplitude_rmse(&object, t)).transpose()?;
    let summary = RunSummary {
        command: "reconstruct".into(),
        variant,
        images: stack.len(),
        iterations: recon.iterations_run,
        final_fidelity: convergence_metric(&recon),
        rmse,
        wall_time_s: started.elapsed().as_secs_f64(),
        epry,
        preprocess: report.as_ref().map(PreprocessSummary::from),
    };
    write_reconstruction(&out, &recon, &object, &summary)?;
    Ok(Outcome::default())
}

fn cmd_pipeline(inv: &Invocation, cfg: &RunConfig) -> Result<Outcome> {
    let dir = dataset_dir(inv)?;
    let ds = load_dataset(dir)?;
    if ds.masks.is_some() {
        bail!("pipeline expects a raw dataset; use reconstruct for {}", dir.display());
    }
    let out = out_dir(inv, cfg, Some(dir.join(RUN_DIR)))?;
    let params = preprocess_params(inv, cfg);
    let epry = cfg.epry_params();
    let variant = if inv.no_preprocess {
        Variant::Raw
    } else {
        variant_of(params.subtraction)
    };
    let started = Instant::now();
    let run = run_pipeline(&ds.stack, variant, &params, &epry, ds.truth.as_ref())?;
    let summary = RunSummary {
        command: "pipeline".into(),
        variant,
        images: ds.stack.len() - run.report.as_ref().map_or(0, |r| r.failed.len()),
        iterations: run.reconstruction.iterations_run,
        final_fidelity: run.fidelity,
        rmse: run.rmse,
        wall_time_s: started.elapsed().as_secs_f64(),
        epry,
        preprocess: run.report.as_ref().map(PreprocessSummary::from),
    };
    if let Some(r) = &run.report {
        write_json(&out.join(PREPROCESS_REPORT), r)?;
    }
    write_reconstruction(&out, &run.reconstruction, &run.object, &summary)?;
    Ok(Outcome {
        warnings: run.report.map(|r| r.warnings).unwrap_or_default(),
    })
}

/// One row of `sweep.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub i_th: f64,
    pub bound: f64,
    pub rmse: Option<f64>,
    pub fidelity: f64,
    pub contrast: f64,
    pub profile: Vec<f64>,
}

/// Phase with the global offset removed: the field is rotated so that its
/// complex sum is real and positive.
pub fn referenced_phase(field: &ComplexField) -> Vec<f64> {
    let sum: num_complex::Complex64 = field.values().iter().sum();
    let rot = if sum.norm() > 0.0 { sum.conj() / sum.norm() } else { 1.0.into() };
    field.values().iter().map(|c| (c * rot).arg()).collect()
}

/// Default phase-profile line: the horizontal midline restricted to the
/// central 40 % of the width, where the object has support.
pub fn default_profile(width: usize, height: usize) -> ((f64, f64), (f64, f64), usize) {
    let ((x0, y), (x1, _), _) = midline(width, height);
    let a = (x0 + 0.3 * (x1 - x0)).round();
    let b = (x0 + 0.7 * (x1 - x0)).round();
    ((a, y), (b, y), (b - a) as usize + 1)
}

fn threshold_label(v: f64) -> String {
    format!("{v:.4}")
}

fn cmd_sweep_threshold(inv: &Invocation, cfg: &RunConfig) -> Result<Outcome> {
    let values = &cfg.sweep.values;
    if values.is_empty() {
        bail!("sweep.values is empty");
    }
    let dir = dataset_dir(inv)?;
    let ds = load_dataset(dir)?;
    if ds.masks.is_some() {
        bail!("sweep-threshold expects a raw dataset");
    }
    let out = out_dir(inv, cfg, Some(dir.join("sweep")))?;
    let base = preprocess_params(inv, cfg);
    let epry = cfg.epry_params();
    let results: Vec<Result<(SweepRow, Vec<String>)>> = values
        .par_iter()
        .map(|&v| {
            let params = PreprocessParams {
                i_th: Some(v),
                ..base.clone()
            };
            let run = run_pipeline(&ds.stack, variant_of(params.subtraction), &params, &epry, ds.truth.as_ref())?;
            let (w, h) = run.object.dims();
            let (from, to, samples) = match &cfg.sweep.profile {
                Some(p) => (p.from, p.to, p.samples),
                None => default_profile(w, h),
            };
            let profile = line_profile(&referenced_phase(&run.object), w, from, to, samples)?;
            write_phase(&out.join(format!("phase_ith_{}.png", threshold_label(v))), &run.object)?;
            let report = run.report.expect("preprocessed run has a report");
            Ok((
                SweepRow {
                    i_th: v,
                    bound: report.threshold.bound,
                    rmse: run.rmse,
                    fidelity: run.fidelity,
                    contrast: profile_contrast(&profile),
                    profile,
                },
                report.warnings,
            ))
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut warnings: Vec<String> = Vec::new();
    for r in results {
        let (row, w) = r?;
        for msg in w {
            if !warnings.contains(&msg) {
                warnings.push(msg);
            }
        }
        rows.push(row);
    }
    let samples = rows[0].profile.len();
    let mut header: Vec<String> = ["i_th", "bound", "rmse", "fidelity", "contrast"].map(String::from).to_vec();
    header.extend((0..samples).map(|i| format!("p{i}")));
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut line = vec![
                r.i_th.to_string(),
                r.bound.to_string(),
                r.rmse.map(|v| v.to_string()).unwrap_or_default(),
                r.fidelity.to_string(),
                r.contrast.to_string(),
            ];
            line.extend(r.profile.iter().map(f64::to_string));
            line
        })
        .collect();
    write_csv(&out.join("sweep.csv"), &header, &table)?;
    Ok(Outcome { warnings })
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn cmd_report(inv: &Invocation, cfg: &RunConfig) -> Result<Outcome> {
    let base = inv.config.parent().unwrap_or(Path::new("."));
    let mut dirs: Vec<PathBuf> = cfg.runs.iter().map(|p| resolve(base, p)).collect();
    if let Some(d) = &inv.dataset {
        dirs.push(d.clone());
    }
    let out = out_dir(inv, cfg, None)?;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for d in &dirs {
        let summary: RunSummary = match read_json(&d.join(RUN_SUMMARY)) {
            Ok(s) => s,
            Err(e) => {
                warnings.push(format!("{}: skipped ({e:#})", d.display()));
                continue;
            }
        };
        let pre = summary.preprocess.as_ref();
        rows.push(ReportRow {
            run: d.display().to_string(),
            variant: summary.variant,
            iterations: summary.iterations,
            final_fidelity: summary.final_fidelity,
            rmse: summary.rmse,
            eta: summary.epry.eta,
            i_th: pre.map(|p| p.i_th),
            subtraction: pre.map(|p| p.subtraction),
            affected_images: pre.map(|p| p.affected_images),
        });
    }
    if rows.is_empty() {
        bail!("no valid run summaries among {} director{}", dirs.len(), if dirs.len() == 1 { "y" } else { "ies" });
    }
    let opt = |v: Option<String>| v.unwrap_or_default();
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.run.clone(),
                serde_json::to_value(r.variant).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
                r.iterations.to_string(),
                r.final_fidelity.to_string(),
                opt(r.rmse.map(|v| v.to_string())),
                r.eta.to_string(),
                opt(r.i_th.map(|v| v.to_string())),
                opt(r.subtraction.and_then(|s| serde_json::to_value(s).ok()).and_then(|v| v.as_str().map(String::from))),
                opt(r.affected_images.map(|v| v.to_string())),
            ]
        })
        .collect();
    write_csv(&out.join("report.csv"), &REPORT_COLUMNS.map(String::from), &table)?;
    write_json(&out.join("report.json"), &rows)?;
    Ok(Outcome { warnings })
}

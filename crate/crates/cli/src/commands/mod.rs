mod decode;
mod encode;
mod evaluate;
mod generate;
mod reconstruct;
mod schedule;
mod train;

use std::path::Path;

use pccd_core::codec::{decode, DbscanParams, Decoded, DecodeFlag, ElementSlots, PointCloudTensor};
use pccd_core::diffusion::{ClampedPredictor, NoisePredictor, NoiseSchedule, OraclePredictor, DATA_RANGE};
use pccd_core::eval::{write_confusion_csv, write_pair_csv, write_summary_csv, ConfusionMatrix, MatchReport};
use pccd_core::nn::{load_checkpoint, Denoiser, DenoiserCheckpoint};

use crate::args::Command;
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::manifest::OutputDir;

pub fn dispatch(cmd: &Command, cfg: RunConfig, argv: &[String]) -> Result<()> {
    match cmd {
        Command::Encode(a) => encode::run(a, cfg, argv),
        Command::Decode(a) => decode::run(a, cfg, argv),
        Command::Train(a) => train::run(a, cfg, argv),
        Command::Generate(a) => generate::run(a, cfg, argv),
        Command::Reconstruct(a) => reconstruct::run(a, cfg, argv),
        Command::Evaluate(a) => evaluate::run(a, cfg, argv),
        Command::InspectSchedule(_) => schedule::run(cfg, argv),
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

/// Writes rows of string cells as CSV.
fn table<R: AsRef<[String]>>(header: &[&str], rows: &[R]) -> Result<Vec<u8>> {
    csv_bytes(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r.as_ref())?;
        }
        w.flush()?;
        Ok(())
    })
}

/// The per-pair, confusion and summary CSVs.
fn write_reports(out: &mut OutputDir, reports: &[MatchReport], confusion: &ConfusionMatrix) -> Result<()> {
    out.write("pairs.csv", &csv_bytes(|b| write_pair_csv(b, reports))?)?;
    out.write("confusion.csv", &csv_bytes(|b| write_confusion_csv(b, confusion))?)?;
    out.write("summary.csv", &csv_bytes(|b| write_summary_csv(b, reports))?)?;
    Ok(())
}

fn load_model(path: &Path, sch: &NoiseSchedule) -> Result<DenoiserCheckpoint> {
    if !path.exists() {
        return Err(CliError::Usage(format!("checkpoint {} does not exist", path.display())));
    }
    let ckpt = load_checkpoint(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if ckpt.config.steps != sch.steps() {
        return Err(CliError::Usage(format!(
            "checkpoint expects {} diffusion steps, schedule has {}",
            ckpt.config.steps,
            sch.steps()
        )));
    }
    Ok(ckpt)
}

fn flag_text(f: &DecodeFlag) -> String {
    match f {
        DecodeFlag::ExceedsSiteCeiling(n) => format!("clusters {n} > 16"),
        DecodeFlag::ManyNoisePoints(n) => format!("noise points {n}"),
    }
}

/// Decode outcome as CSV cells: status, sites, formula, clusters, noise points, flags.
fn decode_cells(d: &std::result::Result<Decoded, String>) -> [String; 6] {
    match d {
        Ok(d) => [
            "ok".into(),
            d.structure.len().to_string(),
            d.structure.reduced_formula(),
            d.diagnostics.cluster_sizes.len().to_string(),
            d.diagnostics.noise_points.to_string(),
            d.diagnostics.flags.iter().map(flag_text).collect::<Vec<_>>().join("; "),
        ],
        Err(e) => ["failed".into(), "0".into(), String::new(), String::new(), String::new(), e.clone()],
    }
}

const DECODE_COLUMNS: [&str; 6] = ["status", "sites", "formula", "clusters", "noise_points", "notes"];

/// Decodes a tensor, reporting a non-finite tensor as a failure rather than
/// clustering garbage.
fn try_decode(x: &PointCloudTensor, slots: &ElementSlots, p: &DbscanParams) -> std::result::Result<Decoded, String> {
    if !x.is_finite() {
        return Err("non-finite tensor".into());
    }
    decode(x, slots, p).map_err(|e| e.to_string())
}

/// The noise predictor a sampling command runs with.
enum Predictor<'a> {
    Oracle(OraclePredictor<'a>),
    Trained { model: Denoiser<'a>, clamp: bool },
}

impl<'a> Predictor<'a> {
    fn trained(ckpt: &'a DenoiserCheckpoint, sch: &'a NoiseSchedule, cfg: &RunConfig) -> Self {
        Predictor::Trained { model: ckpt.bind(sch), clamp: cfg.sampling.clamp_x0 }
    }
}

impl NoisePredictor for Predictor<'_> {
    fn predict(&self, xt: &PointCloudTensor, t: usize) -> std::result::Result<PointCloudTensor, pccd_core::Error> {
        match self {
            Predictor::Oracle(p) => p.predict(xt, t),
            Predictor::Trained { model, clamp: true } => {
                ClampedPredictor { inner: model, schedule: model.schedule, range: DATA_RANGE }.predict(xt, t)
            }
            Predictor::Trained { model, clamp: false } => model.predict(xt, t),
        }
    }
}

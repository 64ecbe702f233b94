use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::config::{parse_assignment, preset};
use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "pccd", version, about = "Point-cloud crystal diffusion")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random draw. Required by train, generate and reconstruct.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Override any config key, e.g. `--set train.learning_rate=0.01`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE", value_parser = parse_assignment)]
    pub set: Vec<(String, Value)>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// POSCAR files to .pct tensors.
    Encode(EncodeArgs),
    /// .pct tensors back to POSCAR files.
    Decode(DecodeArgs),
    /// Train the noise predictor.
    Train(TrainArgs),
    /// Sample new structures from a trained model.
    Generate(GenerateArgs),
    /// Noise every structure of a dataset to step T, denoise, and score.
    Reconstruct(ReconstructArgs),
    /// Score predicted structures against originals.
    Evaluate(EvaluateArgs),
    /// Dump a cosine noise schedule.
    InspectSchedule(ScheduleArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Encode(_) => "encode",
            Command::Decode(_) => "decode",
            Command::Train(_) => "train",
            Command::Generate(_) => "generate",
            Command::Reconstruct(_) => "reconstruct",
            Command::Evaluate(_) => "evaluate",
            Command::InspectSchedule(_) => "inspect-schedule",
        }
    }
}

#[derive(Debug, Args, Default)]
pub struct CodecArgs {
    /// Element slot order, e.g. `Mg,Mn,O`.
    #[arg(long)]
    pub slots: Option<String>,
    /// DBSCAN radius in fractional units.
    #[arg(long)]
    pub dbscan_eps: Option<f64>,
    #[arg(long)]
    pub dbscan_min_pts: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct ScheduleArgs {
    /// Number of diffusion steps T.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Cosine schedule offset s.
    #[arg(long)]
    pub offset: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Directory of POSCAR files (or a single file); defaults to `dataset_dir`.
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub codec: CodecArgs,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// .pct files or directories holding them.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub codec: CodecArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory of POSCAR and/or .pct files.
    #[arg(long)]
    pub dataset_dir: Option<PathBuf>,
    /// Architecture preset: default, five-stage, toy or tiny.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub training_steps: Option<usize>,
    /// Continue from an existing checkpoint.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[command(flatten)]
    pub codec: CodecArgs,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, required_unless_present = "oracle_poscar")]
    pub checkpoint: Option<PathBuf>,
    /// Up to three element symbols, e.g. `Mg,Mn,O`.
    #[arg(long)]
    pub elements: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Self-test: sample with the exact noise predictor bound to this structure.
    #[arg(long, hide = true, conflicts_with = "checkpoint")]
    pub oracle_poscar: Option<PathBuf>,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[command(flatten)]
    pub codec: CodecArgs,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long, required_unless_present = "oracle")]
    pub checkpoint: Option<PathBuf>,
    /// Use the exact noise predictor for each structure instead of a model.
    #[arg(long, conflicts_with = "checkpoint")]
    pub oracle: bool,
    #[arg(long)]
    pub dataset_dir: Option<PathBuf>,
    /// Independent seeded reconstructions per structure.
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[command(flatten)]
    pub codec: CodecArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory of original POSCAR files.
    #[arg(long)]
    pub original: PathBuf,
    /// Directory of predicted POSCAR files, paired with originals by file name.
    #[arg(long)]
    pub predicted: PathBuf,
    /// Reference corpus for the novelty check.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Species-blind atom matching.
    #[arg(long)]
    pub anonymous: bool,
    #[arg(long)]
    pub bond_cutoff: Option<f64>,
}

fn push<T: serde::Serialize>(out: &mut Vec<(String, Value)>, key: &str, v: &Option<T>) {
    if let Some(v) = v {
        out.push((key.to_string(), json!(v)));
    }
}

impl CodecArgs {
    fn overrides(&self, out: &mut Vec<(String, Value)>) {
        push(out, "codec.slots", &self.slots);
        push(out, "codec.dbscan.eps", &self.dbscan_eps);
        push(out, "codec.dbscan.min_pts", &self.dbscan_min_pts);
    }
}

impl ScheduleArgs {
    fn overrides(&self, out: &mut Vec<(String, Value)>) {
        push(out, "schedule.steps", &self.steps);
        push(out, "denoiser.steps", &self.steps);
        push(out, "schedule.offset", &self.offset);
    }
}

impl Cli {
    /// Config overrides implied by flags: `--set` first, dedicated flags after,
    /// so a dedicated flag wins over `--set` for the same key.
    pub fn overrides(&self) -> Result<Vec<(String, Value)>> {
        let mut out = self.global.set.clone();
        let g = &self.global;
        push(&mut out, "seed", &g.seed);
        push(&mut out, "output_dir", &g.output_dir);
        match &self.command {
            Command::Encode(a) => a.codec.overrides(&mut out),
            Command::Decode(a) => a.codec.overrides(&mut out),
            Command::Train(a) => {
                push(&mut out, "dataset_dir", &a.dataset_dir);
                if let Some(p) = &a.preset {
                    // the preset fixes the architecture, not the schedule length
                    let d = preset(p)?;
                    out.push(("denoiser.stages".into(), json!(d.stages)));
                    out.push(("denoiser.widths".into(), json!(d.widths)));
                    out.push(("denoiser.use_attention".into(), json!(d.use_attention)));
                    out.push(("denoiser.time_embed_dim".into(), json!(d.time_embed_dim)));
                }
                push(&mut out, "train.learning_rate", &a.learning_rate);
                push(&mut out, "train.batch_size", &a.batch_size);
                push(&mut out, "train.training_steps", &a.training_steps);
                a.schedule.overrides(&mut out);
                a.codec.overrides(&mut out);
            }
            Command::Generate(a) => {
                a.schedule.overrides(&mut out);
                a.codec.overrides(&mut out);
            }
            Command::Reconstruct(a) => {
                push(&mut out, "dataset_dir", &a.dataset_dir);
                a.schedule.overrides(&mut out);
                a.codec.overrides(&mut out);
            }
            Command::Evaluate(a) => {
                if a.anonymous {
                    out.push(("evaluation.species_aware".into(), json!(false)));
                }
                push(&mut out, "evaluation.bond_cutoff", &a.bond_cutoff);
            }
            Command::InspectSchedule(a) => a.overrides(&mut out),
        }
        Ok(out)
    }
}

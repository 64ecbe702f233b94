use pccd_core::codec::PointCloudTensor;
use pccd_core::nn::{to_bytes, train_from, DenoiserCheckpoint};

use crate::args::TrainArgs;
use crate::config::RunConfig;
use crate::dataset::{is_pct, list_files, load_poscars, read_pct, require_dir};
use crate::error::{CliError, Result};
use crate::manifest::OutputDir;

use super::{load_model, table};

pub const CHECKPOINT: &str = "model.pccdckpt";

/// Encodable POSCAR files plus any .pct tensors in `dir`, in name order.
fn load_dataset(dir: &std::path::Path, cfg: &RunConfig) -> Result<Vec<PointCloudTensor>> {
    let mut named: Vec<(String, PointCloudTensor)> = Vec::new();
    for e in load_poscars(dir, cfg.fixed_slots()?.as_ref())? {
        match e.outcome {
            Ok(enc) => named.push((e.id, enc.tensor)),
            Err(why) => log::warn!("skipping {}: {why}", e.id),
        }
    }
    for f in list_files(dir)?.into_iter().filter(|f| is_pct(f)) {
        match read_pct(&f) {
            Ok(x) if x.is_finite() => named.push((crate::dataset::file_name(&f), x)),
            Ok(_) => log::warn!("skipping {}: non-finite values", f.display()),
            Err(why) => log::warn!("skipping {}: {why}", f.display()),
        }
    }
    named.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(named.into_iter().map(|(_, x)| x).collect())
}

pub fn run(a: &TrainArgs, mut cfg: RunConfig, argv: &[String]) -> Result<()> {
    let seed = cfg.require_seed()?;
    cfg.train.seed = seed;
    let dir = require_dir(a.dataset_dir.as_deref(), cfg.dataset_dir.as_deref(), "dataset directory")?;
    let sch = cfg.schedule()?;
    let init = match &a.resume {
        Some(p) => {
            let ckpt = load_model(p, &sch)?;
            cfg.denoiser = ckpt.config.clone();
            ckpt
        }
        None => DenoiserCheckpoint::init(&cfg.denoiser, &sch, seed)?,
    };
    let dataset = load_dataset(&dir, &cfg)?;
    if dataset.is_empty() {
        return Err(CliError::Input(format!("no usable structures in {}", dir.display())));
    }
    log::info!("training on {} tensors for {} steps", dataset.len(), cfg.train.training_steps);
    let every = (cfg.train.training_steps / 20).max(1);
    let outcome = train_from(init, &dataset, &sch, &cfg.train, |step, loss| {
        if step % every == 0 {
            log::info!("step {step} loss {loss:.6}");
        }
    })?;
    let mut out = OutputDir::create(&cfg.output_dir)?;
    out.write(CHECKPOINT, &to_bytes(&outcome.checkpoint))?;
    let rows: Vec<[String; 2]> =
        outcome.losses.iter().enumerate().map(|(i, l)| [i.to_string(), format!("{l:?}")]).collect();
    out.write("loss.csv", &table(&["step", "loss"], &rows)?)?;
    out.finish("train", argv, &cfg)?;
    Ok(())
}

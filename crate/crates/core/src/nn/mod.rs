//! The learnable noise predictor: a 1-D U-Net over the 128 points with
//! sinusoidal timestep conditioning, trained on mean absolute error with Adam.
//!
//! The raw network output F is scaled by κ_t = (√ᾱ_t + √(1−ᾱ_t))/√(1−ᾱ_t)
//! to give ε̂ = κ_t·F. Near t = 0 this makes F a small residual x_t − x0
//! (the implied x̂0 is (x_t − (√ᾱ_t + √(1−ᾱ_t))·F)/√ᾱ_t), which a small
//! network can learn, while near t = T it is plain noise prediction. The
//! output layers start at zero so an untrained model predicts ε̂ = 0.

mod adam;
mod checkpoint;
mod config;
pub mod layers;
mod params;
mod unet;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::codec::{PointCloudTensor, TENSOR_LEN};
use crate::diffusion::{q_sample, NoisePredictor, NoiseSchedule};
use crate::rng::{fill_standard_normal, seeded};

pub use adam::{adam_step, adam_update, AdamState};
pub use checkpoint::{from_bytes, load_checkpoint, save_checkpoint, to_bytes, CKPT_MAGIC, CKPT_VERSION};
pub use config::{DenoiserConfig, TrainConfig};
pub use params::{Grads, Param, ParamId, ParamStore};
pub use unet::{seq_to_tensor, tensor_to_seq, UNet, FEATURES};


#[derive(Debug, Error, PartialEq)]
pub enum NnError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("step {t} outside 1..={steps}")]
    StepOutOfRange { t: usize, steps: usize },
    #[error("non-finite activation in the network output at step {0}")]
    NonFiniteActivation(usize),
    #[error("non-finite gradient")]
    NonFiniteGradient,
    #[error("non-finite loss at training step {step}")]
    NonFiniteLoss { step: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("checkpoint version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
}

/// Network parameters together with architecture, optimiser state and the
/// fingerprint of the schedule it was trained under.
#[derive(Debug, Clone)]
pub struct DenoiserCheckpoint {
    pub config: DenoiserConfig,
    net: UNet,
    pub params: ParamStore,
    pub adam: AdamState,
    pub schedule_fingerprint: [u8; 8],
}

impl PartialEq for DenoiserCheckpoint {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.params == other.params
            && self.adam == other.adam
            && self.schedule_fingerprint == other.schedule_fingerprint
    }
}

/// One training example: noisy tensor, its step, and the noise that produced it.
#[derive(Debug, Clone)]
pub struct Example {
    pub xt: PointCloudTensor,
    pub t: usize,
    pub eps: PointCloudTensor,
}

impl DenoiserCheckpoint {
    /// Freshly initialised parameters (fan-in uniform) drawn from `seed`,
    /// with the output layers zeroed.
    pub fn init(config: &DenoiserConfig, schedule: &NoiseSchedule, seed: u64) -> Result<Self, NnError> {
        config.validate()?;
        if schedule.steps() != config.steps {
            return Err(NnError::InvalidConfig(format!(
                "schedule has {} steps, model expects {}",
                schedule.steps(),
                config.steps
            )));
        }
        let (net, mut params) = UNet::build(config);
        params.init_uniform(&mut seeded(seed));
        net.zero_head(&mut params);
        let adam = AdamState::new(&params);
        Ok(DenoiserCheckpoint { config: config.clone(), net, params, adam, schedule_fingerprint: schedule.fingerprint() })
    }

    pub fn net(&self) -> &UNet {
        &self.net
    }

    /// Pairs the checkpoint with the schedule used for sampling. Warns when
    /// it differs from the one the checkpoint was trained with.
    pub fn bind<'a>(&'a self, schedule: &'a NoiseSchedule) -> Denoiser<'a> {
        self.check_schedule(schedule);
        Denoiser { ckpt: self, schedule }
    }

    /// False (and a logged warning) when `schedule` differs from the one the
    /// checkpoint was trained with.
    pub fn check_schedule(&self, schedule: &NoiseSchedule) -> bool {
        let ok = schedule.fingerprint() == self.schedule_fingerprint && schedule.steps() == self.config.steps;
        if !ok {
            log::warn!("checkpoint was trained under a different noise schedule");
        }
        ok
    }

    /// Output scale κ_t after checking `t` against the model and schedule.
    fn gain(&self, t: usize, sch: &NoiseSchedule) -> Result<f64, NnError> {
        if t < 1 || t > self.config.steps || t > sch.steps() {
            return Err(NnError::StepOutOfRange { t, steps: self.config.steps.min(sch.steps()) });
        }
        let ab = sch.alpha_bar(t);
        let s = (1.0 - ab).sqrt();
        Ok((ab.sqrt() + s) / s)
    }

    /// Noise estimate ε̂ for `xt` at step `t` under `sch`.
    pub fn forward(&self, xt: &PointCloudTensor, t: usize, sch: &NoiseSchedule) -> Result<PointCloudTensor, NnError> {
        let k = self.gain(t, sch)?;
        let (f, _) = self.net.forward(&self.params, &tensor_to_seq(xt), t);
        let out = seq_to_tensor(&f).map(|v| k * v);
        if !out.is_finite() {
            return Err(NnError::NonFiniteActivation(t));
        }
        Ok(out)
    }

    /// Batch-mean MAE of ε̂ and its exact gradient with respect to every
    /// parameter. Samples are evaluated in parallel and reduced in batch order.
    pub fn gradient(&self, batch: &[Example], sch: &NoiseSchedule) -> Result<(f64, Grads), NnError> {
        if batch.is_empty() {
            return Err(NnError::EmptyBatch);
        }
        let coeffs = batch.iter().map(|ex| self.gain(ex.t, sch)).collect::<Result<Vec<_>, _>>()?;
        let scale = 1.0 / (batch.len() * TENSOR_LEN) as f64;
        let per_sample: Vec<(f64, Grads)> = batch
            .par_iter()
            .zip(&coeffs)
            .map(|(ex, &k)| {
                let x = tensor_to_seq(&ex.xt);
                let target = tensor_to_seq(&ex.eps);
                let (f, trace) = self.net.forward(&self.params, &x, ex.t);
                let mut gf = f.clone();
                let mut abs_sum = 0.0;
                for (g, (&fv, &e)) in gf.data.iter_mut().zip(f.data.iter().zip(&target.data)) {
                    let d = k * fv - e;
                    abs_sum += d.abs();
                    // subgradient 0 at exact ties
                    let sign = if d > 0.0 {
                        1.0
                    } else if d < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                    *g = sign * scale * k;
                }
                let mut grads = self.params.zeros_like();
                self.net.backward(&self.params, &trace, &gf, &mut grads);
                (abs_sum, grads)
            })
            .collect();
        let mut total = self.params.zeros_like();
        let mut loss = 0.0;
        for (l, g) in &per_sample {
            loss += l;
            total.add_assign(g);
        }
        if !total.all_finite() {
            return Err(NnError::NonFiniteGradient);
        }
        Ok((loss * scale, total))
    }
}

/// A checkpoint bound to a schedule, usable as a noise predictor.
#[derive(Debug, Clone, Copy)]
pub struct Denoiser<'a> {
    pub ckpt: &'a DenoiserCheckpoint,
    pub schedule: &'a NoiseSchedule,
}

impl NoisePredictor for Denoiser<'_> {
    fn predict(&self, xt: &PointCloudTensor, t: usize) -> Result<PointCloudTensor, crate::Error> {
        Ok(self.ckpt.forward(xt, t, self.schedule)?)
    }
}

/// Mean absolute elementwise difference.
pub fn mae_loss(eps: &PointCloudTensor, eps_hat: &PointCloudTensor) -> f64 {
    eps.as_slice().iter().zip(eps_hat.as_slice()).map(|(a, b)| (a - b).abs()).sum::<f64>() / TENSOR_LEN as f64
}

/// Mean absolute error over a batch of pairs.
pub fn mae_loss_batch(pairs: &[(PointCloudTensor, PointCloudTensor)]) -> Result<f64, NnError> {
    if pairs.is_empty() {
        return Err(NnError::EmptyBatch);
    }
    Ok(pairs.iter().map(|(a, b)| mae_loss(a, b)).sum::<f64>() / pairs.len() as f64)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: DenoiserCheckpoint,
    /// Batch loss of every step.
    pub losses: Vec<f64>,
}

/// Draws one batch of noisy examples: indices without replacement when the
/// dataset is large enough (with replacement otherwise), t uniform on 1..=T,
/// ε standard normal.
fn draw_batch<R: Rng>(rng: &mut R, dataset: &[PointCloudTensor], sch: &NoiseSchedule, size: usize) -> Vec<Example> {
    let ids: Vec<usize> = if dataset.len() >= size {
        index::sample(rng, dataset.len(), size).into_vec()
    } else {
        (0..size).map(|_| rng.random_range(0..dataset.len())).collect()
    };
    ids.into_iter()
        .map(|i| {
            let t = rng.random_range(1..=sch.steps());
            let mut eps = PointCloudTensor::zeros();
            fill_standard_normal(rng, eps.as_mut_slice());
            let xt = q_sample(&dataset[i], t, &eps, sch).expect("t drawn in range");
            Example { xt, t, eps }
        })
        .collect()
}

/// Trains a fresh model. Deterministic for fixed inputs and `tcfg.seed`.
pub fn train(
    dataset: &[PointCloudTensor],
    sch: &NoiseSchedule,
    dcfg: &DenoiserConfig,
    tcfg: &TrainConfig,
) -> Result<TrainOutcome, NnError> {
    let init = DenoiserCheckpoint::init(dcfg, sch, tcfg.seed)?;
    train_from(init, dataset, sch, tcfg, |_, _| {})
}

/// Continues training `ckpt`; `on_step(step, loss)` sees each batch loss.
pub fn train_from(
    mut ckpt: DenoiserCheckpoint,
    dataset: &[PointCloudTensor],
    sch: &NoiseSchedule,
    tcfg: &TrainConfig,
    mut on_step: impl FnMut(usize, f64),
) -> Result<TrainOutcome, NnError> {
    tcfg.validate()?;
    if dataset.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    if sch.steps() != ckpt.config.steps {
        return Err(NnError::InvalidConfig(format!(
            "schedule has {} steps, model expects {}",
            sch.steps(),
            ckpt.config.steps
        )));
    }
    // offset keeps the data stream independent of the initialisation stream
    let mut rng = seeded(tcfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut losses = Vec::with_capacity(tcfg.training_steps);
    for step in 0..tcfg.training_steps {
        let batch = draw_batch(&mut rng, dataset, sch, tcfg.batch_size);
        let (loss, grads) = ckpt.gradient(&batch, sch).map_err(|e| match e {
            NnError::NonFiniteGradient => NnError::NonFiniteLoss { step },
            other => other,
        })?;
        if !loss.is_finite() {
            return Err(NnError::NonFiniteLoss { step });
        }
        adam_step(&mut ckpt.params, &grads, &mut ckpt.adam, tcfg);
        losses.push(loss);
        on_step(step, loss);
    }
    ckpt.schedule_fingerprint = sch.fingerprint();
    Ok(TrainOutcome { checkpoint: ckpt, losses })
}

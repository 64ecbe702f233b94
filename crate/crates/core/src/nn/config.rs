use serde::{Deserialize, Serialize};

use crate::codec::POINTS;

use super::NnError;

/// Architecture of the U-Net noise predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiserConfig {
    /// Number of down/up-sampling stages; each halves the sequence length.
    pub stages: usize,
    /// Channel width of each stage.
    pub widths: Vec<usize>,
    /// Single-head self-attention at the bottleneck.
    pub use_attention: bool,
    pub time_embed_dim: usize,
    /// Length of the noise schedule the model is conditioned on.
    pub steps: usize,
}

impl Default for DenoiserConfig {
    fn default() -> Self {
        DenoiserConfig { stages: 4, widths: vec![16, 32, 64, 128], use_attention: true, time_embed_dim: 32, steps: 1000 }
    }
}

impl DenoiserConfig {
    /// Five down/up-sampling stages.
    pub fn five_stage() -> Self {
        DenoiserConfig { stages: 5, widths: vec![16, 32, 64, 128, 256], ..Self::default() }
    }

    /// One stage of width 4; used for gradient checks.
    pub fn tiny() -> Self {
        DenoiserConfig { stages: 1, widths: vec![4], use_attention: true, time_embed_dim: 8, steps: 1000 }
    }

    /// Two narrow stages; small enough to train in seconds.
    pub fn toy() -> Self {
        DenoiserConfig { stages: 2, widths: vec![32, 32], use_attention: true, time_embed_dim: 16, steps: 1000 }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |m: String| Err(NnError::InvalidConfig(m));
        if self.stages < 1 {
            return bad("at least one stage is required".into());
        }
        if self.stages > 7 || POINTS % (1 << self.stages) != 0 {
            return bad(format!("{POINTS} points cannot be halved {} times", self.stages));
        }
        if self.widths.len() != self.stages {
            return bad(format!("{} widths given for {} stages", self.widths.len(), self.stages));
        }
        if self.widths.contains(&0) {
            return bad("stage widths must be positive".into());
        }
        if self.time_embed_dim < 2 || self.time_embed_dim % 2 != 0 {
            return bad("time embedding width must be even and at least 2".into());
        }
        if self.steps < 1 {
            return bad("schedule length must be positive".into());
        }
        Ok(())
    }
}

/// Optimiser and loop settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub training_steps: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            batch_size: 128,
            training_steps: 500,
            adam_beta1: 0.9,
            adam_beta2: 0.99,
            adam_epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        let ok = self.learning_rate > 0.0
            && self.batch_size > 0
            && self.training_steps > 0
            && self.adam_beta1 > 0.0
            && self.adam_beta1 < 1.0
            && self.adam_beta2 > 0.0
            && self.adam_beta2 < 1.0
            && self.adam_epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(NnError::InvalidConfig(format!("invalid training configuration {self:?}")))
        }
    }
}

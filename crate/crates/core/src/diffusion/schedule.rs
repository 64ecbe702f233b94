use std::f64::consts::PI;

use sha2::{Digest, Sha256};

use super::DiffusionError;

pub const DEFAULT_STEPS: usize = 1000;
pub const DEFAULT_OFFSET: f64 = 0.008;
const BETA_MIN: f64 = 1e-8;
const BETA_MAX: f64 = 0.999;

/// Precomputed per-step variances. All accessors are 1-indexed by `t`;
/// `alpha_bar(0)` is 1 by definition.
#[derive(Debug, Clone)]
pub struct NoiseSchedule {
    offset: f64,
    beta: Vec<f64>,
    alpha: Vec<f64>,
    alpha_bar: Vec<f64>,
    sigma: Vec<f64>,
}

impl NoiseSchedule {
    /// Squared-cosine schedule: ᾱ(t) = f(t)/f(0) with
    /// f(t) = cos²(((t/T) + s)/(1 + s) · π/2). β_t = 1 − ᾱ_t/ᾱ_{t−1} is clipped
    /// to [1e-8, 0.999] and ᾱ is then rebuilt as the running product of α.
    pub fn cosine(steps: usize, offset: f64) -> Result<Self, DiffusionError> {
        if steps < 1 || !(offset > 0.0) || !offset.is_finite() {
            return Err(DiffusionError::InvalidParams { steps, offset });
        }
        let f = |t: usize| {
            let u = ((t as f64 / steps as f64) + offset) / (1.0 + offset) * PI / 2.0;
            u.cos().powi(2)
        };
        let f0 = f(0);
        let beta: Vec<f64> = (1..=steps)
            .map(|t| {
                let prev = f(t - 1) / f0;
                let cur = f(t) / f0;
                (1.0 - cur / prev).clamp(BETA_MIN, BETA_MAX)
            })
            .collect();
        Ok(Self::build(beta, offset))
    }

    /// A schedule from explicit per-step variances, each in (0, 1).
    pub fn from_betas(beta: Vec<f64>) -> Result<Self, DiffusionError> {
        if beta.is_empty() || beta.iter().any(|b| !(*b > 0.0 && *b < 1.0)) {
            return Err(DiffusionError::InvalidParams { steps: beta.len(), offset: f64::NAN });
        }
        Ok(Self::build(beta, f64::NAN))
    }

    fn build(beta: Vec<f64>, offset: f64) -> Self {
        let alpha: Vec<f64> = beta.iter().map(|b| 1.0 - b).collect();
        let mut alpha_bar = Vec::with_capacity(alpha.len());
        let mut acc = 1.0;
        for a in &alpha {
            acc *= a;
            alpha_bar.push(acc);
        }
        let sigma = beta.iter().map(|b| b.sqrt()).collect();
        NoiseSchedule { offset, beta, alpha, alpha_bar, sigma }
    }

    pub fn steps(&self) -> usize {
        self.beta.len()
    }

    /// Cosine offset `s`; NaN for schedules built from explicit betas.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn check_step(&self, t: usize) -> Result<(), DiffusionError> {
        if t < 1 || t > self.steps() {
            return Err(DiffusionError::StepOutOfRange { t, steps: self.steps() });
        }
        Ok(())
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.beta[t - 1]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alpha[t - 1]
    }

    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bar[t - 1]
        }
    }

    pub fn sigma(&self, t: usize) -> f64 {
        self.sigma[t - 1]
    }

    pub fn betas(&self) -> &[f64] {
        &self.beta
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bar
    }

    /// First 8 bytes of SHA-256 over the step count and every β (LE f64).
    pub fn fingerprint(&self) -> [u8; 8] {
        let mut h = Sha256::new();
        h.update((self.steps() as u64).to_le_bytes());
        for b in &self.beta {
            h.update(b.to_le_bytes());
        }
        let d = h.finalize();
        d[..8].try_into().unwrap()
    }

    /// CSV dump with header `t,beta,alpha,alpha_bar,sigma`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,beta,alpha,alpha_bar,sigma\n");
        for t in 1..=self.steps() {
            out.push_str(&format!(
                "{},{:e},{:e},{:e},{:e}\n",
                t,
                self.beta(t),
                self.alpha(t),
                self.alpha_bar(t),
                self.sigma(t)
            ));
        }
        out
    }
}

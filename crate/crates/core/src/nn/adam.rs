use super::config::TrainConfig;
use super::params::{Grads, ParamStore};

/// First/second moment estimates and the number of updates taken.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: Grads,
    pub v: Grads,
}

impl AdamState {
    pub fn new(params: &ParamStore) -> Self {
        AdamState { step: 0, m: params.zeros_like(), v: params.zeros_like() }
    }
}

/// One bias-corrected Adam update of a flat array. `step` is the 1-based
/// index of this update.
pub fn adam_update(theta: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], step: u64, cfg: &TrainConfig) {
    let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
    let c1 = 1.0 - b1.powi(step as i32);
    let c2 = 1.0 - b2.powi(step as i32);
    for i in 0..theta.len() {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        theta[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_epsilon);
    }
}

pub fn adam_step(params: &mut ParamStore, grads: &Grads, state: &mut AdamState, cfg: &TrainConfig) {
    state.step += 1;
    for (id, p) in params.iter_mut().enumerate() {
        adam_update(&mut p.values, &grads.0[id], &mut state.m.0[id], &mut state.v.0[id], state.step, cfg);
    }
}

//! The Adam stepper and inverted dropout.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::ObjectiveError;

pub const DEFAULT_LEARNING_RATE: f64 = 5e-5;

/// Per-parameter Adam moment estimates plus hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: u32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    /// Fresh state with the default hyperparameters
    /// (lr 5e-5, beta1 0.9, beta2 0.999, eps 1e-8).
    pub fn new(n_params: usize) -> Self {
        Self::with_lr(n_params, DEFAULT_LEARNING_RATE).expect("default lr is valid")
    }

    pub fn with_lr(n_params: usize, lr: f64) -> Result<Self, ObjectiveError> {
        if !lr.is_finite() || lr <= 0.0 {
            return Err(ObjectiveError::InvalidLearningRate(lr));
        }
        Ok(AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        })
    }

    pub fn learning_rate(&self) -> f64 {
        self.lr
    }

    pub fn step_count(&self) -> u32 {
        self.step
    }
}

/// One bias-corrected Adam update, in place:
/// m <- b1*m + (1-b1)*g, v <- b2*v + (1-b2)*g^2,
/// p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps).
pub fn adam_step(
    state: &mut AdamState,
    params: &mut [f64],
    grads: &[f64],
) -> Result<(), ObjectiveError> {
    if params.len() != state.m.len() || params.len() != grads.len() {
        return Err(ObjectiveError::LengthMismatch {
            params: params.len(),
            grads: grads.len(),
        });
    }
    state.step += 1;
    let m_corr = 1.0 - state.beta1.powi(state.step as i32);
    let v_corr = 1.0 - state.beta2.powi(state.step as i32);
    for i in 0..params.len() {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
        let m_hat = state.m[i] / m_corr;
        let v_hat = state.v[i] / v_corr;
        params[i] -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

/// Inverted dropout. `rate` is the DROP probability (a rate of 0.7 zeros
/// roughly 70% of the values); survivors are scaled by 1/(1-rate) so the
/// expectation is unchanged. Deterministic under a fixed generator state.
pub fn dropout(
    values: &[f64],
    rate: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>, ObjectiveError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(ObjectiveError::InvalidRate(rate));
    }
    let scale = 1.0 / (1.0 - rate);
    Ok(values
        .iter()
        .map(|&v| if rng.random::<f64>() < rate { 0.0 } else { v * scale })
        .collect())
}

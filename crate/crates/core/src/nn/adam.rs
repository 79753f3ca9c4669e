use serde::{Deserialize, Serialize};

use super::params::Parameters;
use crate::error::{BclError, Result};

pub const DEFAULT_LEARNING_RATE: f64 = 0.000125;

/// Bias-corrected Adam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Parameters,
    pub v: Parameters,
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(like: &Parameters, learning_rate: f64) -> Self {
        Self {
            m: like.zeros_like(),
            v: like.zeros_like(),
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    /// In-place update. A non-finite gradient leaves both `params` and the
    /// optimizer state untouched.
    pub fn apply(&mut self, params: &mut Parameters, grads: &Parameters) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.m.len() {
            return Err(BclError::Shape("adam: parameter/gradient size mismatch".into()));
        }
        if !grads.is_finite() {
            return Err(BclError::Numeric("adam: non-finite gradient".into()));
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.learning_rate, self.epsilon);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads.iter())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

/// Pure form of [`AdamState::apply`].
pub fn adam_step(
    state: &AdamState,
    params: &Parameters,
    grads: &Parameters,
) -> Result<(Parameters, AdamState)> {
    let mut state = state.clone();
    let mut params = params.clone();
    state.apply(&mut params, grads)?;
    Ok((params, state))
}

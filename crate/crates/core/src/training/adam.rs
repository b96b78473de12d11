use serde::{Deserialize, Serialize};

use super::{TrainConfig, TrainError};
use crate::numcore::Tensor;

/// First and second moments per parameter plus the step counter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &[&Tensor]) -> Self {
        let zeros: Vec<Vec<f64>> = params.iter().map(|t| vec![0.0; t.len()]).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }
}

/// Learning rate after time-based decay: `lr / (1 + decay * step)`.
pub fn decayed_learning_rate(cfg: &TrainConfig, step: u64) -> f64 {
    cfg.learning_rate / (1.0 + cfg.decay * step as f64)
}

/// One bias-corrected Adam update. `names` label parameters in error messages.
///
/// Nothing is modified when any gradient is non-finite.
pub fn adam_step(
    params: &mut [&mut Tensor],
    names: &[&str],
    grads: &[Vec<f64>],
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<(), TrainError> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(TrainError::Contract(format!(
            "adam_step: {} params, {} grads, {} moment slots",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        let name = names.get(i).copied().unwrap_or("?");
        if p.len() != g.len() || state.m[i].len() != g.len() {
            return Err(TrainError::Contract(format!(
                "adam_step: {name} has {} values but {} gradients",
                p.len(),
                g.len()
            )));
        }
        if let Some(bad) = g.iter().find(|v| !v.is_finite()) {
            return Err(TrainError::NonFinite(format!("gradient of {name} contains {bad}")));
        }
    }

    state.step += 1;
    let t = state.step;
    let lr = decayed_learning_rate(cfg, t);
    let bc1 = 1.0 - cfg.beta1.powf(t as f64);
    let bc2 = 1.0 - cfg.beta2.powf(t as f64);
    for (i, p) in params.iter_mut().enumerate() {
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for (j, theta) in p.data_mut().iter_mut().enumerate() {
            let g = grads[i][j];
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
            let m_hat = m[j] / bc1;
            let v_hat = v[j] / bc2;
            *theta -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}

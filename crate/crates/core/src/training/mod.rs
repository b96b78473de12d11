//! Mini-batch Adam training with early stopping, evaluation metrics and a
//! logistic-regression baseline.

mod adam;
mod logistic;
mod metrics;
mod trainer;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numcore::NumError;
use crate::sstgcn::ModelError;

pub use adam::{adam_step, decayed_learning_rate, AdamState};
pub use logistic::{logistic_baseline, logistic_features, LogisticModel, LOGISTIC_INPUTS};
pub use metrics::{
    auc, bce_loss, classification_metrics, roc_curve, trapezoid_area, ClassificationMetrics, MetricsReport,
    DECISION_THRESHOLD,
};
pub use trainer::{
    evaluate, train, train_with_validator, write_history_csv, write_history_json, EpochRecord, TrainOutcome, Trainable,
};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("{0}")]
    Contract(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("non-finite training loss, aborting\n{0}")]
    NonFiniteLoss(String),
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("invalid training config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Quantity watched for early stopping and best-epoch selection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monitor {
    #[default]
    ValAuc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub decay: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub monitor: Monitor,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
            decay: 2e-6,
            batch_size: 32,
            max_epochs: 100,
            patience: 10,
            monitor: Monitor::ValAuc,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("beta1 and beta2 must be in [0, 1)");
        }
        if !(self.epsilon > 0.0) || !(self.decay >= 0.0) {
            return bad("epsilon must be positive and decay non-negative");
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return bad("batch_size, max_epochs and patience must be >= 1");
        }
        Ok(())
    }
}

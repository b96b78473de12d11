//! The spatio-temporal graph model: two GCN layers and attention pooling per
//! time slice, a static-feature branch, an LSTM over the slice embeddings and
//! a sigmoid head.

mod checkpoint;
mod forward;
mod params;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::schema::{NODE_FEATURES, STATIC_FEATURES};
use crate::numcore::{Activation, NumError, Var};

pub use checkpoint::{load_checkpoint, load_checkpoint_for, save_checkpoint, Checkpoint, NamedTensor, CHECKPOINT_VERSION};
pub use forward::{
    dense, gcn_layer, global_attention_sum_pool, loss_and_grads, lstm_forward, predict, predict_on_tape, slice_embed,
    static_embed, LstmVars,
};
pub use params::{BoundParams, ModelParams, PARAM_NAMES};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Activation applied after an affine layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    /// Leaky ReLU with one trainable slope per layer.
    Prelu,
    Relu,
    Tanh,
    Sigmoid,
    Linear,
}

/// Layer widths and activations. Defaults give 7539 trainable values.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub node_features: usize,
    pub static_features: usize,
    pub gcn_channels: [usize; 2],
    pub static_units: [usize; 2],
    pub concat_units: [usize; 2],
    pub lstm_units: usize,
    pub output_units: usize,
    pub gcn_activation: ActivationKind,
    pub dense_activation: ActivationKind,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            node_features: NODE_FEATURES,
            static_features: STATIC_FEATURES,
            gcn_channels: [64, 32],
            static_units: [32, 16],
            concat_units: [32, 16],
            lstm_units: 8,
            output_units: 8,
            gcn_activation: ActivationKind::Prelu,
            dense_activation: ActivationKind::Relu,
        }
    }
}

impl ModelConfig {
    /// Width choices explored by the hyper-parameter search.
    pub const UNIT_CHOICES: [usize; 5] = [8, 16, 32, 64, 128];

    pub fn validate(&self) -> Result<(), ModelError> {
        let widths = [
            self.node_features,
            self.static_features,
            self.gcn_channels[0],
            self.gcn_channels[1],
            self.static_units[0],
            self.static_units[1],
            self.concat_units[0],
            self.concat_units[1],
            self.lstm_units,
            self.output_units,
        ];
        if widths.contains(&0) {
            return Err(ModelError::Config("all widths must be positive".into()));
        }
        if self.dense_activation == ActivationKind::Prelu {
            return Err(ModelError::Config("prelu is only available for the GCN layers".into()));
        }
        Ok(())
    }

    /// Width of the pooled-graph plus static-embedding concatenation.
    pub fn concat_width(&self) -> usize {
        self.gcn_channels[1] + self.static_units[1]
    }

    /// LSTM gate input width `[h, x]`.
    pub fn lstm_input_width(&self) -> usize {
        self.lstm_units + self.concat_units[1]
    }
}

pub(crate) fn tape_activation(kind: ActivationKind, alpha: Option<Var>) -> Option<Activation> {
    match kind {
        ActivationKind::Prelu => alpha.map(Activation::Prelu),
        ActivationKind::Relu => Some(Activation::Relu),
        ActivationKind::Tanh => Some(Activation::Tanh),
        ActivationKind::Sigmoid => Some(Activation::Sigmoid),
        ActivationKind::Linear => None,
    }
}

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelConfig, ModelError, ModelParams};
use crate::numcore::Tensor;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedTensor {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

/// Serialized model: config plus every parameter in canonical order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub version: u32,
    pub config: ModelConfig,
    pub tensors: Vec<NamedTensor>,
}

impl From<&ModelParams> for Checkpoint {
    fn from(p: &ModelParams) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            config: p.config.clone(),
            tensors: p
                .named()
                .map(|(name, t)| NamedTensor {
                    name: name.to_string(),
                    rows: t.rows(),
                    cols: t.cols(),
                    data: t.data().to_vec(),
                })
                .collect(),
        }
    }
}

impl Checkpoint {
    /// Rebuilds parameters, checking names and shapes against `config`.
    pub fn into_params(self, config: &ModelConfig) -> Result<ModelParams, ModelError> {
        if self.version != CHECKPOINT_VERSION {
            return Err(ModelError::UnsupportedVersion(self.version));
        }
        let tensors = self
            .tensors
            .into_iter()
            .map(|t| {
                let tensor = Tensor::from_vec(t.rows, t.cols, t.data)
                    .map_err(|e| ModelError::Checkpoint(format!("{}: {e}", t.name)))?;
                Ok((t.name, tensor))
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        ModelParams::from_named(config, tensors)
    }
}

pub fn save_checkpoint(path: &Path, params: &ModelParams) -> Result<(), ModelError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &Checkpoint::from(params))?;
    w.flush()?;
    Ok(())
}

/// Loads a checkpoint with the config stored inside it.
pub fn load_checkpoint(path: &Path) -> Result<ModelParams, ModelError> {
    let ck: Checkpoint = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    let config = ck.config.clone();
    ck.into_params(&config)
}

/// Loads a checkpoint and rejects it unless it matches `config`.
pub fn load_checkpoint_for(path: &Path, config: &ModelConfig) -> Result<ModelParams, ModelError> {
    let ck: Checkpoint = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    if &ck.config != config {
        return Err(ModelError::Checkpoint("stored config differs from the active config".into()));
    }
    ck.into_params(config)
}

//! Samples, synthetic worlds, balanced assembly, splitting and persistence.

mod assemble;
mod io;
mod sample;
pub mod schema;
mod streams;
mod synth;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::roadgraph::{FilterKind, GraphError};

pub use assemble::{assemble_dataset, split_dataset, Split};
pub use io::{load_samples, read_samples, save_samples, write_samples, FORMAT_NAME, FORMAT_VERSION};
pub use sample::{build_sample, build_sample_in, Sample};
pub use streams::{Accident, Calendar, DynamicStreams, MINUTES_PER_DAY, SPEED_BIN_MINUTES};
pub use synth::{generate_planted_streams, generate_synthetic_network, solar_position, GeneratorConfig, HazardModel};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("window starts before minute 0 (t = {t}, n = {n}, k = {k})")]
    WindowUnderflow { t: usize, n: usize, k: usize },
    #[error("streams end at minute {available}, window needs minute {needed}")]
    DataGap { needed: usize, available: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no usable accidents in the streams")]
    EmptyDataset,
    #[error("need at least {needed} samples to split, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported dataset version {0}")]
    UnsupportedVersion(u64),
    #[error("streams were generated for a different road network")]
    NetworkMismatch,
    #[error("invalid streams: {0}")]
    InvalidStreams(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Window shape and preprocessing for one dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetParams {
    /// Slices per sample (n).
    pub seq_num: usize,
    /// Minutes between slices and label look-ahead (k).
    pub interval: usize,
    /// Hop radius of the extracted subgraph (K).
    pub khop: usize,
    pub filter: FilterKind,
    /// Keep at most this many positives (chosen at random); negatives match.
    pub max_positives: Option<usize>,
}

impl Default for DatasetParams {
    fn default() -> Self {
        Self {
            seq_num: 3,
            interval: 5,
            khop: 2,
            filter: FilterKind::DistLap,
            max_positives: None,
        }
    }
}

impl DatasetParams {
    pub fn validate(&self) -> Result<(), DataError> {
        if self.seq_num < 1 || self.interval < 1 || self.khop < 1 {
            return Err(DataError::InvalidParams(format!(
                "seq_num, interval and khop must be >= 1 (got n = {}, k = {}, K = {})",
                self.seq_num, self.interval, self.khop
            )));
        }
        if self.max_positives == Some(0) {
            return Err(DataError::InvalidParams("max_positives must be >= 1".into()));
        }
        Ok(())
    }
}

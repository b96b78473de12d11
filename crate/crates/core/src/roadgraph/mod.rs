//! Road network graph and the preprocessing that turns a K-hop neighbourhood
//! into the propagation matrix consumed by the GCN layers.

mod distance;
mod filter;
mod khop;
mod network;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numcore::Tensor;

pub use distance::{adjacency_matrix, distance_weight_matrix, edge_length, floyd_warshall, subgraph_distances};
pub use filter::{gcn_filter, normalized_laplacian};
pub use khop::{khop_indices, khop_subgraph};
pub use network::{Road, RoadId, RoadNetwork, LANES_RANGE, POI_KINDS, POI_MAX, SPEED_LIMIT_RANGE};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("unknown road {0}")]
    UnknownRoad(RoadId),
    #[error("duplicate road id {0}")]
    DuplicateRoad(RoadId),
    #[error("self-loop on road {0}")]
    SelfLoop(RoadId),
    #[error("road {road}: {field} = {value} is out of range")]
    InvalidAttribute {
        road: RoadId,
        field: &'static str,
        value: f64,
    },
    #[error("hop radius must be >= 1, got {0}")]
    InvalidHop(usize),
    #[error("edge ({u}, {v}) has invalid length {length}")]
    NegativeLength { u: usize, v: usize, length: f64 },
    #[error("node {node} out of range for {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("matrix is {0}x{1}, expected square")]
    NotSquare(usize, usize),
    #[error("row {row} has invalid weight {value}")]
    InvalidWeight { row: usize, value: f64 },
    #[error("row {row} has zero degree")]
    DegenerateGraph { row: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("network json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Which weighted adjacency is built and which normalization is applied to it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterKind {
    AdjGcn,
    AdjLap,
    DistGcn,
    #[default]
    DistLap,
}

impl FilterKind {
    pub const ALL: [FilterKind; 4] = [Self::AdjGcn, Self::AdjLap, Self::DistGcn, Self::DistLap];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::AdjGcn => "adj-gcn",
            Self::AdjLap => "adj-lap",
            Self::DistGcn => "dist-gcn",
            Self::DistLap => "dist-lap",
        }
    }

    /// Row label used in the preprocessing comparison table.
    pub fn label(self) -> &'static str {
        match self {
            Self::AdjGcn => "Adjacent Matrix + GCN Filter",
            Self::AdjLap => "Adjacent Matrix + Normalized Laplacian Filter",
            Self::DistGcn => "Distance Matrix + GCN Filter",
            Self::DistLap => "Distance Matrix + Normalized Laplacian Filter",
        }
    }

    pub fn uses_distance(self) -> bool {
        matches!(self, Self::DistGcn | Self::DistLap)
    }

    pub fn uses_laplacian(self) -> bool {
        matches!(self, Self::AdjLap | Self::DistLap)
    }

    /// Applies the selected normalization to a weight matrix.
    pub fn apply(self, weights: &Tensor) -> Result<Tensor, GraphError> {
        if self.uses_laplacian() {
            normalized_laplacian(weights)
        } else {
            gcn_filter(weights)
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FilterKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown filter '{s}' (expected adj-gcn, adj-lap, dist-gcn or dist-lap)"))
    }
}

/// K-hop neighbourhood of one road with its propagation matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Subgraph {
    /// Center first, then by hop and id.
    pub nodes: Vec<RoadId>,
    pub center_index: usize,
    /// Normalized propagation matrix (the Laplacian for `*-lap` kinds).
    pub laplacian: Tensor,
    /// Raw Floyd-Warshall distances in metres, `INFINITY` when unreachable.
    pub distances: Tensor,
}

pub fn build_subgraph(
    net: &RoadNetwork,
    center: RoadId,
    khop: usize,
    kind: FilterKind,
) -> Result<Subgraph, GraphError> {
    if khop == 0 {
        return Err(GraphError::InvalidHop(khop));
    }
    let c = net.index_of(center)?;
    let indices: Vec<usize> = khop_indices(net, c, khop).into_iter().map(|(i, _)| i).collect();
    let distances = subgraph_distances(net, &indices)?;
    let weights = if kind.uses_distance() {
        distance_weight_matrix(&distances)
    } else {
        adjacency_matrix(net, &indices)
    };
    Ok(Subgraph {
        nodes: indices.iter().map(|&i| net.road(i).id).collect(),
        center_index: 0,
        laplacian: kind.apply(&weights)?,
        distances,
    })
}

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::GraphError;

pub const POI_KINDS: usize = 10;

pub const LANES_RANGE: (u8, u8) = (1, 7);
pub const SPEED_LIMIT_RANGE: (f64, f64) = (10.0, 110.0);
pub const POI_MAX: u8 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RoadId(pub u32);

impl fmt::Display for RoadId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One road segment. Roads are the graph's nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Road {
    pub id: RoadId,
    pub lanes: u8,
    /// km/h
    pub speed_limit: f64,
    pub length_m: f64,
    pub bump: bool,
    pub camera: bool,
    /// Counts of golf, sales, gym, mail, food, bakery, food_center,
    /// restaurant, pharm, hospital, each capped at 10.
    pub poi: [u8; POI_KINDS],
    /// Driving direction, degrees clockwise from north in `[0, 360)`.
    pub heading_deg: f64,
}

impl Road {
    fn validate(&self) -> Result<(), GraphError> {
        let bad = |field: &'static str, value: f64| GraphError::InvalidAttribute {
            road: self.id,
            field,
            value,
        };
        if !(LANES_RANGE.0..=LANES_RANGE.1).contains(&self.lanes) {
            return Err(bad("lanes", self.lanes.into()));
        }
        if !(SPEED_LIMIT_RANGE.0..=SPEED_LIMIT_RANGE.1).contains(&self.speed_limit) {
            return Err(bad("speed_limit", self.speed_limit));
        }
        if !(self.length_m.is_finite() && self.length_m > 0.0) {
            return Err(bad("length_m", self.length_m));
        }
        if let Some(p) = self.poi.iter().find(|p| **p > POI_MAX) {
            return Err(bad("poi", (*p).into()));
        }
        if !(0.0..360.0).contains(&self.heading_deg) {
            return Err(bad("heading_deg", self.heading_deg));
        }
        Ok(())
    }
}

/// On-disk form: `{"roads": [...], "edges": [[id, id], ...]}`.
#[derive(Debug, Serialize, Deserialize)]
struct NetworkDoc {
    roads: Vec<Road>,
    edges: Vec<[RoadId; 2]>,
}

/// Undirected road graph; two roads are adjacent when they share an intersection.
#[derive(Clone, Debug)]
pub struct RoadNetwork {
    roads: Vec<Road>,
    index: HashMap<RoadId, usize>,
    /// Neighbour indices, sorted by road id.
    adjacency: Vec<Vec<usize>>,
}

impl PartialEq for RoadNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.roads == other.roads && self.adjacency == other.adjacency
    }
}

impl RoadNetwork {
    /// Validates attributes and edges. Duplicate edges collapse into one.
    pub fn new(roads: Vec<Road>, edges: &[(RoadId, RoadId)]) -> Result<Self, GraphError> {
        let mut index = HashMap::with_capacity(roads.len());
        for (i, road) in roads.iter().enumerate() {
            road.validate()?;
            if index.insert(road.id, i).is_some() {
                return Err(GraphError::DuplicateRoad(road.id));
            }
        }
        let mut adjacency = vec![Vec::new(); roads.len()];
        for &(a, b) in edges {
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            let ia = *index.get(&a).ok_or(GraphError::UnknownRoad(a))?;
            let ib = *index.get(&b).ok_or(GraphError::UnknownRoad(b))?;
            adjacency[ia].push(ib);
            adjacency[ib].push(ia);
        }
        for list in &mut adjacency {
            list.sort_by_key(|&j| roads[j].id);
            list.dedup();
        }
        Ok(Self {
            roads,
            index,
            adjacency,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let doc: NetworkDoc = serde_json::from_str(text)?;
        let edges: Vec<_> = doc.edges.iter().map(|e| (e[0], e[1])).collect();
        Self::new(doc.roads, &edges)
    }

    pub fn to_json(&self) -> String {
        let doc = NetworkDoc {
            roads: self.roads.clone(),
            edges: self.edges().into_iter().map(|(a, b)| [a, b]).collect(),
        };
        serde_json::to_string(&doc).expect("network serializes")
    }

    pub fn load(path: &Path) -> Result<Self, GraphError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), GraphError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.roads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roads.is_empty()
    }

    pub fn roads(&self) -> &[Road] {
        &self.roads
    }

    pub fn road(&self, idx: usize) -> &Road {
        &self.roads[idx]
    }

    pub fn index_of(&self, id: RoadId) -> Result<usize, GraphError> {
        self.index.get(&id).copied().ok_or(GraphError::UnknownRoad(id))
    }

    pub fn neighbors(&self, idx: usize) -> &[usize] {
        &self.adjacency[idx]
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].contains(&b)
    }

    /// Each undirected edge once, as `(smaller id, larger id)`, sorted.
    pub fn edges(&self) -> Vec<(RoadId, RoadId)> {
        let mut out = Vec::new();
        for (i, list) in self.adjacency.iter().enumerate() {
            for &j in list {
                let (a, b) = (self.roads[i].id, self.roads[j].id);
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out.sort();
        out
    }

    pub fn is_connected(&self) -> bool {
        if self.roads.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.roads.len()];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.roads.len()
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn road(id: u32, length_m: f64) -> Road {
        Road {
            id: RoadId(id),
            lanes: 2,
            speed_limit: 50.0,
            length_m,
            bump: false,
            camera: true,
            poi: [0; POI_KINDS],
            heading_deg: 90.0,
        }
    }

    #[test]
    fn adjacency_is_symmetric_and_sorted() {
        let roads = vec![road(30, 100.0), road(10, 100.0), road(20, 100.0)];
        let ids = |a, b| (RoadId(a), RoadId(b));
        let net = RoadNetwork::new(roads, &[ids(30, 10), ids(10, 20), ids(20, 10)]).unwrap();
        let i10 = net.index_of(RoadId(10)).unwrap();
        let nbr: Vec<_> = net.neighbors(i10).iter().map(|&j| net.road(j).id).collect();
        assert_eq!(nbr, vec![RoadId(20), RoadId(30)]);
        assert_eq!(net.edges(), vec![ids(10, 20), ids(10, 30)]);
        assert!(net.is_connected());
    }

    #[test]
    fn rejects_bad_inputs() {
        let r = || vec![road(1, 10.0), road(2, 10.0)];
        assert!(matches!(
            RoadNetwork::new(r(), &[(RoadId(1), RoadId(1))]),
            Err(GraphError::SelfLoop(_))
        ));
        assert!(matches!(
            RoadNetwork::new(r(), &[(RoadId(1), RoadId(3))]),
            Err(GraphError::UnknownRoad(RoadId(3)))
        ));
        assert!(matches!(
            RoadNetwork::new(vec![road(1, 1.0), road(1, 2.0)], &[]),
            Err(GraphError::DuplicateRoad(_))
        ));
        let mut bad = road(5, 10.0);
        bad.lanes = 8;
        assert!(RoadNetwork::new(vec![bad], &[]).is_err());
        let mut bad = road(5, 10.0);
        bad.poi[3] = 11;
        assert!(RoadNetwork::new(vec![bad], &[]).is_err());
        assert!(RoadNetwork::new(vec![road(5, 0.0)], &[]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let net = RoadNetwork::new(
            vec![road(1, 12.5), road(2, 300.25), road(3, 9000.0)],
            &[(RoadId(2), RoadId(1)), (RoadId(2), RoadId(3))],
        )
        .unwrap();
        let text = net.to_json();
        assert!(text.contains("\"edges\":[[1,2],[2,3]]"), "{text}");
        assert_eq!(RoadNetwork::from_json(&text).unwrap(), net);
    }
}

use crate::numcore::Tensor;
use crate::roadgraph::{build_subgraph, FilterKind, RoadId, RoadNetwork, Subgraph};

use super::schema::{self, NODE_FEATURES, STATIC_FEATURES};
use super::streams::DynamicStreams;
use super::DataError;

/// One labelled window: `n` graph slices of the same subgraph at minutes
/// `t-(n-1)k, ..., t`, a static vector per slice, and whether the center road
/// has an accident in `(t, t+k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub center: RoadId,
    /// Anchor minute (time of the last slice).
    pub t: usize,
    pub n: usize,
    pub k: usize,
    pub label: u8,
    /// Center first.
    pub nodes: Vec<RoadId>,
    pub laplacian: Tensor,
    /// `nodes.len() x 18` each, ascending in time.
    pub slices: Vec<Tensor>,
    /// `1 x 21` each, aligned with `slices`.
    pub statics: Vec<Tensor>,
}

impl Sample {
    /// Minute of slice `i`.
    pub fn slice_minute(&self, i: usize) -> usize {
        self.t - (self.n - 1 - i) * self.k
    }

    pub fn target(&self) -> f64 {
        f64::from(self.label)
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Shape and range checks used after deserialization.
    pub fn validate(&self) -> Result<(), String> {
        let m = self.nodes.len();
        if m == 0 {
            return Err("sample has no nodes".into());
        }
        if self.n == 0 || self.k == 0 {
            return Err("n and k must be >= 1".into());
        }
        if self.label > 1 {
            return Err(format!("label must be 0 or 1, got {}", self.label));
        }
        if (self.n - 1).checked_mul(self.k).is_none_or(|w| w > self.t) {
            return Err("window starts before minute 0".into());
        }
        if self.laplacian.shape() != (m, m) {
            return Err(format!("L is {:?}, expected {m}x{m}", self.laplacian.shape()));
        }
        if self.slices.len() != self.n || self.statics.len() != self.n {
            return Err(format!("expected {} slices and statics", self.n));
        }
        for s in &self.slices {
            if s.shape() != (m, NODE_FEATURES) {
                return Err(format!("slice is {:?}, expected {m}x{NODE_FEATURES}", s.shape()));
            }
            let focus = (0..m).filter(|&i| s.get(i, schema::COL_FOCUS) == 1.0).count();
            if focus != 1 {
                return Err(format!("slice has {focus} focus nodes"));
            }
        }
        if self.statics.iter().any(|s| s.shape() != (1, STATIC_FEATURES)) {
            return Err(format!("static vectors must be 1x{STATIC_FEATURES}"));
        }
        let in_unit = |t: &Tensor| t.data().iter().all(|v| (0.0..=1.0).contains(v));
        if !self.slices.iter().chain(&self.statics).all(in_unit) {
            return Err("feature outside [0, 1]".into());
        }
        if !self.laplacian.all_finite() {
            return Err("L has non-finite entries".into());
        }
        Ok(())
    }
}

/// Builds the sample for `center` anchored at minute `t`.
#[allow(clippy::too_many_arguments)]
pub fn build_sample(
    net: &RoadNetwork,
    streams: &DynamicStreams,
    center: RoadId,
    t: usize,
    n: usize,
    k: usize,
    khop: usize,
    filter: FilterKind,
) -> Result<Sample, DataError> {
    streams.check_matches(net)?;
    check_window(streams, t, n, k)?;
    let sg = build_subgraph(net, center, khop, filter)?;
    build_sample_in(net, streams, &sg, t, n, k)
}

fn check_window(streams: &DynamicStreams, t: usize, n: usize, k: usize) -> Result<(), DataError> {
    if n < 1 || k < 1 {
        return Err(DataError::InvalidParams(format!("n and k must be >= 1 (n = {n}, k = {k})")));
    }
    if (n - 1).checked_mul(k).is_none_or(|w| w > t) {
        return Err(DataError::WindowUnderflow { t, n, k });
    }
    let needed = t.checked_add(k).ok_or(DataError::WindowUnderflow { t, n, k })?;
    if needed >= streams.minutes {
        return Err(DataError::DataGap {
            needed,
            available: streams.minutes.saturating_sub(1),
        });
    }
    Ok(())
}

/// Like [`build_sample`] with a precomputed subgraph. The streams must
/// belong to `net`.
pub fn build_sample_in(
    net: &RoadNetwork,
    streams: &DynamicStreams,
    sg: &Subgraph,
    t: usize,
    n: usize,
    k: usize,
) -> Result<Sample, DataError> {
    check_window(streams, t, n, k)?;
    let center = sg.nodes[sg.center_index];
    let rows: Vec<usize> = sg
        .nodes
        .iter()
        .map(|id| net.index_of(*id))
        .collect::<Result<_, _>>()?;
    let minutes: Vec<usize> = (0..n).map(|i| t - (n - 1 - i) * k).collect();
    let slices = minutes
        .iter()
        .map(|&m| node_features(net, streams, &rows, sg.center_index, m))
        .collect();
    let statics = minutes.iter().map(|&m| static_features(streams, m)).collect();
    Ok(Sample {
        center,
        t,
        n,
        k,
        label: u8::from(streams.has_accident(center, t, t + k)),
        nodes: sg.nodes.clone(),
        laplacian: sg.laplacian.clone(),
        slices,
        statics,
    })
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn node_features(net: &RoadNetwork, streams: &DynamicStreams, rows: &[usize], center: usize, minute: usize) -> Tensor {
    let azimuth = streams.sun_azimuth_deg[minute];
    let mut v = Tensor::zeros(rows.len(), NODE_FEATURES);
    for (i, &r) in rows.iter().enumerate() {
        let road = net.road(r);
        let mut row = [0.0; NODE_FEATURES];
        row[0] = schema::SUN_DIFF.normalize(schema::angle_between(azimuth, road.heading_deg));
        row[1] = schema::LANES.normalize(f64::from(road.lanes));
        row[2] = schema::SPEED_LIMIT.normalize(road.speed_limit);
        row[3] = schema::LENGTH.normalize(road.length_m);
        row[4] = flag(road.bump);
        row[5] = flag(road.camera);
        for (dst, &p) in row[6..16].iter_mut().zip(&road.poi) {
            *dst = schema::POI_COUNT.normalize(f64::from(p));
        }
        row[schema::COL_TRAFFIC_SPEED] = schema::TRAFFIC_SPEED.normalize(streams.speed_at(r, minute));
        row[schema::COL_FOCUS] = flag(i == center);
        for (j, x) in row.into_iter().enumerate() {
            v.set(i, j, x);
        }
    }
    v
}

fn static_features(streams: &DynamicStreams, minute: usize) -> Tensor {
    let cal = streams.calendar(minute);
    let mut s = vec![0.0; STATIC_FEATURES];
    s[cal.day_of_week] = 1.0;
    s[7] = schema::TIME_OF_DAY.normalize(cal.minute_of_day as f64);
    s[8 + cal.season] = 1.0;
    s[12] = schema::SUN_ALTITUDE.normalize(streams.sun_altitude_deg[minute]);
    for ((dst, &w), range) in s[13..].iter_mut().zip(&streams.weather[minute]).zip(&schema::WEATHER) {
        *dst = range.normalize(w);
    }
    Tensor::row_vector(&s)
}

use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use super::schema::{self, WEATHER_DIM};
use super::DataError;
use crate::roadgraph::{RoadId, RoadNetwork};

pub const MINUTES_PER_DAY: usize = 1440;
/// Traffic speed is an average over this many minutes.
pub const SPEED_BIN_MINUTES: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Accident {
    pub minute: usize,
    pub road: RoadId,
}

/// Calendar facts for one minute of the simulated horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Calendar {
    /// Monday = 0.
    pub day_of_week: usize,
    pub minute_of_day: usize,
    /// Spring, summer, autumn, winter = 0..4.
    pub season: usize,
    pub day_of_year: u32,
}

/// Time-indexed inputs for one road network.
///
/// `speed_kmh[r]` belongs to `road_ids[r]` and holds one value per
/// [`SPEED_BIN_MINUTES`] bin. Weather and sun position are region-wide,
/// one entry per minute.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicStreams {
    pub start_date: NaiveDate,
    pub minutes: usize,
    pub road_ids: Vec<RoadId>,
    pub speed_kmh: Vec<Vec<f64>>,
    pub weather: Vec<[f64; WEATHER_DIM]>,
    pub sun_altitude_deg: Vec<f64>,
    pub sun_azimuth_deg: Vec<f64>,
    /// Sorted by minute, then road.
    pub accidents: Vec<Accident>,
}

impl DynamicStreams {
    pub fn bins(&self) -> usize {
        self.minutes.div_ceil(SPEED_BIN_MINUTES)
    }

    #[inline]
    pub fn speed_at(&self, road_row: usize, minute: usize) -> f64 {
        self.speed_kmh[road_row][minute / SPEED_BIN_MINUTES]
    }

    pub fn calendar(&self, minute: usize) -> Calendar {
        let date = self.start_date + Duration::days((minute / MINUTES_PER_DAY) as i64);
        Calendar {
            day_of_week: date.weekday().num_days_from_monday() as usize,
            minute_of_day: minute % MINUTES_PER_DAY,
            season: schema::season_of_month(date.month()),
            day_of_year: date.ordinal(),
        }
    }

    /// Accidents with `lo < minute <= hi`.
    pub fn accidents_between(&self, lo: usize, hi: usize) -> &[Accident] {
        let start = self.accidents.partition_point(|a| a.minute <= lo);
        let end = self.accidents.partition_point(|a| a.minute <= hi);
        &self.accidents[start..end.max(start)]
    }

    pub fn has_accident(&self, road: RoadId, lo: usize, hi: usize) -> bool {
        self.accidents_between(lo, hi).iter().any(|a| a.road == road)
    }

    /// Checks that the streams were produced for `net` (same roads, same order).
    pub fn check_matches(&self, net: &RoadNetwork) -> Result<(), DataError> {
        let same = self.road_ids.len() == net.len()
            && self.road_ids.iter().zip(net.roads()).all(|(a, r)| *a == r.id);
        if same {
            Ok(())
        } else {
            Err(DataError::NetworkMismatch)
        }
    }

    /// Structural checks: lengths agree, accidents sorted and in range,
    /// every value inside its schema range.
    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |what: &str| Err(DataError::InvalidStreams(what.to_string()));
        if self.weather.len() != self.minutes
            || self.sun_altitude_deg.len() != self.minutes
            || self.sun_azimuth_deg.len() != self.minutes
        {
            return bad("per-minute stream length differs from horizon");
        }
        if self.speed_kmh.len() != self.road_ids.len()
            || self.speed_kmh.iter().any(|s| s.len() != self.bins())
        {
            return bad("speed bins do not cover the horizon");
        }
        if self.accidents.windows(2).any(|w| w[0] >= w[1]) {
            return bad("accidents not strictly sorted");
        }
        if self.accidents.iter().any(|a| a.minute >= self.minutes) {
            return bad("accident outside horizon");
        }
        let inside = |r: &schema::FeatureRange, v: f64| v >= r.min && v <= r.max;
        if self
            .speed_kmh
            .iter()
            .flatten()
            .any(|v| !inside(&schema::TRAFFIC_SPEED, *v))
        {
            return bad("traffic speed out of range");
        }
        for w in &self.weather {
            if w.iter().zip(&schema::WEATHER).any(|(v, r)| !inside(r, *v)) {
                return bad("weather out of range");
            }
        }
        if self.sun_altitude_deg.iter().any(|v| !inside(&schema::SUN_ALTITUDE, *v)) {
            return bad("sun altitude out of range");
        }
        if self.sun_azimuth_deg.iter().any(|v| !(0.0..360.0).contains(v)) {
            return bad("sun azimuth out of range");
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        let streams: Self = serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?;
        streams.validate()?;
        Ok(streams)
    }

    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(&mut w, self)?;
        std::io::Write::flush(&mut w)?;
        Ok(())
    }
}

//! Synthetic road networks and dynamic streams with a planted accident process.
//!
//! Covariates are drawn first (weather, sun, per-road speeds) and the
//! accident hazard is evaluated on top of them. Each component uses its own
//! ChaCha stream, so changing hazard coefficients leaves the covariates and
//! the per-minute uniforms untouched: a larger coefficient can only add
//! accidents.

use std::f64::consts::PI;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::schema::{self, WEATHER_DIM};
use super::streams::{Accident, DynamicStreams, MINUTES_PER_DAY, SPEED_BIN_MINUTES};
use super::{DataError, DatasetParams};
use crate::numcore::sigmoid;
use crate::roadgraph::{Road, RoadId, RoadNetwork, POI_KINDS};

const STREAM_NETWORK: u64 = 1;
const STREAM_WEATHER: u64 = 2;
const STREAM_SPEED: u64 = 3;
const STREAM_ACCIDENTS: u64 = 4;

/// Fraction of grid edges the generator tries to delete.
const EDGE_DELETE_PROB: f64 = 0.2;

/// Reference speed ratio at which the speed terms vanish.
const REFERENCE_RATIO: f64 = 0.7;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Logistic accident hazard per road and minute.
///
/// `logit = logit(base_rate) + rain·rain_mm/10 + visibility·(min(1000/vis_m, 5) - 0.2)
///          + speed·(own_ratio - 0.7) + night·[sun below horizon]
///          + neighbor_speed·(0.7 - mean neighbour ratio)`
///
/// where a ratio is traffic speed over the road's speed limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HazardModel {
    /// Per-minute accident probability at reference covariates.
    pub base_rate: f64,
    pub rain: f64,
    pub visibility: f64,
    pub speed: f64,
    pub night: f64,
    pub neighbor_speed: f64,
}

impl Default for HazardModel {
    fn default() -> Self {
        Self {
            base_rate: 2.0e-5,
            rain: 1.0,
            visibility: 0.5,
            speed: 8.0,
            night: 1.5,
            neighbor_speed: 10.0,
        }
    }
}

impl HazardModel {
    /// All coefficients zero: a constant `base_rate` everywhere.
    pub fn null(base_rate: f64) -> Self {
        Self {
            base_rate,
            rain: 0.0,
            visibility: 0.0,
            speed: 0.0,
            night: 0.0,
            neighbor_speed: 0.0,
        }
    }

    fn weather_term(&self, weather: &[f64; WEATHER_DIM], sun_altitude: f64) -> f64 {
        let rain = weather[0] / 10.0;
        let vis = (1000.0 / weather[3]).min(5.0) - 0.2;
        let night = if sun_altitude <= 0.0 { 1.0 } else { 0.0 };
        self.rain * rain + self.visibility * vis + self.night * night
    }

    fn traffic_term(&self, own_ratio: f64, neighbor_ratio: Option<f64>) -> f64 {
        let nbr = neighbor_ratio.map_or(0.0, |r| REFERENCE_RATIO - r);
        self.speed * (own_ratio - REFERENCE_RATIO) + self.neighbor_speed * nbr
    }
}

/// Everything needed to regenerate a synthetic world and its dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub n_roads: usize,
    pub days: usize,
    pub start_date: NaiveDate,
    pub hazard: HazardModel,
    pub dataset: DatasetParams,
}

fn default_start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2021, 5, 3).expect("valid date")
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            n_roads: 100,
            days: 20,
            start_date: default_start_date(),
            hazard: HazardModel::default(),
            dataset: DatasetParams::default(),
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), DataError> {
        if self.n_roads < 2 {
            return Err(DataError::InvalidParams(format!("n_roads must be >= 2, got {}", self.n_roads)));
        }
        if self.days < 1 {
            return Err(DataError::InvalidParams("days must be >= 1".into()));
        }
        if !(self.hazard.base_rate > 0.0 && self.hazard.base_rate < 1.0) {
            return Err(DataError::InvalidParams(format!(
                "hazard.base_rate must be in (0, 1), got {}",
                self.hazard.base_rate
            )));
        }
        self.dataset.validate()
    }

    /// Network and streams for this configuration.
    pub fn generate_world(&self) -> Result<(RoadNetwork, DynamicStreams), DataError> {
        self.validate()?;
        let net = generate_synthetic_network(self.seed, self.n_roads)?;
        let streams = generate_planted_streams(self.seed, &net, self.days, self.start_date, &self.hazard)?;
        Ok((net, streams))
    }
}

/// Connected grid-like road graph with uniformly drawn attributes.
///
/// Roads sit on a `⌈√n⌉`-wide grid linked to their right and lower
/// neighbours; a random subset of links is then removed wherever that keeps
/// the graph connected.
pub fn generate_synthetic_network(seed: u64, n_roads: usize) -> Result<RoadNetwork, DataError> {
    if n_roads < 2 {
        return Err(DataError::InvalidParams(format!("n_roads must be >= 2, got {n_roads}")));
    }
    let mut rng = rng_for(seed, STREAM_NETWORK);
    let roads: Vec<Road> = (0..n_roads)
        .map(|i| {
            let mut poi = [0u8; POI_KINDS];
            for p in &mut poi {
                *p = rng.random_range(0..=10);
            }
            Road {
                id: RoadId(i as u32),
                lanes: rng.random_range(1..=7),
                speed_limit: 10.0 * rng.random_range(1..=11) as f64,
                length_m: rng.random_range(schema::LENGTH.min..=schema::LENGTH.max),
                bump: rng.random_bool(0.3),
                camera: rng.random_bool(0.4),
                poi,
                heading_deg: rng.random_range(0.0..360.0),
            }
        })
        .collect();

    let side = (n_roads as f64).sqrt().ceil() as usize;
    let mut edges = Vec::new();
    for i in 0..n_roads {
        let (r, c) = (i / side, i % side);
        if c + 1 < side && i + 1 < n_roads {
            edges.push((i, i + 1));
        }
        if (r + 1) * side + c < n_roads {
            edges.push((i, i + side));
        }
    }
    // A ragged last row can leave its tail linked only rightwards; that
    // is still connected through the first column.
    let mut keep = vec![true; edges.len()];
    for e in 0..edges.len() {
        if rng.random_bool(EDGE_DELETE_PROB) {
            keep[e] = false;
            if !connected(n_roads, &edges, &keep) {
                keep[e] = true;
            }
        }
    }
    let kept: Vec<(RoadId, RoadId)> = edges
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(&(a, b), _)| (RoadId(a as u32), RoadId(b as u32)))
        .collect();
    Ok(RoadNetwork::new(roads, &kept)?)
}

fn connected(n: usize, edges: &[(usize, usize)], keep: &[bool]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for (&(a, b), _) in edges.iter().zip(keep).filter(|(_, k)| **k) {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n
}

/// AR(1) process with stationary standard deviation `sigma` and correlation time `tau` steps.
struct Ar1 {
    phi: f64,
    innovation: f64,
    state: f64,
}

impl Ar1 {
    fn new(tau: f64, sigma: f64, rng: &mut ChaCha8Rng) -> Self {
        let phi = (-1.0 / tau).exp();
        let z: f64 = rng.sample(StandardNormal);
        Self {
            phi,
            innovation: sigma * (1.0 - phi * phi).sqrt(),
            state: sigma * z,
        }
    }

    fn step(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.state = self.phi * self.state + self.innovation * z;
        self.state
    }
}

/// `cos` of the annual cycle, +1 at the summer solstice.
fn annual(day_of_year: u32) -> f64 {
    (2.0 * PI * (day_of_year as f64 - 172.0) / 365.0).cos()
}

/// Sun altitude and azimuth (degrees) from a simple analytic path: the
/// altitude is a half-sine over daylight peaking at solar noon, the azimuth
/// turns uniformly through the day (north at midnight).
pub fn solar_position(day_of_year: u32, minute_of_day: usize) -> (f64, f64) {
    let season = annual(day_of_year);
    let day_len = 720.0 + 120.0 * season;
    let sunrise = 720.0 - day_len / 2.0;
    let peak = 52.0 + 24.122 * season;
    let x = (minute_of_day as f64 - sunrise) / day_len;
    let altitude = if (0.0..=1.0).contains(&x) {
        peak * (PI * x).sin()
    } else {
        0.0
    };
    let azimuth = 360.0 * minute_of_day as f64 / MINUTES_PER_DAY as f64;
    (schema::SUN_ALTITUDE.clamp(altitude), azimuth)
}

/// Weather, sun, per-road speeds and planted accidents over `days` days.
pub fn generate_planted_streams(
    seed: u64,
    net: &RoadNetwork,
    days: usize,
    start_date: NaiveDate,
    hazard: &HazardModel,
) -> Result<DynamicStreams, DataError> {
    if days < 1 {
        return Err(DataError::InvalidParams("days must be >= 1".into()));
    }
    let minutes = days * MINUTES_PER_DAY;
    let mut streams = DynamicStreams {
        start_date,
        minutes,
        road_ids: net.roads().iter().map(|r| r.id).collect(),
        speed_kmh: Vec::new(),
        weather: Vec::with_capacity(minutes),
        sun_altitude_deg: Vec::with_capacity(minutes),
        sun_azimuth_deg: Vec::with_capacity(minutes),
        accidents: Vec::new(),
    };

    let mut rng = rng_for(seed, STREAM_WEATHER);
    let mut temp_noise = Ar1::new(240.0, 2.0, &mut rng);
    let mut humid_noise = Ar1::new(180.0, 10.0, &mut rng);
    let mut rain_latent = Ar1::new(120.0, 1.0, &mut rng);
    let mut vis_noise = Ar1::new(60.0, 300.0, &mut rng);
    let mut cloud_latent = Ar1::new(240.0, 1.0, &mut rng);
    let mut ground_noise = Ar1::new(120.0, 1.5, &mut rng);
    for m in 0..minutes {
        let cal = streams.calendar(m);
        let (alt, az) = solar_position(cal.day_of_year, cal.minute_of_day);
        let daily = (2.0 * PI * (cal.minute_of_day as f64 - 540.0) / MINUTES_PER_DAY as f64).sin();
        let seasonal_mean = 12.5 + 14.0 * annual(cal.day_of_year + 28);

        let rain = (rain_latent.step(&mut rng) - 1.2).max(0.0) * 6.0;
        let wet = (rain / 5.0).min(1.0);
        let temperature = seasonal_mean + 5.0 * daily + temp_noise.step(&mut rng) - 2.0 * wet;
        let humidity = 65.0 - 15.0 * daily + humid_noise.step(&mut rng) + 25.0 * wet;
        let humidity = schema::HUMIDITY.clamp(humidity);
        let haze = ((humidity - 80.0) / 20.0).max(0.0);
        let visibility = 5000.0 * (-0.08 * rain).exp() * (1.0 - 0.5 * haze) + vis_noise.step(&mut rng);
        let dew_point = temperature - (100.0 - humidity) / 5.0;
        let cloud = (5.0 + 3.0 * cloud_latent.step(&mut rng) + 4.0 * wet).round();
        let dp = schema::DEW_POINT.clamp(dew_point);
        let vapor = 6.112 * (17.67 * dp / (dp + 243.5)).exp();
        let ground = temperature + 8.0 * alt / schema::SUN_ALTITUDE.max + ground_noise.step(&mut rng);

        let raw = [rain, temperature, humidity, visibility, dew_point, cloud, vapor, ground];
        let mut w = [0.0; WEATHER_DIM];
        for ((dst, v), range) in w.iter_mut().zip(raw).zip(&schema::WEATHER) {
            *dst = range.clamp(v);
        }
        streams.weather.push(w);
        streams.sun_altitude_deg.push(alt);
        streams.sun_azimuth_deg.push(az);
    }

    // Speed ratio (speed / limit) per road and 5-minute bin.
    let bins = streams.bins();
    let mut rng = rng_for(seed, STREAM_SPEED);
    let mut ratios = vec![vec![0.0; bins]; net.len()];
    for ratio in ratios.iter_mut() {
        let base: f64 = rng.random_range(0.55..0.85);
        let mut noise = Ar1::new(10.0, 0.2, &mut rng);
        for (b, slot) in ratio.iter_mut().enumerate() {
            let m = b * SPEED_BIN_MINUTES;
            let cal = streams.calendar(m);
            let t = cal.minute_of_day as f64;
            let rush = if cal.day_of_week < 5 {
                let bump = |centre: f64| (-((t - centre) / 60.0).powi(2)).exp();
                0.25 * (bump(480.0) + bump(1080.0))
            } else {
                0.0
            };
            let wet = (streams.weather[m][0] / 5.0).min(1.0);
            *slot = (base - rush - 0.1 * wet + noise.step(&mut rng)).clamp(0.05, 1.0);
        }
    }
    streams.speed_kmh = ratios
        .iter()
        .zip(net.roads())
        .map(|(ratio, road)| {
            ratio
                .iter()
                .map(|r| schema::TRAFFIC_SPEED.clamp(r * road.speed_limit))
                .collect()
        })
        .collect();

    // Per-road, per-bin traffic contribution to the logit.
    let traffic: Vec<Vec<f64>> = (0..net.len())
        .map(|r| {
            let nbrs = net.neighbors(r);
            (0..bins)
                .map(|b| {
                    let nbr_mean = (!nbrs.is_empty())
                        .then(|| nbrs.iter().map(|&j| ratios[j][b]).sum::<f64>() / nbrs.len() as f64);
                    hazard.traffic_term(ratios[r][b], nbr_mean)
                })
                .collect()
        })
        .collect();

    let base_logit = (hazard.base_rate / (1.0 - hazard.base_rate)).ln();
    let mut rng = rng_for(seed, STREAM_ACCIDENTS);
    for m in 0..minutes {
        let w = base_logit + hazard.weather_term(&streams.weather[m], streams.sun_altitude_deg[m]);
        let b = m / SPEED_BIN_MINUTES;
        for (r, road) in net.roads().iter().enumerate() {
            let u: f64 = rng.random();
            if u < sigmoid(w + traffic[r][b]) {
                streams.accidents.push(Accident { minute: m, road: road.id });
            }
        }
    }
    Ok(streams)
}

//! Feature layout and the fixed value ranges used for min-max scaling.

/// Closed value range of a raw feature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureRange {
    pub min: f64,
    pub max: f64,
}

impl FeatureRange {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn clamp(&self, value: f64) -> f64 {
        value.clamp(self.min, self.max)
    }

    /// Clamps into the range, then scales to `[0, 1]`.
    pub fn normalize(&self, value: f64) -> f64 {
        debug_assert!(self.min < self.max);
        (self.clamp(value) - self.min) / (self.max - self.min)
    }
}

pub const SUN_DIFF: FeatureRange = FeatureRange::new(0.0, 180.0);
pub const LANES: FeatureRange = FeatureRange::new(1.0, 7.0);
pub const SPEED_LIMIT: FeatureRange = FeatureRange::new(10.0, 110.0);
pub const LENGTH: FeatureRange = FeatureRange::new(12.6924, 9101.8543);
pub const POI_COUNT: FeatureRange = FeatureRange::new(0.0, 10.0);
pub const TRAFFIC_SPEED: FeatureRange = FeatureRange::new(0.0, 110.0);
pub const TIME_OF_DAY: FeatureRange = FeatureRange::new(0.0, 1439.0);
pub const SUN_ALTITUDE: FeatureRange = FeatureRange::new(0.0, 76.122);

pub const RAIN: FeatureRange = FeatureRange::new(0.0, 64.7);
pub const TEMPERATURE: FeatureRange = FeatureRange::new(-18.5, 36.3);
pub const HUMIDITY: FeatureRange = FeatureRange::new(11.0, 100.0);
pub const VISIBILITY: FeatureRange = FeatureRange::new(33.0, 5000.0);
pub const DEW_POINT: FeatureRange = FeatureRange::new(-27.0, 26.4);
pub const CLOUD: FeatureRange = FeatureRange::new(0.0, 10.0);
pub const VAPOR_PRESSURE: FeatureRange = FeatureRange::new(0.7, 34.4);
pub const GROUND_TEMP: FeatureRange = FeatureRange::new(-12.7, 58.7);

pub const WEATHER_DIM: usize = 8;

/// Weather vector order: rain, temperature, humidity, visibility,
/// dew_point, cloud, vapor_pressure, ground_temp.
pub const WEATHER: [FeatureRange; WEATHER_DIM] = [
    RAIN,
    TEMPERATURE,
    HUMIDITY,
    VISIBILITY,
    DEW_POINT,
    CLOUD,
    VAPOR_PRESSURE,
    GROUND_TEMP,
];

pub const WEATHER_NAMES: [&str; WEATHER_DIM] = [
    "rain",
    "temperature",
    "humidity",
    "visibility",
    "dew_point",
    "cloud",
    "vapor_pressure",
    "ground_temp",
];

pub const NODE_FEATURES: usize = 18;
pub const STATIC_FEATURES: usize = 21;

/// Column order of a node-feature row.
pub const NODE_FEATURE_NAMES: [&str; NODE_FEATURES] = [
    "sun_diff",
    "lanes",
    "speed_limit",
    "length",
    "bump",
    "camera",
    "poi_golf",
    "poi_sales",
    "poi_gym",
    "poi_mail",
    "poi_food",
    "poi_bakery",
    "poi_food_center",
    "poi_restaurant",
    "poi_pharm",
    "poi_hospital",
    "traffic_speed",
    "focus",
];

pub const COL_TRAFFIC_SPEED: usize = 16;
pub const COL_FOCUS: usize = 17;

/// Column order of a static vector.
pub const STATIC_FEATURE_NAMES: [&str; STATIC_FEATURES] = [
    "dow_mon",
    "dow_tue",
    "dow_wed",
    "dow_thu",
    "dow_fri",
    "dow_sat",
    "dow_sun",
    "time_of_day",
    "season_spring",
    "season_summer",
    "season_autumn",
    "season_winter",
    "sun_altitude",
    "rain",
    "temperature",
    "humidity",
    "visibility",
    "dew_point",
    "cloud",
    "vapor_pressure",
    "ground_temp",
];

/// Smallest angle between two compass bearings, in `[0, 180]`.
pub fn angle_between(a_deg: f64, b_deg: f64) -> f64 {
    let d = (a_deg - b_deg).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Season index for a calendar month (1-12): spring, summer, autumn, winter.
pub fn season_of_month(month: u32) -> usize {
    match month {
        3..=5 => 0,
        6..=8 => 1,
        9..=11 => 2,
        _ => 3,
    }
}

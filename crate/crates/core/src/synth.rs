//! Seeded synthetic corpus generator emitting the ingest line schema.
//!
//! Each user gets a home point drawn inside one of the configured region
//! boxes and posts from a disc around it whose radius follows the
//! configured schedule. Generation is reproducible: the stream is ChaCha8
//! keyed from the scenario seed (via the standard SplitMix64 expansion of
//! `seed_from_u64`), with one independent stream per user (stream id =
//! user index + 1). Users may generate in parallel; blocks are joined in
//! user order, so output bytes depend only on the seed.

use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dates::DateRange;
use crate::par::Executor;

/// Kilometers per degree of latitude on the mean-radius sphere.
const KM_PER_DEG: f64 = crate::geodesy::EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("no radius schedule entry covers {0}")]
    UncoveredDate(NaiveDate),
}

/// A rectangular home area carrying the region tags its events get.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionBox {
    pub country: String,
    #[serde(default)]
    pub admin1: Option<String>,
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

/// Travel radius in force over an inclusive date range.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RadiusSpan {
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub radius_km: f64,
}

/// Uniform integer range for the number of posts on a posting day.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PostsPerDay {
    pub min: u32,
    pub max: u32,
}

fn default_source() -> String {
    "synthgen".to_string()
}

/// Scenario parameters. Loadable from TOML with these exact key names.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub n_users: u32,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub regions: Vec<RegionBox>,
    pub posts_per_day: PostsPerDay,
    pub radius_schedule: Vec<RadiusSpan>,
    /// Probability that a user posts at all on a given day.
    pub post_probability: f64,
    #[serde(default = "default_source")]
    pub source: String,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let config: ScenarioConfig =
            toml::from_str(text).map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fail = |msg: String| Err(ScenarioError::Invalid(msg));
        if self.start_date > self.end_date {
            return fail("start_date is after end_date".to_string());
        }
        if self.regions.is_empty() {
            return fail("at least one region box is required".to_string());
        }
        for b in &self.regions {
            if !(b.lat_min <= b.lat_max && b.lon_min <= b.lon_max) {
                return fail(format!("region box for {} is inverted", b.country));
            }
            if !((-90.0..=90.0).contains(&b.lat_min)
                && (-90.0..=90.0).contains(&b.lat_max)
                && (-180.0..=180.0).contains(&b.lon_min)
                && (-180.0..=180.0).contains(&b.lon_max))
            {
                return fail(format!("region box for {} is out of range", b.country));
            }
        }
        if self.posts_per_day.min < 1 || self.posts_per_day.min > self.posts_per_day.max {
            return fail("posts_per_day must satisfy 1 <= min <= max".to_string());
        }
        if !(0.0..=1.0).contains(&self.post_probability) {
            return fail("post_probability must be within [0, 1]".to_string());
        }
        let mut prev_end: Option<NaiveDate> = None;
        for span in &self.radius_schedule {
            if span.start > span.end {
                return fail(format!("radius span {}..{} is inverted", span.start, span.end));
            }
            if !(span.radius_km.is_finite() && span.radius_km >= 0.0) {
                return fail("radius_km must be finite and >= 0".to_string());
            }
            if let Some(prev) = prev_end {
                if span.start <= prev {
                    return fail("radius_schedule spans must be ordered and disjoint".to_string());
                }
            }
            prev_end = Some(span.end);
        }
        // Every generation day must have a radius.
        for day in DateRange::new(self.start_date, self.end_date).days() {
            self.radius_for(day)?;
        }
        Ok(())
    }

    fn radius_for(&self, day: NaiveDate) -> Result<f64, ScenarioError> {
        self.radius_schedule
            .iter()
            .find(|s| s.start <= day && day <= s.end)
            .map(|s| s.radius_km)
            .ok_or(ScenarioError::UncoveredDate(day))
    }
}

#[derive(Serialize)]
struct OutEvent<'a> {
    user_id: &'a str,
    ts: String,
    lat: f64,
    lon: f64,
    country: &'a str,
    admin1: Option<&'a str>,
    source: &'a str,
    precision: &'a str,
}

fn user_lines(config: &ScenarioConfig, user_index: u32) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(user_index as u64 + 1);

    let region = &config.regions[rng.random_range(0..config.regions.len())];
    let home_lat = region.lat_min + rng.random::<f64>() * (region.lat_max - region.lat_min);
    let home_lon = region.lon_min + rng.random::<f64>() * (region.lon_max - region.lon_min);
    let user_id = format!("u{user_index:06}");

    let mut out = String::new();
    for day in DateRange::new(config.start_date, config.end_date).days() {
        if rng.random::<f64>() >= config.post_probability {
            continue;
        }
        let radius = config.radius_for(day).expect("validated schedule");
        let posts = rng.random_range(config.posts_per_day.min..=config.posts_per_day.max);
        let mut seconds: Vec<u32> = (0..posts).map(|_| rng.random_range(0..86_400)).collect();
        seconds.sort_unstable();
        for sec in seconds {
            // Uniform in a disc on the local tangent plane; valid for the
            // few-hundred-km radii this generator is meant for.
            let r = radius * rng.random::<f64>().sqrt();
            let theta = rng.random::<f64>() * std::f64::consts::TAU;
            let lat = (home_lat + r * theta.cos() / KM_PER_DEG).clamp(-90.0, 90.0);
            let mut lon = home_lon + r * theta.sin() / (KM_PER_DEG * home_lat.to_radians().cos());
            if lon > 180.0 {
                lon -= 360.0;
            } else if lon < -180.0 {
                lon += 360.0;
            }
            let event = OutEvent {
                user_id: &user_id,
                ts: format!(
                    "{day}T{:02}:{:02}:{:02}Z",
                    sec / 3600,
                    (sec % 3600) / 60,
                    sec % 60
                ),
                lat,
                lon,
                country: &region.country,
                admin1: region.admin1.as_deref(),
                source: &config.source,
                precision: "gps",
            };
            out.push_str(&serde_json::to_string(&event).expect("event serializes"));
            out.push('\n');
        }
    }
    out
}

/// Generates the corpus as one line-delimited string. Byte-identical for a
/// fixed config regardless of the executor.
pub fn generate(config: &ScenarioConfig, exec: &Executor) -> Result<String, ScenarioError> {
    config.validate()?;
    let mut out = format!(
        "# synthetic corpus: {} users, {}..{}\n# rng: chacha8, key = splitmix64({}), stream = user index + 1\n",
        config.n_users, config.start_date, config.end_date, config.seed
    );
    let users: Vec<u32> = (0..config.n_users).collect();
    let blocks = exec.map(&users, |_, &u| user_lines(config, u));
    for block in blocks {
        out.push_str(&block);
    }
    Ok(out)
}

/// Generates and writes the corpus to a file.
pub fn generate_to_file(
    config: &ScenarioConfig,
    path: &Path,
    exec: &Executor,
) -> Result<(), crate::error::PipelineError> {
    let body = generate(config, exec).map_err(|e| {
        crate::error::ConfigError::Invalid(format!("scenario: {e}"))
    })?;
    fs::write(path, body).map_err(|source| crate::error::PipelineError::Output {
        path: path.to_path_buf(),
        source,
    })
}

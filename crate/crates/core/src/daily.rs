//! Per-user-day distances and per-region daily means.
//!
//! For each user-day track this computes the single-day distance (the
//! maximum great-circle distance from the day's first posted location to
//! any later same-day location; requires at least two posts) and the
//! cross-day distance (great-circle distance between the mean centers of
//! consecutive days, attributed to the first day; requires posts on both
//! days). Daily means are then aggregated per region.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use serde::Deserialize;
use thiserror::Error;

use crate::geodesy::{great_circle_distance, mean_center, GeoPoint};
use crate::ingest::{RegionRef, RegionTable, UserDayTrack};
use crate::par::Executor;

/// Region id used for the always-present whole-corpus aggregate.
pub const GLOBAL_REGION: &str = "GLOBAL";

/// Which regional grouping the aggregation uses besides `GLOBAL`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionLevel {
    Global,
    Country,
    Admin1,
}

impl std::str::FromStr for RegionLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "global" => Ok(RegionLevel::Global),
            "country" => Ok(RegionLevel::Country),
            "admin1" => Ok(RegionLevel::Admin1),
            other => Err(format!("unknown region level `{other}`")),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CrossDayError {
    #[error("tracks belong to different users")]
    UserMismatch,
    #[error("tracks are not consecutive days: {0} then {1}")]
    NonConsecutiveDays(NaiveDate, NaiveDate),
}

/// Distances of one user-day, with the anchors that decide region
/// membership: the day's initial location for the single-day metric and
/// the day's mean center for the cross-day metric.
#[derive(Debug, Clone, PartialEq)]
pub struct UserDayDistances {
    pub user_id: String,
    pub day: NaiveDate,
    /// Present iff the day has at least two posts.
    pub single_day_km: Option<f64>,
    /// Present iff the user also has a track on the next day.
    pub cross_day_km: Option<f64>,
    pub anchor_initial: GeoPoint,
    pub anchor_center: GeoPoint,
    /// Region tags of the initial location's own event.
    pub region_initial: RegionRef,
    /// Region tags of the event nearest the day's temporal midpoint.
    pub region_center: RegionRef,
}

/// Maximum distance from the day's first location to any later location.
/// Absent for single-post days (the user is ineligible that day).
pub fn single_day_distance(track: &UserDayTrack) -> Option<f64> {
    if track.points.len() < 2 {
        return None;
    }
    let initial = track.points[0].point;
    let max = track.points[1..]
        .iter()
        .map(|p| great_circle_distance(initial, p.point))
        .fold(0.0_f64, f64::max);
    Some(max)
}

/// Distance between the mean centers of two consecutive days of the same
/// user. The value is attributed to the first day.
pub fn cross_day_distance(
    day_track: &UserDayTrack,
    next_track: &UserDayTrack,
) -> Result<f64, CrossDayError> {
    if day_track.user_id != next_track.user_id {
        return Err(CrossDayError::UserMismatch);
    }
    if day_track.day.succ_opt() != Some(next_track.day) {
        return Err(CrossDayError::NonConsecutiveDays(
            day_track.day,
            next_track.day,
        ));
    }
    let a = track_center(day_track);
    let b = track_center(next_track);
    Ok(great_circle_distance(a, b))
}

fn track_center(track: &UserDayTrack) -> GeoPoint {
    mean_center(track.points.iter().map(|p| p.point)).expect("track points are non-empty")
}

/// Region tags for the mean-center anchor: the event closest in time to
/// the day's temporal midpoint, earlier event on ties.
fn center_region(track: &UserDayTrack, day_offset_hours: i32) -> RegionRef {
    let noon = track
        .day
        .and_hms_opt(12, 0, 0)
        .expect("noon is always valid");
    let midpoint = Utc.from_utc_datetime(&noon) - Duration::hours(day_offset_hours as i64);
    track
        .points
        .iter()
        .min_by_key(|p| {
            let dt = (p.timestamp - midpoint).num_milliseconds().abs();
            (dt, p.timestamp, p.seq)
        })
        .expect("track points are non-empty")
        .region
}

/// Computes both distances for every track. `tracks` must be sorted by
/// `(user_id, day)` as produced by the ingest grouping; consecutive-day
/// pairs are found by adjacency.
pub fn compute_user_day_distances(
    tracks: &[UserDayTrack],
    day_offset_hours: i32,
    exec: &Executor,
) -> Vec<UserDayDistances> {
    let centers = exec.map(tracks, |_, t| track_center(t));
    exec.map(tracks, |i, track| {
        let next = tracks.get(i + 1).filter(|n| {
            n.user_id == track.user_id && track.day.succ_opt() == Some(n.day)
        });
        let cross_day_km = next.map(|_| great_circle_distance(centers[i], centers[i + 1]));
        UserDayDistances {
            user_id: track.user_id.clone(),
            day: track.day,
            single_day_km: single_day_distance(track),
            cross_day_km,
            anchor_initial: track.points[0].point,
            anchor_center: centers[i],
            region_initial: track.points[0].region,
            region_center: center_region(track, day_offset_hours),
        }
    })
}

/// Per-region per-day means. A mean is present iff its count is nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyRegionMetrics {
    pub region_id: String,
    pub day: NaiveDate,
    pub mean_sd_km: Option<f64>,
    pub n_sd: u64,
    pub mean_cd_km: Option<f64>,
    pub n_cd: u64,
}

#[derive(Default)]
struct Cell {
    sum_sd: f64,
    n_sd: u64,
    sum_cd: f64,
    n_cd: u64,
}

fn level_region(level: RegionLevel, region: RegionRef, regions: &RegionTable) -> Option<String> {
    match level {
        RegionLevel::Global => None,
        RegionLevel::Country => Some(regions.label(region.country).to_string()),
        RegionLevel::Admin1 => region.admin1.map(|id| regions.label(id).to_string()),
    }
}

/// Aggregates user-day distances into per-(region, day) means. Every
/// record contributes to `GLOBAL`; at country/admin1 level it also
/// contributes to the region of its metric's anchor. Records without an
/// admin1 tag fall back to `GLOBAL` only at admin1 level.
pub fn aggregate_daily(
    records: &[UserDayDistances],
    level: RegionLevel,
    regions: &RegionTable,
) -> Vec<DailyRegionMetrics> {
    let mut cells: BTreeMap<(String, NaiveDate), Cell> = BTreeMap::new();
    for record in records {
        if let Some(d) = record.single_day_km {
            let mut add = |region_id: String| {
                let cell = cells.entry((region_id, record.day)).or_default();
                cell.sum_sd += d;
                cell.n_sd += 1;
            };
            add(GLOBAL_REGION.to_string());
            if let Some(region_id) = level_region(level, record.region_initial, regions) {
                add(region_id);
            }
        }
        if let Some(d) = record.cross_day_km {
            let mut add = |region_id: String| {
                let cell = cells.entry((region_id, record.day)).or_default();
                cell.sum_cd += d;
                cell.n_cd += 1;
            };
            add(GLOBAL_REGION.to_string());
            if let Some(region_id) = level_region(level, record.region_center, regions) {
                add(region_id);
            }
        }
    }
    cells
        .into_iter()
        .map(|((region_id, day), cell)| DailyRegionMetrics {
            region_id,
            day,
            mean_sd_km: (cell.n_sd > 0).then(|| cell.sum_sd / cell.n_sd as f64),
            n_sd: cell.n_sd,
            mean_cd_km: (cell.n_cd > 0).then(|| cell.sum_cd / cell.n_cd as f64),
            n_cd: cell.n_cd,
        })
        .collect()
}

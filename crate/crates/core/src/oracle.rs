//! Brute-force reference pipeline for verification.
//!
//! Recomputes every table straight from the definitions with naive
//! quadratic-time code that shares no computation with the main modules:
//! its own line parsing, its own great-circle formula (the spherical
//! Vincenty arctangent form instead of haversine), naive sum/n means, and
//! fine-step numeric integration (1e-3 day) instead of exact crossing
//! splits. Desk scale only: refuses corpora above [`MAX_ORACLE_EVENTS`].

use std::collections::{BTreeMap, HashSet};

use chrono::{DateTime, Datelike, Duration, Months, NaiveDate, TimeZone, Utc};
use thiserror::Error;

use crate::baseline::{BaselineTable, Metric, NmiSample, NmiSeries};
use crate::config::{RunConfig, WindowScheme};
use crate::daily::{DailyRegionMetrics, RegionLevel, GLOBAL_REGION};
use crate::pipeline::PipelineOutput;
use crate::respond::{MriReport, Segment, SmoothedSeries};

/// Ceiling for the naive recomputation.
pub const MAX_ORACLE_EVENTS: usize = 10_000;

/// Relative tolerance for distances, means, baselines, and index values.
pub const REL_TOL: f64 = 1e-9;
/// Absolute tolerance for responsiveness indices (the oracle integrates
/// numerically instead of splitting at crossings).
pub const MRI_ABS_TOL: f64 = 1e-4;

/// Integration step for the fine-grained area computation, in days.
const AREA_STEP: f64 = 1e-3;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("corpus has {events} events; the oracle is capped at {max}")]
    TooLarge { events: usize, max: usize },
}

/// Every table the oracle recomputes, in the main pipeline's data shapes.
#[derive(Debug, Clone)]
pub struct OracleTables {
    pub daily: Vec<DailyRegionMetrics>,
    pub baselines: Vec<BaselineTable>,
    pub nmi: Vec<NmiSeries>,
    pub smoothed: Vec<SmoothedSeries>,
    pub reports: Vec<MriReport>,
    pub excluded_regions: Vec<String>,
}

/// Independent great-circle distance: spherical Vincenty arctangent form,
/// accurate to a few ulps over the whole sphere.
pub fn reference_distance_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (phi1, phi2) = (lat1.to_radians(), lat2.to_radians());
    let dlambda = (lon2 - lon1).to_radians();
    let num = ((phi2.cos() * dlambda.sin()).powi(2)
        + (phi1.cos() * phi2.sin() - phi1.sin() * phi2.cos() * dlambda.cos()).powi(2))
    .sqrt();
    let den = phi1.sin() * phi2.sin() + phi1.cos() * phi2.cos() * dlambda.cos();
    crate::geodesy::EARTH_RADIUS_KM * num.atan2(den)
}

#[derive(Debug, Clone)]
struct RawPoint {
    ts: DateTime<Utc>,
    seq: u64,
    lat: f64,
    lon: f64,
    country: String,
    admin1: Option<String>,
}

fn precision_rank(p: &str) -> Option<u8> {
    match p {
        "country" => Some(0),
        "admin" => Some(1),
        "city" => Some(2),
        "gps" => Some(3),
        _ => None,
    }
}

/// Parses, validates, and filters the corpus with the oracle's own line
/// handling. Returns (user, point) pairs in input order.
fn parse_corpus(input: &str, config: &RunConfig) -> Vec<(String, RawPoint)> {
    let deny: HashSet<String> = config
        .bot_denylist
        .iter()
        .map(|s| s.to_lowercase())
        .collect();
    let min_rank = precision_rank(config.min_precision.label()).expect("known precision");
    let mut out = Vec::new();
    let mut seq = 0u64;
    for line in input.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Ok(value) = serde_json::from_str::<serde_json::Value>(line) else {
            continue;
        };
        let get_str = |k: &str| value.get(k).and_then(|v| v.as_str());
        let get_num = |k: &str| value.get(k).and_then(|v| v.as_f64());
        let (Some(user), Some(ts), Some(lat), Some(lon), Some(_country), Some(source), Some(prec)) = (
            get_str("user_id"),
            get_str("ts"),
            get_num("lat"),
            get_num("lon"),
            get_str("country"),
            get_str("source"),
            get_str("precision"),
        ) else {
            continue;
        };
        let Ok(parsed_ts) = DateTime::parse_from_rfc3339(ts) else {
            continue;
        };
        if !(lat.is_finite()
            && lon.is_finite()
            && (-90.0..=90.0).contains(&lat)
            && (-180.0..=180.0).contains(&lon))
        {
            continue;
        }
        let Some(rank) = precision_rank(prec) else {
            continue;
        };
        let this_seq = seq;
        seq += 1;
        if rank < min_rank {
            continue;
        }
        if !deny.is_empty() && deny.contains(&source.to_lowercase()) {
            continue;
        }
        out.push((
            user.to_string(),
            RawPoint {
                ts: parsed_ts.with_timezone(&Utc),
                seq: this_seq,
                lat,
                lon,
                country: get_str("country").expect("checked above").to_string(),
                admin1: value
                    .get("admin1")
                    .and_then(|v| v.as_str())
                    .map(str::to_string),
            },
        ));
    }
    out
}

struct UserDay {
    user: String,
    day: NaiveDate,
    points: Vec<RawPoint>,
}

fn group_days(points: Vec<(String, RawPoint)>, offset_hours: i32) -> Vec<UserDay> {
    let mut groups: BTreeMap<(String, NaiveDate), Vec<RawPoint>> = BTreeMap::new();
    for (user, point) in points {
        let day = (point.ts + Duration::hours(offset_hours as i64)).date_naive();
        groups.entry((user, day)).or_default().push(point);
    }
    groups
        .into_iter()
        .map(|((user, day), mut points)| {
            points.sort_by_key(|p| (p.ts, p.seq));
            UserDay { user, day, points }
        })
        .collect()
}

fn naive_center(points: &[RawPoint]) -> (f64, f64) {
    let n = points.len() as f64;
    let lat = points.iter().map(|p| p.lat).sum::<f64>() / n;
    let lon = points.iter().map(|p| p.lon).sum::<f64>() / n;
    (lat, lon)
}

fn midpoint_region(day: &UserDay, offset_hours: i32) -> (String, Option<String>) {
    let noon = day.day.and_hms_opt(12, 0, 0).expect("valid time");
    let midpoint = Utc.from_utc_datetime(&noon) - Duration::hours(offset_hours as i64);
    let mut best: Option<&RawPoint> = None;
    let mut best_key = (i64::MAX, DateTime::<Utc>::MAX_UTC, u64::MAX);
    for p in &day.points {
        let key = ((p.ts - midpoint).num_milliseconds().abs(), p.ts, p.seq);
        if key < best_key {
            best_key = key;
            best = Some(p);
        }
    }
    let p = best.expect("day has points");
    (p.country.clone(), p.admin1.clone())
}

struct NaiveRecord {
    day: NaiveDate,
    sd: Option<f64>,
    cd: Option<f64>,
    sd_region: (String, Option<String>),
    cd_region: (String, Option<String>),
}

fn region_ids(level: RegionLevel, tags: &(String, Option<String>)) -> Vec<String> {
    let mut ids = vec![GLOBAL_REGION.to_string()];
    match level {
        RegionLevel::Global => {}
        RegionLevel::Country => ids.push(tags.0.clone()),
        RegionLevel::Admin1 => {
            if let Some(admin1) = &tags.1 {
                ids.push(admin1.clone());
            }
        }
    }
    ids
}

fn weekday_of(day: NaiveDate) -> usize {
    day.weekday().num_days_from_monday() as usize
}

fn oracle_monthly_windows(start: NaiveDate, end: NaiveDate) -> Vec<(String, NaiveDate, NaiveDate)> {
    let mut windows = Vec::new();
    let mut cursor = start.with_day(1).expect("first of month");
    while cursor <= end {
        let next = cursor + Months::new(1);
        let month_end = next.pred_opt().expect("previous day");
        windows.push((
            format!("{:04}-{:02}", cursor.year(), cursor.month()),
            cursor.max(start),
            month_end.min(end),
        ));
        cursor = next;
    }
    windows
}

/// Bridge short gaps with linear interpolation, split at long gaps.
fn oracle_segments(samples: &[(NaiveDate, f64)], bridge_limit: u32) -> Vec<(NaiveDate, Vec<f64>)> {
    let mut segments: Vec<(NaiveDate, Vec<f64>)> = Vec::new();
    for &(date, value) in samples {
        match segments.last_mut() {
            Some((start, values)) => {
                let seg_end = *start + Duration::days(values.len() as i64 - 1);
                let gap = (date - seg_end).num_days() - 1;
                if gap >= 0 && gap as u64 <= bridge_limit as u64 {
                    let prev = *values.last().expect("segment non-empty");
                    for k in 1..=gap {
                        values.push(prev + (value - prev) * k as f64 / (gap + 1) as f64);
                    }
                    values.push(value);
                } else {
                    segments.push((date, vec![value]));
                }
            }
            None => segments.push((date, vec![value])),
        }
    }
    segments
}

fn oracle_smooth(values: &[f64], sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma).ceil() as i64;
    let weights: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k as f64) * (k as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    let n = values.len() as i64;
    let reflect = |mut i: i64| -> usize {
        loop {
            if i < 0 {
                i = -i - 1;
            } else if i >= n {
                i = 2 * n - 1 - i;
            } else {
                return i as usize;
            }
        }
    };
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for (j, w) in weights.iter().enumerate() {
                acc += w / total * values[reflect(i + j as i64 - radius)];
            }
            acc
        })
        .collect()
}

/// Fine-step numeric integration of `1 - value` over the window overlap.
/// Returns (reduction, excess, covered_intervals) or None without
/// coverage.
fn oracle_areas(
    segments: &[(NaiveDate, Vec<f64>)],
    win_start: NaiveDate,
    win_end: NaiveDate,
) -> Option<(f64, f64, f64)> {
    let mut reduction = 0.0;
    let mut excess = 0.0;
    let mut intervals = 0u64;
    for (seg_start, values) in segments {
        let seg_end = *seg_start + Duration::days(values.len() as i64 - 1);
        let lo = win_start.max(*seg_start);
        let hi = win_end.min(seg_end);
        if lo > hi {
            continue;
        }
        let from = (lo - *seg_start).num_days() as usize;
        let to = (hi - *seg_start).num_days() as usize;
        for k in from..to {
            intervals += 1;
            let (v0, v1) = (values[k], values[k + 1]);
            let steps = (1.0 / AREA_STEP).round() as usize;
            for s in 0..steps {
                let t = (s as f64 + 0.5) / steps as f64;
                let deviation = 1.0 - (v0 + (v1 - v0) * t);
                if deviation >= 0.0 {
                    reduction += deviation * AREA_STEP;
                } else {
                    excess += -deviation * AREA_STEP;
                }
            }
        }
    }
    if intervals == 0 {
        None
    } else {
        Some((reduction, excess, intervals as f64))
    }
}

/// Runs the full naive recomputation over an in-memory corpus.
pub fn oracle_run(input: &str, config: &RunConfig) -> Result<OracleTables, OracleError> {
    let points = parse_corpus(input, config);
    if points.len() > MAX_ORACLE_EVENTS {
        return Err(OracleError::TooLarge {
            events: points.len(),
            max: MAX_ORACLE_EVENTS,
        });
    }
    // Regions seen among kept events get a verdict even without any
    // eligible user-day, matching the pipeline's completeness rule.
    let mut seen_regions: Vec<String> = Vec::new();
    if !points.is_empty() {
        seen_regions.push(GLOBAL_REGION.to_string());
    }
    for (_, point) in &points {
        match config.region_level {
            RegionLevel::Global => {}
            RegionLevel::Country => seen_regions.push(point.country.clone()),
            RegionLevel::Admin1 => {
                if let Some(admin1) = &point.admin1 {
                    seen_regions.push(admin1.clone());
                }
            }
        }
    }
    let days = group_days(points, config.day_offset_hours);

    // Per-user-day distances, straight from the definitions.
    let mut records = Vec::new();
    for (i, day) in days.iter().enumerate() {
        let sd = if day.points.len() >= 2 {
            let p1 = &day.points[0];
            let mut max = f64::MIN;
            for m in 1..day.points.len() {
                let d = reference_distance_km(p1.lat, p1.lon, day.points[m].lat, day.points[m].lon);
                if d > max {
                    max = d;
                }
            }
            Some(max)
        } else {
            None
        };
        let cd = days.get(i + 1).and_then(|next| {
            if next.user == day.user && day.day.succ_opt() == Some(next.day) {
                let (lat_a, lon_a) = naive_center(&day.points);
                let (lat_b, lon_b) = naive_center(&next.points);
                Some(reference_distance_km(lat_a, lon_a, lat_b, lon_b))
            } else {
                None
            }
        });
        records.push(NaiveRecord {
            day: day.day,
            sd,
            cd,
            sd_region: (day.points[0].country.clone(), day.points[0].admin1.clone()),
            cd_region: midpoint_region(day, config.day_offset_hours),
        });
    }

    // Daily regional means.
    #[derive(Default)]
    struct Cell {
        sum_sd: f64,
        n_sd: u64,
        sum_cd: f64,
        n_cd: u64,
    }
    let mut cells: BTreeMap<(String, NaiveDate), Cell> = BTreeMap::new();
    for record in &records {
        if let Some(d) = record.sd {
            for id in region_ids(config.region_level, &record.sd_region) {
                let cell = cells.entry((id, record.day)).or_default();
                cell.sum_sd += d;
                cell.n_sd += 1;
            }
        }
        if let Some(d) = record.cd {
            for id in region_ids(config.region_level, &record.cd_region) {
                let cell = cells.entry((id, record.day)).or_default();
                cell.sum_cd += d;
                cell.n_cd += 1;
            }
        }
    }
    let daily: Vec<DailyRegionMetrics> = cells
        .into_iter()
        .map(|((region_id, day), cell)| DailyRegionMetrics {
            region_id,
            day,
            mean_sd_km: (cell.n_sd > 0).then(|| cell.sum_sd / cell.n_sd as f64),
            n_sd: cell.n_sd,
            mean_cd_km: (cell.n_cd > 0).then(|| cell.sum_cd / cell.n_cd as f64),
            n_cd: cell.n_cd,
        })
        .collect();

    // Baselines per (region, metric, weekday). Regions without daily rows
    // get empty tables (all weekdays unsupported).
    let mut regions: Vec<String> = daily.iter().map(|r| r.region_id.clone()).collect();
    regions.extend(seen_regions);
    regions.sort();
    regions.dedup();
    let mut baselines = Vec::new();
    for region in &regions {
        for metric in Metric::ALL {
            let mut sums = [0.0f64; 7];
            let mut counts = [0u32; 7];
            for row in &daily {
                if &row.region_id != region
                    || row.day < config.baseline_start
                    || row.day > config.baseline_end
                {
                    continue;
                }
                let (mean, n) = match metric {
                    Metric::SingleDay => (row.mean_sd_km, row.n_sd),
                    Metric::CrossDay => (row.mean_cd_km, row.n_cd),
                };
                if let Some(mean) = mean {
                    if n >= config.min_users_per_day {
                        let w = weekday_of(row.day);
                        sums[w] += mean;
                        counts[w] += 1;
                    }
                }
            }
            let mut values = [None; 7];
            for w in 0..7 {
                if counts[w] >= config.min_days_per_weekday {
                    let mean = sums[w] / counts[w] as f64;
                    if mean > 0.0 {
                        values[w] = Some(mean);
                    }
                }
            }
            baselines.push(BaselineTable {
                region_id: region.clone(),
                metric,
                values,
                support: counts,
            });
        }
    }

    let excluded_regions: Vec<String> = regions
        .iter()
        .filter(|region| {
            baselines
                .iter()
                .filter(|t| &&t.region_id == region)
                .any(|t| t.values.iter().any(Option::is_none))
        })
        .cloned()
        .collect();

    // Normalized series over the evaluation window for included regions.
    let mut nmi = Vec::new();
    let mut smoothed = Vec::new();
    let mut reports = Vec::new();
    let windows: Vec<(String, NaiveDate, NaiveDate)> = match &config.window_scheme {
        WindowScheme::Monthly => oracle_monthly_windows(config.eval_start, config.eval_end),
        WindowScheme::Custom(specs) => specs
            .iter()
            .map(|w| (w.label.clone(), w.range.start, w.range.end))
            .collect(),
    };
    for region in &regions {
        if excluded_regions.contains(region) {
            continue;
        }
        let mut per_metric: BTreeMap<&'static str, Vec<(NaiveDate, Vec<f64>)>> = BTreeMap::new();
        for metric in Metric::ALL {
            let table = baselines
                .iter()
                .find(|t| &t.region_id == region && t.metric == metric)
                .expect("baseline exists");
            let mut samples = Vec::new();
            for row in &daily {
                if &row.region_id != region
                    || row.day < config.eval_start
                    || row.day > config.eval_end
                {
                    continue;
                }
                let (mean, n) = match metric {
                    Metric::SingleDay => (row.mean_sd_km, row.n_sd),
                    Metric::CrossDay => (row.mean_cd_km, row.n_cd),
                };
                if let Some(mean) = mean {
                    let baseline = table.values[weekday_of(row.day)].expect("complete table");
                    samples.push(NmiSample {
                        date: row.day,
                        raw_nmi: mean / baseline,
                        n_users: n,
                    });
                }
            }
            samples.sort_by_key(|s| s.date);
            let raw: Vec<(NaiveDate, f64)> =
                samples.iter().map(|s| (s.date, s.raw_nmi)).collect();
            let segments = oracle_segments(&raw, config.bridge_limit);
            let smoothed_segments: Vec<(NaiveDate, Vec<f64>)> = segments
                .iter()
                .map(|(start, values)| (*start, oracle_smooth(values, config.sigma)))
                .collect();
            nmi.push(NmiSeries {
                region_id: region.clone(),
                metric,
                samples,
            });
            smoothed.push(SmoothedSeries {
                region_id: region.clone(),
                metric,
                segments: smoothed_segments
                    .iter()
                    .map(|(start, values)| Segment {
                        start: *start,
                        values: values.clone(),
                    })
                    .collect(),
            });
            per_metric.insert(metric.label(), smoothed_segments);
        }

        let mut prev: (Option<f64>, Option<f64>, Option<f64>) = (None, None, None);
        for (label, win_start, win_end) in &windows {
            let mri_of = |metric_label: &str| {
                per_metric
                    .get(metric_label)
                    .and_then(|segments| oracle_areas(segments, *win_start, *win_end))
                    .map(|(reduction, excess, perfect)| (reduction - excess) / perfect)
            };
            let mri_sd = mri_of("sd");
            let mri_cd = mri_of("cd");
            let mut u_sd = 0u64;
            let mut u_cd = 0u64;
            for row in &daily {
                if &row.region_id == region && *win_start <= row.day && row.day <= *win_end {
                    u_sd += row.n_sd;
                    u_cd += row.n_cd;
                }
            }
            if mri_sd.is_none() && mri_cd.is_none() {
                prev = (None, None, None);
                continue;
            }
            let mri_integrated = match (mri_sd, mri_cd) {
                (Some(sd), Some(cd)) => {
                    if u_sd + u_cd == 0 {
                        None
                    } else if u_cd == 0 {
                        Some(sd)
                    } else if u_sd == 0 {
                        Some(cd)
                    } else {
                        Some((sd * u_sd as f64 + cd * u_cd as f64) / (u_sd + u_cd) as f64)
                    }
                }
                (Some(sd), None) => Some(sd),
                (None, Some(cd)) => Some(cd),
                (None, None) => None,
            };
            let delta = |cur: Option<f64>, prev: Option<f64>| match (cur, prev) {
                (Some(c), Some(p)) => Some(c - p),
                _ => None,
            };
            reports.push(MriReport {
                region_id: region.clone(),
                window_label: label.clone(),
                mri_sd,
                mri_cd,
                u_sd,
                u_cd,
                mri_integrated,
                delta_prev_sd: delta(mri_sd, prev.0),
                delta_prev_cd: delta(mri_cd, prev.1),
                delta_prev_integrated: delta(mri_integrated, prev.2),
            });
            prev = (mri_sd, mri_cd, mri_integrated);
        }
    }

    Ok(OracleTables {
        daily,
        baselines,
        nmi,
        smoothed,
        reports,
        excluded_regions,
    })
}

/// Result of diffing pipeline tables against oracle tables.
#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub checks: u64,
    pub mismatches: Vec<String>,
}

impl VerifyReport {
    pub fn is_ok(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "verify: {} checks, {} mismatches\n",
            self.checks,
            self.mismatches.len()
        );
        for m in self.mismatches.iter().take(50) {
            s.push_str("  ");
            s.push_str(m);
            s.push('\n');
        }
        if self.mismatches.len() > 50 {
            s.push_str(&format!("  ... and {} more\n", self.mismatches.len() - 50));
        }
        s
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Diffs pipeline output against oracle tables at the pinned tolerances:
/// distances, means, baselines, and index values within [`REL_TOL`]
/// relative; responsiveness values within [`MRI_ABS_TOL`] absolute;
/// counts exact.
pub fn compare(pipeline: &PipelineOutput, oracle: &OracleTables) -> VerifyReport {
    let mut report = VerifyReport::default();
    let mut check = |ok: bool, msg: String| {
        report.checks += 1;
        if !ok {
            report.mismatches.push(msg);
        }
    };
    let opt_rel = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (None, None) => true,
        (Some(a), Some(b)) => rel_err(a, b) <= REL_TOL,
        _ => false,
    };
    let opt_abs = |a: Option<f64>, b: Option<f64>, tol: f64| match (a, b) {
        (None, None) => true,
        (Some(a), Some(b)) => (a - b).abs() <= tol,
        _ => false,
    };

    // Daily means.
    let daily_key = |r: &DailyRegionMetrics| (r.region_id.clone(), r.day);
    let pipeline_daily: BTreeMap<_, _> =
        pipeline.daily.iter().map(|r| (daily_key(r), r)).collect();
    let oracle_daily: BTreeMap<_, _> = oracle.daily.iter().map(|r| (daily_key(r), r)).collect();
    check(
        pipeline_daily.len() == oracle_daily.len(),
        format!(
            "daily row count: pipeline {} vs oracle {}",
            pipeline_daily.len(),
            oracle_daily.len()
        ),
    );
    for (key, o) in &oracle_daily {
        match pipeline_daily.get(key) {
            None => check(false, format!("daily row missing: {key:?}")),
            Some(p) => {
                check(
                    opt_rel(p.mean_sd_km, o.mean_sd_km) && opt_rel(p.mean_cd_km, o.mean_cd_km),
                    format!("daily means differ at {key:?}: {p:?} vs {o:?}"),
                );
                check(
                    p.n_sd == o.n_sd && p.n_cd == o.n_cd,
                    format!("daily counts differ at {key:?}"),
                );
            }
        }
    }

    // Baselines.
    let table_key = |t: &BaselineTable| (t.region_id.clone(), t.metric);
    let pipeline_tables: BTreeMap<_, _> = pipeline
        .baselines
        .iter()
        .map(|t| (table_key(t), t))
        .collect();
    for table in &oracle.baselines {
        match pipeline_tables.get(&table_key(table)) {
            None => check(false, format!("baseline table missing: {:?}", table_key(table))),
            Some(p) => {
                for w in 0..7 {
                    check(
                        opt_rel(p.values[w], table.values[w]) && p.support[w] == table.support[w],
                        format!(
                            "baseline differs: {} {} weekday {w}",
                            table.region_id,
                            table.metric.label()
                        ),
                    );
                }
            }
        }
    }

    // Exclusions.
    let pipeline_excluded: Vec<&String> =
        pipeline.exclusions.iter().map(|e| &e.region_id).collect();
    check(
        pipeline_excluded
            .iter()
            .map(|s| s.as_str())
            .eq(oracle.excluded_regions.iter().map(|s| s.as_str())),
        format!(
            "excluded regions differ: pipeline {pipeline_excluded:?} vs oracle {:?}",
            oracle.excluded_regions
        ),
    );

    // Normalized series.
    let series_key = |s: &NmiSeries| (s.region_id.clone(), s.metric);
    let pipeline_nmi: BTreeMap<_, _> = pipeline.nmi.iter().map(|s| (series_key(s), s)).collect();
    check(
        pipeline_nmi.len() == oracle.nmi.len(),
        format!(
            "normalized series count: pipeline {} vs oracle {}",
            pipeline_nmi.len(),
            oracle.nmi.len()
        ),
    );
    for o in &oracle.nmi {
        match pipeline_nmi.get(&series_key(o)) {
            None => check(false, format!("series missing: {:?}", series_key(o))),
            Some(p) => {
                check(
                    p.samples.len() == o.samples.len(),
                    format!("sample count differs for {:?}", series_key(o)),
                );
                for (ps, os) in p.samples.iter().zip(o.samples.iter()) {
                    check(
                        ps.date == os.date
                            && rel_err(ps.raw_nmi, os.raw_nmi) <= REL_TOL
                            && ps.n_users == os.n_users,
                        format!(
                            "sample differs for {:?} at {}: {} vs {}",
                            series_key(o),
                            os.date,
                            ps.raw_nmi,
                            os.raw_nmi
                        ),
                    );
                }
            }
        }
    }

    // Smoothed series.
    let smoothed_key = |s: &SmoothedSeries| (s.region_id.clone(), s.metric);
    let pipeline_smoothed: BTreeMap<_, _> = pipeline
        .smoothed
        .iter()
        .map(|s| (smoothed_key(s), s))
        .collect();
    for o in &oracle.smoothed {
        match pipeline_smoothed.get(&smoothed_key(o)) {
            None => check(false, format!("smoothed series missing: {:?}", smoothed_key(o))),
            Some(p) => {
                check(
                    p.segments.len() == o.segments.len(),
                    format!("segment count differs for {:?}", smoothed_key(o)),
                );
                for (ps, os) in p.segments.iter().zip(o.segments.iter()) {
                    check(
                        ps.start == os.start && ps.values.len() == os.values.len(),
                        format!("segment shape differs for {:?}", smoothed_key(o)),
                    );
                    for (a, b) in ps.values.iter().zip(os.values.iter()) {
                        check(
                            rel_err(*a, *b) <= REL_TOL,
                            format!(
                                "smoothed value differs for {:?} segment {}: {a} vs {b}",
                                smoothed_key(o),
                                os.start
                            ),
                        );
                    }
                }
            }
        }
    }

    // Windowed reports.
    let report_key = |r: &MriReport| (r.region_id.clone(), r.window_label.clone());
    let pipeline_reports: BTreeMap<_, _> = pipeline
        .reports
        .iter()
        .map(|r| (report_key(r), r))
        .collect();
    check(
        pipeline_reports.len() == oracle.reports.len(),
        format!(
            "report count: pipeline {} vs oracle {}",
            pipeline_reports.len(),
            oracle.reports.len()
        ),
    );
    for o in &oracle.reports {
        match pipeline_reports.get(&report_key(o)) {
            None => check(false, format!("report missing: {:?}", report_key(o))),
            Some(p) => {
                check(
                    opt_abs(p.mri_sd, o.mri_sd, MRI_ABS_TOL)
                        && opt_abs(p.mri_cd, o.mri_cd, MRI_ABS_TOL)
                        && opt_abs(p.mri_integrated, o.mri_integrated, MRI_ABS_TOL),
                    format!("responsiveness differs at {:?}: {p:?} vs {o:?}", report_key(o)),
                );
                check(
                    p.u_sd == o.u_sd && p.u_cd == o.u_cd,
                    format!("weights differ at {:?}", report_key(o)),
                );
                check(
                    opt_abs(p.delta_prev_sd, o.delta_prev_sd, 2.0 * MRI_ABS_TOL)
                        && opt_abs(p.delta_prev_cd, o.delta_prev_cd, 2.0 * MRI_ABS_TOL)
                        && opt_abs(
                            p.delta_prev_integrated,
                            o.delta_prev_integrated,
                            2.0 * MRI_ABS_TOL,
                        ),
                    format!("deltas differ at {:?}", report_key(o)),
                );
            }
        }
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PartialConfig;
    use crate::geodesy::{great_circle_distance, GeoPoint, EARTH_RADIUS_KM};

    fn config() -> RunConfig {
        PartialConfig {
            input: Some(vec!["unused".into()]),
            baseline_start: Some("2020-01-06".parse().unwrap()),
            baseline_end: Some("2020-02-02".parse().unwrap()),
            eval_start: Some("2020-02-03".parse().unwrap()),
            eval_end: Some("2020-03-01".parse().unwrap()),
            min_users_per_day: Some(1),
            min_days_per_weekday: Some(1),
            ..PartialConfig::default()
        }
        .resolve()
        .unwrap()
    }

    #[test]
    fn reference_distance_agrees_with_haversine() {
        let cases = [
            ((0.0, 0.0), (0.0, 180.0)),
            ((0.0, 0.0), (90.0, 0.0)),
            ((40.7, -74.0), (37.77, -122.42)),
            ((-33.9, 18.4), (35.68, 139.69)),
            ((10.0, 20.0), (10.0, 20.0)),
        ];
        for ((lat1, lon1), (lat2, lon2)) in cases {
            let reference = reference_distance_km(lat1, lon1, lat2, lon2);
            let main = great_circle_distance(
                GeoPoint::new(lat1, lon1).unwrap(),
                GeoPoint::new(lat2, lon2).unwrap(),
            );
            let scale = reference.abs().max(1.0);
            assert!(
                (reference - main).abs() / scale < 1e-12,
                "({lat1},{lon1})-({lat2},{lon2}): {reference} vs {main}"
            );
        }
        let antipodal = reference_distance_km(0.0, 0.0, 0.0, 180.0);
        assert!((antipodal - std::f64::consts::PI * EARTH_RADIUS_KM).abs() < 1e-9);
    }

    #[test]
    fn refuses_large_corpora() {
        let mut input = String::new();
        for i in 0..10_001 {
            input.push_str(&format!(
                r#"{{"user_id":"u{i}","ts":"2020-02-03T10:00:00Z","lat":1.0,"lon":1.0,"country":"US","admin1":null,"source":"app","precision":"gps"}}"#
            ));
            input.push('\n');
        }
        match oracle_run(&input, &config()) {
            Err(OracleError::TooLarge { events, max }) => {
                assert_eq!(events, 10_001);
                assert_eq!(max, MAX_ORACLE_EVENTS);
            }
            other => panic!("expected TooLarge, got {other:?}"),
        }
    }

    #[test]
    fn empty_corpus_gives_empty_tables() {
        let tables = oracle_run("", &config()).unwrap();
        assert!(tables.daily.is_empty());
        assert!(tables.baselines.is_empty());
        assert!(tables.nmi.is_empty());
        assert!(tables.reports.is_empty());
    }

    #[test]
    fn constant_location_user_yields_excluded_region() {
        let mut input = String::new();
        for day in crate::dates::DateRange::new(
            "2020-01-06".parse().unwrap(),
            "2020-02-16".parse().unwrap(),
        )
        .days()
        {
            for hour in [9, 17] {
                input.push_str(&format!(
                    r#"{{"user_id":"u1","ts":"{day}T{hour:02}:00:00Z","lat":40.0,"lon":-74.0,"country":"US","admin1":null,"source":"app","precision":"gps"}}"#
                ));
                input.push('\n');
            }
        }
        let tables = oracle_run(&input, &config()).unwrap();
        assert!(!tables.daily.is_empty());
        // All distances are zero, so baselines are zero-mean: excluded.
        assert_eq!(tables.excluded_regions, vec!["GLOBAL", "US"]);
        assert!(tables.nmi.is_empty());
    }
}

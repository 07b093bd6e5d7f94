//! Per-weekday baselines and normalized index series.
//!
//! A week is treated as an independent mobility cycle: over a baseline
//! window, each weekday gets its own reference distance per region and
//! metric (fourteen values per region). Daily means divided by the
//! matching weekday's baseline give the normalized series, where 1 means
//! "as in the baseline period".

use std::collections::BTreeMap;

use chrono::NaiveDate;
use thiserror::Error;

use crate::daily::DailyRegionMetrics;
use crate::dates::{weekday_index, DateRange, WEEKDAY_LABELS};

/// Which distance a table or series refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    SingleDay,
    CrossDay,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::SingleDay, Metric::CrossDay];

    /// Short label used in emitted tables: `sd` or `cd`.
    pub fn label(&self) -> &'static str {
        match self {
            Metric::SingleDay => "sd",
            Metric::CrossDay => "cd",
        }
    }

    fn mean_of(&self, row: &DailyRegionMetrics) -> Option<f64> {
        match self {
            Metric::SingleDay => row.mean_sd_km,
            Metric::CrossDay => row.mean_cd_km,
        }
    }

    fn count_of(&self, row: &DailyRegionMetrics) -> u64 {
        match self {
            Metric::SingleDay => row.n_sd,
            Metric::CrossDay => row.n_cd,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("baseline window is empty")]
    EmptyWindow,
    #[error("baseline table for region {region} metric {metric} is incomplete: missing {missing}")]
    IncompleteTable {
        region: String,
        metric: &'static str,
        missing: String,
    },
}

/// Baseline parameters: the window plus the support thresholds. A day
/// contributes only with at least `min_users_per_day` users, and a weekday
/// gets a value only from at least `min_days_per_weekday` such days.
#[derive(Debug, Clone, Copy)]
pub struct BaselineParams {
    pub window: DateRange,
    pub min_users_per_day: u64,
    pub min_days_per_weekday: u32,
}

/// Per-weekday reference distances for one (region, metric). Index 0 is
/// Monday. A weekday with insufficient support, or whose qualifying days
/// all have zero mean, has no value.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineTable {
    pub region_id: String,
    pub metric: Metric,
    pub values: [Option<f64>; 7],
    pub support: [u32; 7],
}

impl BaselineTable {
    /// Only complete tables (all seven weekdays) may normalize.
    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    pub fn missing_weekdays(&self) -> Vec<&'static str> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_none())
            .map(|(i, _)| WEEKDAY_LABELS[i])
            .collect()
    }
}

/// Builds one table per (region, metric) from the daily means inside the
/// baseline window. Regions are whatever region ids appear in `daily`.
/// Output is ordered by (region, metric).
pub fn compute_baselines(
    daily: &[DailyRegionMetrics],
    params: &BaselineParams,
) -> Result<Vec<BaselineTable>, BaselineError> {
    if params.window.is_empty() {
        return Err(BaselineError::EmptyWindow);
    }
    #[derive(Default, Clone, Copy)]
    struct Acc {
        sum: f64,
        days: u32,
    }
    let mut accs: BTreeMap<(String, Metric), [Acc; 7]> = BTreeMap::new();
    for row in daily {
        if !params.window.contains(row.day) {
            continue;
        }
        for metric in Metric::ALL {
            let Some(mean) = metric.mean_of(row) else {
                continue;
            };
            if metric.count_of(row) < params.min_users_per_day {
                continue;
            }
            let slot = &mut accs
                .entry((row.region_id.clone(), metric))
                .or_default()[weekday_index(row.day)];
            slot.sum += mean;
            slot.days += 1;
        }
    }
    Ok(accs
        .into_iter()
        .map(|((region_id, metric), weekdays)| {
            let mut values = [None; 7];
            let mut support = [0u32; 7];
            for (i, acc) in weekdays.iter().enumerate() {
                support[i] = acc.days;
                if acc.days >= params.min_days_per_weekday {
                    let mean = acc.sum / acc.days as f64;
                    // A zero baseline cannot normalize anything; treat the
                    // weekday as unsupported.
                    if mean > 0.0 {
                        values[i] = Some(mean);
                    }
                }
            }
            BaselineTable {
                region_id,
                metric,
                values,
                support,
            }
        })
        .collect())
}

/// One day of a normalized series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmiSample {
    pub date: NaiveDate,
    pub raw_nmi: f64,
    pub n_users: u64,
}

/// Date-ordered normalized index samples for one (region, metric).
/// Days without a daily mean are simply absent.
#[derive(Debug, Clone, PartialEq)]
pub struct NmiSeries {
    pub region_id: String,
    pub metric: Metric,
    pub samples: Vec<NmiSample>,
}

/// Divides each daily mean in `window` by its weekday's baseline.
/// Requires a complete table.
pub fn normalize(
    daily: &[DailyRegionMetrics],
    table: &BaselineTable,
    window: DateRange,
) -> Result<NmiSeries, BaselineError> {
    if !table.is_complete() {
        return Err(BaselineError::IncompleteTable {
            region: table.region_id.clone(),
            metric: table.metric.label(),
            missing: table.missing_weekdays().join(","),
        });
    }
    let mut samples = Vec::new();
    for row in daily {
        if row.region_id != table.region_id || !window.contains(row.day) {
            continue;
        }
        let Some(mean) = table.metric.mean_of(row) else {
            continue;
        };
        let baseline = table.values[weekday_index(row.day)].expect("table is complete");
        samples.push(NmiSample {
            date: row.day,
            raw_nmi: mean / baseline,
            n_users: table.metric.count_of(row),
        });
    }
    samples.sort_by_key(|s| s.date);
    Ok(NmiSeries {
        region_id: table.region_id.clone(),
        metric: table.metric,
        samples,
    })
}

//! Responsiveness over normalized series: Gaussian smoothing, area
//! decomposition around the index = 1 line, and windowed indices.
//!
//! The responsive index of a window is `(reduction - excess) / perfect`,
//! where `reduction` is the area between the smoothed curve and the
//! index = 1 line while the curve sits below it, `excess` the area while it
//! sits above, and `perfect` the area of a hypothetical curve pinned at 0
//! over the same covered length. The index lives in (-inf, 1]; positive
//! values mean net reduction. The two metrics' indices combine into an
//! integrated index weighted by their sample counts.

use chrono::NaiveDate;
use thiserror::Error;

use crate::baseline::{Metric, NmiSeries};
use crate::daily::DailyRegionMetrics;
use crate::dates::{DateRange, WindowSpec};

#[derive(Debug, Error, PartialEq)]
pub enum MriError {
    #[error("no segment with at least two samples intersects the window")]
    NoCoverage,
    #[error("perfect-scenario area is zero")]
    ZeroPerfectArea,
    #[error("both metric weights are zero")]
    ZeroWeights,
}

/// Smoothing parameters. `sigma` is in day units; gaps of up to
/// `bridge_limit` missing days are filled by linear interpolation before
/// filtering, longer gaps split the series into independent segments.
#[derive(Debug, Clone, Copy)]
pub struct SmoothParams {
    pub sigma: f64,
    pub bridge_limit: u32,
}

impl Default for SmoothParams {
    fn default() -> Self {
        SmoothParams {
            sigma: 2.0,
            bridge_limit: 3,
        }
    }
}

/// A run of consecutive calendar days with one value per day.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: NaiveDate,
    pub values: Vec<f64>,
}

impl Segment {
    pub fn end(&self) -> NaiveDate {
        self.start + chrono::Duration::days(self.values.len() as i64 - 1)
    }

    pub fn date_at(&self, index: usize) -> NaiveDate {
        self.start + chrono::Duration::days(index as i64)
    }
}

/// Smoothed series for one (region, metric), split into contiguous
/// segments wherever the raw series had an unbridgeable gap.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedSeries {
    pub region_id: String,
    pub metric: Metric,
    pub segments: Vec<Segment>,
}

/// Discrete Gaussian kernel truncated at radius `ceil(4 sigma)` and
/// renormalized to unit mass. Always has odd length `2r + 1`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    assert!(sigma > 0.0, "sigma must be positive");
    let radius = (4.0 * sigma).ceil() as i64;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let mass: f64 = kernel.iter().sum();
    for w in &mut kernel {
        *w /= mass;
    }
    kernel
}

/// Reflect (edge-repeating) index: ..c b a | a b c.. | c b a..
fn reflect_index(mut i: i64, n: i64) -> usize {
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

fn convolve_reflect(values: &[f64], kernel: &[f64]) -> Vec<f64> {
    let n = values.len() as i64;
    let radius = (kernel.len() / 2) as i64;
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for (j, w) in kernel.iter().enumerate() {
                let offset = j as i64 - radius;
                acc += w * values[reflect_index(i + offset, n)];
            }
            acc
        })
        .collect()
}

/// Fills gaps of up to `bridge_limit` days by linear interpolation and
/// splits at longer gaps, yielding runs of consecutive days.
fn bridge_and_split(series: &NmiSeries, bridge_limit: u32) -> Vec<Segment> {
    let mut segments = Vec::new();
    let mut current: Option<Segment> = None;
    for sample in &series.samples {
        match current.as_mut() {
            None => {
                current = Some(Segment {
                    start: sample.date,
                    values: vec![sample.raw_nmi],
                });
            }
            Some(segment) => {
                let gap = (sample.date - segment.end()).num_days() - 1;
                if gap < 0 {
                    // Dates are strictly increasing by construction.
                    unreachable!("normalized series out of order");
                } else if gap as u64 <= bridge_limit as u64 {
                    let prev = *segment.values.last().expect("segment is non-empty");
                    let steps = gap + 1;
                    for k in 1..=gap {
                        let t = k as f64 / steps as f64;
                        segment.values.push(prev + (sample.raw_nmi - prev) * t);
                    }
                    segment.values.push(sample.raw_nmi);
                } else {
                    segments.push(current.take().expect("segment exists"));
                    current = Some(Segment {
                        start: sample.date,
                        values: vec![sample.raw_nmi],
                    });
                }
            }
        }
    }
    segments.extend(current);
    segments
}

/// Smooths a normalized series with the truncated Gaussian kernel, after
/// bridging short gaps. Each segment is filtered independently with
/// reflect padding at its edges.
pub fn gaussian_smooth(series: &NmiSeries, params: &SmoothParams) -> SmoothedSeries {
    let kernel = gaussian_kernel(params.sigma);
    let segments = bridge_and_split(series, params.bridge_limit)
        .into_iter()
        .map(|segment| Segment {
            start: segment.start,
            values: convolve_reflect(&segment.values, &kernel),
        })
        .collect();
    SmoothedSeries {
        region_id: series.region_id.clone(),
        metric: series.metric,
        segments,
    }
}

/// Signed-area split of a smoothed curve against the index = 1 line over a
/// window, in day-index units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaDecomposition {
    /// Area below the line and above the curve (net mobility reduction).
    pub reduction: f64,
    /// Area above the line (mobility excess).
    pub excess: f64,
    /// Covered length: the area of a curve pinned at 0 over the same days.
    pub perfect: f64,
}

/// Trapezoid integration of `1 - value` over the window, with exact
/// splitting at crossings of value = 1. The curve is piecewise linear
/// between daily samples; `perfect` counts only covered day intervals, so
/// data gaps are not penalized.
pub fn area_decompose(
    series: &SmoothedSeries,
    window: DateRange,
) -> Result<AreaDecomposition, MriError> {
    let mut reduction = 0.0;
    let mut excess = 0.0;
    let mut perfect = 0.0;
    let mut covered = false;
    for segment in &series.segments {
        let overlap = DateRange::new(segment.start, segment.end()).clip(&window);
        if overlap.is_empty() {
            continue;
        }
        let from = (overlap.start - segment.start).num_days() as usize;
        let to = (overlap.end - segment.start).num_days() as usize;
        if to - from < 1 {
            continue; // single sample: no interval to integrate
        }
        covered = true;
        perfect += (to - from) as f64;
        for k in from..to {
            let a0 = 1.0 - segment.values[k];
            let a1 = 1.0 - segment.values[k + 1];
            if a0 * a1 < 0.0 {
                // Sign change: split the day at the crossing. The two
                // right triangles sum to the unsplit trapezoid exactly.
                let tau = a0 / (a0 - a1);
                let first = a0 * tau / 2.0;
                let second = a1 * (1.0 - tau) / 2.0;
                if first > 0.0 {
                    reduction += first;
                } else {
                    excess += -first;
                }
                if second > 0.0 {
                    reduction += second;
                } else {
                    excess += -second;
                }
            } else {
                let area = (a0 + a1) / 2.0;
                if area >= 0.0 {
                    reduction += area;
                } else {
                    excess += -area;
                }
            }
        }
    }
    if !covered {
        return Err(MriError::NoCoverage);
    }
    Ok(AreaDecomposition {
        reduction,
        excess,
        perfect,
    })
}

/// The responsive index of one decomposition: net positive response over
/// the perfect scenario. Guaranteed <= 1 because the deviation `1 - value`
/// never exceeds 1 for non-negative curves.
pub fn mri(areas: &AreaDecomposition) -> Result<f64, MriError> {
    if areas.perfect <= 0.0 {
        return Err(MriError::ZeroPerfectArea);
    }
    Ok((areas.reduction - areas.excess) / areas.perfect)
}

/// Sample-size-weighted combination of the two metrics' indices. Exact
/// when one weight is zero; otherwise the weighted mean, clamped into
/// [min, max] of the inputs to repair last-ulp rounding.
pub fn integrated_mri(mri_sd: f64, u_sd: u64, mri_cd: f64, u_cd: u64) -> Result<f64, MriError> {
    match (u_sd, u_cd) {
        (0, 0) => Err(MriError::ZeroWeights),
        (_, 0) => Ok(mri_sd),
        (0, _) => Ok(mri_cd),
        _ => {
            let value = (mri_sd * u_sd as f64 + mri_cd * u_cd as f64) / (u_sd + u_cd) as f64;
            Ok(value.clamp(mri_sd.min(mri_cd), mri_sd.max(mri_cd)))
        }
    }
}

/// One region-window report row.
#[derive(Debug, Clone, PartialEq)]
pub struct MriReport {
    pub region_id: String,
    pub window_label: String,
    pub mri_sd: Option<f64>,
    pub mri_cd: Option<f64>,
    /// User-day counts summed over the window.
    pub u_sd: u64,
    pub u_cd: u64,
    pub mri_integrated: Option<f64>,
    pub delta_prev_sd: Option<f64>,
    pub delta_prev_cd: Option<f64>,
    pub delta_prev_integrated: Option<f64>,
}

/// Windowed reports for one region. `daily_rows` are that region's daily
/// metrics (used for the window weights). Windows where neither metric has
/// coverage produce no row and are returned as flags instead.
pub fn windowed_reports(
    region_id: &str,
    smoothed_sd: Option<&SmoothedSeries>,
    smoothed_cd: Option<&SmoothedSeries>,
    daily_rows: &[DailyRegionMetrics],
    windows: &[WindowSpec],
) -> (Vec<MriReport>, Vec<String>) {
    let mut reports = Vec::new();
    let mut flags = Vec::new();
    let mut prev: (Option<f64>, Option<f64>, Option<f64>) = (None, None, None);
    for window in windows {
        let window_mri = |series: Option<&SmoothedSeries>| {
            series
                .and_then(|s| area_decompose(s, window.range).ok())
                .and_then(|areas| mri(&areas).ok())
        };
        let mri_sd = window_mri(smoothed_sd);
        let mri_cd = window_mri(smoothed_cd);
        let mut u_sd = 0u64;
        let mut u_cd = 0u64;
        for row in daily_rows {
            if row.region_id == region_id && window.range.contains(row.day) {
                u_sd += row.n_sd;
                u_cd += row.n_cd;
            }
        }
        if mri_sd.is_none() && mri_cd.is_none() {
            flags.push(format!(
                "region {region_id}: no coverage in window {}",
                window.label
            ));
            prev = (None, None, None);
            continue;
        }
        // Weight each defined metric by its window sample size; an
        // undefined metric contributes nothing.
        let mri_integrated = match (mri_sd, mri_cd) {
            (Some(sd), Some(cd)) => integrated_mri(sd, u_sd, cd, u_cd).ok(),
            (Some(sd), None) => Some(sd),
            (None, Some(cd)) => Some(cd),
            (None, None) => unreachable!(),
        };
        let delta = |cur: Option<f64>, prev: Option<f64>| match (cur, prev) {
            (Some(c), Some(p)) => Some(c - p),
            _ => None,
        };
        reports.push(MriReport {
            region_id: region_id.to_string(),
            window_label: window.label.clone(),
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
    (reports, flags)
}

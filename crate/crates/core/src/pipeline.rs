//! End-to-end orchestration: ingest, daily metrics, baselines,
//! normalization, smoothing, windowed reports, and artifact emission.
//!
//! Ingestion is a single pass over the input files with memory
//! proportional to the per-(user, day) track state. All fan-out passes are
//! order-preserving, every aggregation iterates sorted containers, and no
//! artifact embeds wall-clock data, so output bytes depend only on inputs
//! and configuration, never on the thread count.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::Path;

use crate::baseline::{
    compute_baselines, normalize, BaselineParams, BaselineTable, Metric, NmiSeries,
};
use crate::config::RunConfig;
use crate::daily::{
    aggregate_daily, compute_user_day_distances, DailyRegionMetrics, RegionLevel, GLOBAL_REGION,
};
use crate::dates::WEEKDAY_LABELS;
use crate::error::{InputError, PipelineError};
use crate::ingest::{EventFilter, EventParser, FilterTally, ParseStats, RegionTable, TrackBuilder};
use crate::par::{Executor, Parallelism};
use crate::respond::{gaussian_smooth, windowed_reports, MriReport, SmoothParams, SmoothedSeries};

/// Exclusion reason for regions whose baseline table has holes.
pub const REASON_INCOMPLETE_BASELINE: &str = "incomplete baseline";

/// A region left out of normalization and reports, with a
/// machine-readable reason and a human detail.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionExclusion {
    pub region_id: String,
    pub reason: &'static str,
    pub detail: String,
}

/// Deterministic run summary written to `summary.txt`.
#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub parse: ParseStats,
    pub filter: FilterTally,
    pub user_days: u64,
    pub sd_eligible: u64,
    pub cd_pairs: u64,
    pub antimeridian_tracks: u64,
    /// Per-region (u_sd, u_cd) totals over the evaluation window.
    pub user_day_totals: BTreeMap<String, (u64, u64)>,
    pub flags: Vec<String>,
}

/// Everything a run produces, before or after writing to disk.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub daily: Vec<DailyRegionMetrics>,
    pub baselines: Vec<BaselineTable>,
    pub nmi: Vec<NmiSeries>,
    pub smoothed: Vec<SmoothedSeries>,
    pub reports: Vec<MriReport>,
    pub exclusions: Vec<RegionExclusion>,
    pub summary: RunSummary,
}

/// Runs every stage without touching the output directory.
pub fn execute(config: &RunConfig) -> Result<PipelineOutput, PipelineError> {
    config.validate()?;
    let exec = Executor::new(Parallelism::from_threads(config.threads));

    // Single pass: parse, filter, group. Region labels of kept events are
    // remembered so that regions with no eligible user-days still get an
    // exclusion verdict instead of vanishing.
    let filter = EventFilter::new(config.bot_denylist.iter(), config.min_precision);
    let mut regions = RegionTable::new();
    let mut builder = TrackBuilder::new(config.day_offset_hours);
    let mut parse = ParseStats::default();
    let mut tally = FilterTally::default();
    let mut seen_regions: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();
    for path in &config.input {
        let file = fs::File::open(path).map_err(|source| InputError::Io {
            path: path.clone(),
            source,
        })?;
        let mut parser = EventParser::new(BufReader::new(file));
        while let Some(event) = parser.next_event()? {
            let decision = filter.check(&event);
            tally.record(decision);
            if decision.is_none() {
                seen_regions.insert(GLOBAL_REGION.to_string());
                match config.region_level {
                    RegionLevel::Global => {}
                    RegionLevel::Country => {
                        if !seen_regions.contains(&event.country) {
                            seen_regions.insert(event.country.clone());
                        }
                    }
                    RegionLevel::Admin1 => {
                        if let Some(admin1) = &event.admin1 {
                            if !seen_regions.contains(admin1) {
                                seen_regions.insert(admin1.clone());
                            }
                        }
                    }
                }
                builder.push(event, &mut regions);
            }
        }
        let stats = parser.stats();
        parse.lines += stats.lines;
        parse.comments += stats.comments;
        parse.parsed += stats.parsed;
        parse.malformed += stats.malformed;
        parse.bad_json += stats.bad_json;
        parse.bad_timestamp += stats.bad_timestamp;
        parse.bad_coordinates += stats.bad_coordinates;
        parse.bad_precision += stats.bad_precision;
    }
    let tracks = builder.finish();

    let antimeridian_tracks = tracks
        .iter()
        .filter(|t| t.straddles_antimeridian())
        .count() as u64;

    let records = compute_user_day_distances(&tracks, config.day_offset_hours, &exec);
    let daily = aggregate_daily(&records, config.region_level, &regions);

    let baseline_params = BaselineParams {
        window: config.baseline_window(),
        min_users_per_day: config.min_users_per_day,
        min_days_per_weekday: config.min_days_per_weekday,
    };
    let mut tables = compute_baselines(&daily, &baseline_params)
        .map_err(|e| crate::error::ConfigError::Invalid(e.to_string()))?;

    // Every region seen anywhere in the data needs a verdict: regions with
    // no baseline-window rows (or no eligible user-days at all) get empty
    // tables so they are excluded rather than silently dropped.
    let all_regions: Vec<String> = {
        let mut set: Vec<String> = daily.iter().map(|r| r.region_id.clone()).collect();
        set.extend(seen_regions.iter().cloned());
        set.sort();
        set.dedup();
        set
    };
    for region_id in &all_regions {
        for metric in Metric::ALL {
            if !tables
                .iter()
                .any(|t| &t.region_id == region_id && t.metric == metric)
            {
                tables.push(BaselineTable {
                    region_id: region_id.clone(),
                    metric,
                    values: [None; 7],
                    support: [0; 7],
                });
            }
        }
    }
    tables.sort_by(|a, b| (&a.region_id, a.metric).cmp(&(&b.region_id, b.metric)));

    // A region is excluded outright if either metric's table is incomplete.
    let mut exclusions = Vec::new();
    let mut included: Vec<String> = Vec::new();
    for region_id in &all_regions {
        let mut missing = Vec::new();
        for metric in Metric::ALL {
            let table = tables
                .iter()
                .find(|t| &t.region_id == region_id && t.metric == metric)
                .expect("table exists for every region");
            if !table.is_complete() {
                missing.push(format!(
                    "{} missing {}",
                    metric.label(),
                    table.missing_weekdays().join(",")
                ));
            }
        }
        if missing.is_empty() {
            included.push(region_id.clone());
        } else {
            exclusions.push(RegionExclusion {
                region_id: region_id.clone(),
                reason: REASON_INCOMPLETE_BASELINE,
                detail: missing.join("; "),
            });
        }
    }

    // Normalize and smooth per (region, metric), in region order.
    let eval = config.eval_window();
    let smooth_params = SmoothParams {
        sigma: config.sigma,
        bridge_limit: config.bridge_limit,
    };
    let per_region: Vec<(Vec<NmiSeries>, Vec<SmoothedSeries>)> =
        exec.map(&included, |_, region_id| {
            let mut series_list = Vec::new();
            let mut smoothed_list = Vec::new();
            for metric in Metric::ALL {
                let table = tables
                    .iter()
                    .find(|t| &t.region_id == region_id && t.metric == metric)
                    .expect("included region has tables");
                let series =
                    normalize(&daily, table, eval).expect("included tables are complete");
                smoothed_list.push(gaussian_smooth(&series, &smooth_params));
                series_list.push(series);
            }
            (series_list, smoothed_list)
        });
    let mut nmi = Vec::new();
    let mut smoothed = Vec::new();
    for (series_list, smoothed_list) in per_region {
        nmi.extend(series_list);
        smoothed.extend(smoothed_list);
    }

    // Windowed reports per included region.
    let windows = config.windows();
    let mut reports = Vec::new();
    let mut flags = Vec::new();
    for region_id in &included {
        let find = |metric: Metric| {
            smoothed
                .iter()
                .find(|s| &s.region_id == region_id && s.metric == metric)
        };
        let region_daily: Vec<DailyRegionMetrics> = daily
            .iter()
            .filter(|r| &r.region_id == region_id)
            .cloned()
            .collect();
        let (mut region_reports, mut region_flags) = windowed_reports(
            region_id,
            find(Metric::SingleDay),
            find(Metric::CrossDay),
            &region_daily,
            &windows,
        );
        reports.append(&mut region_reports);
        flags.append(&mut region_flags);
    }

    // Per-region user-day totals over the evaluation window (all regions,
    // excluded ones included, mirroring the published count tables).
    let mut user_day_totals: BTreeMap<String, (u64, u64)> =
        all_regions.iter().map(|r| (r.clone(), (0, 0))).collect();
    for row in &daily {
        if eval.contains(row.day) {
            let entry = user_day_totals.entry(row.region_id.clone()).or_default();
            entry.0 += row.n_sd;
            entry.1 += row.n_cd;
        }
    }

    let summary = RunSummary {
        parse,
        filter: tally,
        user_days: tracks.len() as u64,
        sd_eligible: records.iter().filter(|r| r.single_day_km.is_some()).count() as u64,
        cd_pairs: records.iter().filter(|r| r.cross_day_km.is_some()).count() as u64,
        antimeridian_tracks,
        user_day_totals,
        flags,
    };

    Ok(PipelineOutput {
        daily,
        baselines: tables,
        nmi,
        smoothed,
        reports,
        exclusions,
        summary,
    })
}

/// Runs the pipeline and writes every artifact into `config.out_dir`.
pub fn run(config: &RunConfig) -> Result<PipelineOutput, PipelineError> {
    let output = execute(config)?;
    write_artifacts(&output, config)?;
    Ok(output)
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn write_file(path: &Path, body: &str) -> Result<(), PipelineError> {
    fs::write(path, body).map_err(|source| PipelineError::Output {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes all report tables, plot series, and the run summary.
pub fn write_artifacts(output: &PipelineOutput, config: &RunConfig) -> Result<(), PipelineError> {
    let dir = &config.out_dir;
    fs::create_dir_all(dir).map_err(|source| PipelineError::Output {
        path: dir.clone(),
        source,
    })?;

    let mut daily_csv = String::from("region_id,date,mean_d_sd_km,n_sd,mean_d_cd_km,n_cd\n");
    for row in &output.daily {
        daily_csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.region_id,
            row.day,
            fmt_opt(row.mean_sd_km),
            row.n_sd,
            fmt_opt(row.mean_cd_km),
            row.n_cd
        ));
    }
    write_file(&dir.join("daily_metrics.csv"), &daily_csv)?;

    let mut baselines_csv = String::from("region_id,metric,weekday,baseline_km,support\n");
    for table in &output.baselines {
        for (i, label) in WEEKDAY_LABELS.iter().enumerate() {
            baselines_csv.push_str(&format!(
                "{},{},{},{},{}\n",
                table.region_id,
                table.metric.label(),
                label,
                fmt_opt(table.values[i]),
                table.support[i]
            ));
        }
    }
    write_file(&dir.join("baselines.csv"), &baselines_csv)?;

    let mut nmi_csv = String::from("region_id,metric,date,raw_nmi,n_users\n");
    for series in &output.nmi {
        for sample in &series.samples {
            nmi_csv.push_str(&format!(
                "{},{},{},{},{}\n",
                series.region_id,
                series.metric.label(),
                sample.date,
                sample.raw_nmi,
                sample.n_users
            ));
        }
    }
    write_file(&dir.join("nmi_series.csv"), &nmi_csv)?;

    let mut smoothed_csv = String::from("region_id,metric,date,smoothed_nmi\n");
    for series in &output.smoothed {
        for segment in &series.segments {
            for (i, value) in segment.values.iter().enumerate() {
                smoothed_csv.push_str(&format!(
                    "{},{},{},{}\n",
                    series.region_id,
                    series.metric.label(),
                    segment.date_at(i),
                    value
                ));
            }
        }
    }
    write_file(&dir.join("nmi_smoothed.csv"), &smoothed_csv)?;

    let mut report_csv = String::from(
        "region_id,window_label,mri_sd,mri_cd,u_sd,u_cd,mri_integrated,\
         delta_prev_sd,delta_prev_cd,delta_prev_integrated\n",
    );
    for report in &output.reports {
        report_csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            report.region_id,
            report.window_label,
            fmt_opt(report.mri_sd),
            fmt_opt(report.mri_cd),
            report.u_sd,
            report.u_cd,
            fmt_opt(report.mri_integrated),
            fmt_opt(report.delta_prev_sd),
            fmt_opt(report.delta_prev_cd),
            fmt_opt(report.delta_prev_integrated)
        ));
    }
    write_file(&dir.join("mri_report.csv"), &report_csv)?;

    emit_plot_data(output, config, &dir.join("plots"))?;
    write_file(&dir.join("summary.txt"), &render_summary(output))?;
    Ok(())
}

/// One plot-ready CSV per included region: raw and smoothed series for
/// both metrics plus a constant baseline column, one row per
/// evaluation-window day (gap days keep empty fields).
pub fn emit_plot_data(
    output: &PipelineOutput,
    config: &RunConfig,
    dir: &Path,
) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(|source| PipelineError::Output {
        path: dir.to_path_buf(),
        source,
    })?;
    let eval = config.eval_window();
    let mut region_ids: Vec<&String> = output.nmi.iter().map(|s| &s.region_id).collect();
    region_ids.sort();
    region_ids.dedup();
    for region_id in region_ids {
        let mut columns: BTreeMap<chrono::NaiveDate, [Option<f64>; 4]> =
            eval.days().map(|d| (d, [None; 4])).collect();
        for series in output.nmi.iter().filter(|s| &s.region_id == region_id) {
            let col = if series.metric == Metric::SingleDay { 0 } else { 2 };
            for sample in &series.samples {
                if let Some(slots) = columns.get_mut(&sample.date) {
                    slots[col] = Some(sample.raw_nmi);
                }
            }
        }
        for series in output.smoothed.iter().filter(|s| &s.region_id == region_id) {
            let col = if series.metric == Metric::SingleDay { 1 } else { 3 };
            for segment in &series.segments {
                for (i, value) in segment.values.iter().enumerate() {
                    if let Some(slots) = columns.get_mut(&segment.date_at(i)) {
                        slots[col] = Some(*value);
                    }
                }
            }
        }
        let mut csv =
            String::from("date,raw_nmi_sd,smoothed_nmi_sd,raw_nmi_cd,smoothed_nmi_cd,baseline\n");
        for (date, slots) in &columns {
            csv.push_str(&format!(
                "{},{},{},{},{},1\n",
                date,
                fmt_opt(slots[0]),
                fmt_opt(slots[1]),
                fmt_opt(slots[2]),
                fmt_opt(slots[3])
            ));
        }
        write_file(&dir.join(format!("{region_id}.csv")), &csv)?;
    }
    Ok(())
}

fn render_summary(output: &PipelineOutput) -> String {
    let mut s = String::new();
    let p = &output.summary.parse;
    let f = &output.summary.filter;
    let _ = writeln!(s, "events:");
    let _ = writeln!(
        s,
        "  lines={} parsed={} malformed={} (json={} timestamp={} coordinates={} precision={}) comments={}",
        p.lines, p.parsed, p.malformed, p.bad_json, p.bad_timestamp, p.bad_coordinates,
        p.bad_precision, p.comments
    );
    let _ = writeln!(
        s,
        "filters:\n  kept={} dropped_precision={} dropped_source={}",
        f.kept, f.dropped_precision, f.dropped_source
    );
    let _ = writeln!(
        s,
        "tracks:\n  user_days={} sd_eligible={} cd_pairs={} antimeridian_straddling={}",
        output.summary.user_days,
        output.summary.sd_eligible,
        output.summary.cd_pairs,
        output.summary.antimeridian_tracks
    );
    let _ = writeln!(s, "excluded regions: {}", output.exclusions.len());
    for e in &output.exclusions {
        let _ = writeln!(s, "  {}\t{}\t{}", e.region_id, e.reason, e.detail);
    }
    if !output.summary.flags.is_empty() {
        let _ = writeln!(s, "flags:");
        for flag in &output.summary.flags {
            let _ = writeln!(s, "  {flag}");
        }
    }
    let _ = writeln!(s, "user-day totals over evaluation window:");
    let _ = writeln!(s, "  region\tu_sd\tu_cd");
    for (region, (u_sd, u_cd)) in &output.summary.user_day_totals {
        let _ = writeln!(s, "  {region}\t{u_sd}\t{u_cd}");
    }
    s
}

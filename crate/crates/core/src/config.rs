//! Run configuration: defaults, config-file parsing, and override merging.
//!
//! Config files are flat TOML with the exact field names of
//! [`RunConfig`]; custom report windows use `[[windows]]` tables.
//! Precedence is command line > file > defaults, implemented by merging
//! [`PartialConfig`] layers.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;

use crate::daily::RegionLevel;
use crate::dates::{monthly_windows, DateRange, WindowSpec};
use crate::error::ConfigError;
use crate::ingest::Precision;

/// How report windows are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum WindowScheme {
    Monthly,
    Custom(Vec<WindowSpec>),
}

/// Fully resolved run parameters.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: Vec<PathBuf>,
    pub baseline_start: NaiveDate,
    pub baseline_end: NaiveDate,
    pub eval_start: NaiveDate,
    pub eval_end: NaiveDate,
    pub region_level: RegionLevel,
    pub sigma: f64,
    pub bridge_limit: u32,
    pub min_precision: Precision,
    /// Source labels to drop, already loaded from the denylist file.
    pub bot_denylist: Vec<String>,
    pub min_users_per_day: u64,
    pub min_days_per_weekday: u32,
    pub window_scheme: WindowScheme,
    pub out_dir: PathBuf,
    pub day_offset_hours: i32,
    pub threads: usize,
}

impl RunConfig {
    pub fn baseline_window(&self) -> DateRange {
        DateRange::new(self.baseline_start, self.baseline_end)
    }

    pub fn eval_window(&self) -> DateRange {
        DateRange::new(self.eval_start, self.eval_end)
    }

    pub fn windows(&self) -> Vec<WindowSpec> {
        match &self.window_scheme {
            WindowScheme::Monthly => monthly_windows(self.eval_window()),
            WindowScheme::Custom(windows) => windows.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: &str| Err(ConfigError::Invalid(msg.to_string()));
        if self.input.is_empty() {
            return Err(ConfigError::Missing("input"));
        }
        if self.baseline_window().is_empty() {
            return invalid("baseline window is empty (baseline_start > baseline_end)");
        }
        if self.eval_window().is_empty() {
            return invalid("evaluation window is empty (eval_start > eval_end)");
        }
        if self.baseline_start > self.eval_start {
            return invalid("baseline window must precede or equal the evaluation start");
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return invalid("sigma must be finite and positive");
        }
        if self.min_users_per_day < 1 || self.min_days_per_weekday < 1 {
            return invalid("support thresholds must be at least 1");
        }
        if let WindowScheme::Custom(windows) = &self.window_scheme {
            if windows.is_empty() {
                return invalid("custom window scheme needs at least one window");
            }
            for w in windows {
                if w.range.is_empty() {
                    return Err(ConfigError::Invalid(format!(
                        "window {} is empty",
                        w.label
                    )));
                }
            }
            for pair in windows.windows(2) {
                if pair[1].range.start <= pair[0].range.end {
                    return invalid("custom windows must be ordered and non-overlapping");
                }
            }
        }
        Ok(())
    }
}

/// One `[[windows]]` entry in a config file.
#[derive(Debug, Clone, Deserialize)]
pub struct FileWindow {
    pub label: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

/// A partially specified configuration layer. Field names are the config
/// file keys.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub input: Option<Vec<PathBuf>>,
    pub baseline_start: Option<NaiveDate>,
    pub baseline_end: Option<NaiveDate>,
    pub eval_start: Option<NaiveDate>,
    pub eval_end: Option<NaiveDate>,
    pub region_level: Option<RegionLevel>,
    pub sigma: Option<f64>,
    pub bridge_limit: Option<u32>,
    pub min_precision: Option<Precision>,
    /// Path to a file with one source label per line (`#` comments allowed).
    pub bot_denylist: Option<PathBuf>,
    pub min_users_per_day: Option<u64>,
    pub min_days_per_weekday: Option<u32>,
    /// `monthly` (default) or `custom` (requires `[[windows]]`).
    pub window_scheme: Option<String>,
    pub windows: Option<Vec<FileWindow>>,
    pub out_dir: Option<PathBuf>,
    pub day_offset_hours: Option<i32>,
    pub threads: Option<usize>,
}

impl PartialConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Overlays `self` (higher precedence) on top of `base`.
    pub fn overlaid_on(self, base: PartialConfig) -> PartialConfig {
        PartialConfig {
            input: self.input.or(base.input),
            baseline_start: self.baseline_start.or(base.baseline_start),
            baseline_end: self.baseline_end.or(base.baseline_end),
            eval_start: self.eval_start.or(base.eval_start),
            eval_end: self.eval_end.or(base.eval_end),
            region_level: self.region_level.or(base.region_level),
            sigma: self.sigma.or(base.sigma),
            bridge_limit: self.bridge_limit.or(base.bridge_limit),
            min_precision: self.min_precision.or(base.min_precision),
            bot_denylist: self.bot_denylist.or(base.bot_denylist),
            min_users_per_day: self.min_users_per_day.or(base.min_users_per_day),
            min_days_per_weekday: self.min_days_per_weekday.or(base.min_days_per_weekday),
            window_scheme: self.window_scheme.or(base.window_scheme),
            windows: self.windows.or(base.windows),
            out_dir: self.out_dir.or(base.out_dir),
            day_offset_hours: self.day_offset_hours.or(base.day_offset_hours),
            threads: self.threads.or(base.threads),
        }
    }

    /// Fills defaults, loads the denylist, and validates.
    pub fn resolve(self) -> Result<RunConfig, ConfigError> {
        let window_scheme = match self.window_scheme.as_deref() {
            None | Some("monthly") => WindowScheme::Monthly,
            Some("custom") => {
                let windows = self
                    .windows
                    .as_ref()
                    .ok_or(ConfigError::Missing("windows"))?
                    .iter()
                    .map(|w| WindowSpec {
                        label: w.label.clone(),
                        range: DateRange::new(w.start, w.end),
                    })
                    .collect();
                WindowScheme::Custom(windows)
            }
            Some(other) => {
                return Err(ConfigError::Invalid(format!(
                    "unknown window_scheme `{other}` (expected `monthly` or `custom`)"
                )))
            }
        };
        let bot_denylist = match &self.bot_denylist {
            None => Vec::new(),
            Some(path) => load_denylist(path)?,
        };
        let config = RunConfig {
            input: self.input.ok_or(ConfigError::Missing("input"))?,
            baseline_start: self
                .baseline_start
                .ok_or(ConfigError::Missing("baseline_start"))?,
            baseline_end: self
                .baseline_end
                .ok_or(ConfigError::Missing("baseline_end"))?,
            eval_start: self.eval_start.ok_or(ConfigError::Missing("eval_start"))?,
            eval_end: self.eval_end.ok_or(ConfigError::Missing("eval_end"))?,
            region_level: self.region_level.unwrap_or(RegionLevel::Country),
            sigma: self.sigma.unwrap_or(2.0),
            bridge_limit: self.bridge_limit.unwrap_or(3),
            min_precision: self.min_precision.unwrap_or(Precision::City),
            bot_denylist,
            min_users_per_day: self.min_users_per_day.unwrap_or(10),
            min_days_per_weekday: self.min_days_per_weekday.unwrap_or(2),
            window_scheme,
            out_dir: self.out_dir.unwrap_or_else(|| PathBuf::from("out")),
            day_offset_hours: self.day_offset_hours.unwrap_or(0),
            threads: self.threads.unwrap_or(1),
        };
        config.validate()?;
        Ok(config)
    }
}

fn load_denylist(path: &Path) -> Result<Vec<String>, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

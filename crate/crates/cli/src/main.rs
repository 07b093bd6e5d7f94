//! Command-line front end: `run` the full pipeline, `synth` a seeded
//! corpus, `oracle` the brute-force reference tables, and `verify` the
//! pipeline against the oracle.
//!
//! Exit codes: 0 success, 2 configuration error, 3 input/output error,
//! 4 verification mismatch.

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use mobility_core::config::{PartialConfig, RunConfig};
use mobility_core::daily::RegionLevel;
use mobility_core::error::{InputError, PipelineError};
use mobility_core::ingest::Precision;
use mobility_core::oracle;
use mobility_core::pipeline;
use mobility_core::synth::{self, ScenarioConfig};
use mobility_core::{Executor, Parallelism};

const EXIT_CONFIG: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_MISMATCH: u8 = 4;

#[derive(Parser)]
#[command(
    name = "mobility",
    version,
    about = "Mobility metrics pipeline over geotagged event files"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write report artifacts.
    Run(ConfigArgs),
    /// Generate a seeded synthetic corpus in the ingest schema.
    Synth(SynthArgs),
    /// Write the brute-force reference tables for a corpus.
    Oracle(OracleArgs),
    /// Run both pipeline and oracle and diff their tables.
    Verify(ConfigArgs),
}

/// Run-configuration flags. Precedence: flags > --config file > defaults.
#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// TOML config file with RunConfig keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input event file; repeat for several files.
    #[arg(long)]
    input: Vec<PathBuf>,
    #[arg(long)]
    baseline_start: Option<NaiveDate>,
    #[arg(long)]
    baseline_end: Option<NaiveDate>,
    #[arg(long)]
    eval_start: Option<NaiveDate>,
    #[arg(long)]
    eval_end: Option<NaiveDate>,
    /// global, country, or admin1.
    #[arg(long)]
    region_level: Option<RegionLevel>,
    /// Gaussian smoothing width in days.
    #[arg(long)]
    sigma: Option<f64>,
    /// Longest data gap (days) bridged by interpolation before smoothing.
    #[arg(long)]
    bridge_limit: Option<u32>,
    /// Coarsest precision kept: gps, city, admin, or country.
    #[arg(long)]
    min_precision: Option<Precision>,
    /// File with one bot source label per line.
    #[arg(long)]
    bot_denylist: Option<PathBuf>,
    #[arg(long)]
    min_users_per_day: Option<u64>,
    #[arg(long)]
    min_days_per_weekday: Option<u32>,
    /// monthly or custom (custom windows come from the config file).
    #[arg(long)]
    window_scheme: Option<String>,
    /// Output directory for artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Shift of the day boundary, in hours.
    #[arg(long)]
    day_offset_hours: Option<i32>,
    /// Worker threads; 1 is sequential. Output bytes do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Scenario TOML file.
    #[arg(long)]
    config: PathBuf,
    /// Output corpus path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    config: ConfigArgs,
}

impl ConfigArgs {
    fn resolve(self) -> Result<RunConfig, PipelineError> {
        let file_layer = match &self.config {
            Some(path) => PartialConfig::from_file(path)?,
            None => PartialConfig::default(),
        };
        let flag_layer = PartialConfig {
            input: if self.input.is_empty() {
                None
            } else {
                Some(self.input)
            },
            baseline_start: self.baseline_start,
            baseline_end: self.baseline_end,
            eval_start: self.eval_start,
            eval_end: self.eval_end,
            region_level: self.region_level,
            sigma: self.sigma,
            bridge_limit: self.bridge_limit,
            min_precision: self.min_precision,
            bot_denylist: self.bot_denylist,
            min_users_per_day: self.min_users_per_day,
            min_days_per_weekday: self.min_days_per_weekday,
            window_scheme: self.window_scheme,
            windows: None,
            out_dir: self.out,
            day_offset_hours: self.day_offset_hours,
            threads: self.threads,
        };
        Ok(flag_layer.overlaid_on(file_layer).resolve()?)
    }
}

fn exit_for(error: &PipelineError) -> u8 {
    match error {
        PipelineError::Config(_) => EXIT_CONFIG,
        PipelineError::Input(_) => EXIT_INPUT,
        PipelineError::Output { .. } => EXIT_INPUT,
    }
}

fn cmd_run(args: ConfigArgs) -> Result<u8, PipelineError> {
    let config = args.resolve()?;
    let output = pipeline::run(&config)?;
    println!(
        "ok: {} events kept, {} user-days, {} regions reported, {} excluded -> {}",
        output.summary.filter.kept,
        output.summary.user_days,
        output
            .reports
            .iter()
            .map(|r| &r.region_id)
            .collect::<std::collections::BTreeSet<_>>()
            .len(),
        output.exclusions.len(),
        config.out_dir.display()
    );
    Ok(0)
}

fn cmd_synth(args: SynthArgs) -> Result<u8, PipelineError> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| {
        PipelineError::Config(mobility_core::error::ConfigError::Io {
            path: args.config.clone(),
            source,
        })
    })?;
    let scenario = ScenarioConfig::from_toml_str(&text).map_err(|e| {
        PipelineError::Config(mobility_core::error::ConfigError::Invalid(format!(
            "scenario: {e}"
        )))
    })?;
    let exec = Executor::new(Parallelism::from_threads(args.threads.unwrap_or(1)));
    synth::generate_to_file(&scenario, &args.out, &exec)?;
    println!("ok: corpus written to {}", args.out.display());
    Ok(0)
}

fn read_corpus(config: &RunConfig) -> Result<String, PipelineError> {
    let mut body = String::new();
    for path in &config.input {
        let text = std::fs::read_to_string(path).map_err(|source| InputError::Io {
            path: path.clone(),
            source,
        })?;
        body.push_str(&text);
        if !body.ends_with('\n') {
            body.push('\n');
        }
    }
    Ok(body)
}

fn oracle_error(e: oracle::OracleError) -> PipelineError {
    PipelineError::Config(mobility_core::error::ConfigError::Invalid(e.to_string()))
}

fn cmd_oracle(args: OracleArgs) -> Result<u8, PipelineError> {
    let config = args.config.resolve()?;
    let body = read_corpus(&config)?;
    let tables = oracle::oracle_run(&body, &config).map_err(oracle_error)?;
    let output = pipeline::PipelineOutput {
        daily: tables.daily,
        baselines: tables.baselines,
        nmi: tables.nmi,
        smoothed: tables.smoothed,
        reports: tables.reports,
        exclusions: tables
            .excluded_regions
            .into_iter()
            .map(|region_id| pipeline::RegionExclusion {
                region_id,
                reason: pipeline::REASON_INCOMPLETE_BASELINE,
                detail: String::new(),
            })
            .collect(),
        summary: Default::default(),
    };
    pipeline::write_artifacts(&output, &config)?;
    println!("ok: oracle tables written to {}", config.out_dir.display());
    Ok(0)
}

fn cmd_verify(args: ConfigArgs) -> Result<u8, PipelineError> {
    let config = args.resolve()?;
    let output = pipeline::execute(&config)?;
    let body = read_corpus(&config)?;
    let tables = oracle::oracle_run(&body, &config).map_err(oracle_error)?;
    let report = oracle::compare(&output, &tables);
    print!("{}", report.render());
    Ok(if report.is_ok() { 0 } else { EXIT_MISMATCH })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(exit_for(&error))
        }
    }
}

//! Mobility metrics over geotagged event files.
//!
//! The library turns line-delimited point events (user, timestamp,
//! coordinates, region tags) into per-region mobility reports:
//!
//! 1. [`ingest`] parses and filters events and groups them into per-user
//!    per-day tracks.
//! 2. [`daily`] computes each user-day's single-day travel distance and
//!    cross-day displacement, then aggregates per-region daily means.
//! 3. [`baseline`] builds per-weekday reference distances over a baseline
//!    window and normalizes daily means into dimensionless index series.
//! 4. [`respond`] smooths the index series, decomposes the area around the
//!    index = 1 line, and produces windowed responsiveness reports.
//!
//! [`synth`] generates seeded synthetic corpora and [`oracle`] recomputes
//! every table by brute force for verification. [`pipeline`] wires the
//! stages together behind [`config::RunConfig`] and writes the report
//! artifacts.
//!
//! All heavy passes run through [`par::Executor`]: sequential by default,
//! fanned out over a rayon pool when the `parallel` feature is enabled and
//! more than one thread is requested. Outputs are byte-identical either way.

pub mod baseline;
pub mod config;
pub mod daily;
pub mod dates;
pub mod error;
pub mod geodesy;
pub mod ingest;
pub mod oracle;
pub mod par;
pub mod pipeline;
pub mod respond;
pub mod synth;

pub use config::RunConfig;
pub use error::PipelineError;
pub use par::{Executor, Parallelism};

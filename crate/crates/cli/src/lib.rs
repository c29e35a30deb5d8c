//! Command-line pipeline for extremal quantile regression reports on
//! financial return series: CSV ingestion, sign-split lagged designs,
//! estimation with extremal and normal inference, tail-index tables,
//! extrapolation to very extreme quantiles, and deterministic report files.

pub mod config;
pub mod design;
pub mod error;
pub mod ingest;
pub mod pipeline;
pub mod report;

pub use config::ReportConfig;
pub use error::{CliError, CliResult};
pub use pipeline::{run_pipeline, ReportBundle};
pub use report::emit_report;

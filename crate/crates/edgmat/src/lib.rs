//! Command-line companion to `edgmat-core`: CSV ingestion against a schema
//! file, run configuration, the train/evaluate/export pipeline, and report
//! writers. The binary in `main.rs` is a thin veneer over [`commands`].

pub mod commands;
pub mod csv_ingest;
pub mod logger;
pub mod pipeline;
pub mod reports;
pub mod run_config;
pub mod schema_file;
pub mod synth;

pub use commands::{CliError, Stage};
pub use run_config::RunConfig;

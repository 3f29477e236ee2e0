//! Dataset ingestion, synthetic generators and the pipeline behind the
//! `wgpca` binary.

mod config;
mod ingest;
mod output;
mod pipeline;
pub mod synth;

pub use config::{Command, RunConfig, SynthKind, OUT_DIR_ENV, SCHEMA};
pub use ingest::{ingest_histograms, ingest_many, ingest_many_2d, ingest_measure_2d, HistogramSet};
pub use output::OutputDir;
pub use pipeline::{run_pipeline, ErrorRow, Summary, SWEEP_TIMES};

//! File formats, the pipeline driver and the command line for
//! [`planaris_core`].

pub mod cli;
pub mod commands;
pub mod config;
pub mod io;
pub mod pipeline;
pub mod report;

pub use config::PipelineConfig;
pub use pipeline::{run_files, run_pipeline, PipelineInput, PipelineResult, PrimitiveSource, RunPaths, Stage};

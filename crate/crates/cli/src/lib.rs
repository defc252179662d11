//! Batch driver: configuration, the end-to-end pipeline and CSV output.

pub mod config;
pub mod pipeline;
pub mod table;

pub use config::{CheckSelection, ConfigError, PipelineConfig};
pub use pipeline::{run_pipeline, PipelineError, RunReport};
pub use table::{emit_table, render_table, TableError};

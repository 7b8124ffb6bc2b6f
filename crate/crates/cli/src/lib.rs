//! Library side of the `corrosion-refine` command: subcommands, config
//! handling and stable JSON reports.

pub mod commands;
pub mod config;
pub mod error;
pub mod json;

pub use commands::{cmd_evaluate, cmd_overlay, cmd_refine, cmd_split, cmd_synth, RefineInput};
pub use config::{ConfigOverrides, PipelineConfig};
pub use error::CliError;

//! Configuration parsing, subcommands and result serialization.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{execute, render, run_command, Command, CommandOutput, Overrides};
pub use config::{parse_config, parse_config_str, AngleUnits, OutputFormat, RunConfig};

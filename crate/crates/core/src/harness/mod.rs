//! Experiment sweeps, from a config file to TSV reports.
//!
//! A sweep is the cross product of user counts, strategies, deadlines,
//! budgets and seeds. Each cell builds a fresh simulation, so cells can
//! run in any order or in parallel and still give identical rows.

mod config;
mod report;
mod sweep;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{
    load_config, preset, preset_text, ApplicationConfig, ConstraintKind, Grid, ResourceConfig,
    SweepConfig, UsersConfig, PRESETS,
};
pub use report::{emit_report, summary_table, trace_file_name, trace_table, SUMMARY_HEADER};
pub use sweep::{cell_scenario, cells, run_cell, run_sweep, Cell, CellData, CellKey, SweepResult};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}: {message}", path.as_ref().map_or("config".into(), |p| p.display().to_string()))]
    Parse {
        path: Option<PathBuf>,
        message: String,
    },
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[cfg(test)]
mod tests;

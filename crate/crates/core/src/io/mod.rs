//! Configuration documents, result files and plot tables.

use thiserror::Error;

pub mod config;
pub mod plot;
pub mod results;

pub use config::{parse_config, serialize_config, AssumptionReport, ConfigDocument, Experiment};
pub use plot::{emit_plot_data, plot_csv, PlotRow};
pub use results::{
    parse_trajectory_csv, trajectory_csv, write_atomic, write_results, Manifest, ResultBundle, TrajectoryRow,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IoError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{0}")]
    Semantic(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

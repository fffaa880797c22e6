//! Parameter sweeps over the simulator, trend statistics, feasibility regions
//! and partial-replay reports.

mod emit;
mod feasibility;
mod partial;
mod stats;
mod sweep;

use thiserror::Error;

pub use emit::{emit_csv, emit_plot_data, plot_points, write_plot_data, PlotPoint, PlotSpec};
pub use feasibility::{feasibility, FeasibilityCell, FeasibilityRegion};
pub use partial::{partial_replay_report, restamp, PairAudit, PartialReplayReport};
pub use stats::{cell_means, mean_and_stderr, spearman, CellMean};
pub use sweep::{sweep, Axis, CellError, Fixed, Grid, Metric, SweepRow, SweepSpec, SweepTable};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("invalid sweep spec: {0}")]
    Spec(String),
    #[error("declared skew bound is unusable: {0}")]
    InvalidSkew(String),
    #[error("no rows match the requested series")]
    EmptySeries,
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

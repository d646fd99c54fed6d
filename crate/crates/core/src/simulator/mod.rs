//! Stochastic workcell simulation of a wall build in open-loop or adaptive
//! mode, with the metrics used to compare the two.

mod design;
mod metrics;
mod physics;
mod run;
mod timing;

pub use design::{
    DesignBrick, EdgeRef, Pickup, ScanPlan, Thresholds, WallDesign, DESIGN_SCHEMA_VERSION,
};
pub use metrics::{
    aggregate, aggregate_csv, build_summary_csv, course_mae, course_mean_error, run_trials,
    timing_report, Aggregate, TimingReport, TimingRow, Trend,
};
pub use physics::{check_collisions, overlap_depth, settle, SettleOutcome, Settled};
pub use run::{
    run_build, ActuationSigma, BuildState, DimSigma, Event, EventKind, Mode, NoiseModel, Outcome,
    PlacedBrick, PlanarSigma, Warning, BUILD_SCHEMA_VERSION, NOISE_SCHEMA_VERSION,
};
pub use timing::{Subprocess, TimingModel, TIMING_SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("model error: {0}")]
    Model(String),
}

//! Experiment sweeps: config parsing, execution, analysis and rendering.

mod analyze;
mod config;
mod render;
mod run;

pub use analyze::{
    analyze, analyze_file, Analysis, AnalyzeOptions, ExactComparison, SweepPointResult,
};
pub use config::{
    config_digest, load_config, parse_config, BackendConfig, Beta2Source, ExperimentConfig,
    ModelSource, Violations, DEFAULT_BETA1, DEFAULT_GIBBS_SWEEPS, DEFAULT_STEPS_PER_US,
};
pub use render::{render, Format, CSV_COLUMNS};
pub use run::{
    read_points, read_records, run_experiment, sweep_points, PointMeta, RunFailure, RunSummary,
    SweepPoint, MANIFEST_FILE, POINTS_FILE, RECORDS_FILE,
};

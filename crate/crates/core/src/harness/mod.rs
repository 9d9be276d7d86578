//! End-to-end experiments: data, learners, every conformal method, metrics,
//! ablation grids and persisted artifacts.

mod ablate;
mod config;
mod emit;
mod experiment;
mod pipeline;

pub use ablate::{ablate, ablate_prepared, AblationParam, AblationRow, AblationTable, Status, COVERAGE_SLACK};
pub use config::{
    AblationConfig, ConformalConfig, DataConfig, DataSource, EvalFilter, ExperimentConfig, LearnerConfig, MetricsConfig,
};
pub use emit::{
    ablation_file, emit_report, load_ablation, load_calibration, load_reports, render_ablation, render_intervals,
    render_reports, render_subjects, write_ablation_artifacts, write_run_artifacts, ReportFormat, ABLATION_COLUMNS,
    CALIBRATION_JSON, INTERVALS_CSV, INTERVAL_COLUMNS, REPORT_JSON, SUBJECTS_CSV, SUBJECT_COLUMNS,
};
pub use experiment::{run_experiment, run_prepared, unique_methods, CalibrationRecord, Experiment, MethodCalibration};
pub use pipeline::{generator_config, prepare, run_method, ConformalParams, MethodRun, Prepared, RefitData};

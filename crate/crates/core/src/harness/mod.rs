//! Experiment configuration and orchestration: training, ablations,
//! validation, metrics persistence and plots.

mod ablation;
mod config;
pub mod gradcheck;
mod metrics;
mod plot;
mod train;
mod validate;

pub use ablation::{comparison_rows, run_ablation, AblationOutcome, AblationRow, VariantSummary, CONVERGENCE_FRACTION, CONVERGENCE_WINDOW};
pub use config::{seed_offset_from_env, AblationFlags, ExperimentConfig, Variant, SEED_OFFSET_VAR};
pub use metrics::{
    episodes_to_fraction, final_window_ctr, median, read_metrics, write_metrics, MetricsRecord, MetricsWriter, METRICS_VERSION,
};
pub use plot::{plot, plot_files, PlotSeries};
pub use train::{
    checkpoint_dir, eval_checkpoint, evaluate_policy, resume_train, run_mechanism, run_train, seed_metrics_path, EvalSummary, SeedRun,
    TrainOutcome, RUN_STATE_VERSION,
};
pub use validate::{
    augmentation_sweep, hub_experiment, run_validate, sweep_env_config, write_report_csv, Check, HubExperiment, SweepResult, ValidateOptions,
    ValidationReport,
};

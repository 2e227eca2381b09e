//! Metrics, cross-validation and result tables.

pub mod metrics;
pub mod pipeline;
pub mod report;

pub use metrics::{confusion, metrics, metrics_with_warnings, ConfusionCounts, Metric, MetricSet, Summary};
pub use pipeline::{
    augment_train, evaluate_test, fit_augmented, fit_pipeline, leakage_count, prepare_folds, run_cv, run_prepared,
    Augmentation, AugmentedTrain, EvalReport, ExperimentDescriptor, FittedModel, FoldResult, ModelSpec, PipelineSpec,
    Predictions, PreparedFold, Preprocessing, TestEvaluation, TrainedPipeline,
};
pub use report::{render_csv, render_markdown, render_text, TableRow};

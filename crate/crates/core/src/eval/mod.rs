//! Fold planning, metrics, experiment orchestration and the synthetic
//! corpus generator.

mod experiment;
mod folds;
mod metrics;
mod synth;

pub use experiment::{
    run_experiment, run_experiment_with, AggregateRow, BestInDomain, Cell,
    ExperimentConfig, FoldRow, MetricsReport, PerfectRater, PipelineRater, Rater, Setting,
};
pub use folds::{make_fold_plan, make_fold_plan_with, FoldOptions, FoldPlan, Split, DEFAULT_FOLDS};
pub use metrics::{mae, rmse};
pub use synth::{default_rating_rule, synth_corpus, SynthDomain, SynthSpec};

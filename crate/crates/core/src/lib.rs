//! Weak supervision with distance-based label augmentation.
//!
//! Labeling functions vote on each point or abstain. [`reinforce`] fills
//! abstain cells using the labels of nearby points, [`aggregate`] turns the
//! matrix into training labels by majority vote, and [`models`] trains and
//! scores the end classifier. [`pipeline`] wires the stages together.

pub mod aggregate;
pub mod dataset;
pub mod distance;
pub mod error;
pub mod lf;
pub mod models;
pub mod pipeline;
pub mod reinforce;

pub use aggregate::{majority_vote, training_set, AggregatedLabels, TrainingSet};
pub use dataset::{load_tabular, minmax_normalize, split, Dataset, FeatureVector, TabularOptions};
pub use distance::{distance, MetricKind, MetricSpec};
pub use error::{Error, Result};
pub use lf::{apply_all, lf_stats, LabelMatrix, LabelingFunction, LfStats, ABSTAIN};
pub use models::{evaluate, predict, train, Metrics, Model, ModelSpec};
pub use pipeline::{PipelineConfig, RunReport};
pub use reinforce::{reinforce, AugmentMode, Boundaries, ReinforceOutput, ReinforceParams};

//! Session-level splits, evaluation reports, the full-versus-baseline
//! pipeline comparison and the window-size sweep.

pub mod compare;
pub mod metrics;
pub mod split;

use raypet_classifiers::ClassifierError;
use raypet_core::{DatasetError, PipelineError};
use thiserror::Error;

pub use compare::{
    compare_pipelines, window_sweep, ArmReport, ComparisonReport, PublishedFigures, SweepEntry, SweepReport,
    PUBLISHED_SWEEP,
};
pub use metrics::{evaluate, ClassMetrics, EvalReport};
pub use split::{sessions_of_clips, sessions_of_samples, split_dataset, split_sessions, SessionInfo, Split, SplitSpec};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("split error: {0}")]
    Split(String),
    #[error("test set is empty")]
    EmptyTest,
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

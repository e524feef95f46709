//! Evaluation: metrics, out-of-domain splits, a synthetic shortcut benchmark
//! and the generator ablation harness.

mod ablation;
mod metrics;
mod split;
pub mod spurious;

use thiserror::Error;

use crate::classify::ClassifyError;
use crate::synco::GenerateError;

pub use ablation::{ablation_run, AblationConfig, AblationRow, AblationTable, GeneratorSet};
pub use metrics::{score, LabelMetrics, MetricReport};
pub use split::{ood_split, DevSpec, Split, SplitPlan};
pub use spurious::{spurious_benchmark, SpuriousBenchmark, SpuriousConfig};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{gold} gold labels but {pred} predictions")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("label `{0}` is not in the label set")]
    UnknownLabel(String),
    #[error("invalid split plan: {0}")]
    Plan(String),
    #[error("domain `{0}` has no samples")]
    EmptyDomain(String),
    #[error("sample `{0}` has no domain")]
    MissingDomain(String),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
}

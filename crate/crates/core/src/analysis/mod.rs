//! Regression analysis of gameplay records: which interpretation
//! combinations help players answer correctly, and how they shift buzzing.

mod buzz;
mod effects;
mod features;
mod logreg;

pub use buzz::{buzz_stats, BuzzCell, BuzzSummary, GroupBy, HistogramRow, HISTOGRAM_BINS};
pub use effects::combo_effects;
pub use features::{combo_feature, extract_features, Dataset, FeatureVector};
pub use logreg::{fit, fit_dataset, gradient, loss, predict, FitResult, Hyperparams};

use alloc::string::String;
use thiserror::Error;

use crate::record::Group;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("record for {player:?} on {question:?} is {found:?}, expected {expected:?}")]
    GroupMismatch {
        player: String,
        question: String,
        expected: Group,
        found: Group,
    },
    #[error("no records to fit")]
    Empty,
    #[error("invalid hyperparameters: {0}")]
    Hyperparams(&'static str),
    #[error("loss became non-finite; learning rate {lr} is too large")]
    Divergence { lr: f64 },
    #[error("fit has no coefficient for {0:?}")]
    MissingCoefficient(String),
}

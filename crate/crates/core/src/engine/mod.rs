//! The numeric pipeline: shortlist criteria, weight them, normalize each
//! analyst's source matrix, aggregate to per-analyst and group rankings.

mod impute;
mod normalize;
mod rank;
mod shortlist;
mod weights;

use serde::{Deserialize, Serialize};

use crate::model::{AnalystId, CriterionId, SourceId};

pub use impute::{align_matrix, impute_missing, CompletedMatrix, ImputedCell};
pub use normalize::{group_matrix, normalize_matrix, NormalizedMatrix};
pub use rank::{
    alternative_group_ranking, compute_ranking, dense_ranks, rank_for_analyst, RankedSource, RankingResult,
    RankingVector, RoundInput,
};
pub use shortlist::{shortlist_criteria, vote_counts};
pub use weights::{weight_criteria, WeightVector};

/// Who a weight vector or normalized matrix belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Owner {
    Analyst(AnalystId),
    Group,
}

impl Owner {
    pub fn analyst(&self) -> Option<&AnalystId> {
        match self {
            Owner::Analyst(id) => Some(id),
            Owner::Group => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("no analysts in the panel")]
    NoAnalysts,
    #[error("no criteria passed the vote threshold")]
    EmptyShortlist,
    #[error("vote threshold {threshold} is outside [1, {analysts}]")]
    InvalidThreshold { threshold: u32, analysts: usize },
    #[error("analyst {0} scored every criterion 0")]
    ZeroSheet(AnalystId),
    #[error("analyst {analyst} gave every source 0 for criterion {criterion}")]
    ZeroColumn { analyst: AnalystId, criterion: CriterionId },
    #[error("no analyst scored source {data_source} against criterion {criterion}")]
    Unimputable { data_source: SourceId, criterion: CriterionId },
    #[error("analyst {analyst} left source {data_source} unscored against criterion {criterion}")]
    MissingCell { analyst: AnalystId, data_source: SourceId, criterion: CriterionId },
    #[error("criterion sets differ: {0}")]
    CriterionMismatch(String),
    #[error("source sets differ: {0}")]
    SourceMismatch(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no submission from analyst {0}")]
    MissingSubmission(AnalystId),
}

impl EngineError {
    /// True for inputs that are well-formed but mathematically degenerate.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            EngineError::ZeroSheet(_)
                | EngineError::ZeroColumn { .. }
                | EngineError::Unimputable { .. }
                | EngineError::EmptyShortlist
        )
    }
}

pub(crate) fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

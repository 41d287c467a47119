use serde::{Deserialize, Serialize};

use crate::model::{
    AnalystId, CriterionId, CriterionScoreSheet, MethodConfig, MissingValuePolicy, SourceId, SourceScoreMatrix,
};

use super::{
    align_matrix, group_matrix, impute_missing, mean, normalize_matrix, weight_criteria, CompletedMatrix, EngineError,
    ImputedCell, NormalizedMatrix, WeightVector,
};

/// Scores closer than this are reported as a tie.
const TIE_TOLERANCE: f64 = 1e-12;

/// Everything one round contributes to the computation.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundInput {
    /// Shortlisted criteria, in output order.
    pub criteria: Vec<CriterionId>,
    pub sources: Vec<SourceId>,
    /// One per analyst; their order fixes the analyst order of the result.
    pub sheets: Vec<CriterionScoreSheet>,
    pub matrices: Vec<SourceScoreMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingVector {
    pub analyst_id: AnalystId,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSource {
    /// Dense rank, 1 for the most relevant source.
    pub rank: usize,
    pub source: SourceId,
    pub score: f64,
    pub scaled: f64,
    /// Number of sources sharing this rank.
    pub tie_size: usize,
}

/// Output of the full pipeline with every intermediate kept for drill-down.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingResult {
    pub config: MethodConfig,
    pub analysts: Vec<AnalystId>,
    pub criteria: Vec<CriterionId>,
    pub sources: Vec<SourceId>,
    pub weights: Vec<WeightVector>,
    pub group_weights: WeightVector,
    pub normalized: Vec<NormalizedMatrix>,
    pub imputed: Vec<ImputedCell>,
    pub per_analyst: Vec<RankingVector>,
    pub group: Vec<f64>,
    pub group_scaled: Vec<f64>,
    /// Set when every group score is zero and scaling was skipped.
    pub degenerate: bool,
    pub ranks: Vec<RankedSource>,
}

impl RankingResult {
    pub fn analyst_index(&self, analyst: &AnalystId) -> Option<usize> {
        self.analysts.iter().position(|a| a == analyst)
    }

    /// Group scores on a [0, 1] scale when one is available: the scaled
    /// vector if scaling ran, otherwise the raw vector if it already fits.
    pub fn relevance_scores(&self) -> Option<&[f64]> {
        if self.config.scale_final && !self.degenerate {
            Some(&self.group_scaled)
        } else if self.group.iter().all(|v| (0.0..=1.0).contains(v)) {
            Some(&self.group)
        } else {
            None
        }
    }
}

/// Weighted sum of a normalized matrix's columns: one score per source.
///
/// `weights` may be the analyst's own vector or the group's.
pub fn rank_for_analyst(normalized: &NormalizedMatrix, weights: &WeightVector) -> Result<Vec<f64>, EngineError> {
    if weights.criteria.len() != normalized.criteria.len() {
        return Err(EngineError::CriterionMismatch(format!(
            "{} weights for {} criteria",
            weights.criteria.len(),
            normalized.criteria.len()
        )));
    }
    let w = normalized
        .criteria
        .iter()
        .map(|c| weights.get(c).ok_or_else(|| EngineError::CriterionMismatch(format!("no weight for criterion {c}"))))
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(normalized.cells.iter().map(|row| row.iter().zip(&w).map(|(u, w)| u * w).sum()).collect())
}

/// Runs the whole pipeline on one round.
pub fn compute_ranking(input: &RoundInput, config: &MethodConfig) -> Result<RankingResult, EngineError> {
    if input.sheets.is_empty() {
        return Err(EngineError::NoAnalysts);
    }
    let analysts: Vec<AnalystId> = input.sheets.iter().map(|s| s.analyst_id.clone()).collect();
    let (weights, group_weights) = weight_criteria(&input.criteria, &input.sheets, config.normalization)?;

    let aligned = analysts
        .iter()
        .map(|a| {
            let m = input
                .matrices
                .iter()
                .find(|m| &m.analyst_id == a)
                .ok_or_else(|| EngineError::MissingSubmission(a.clone()))?;
            align_matrix(m, &input.sources, &input.criteria)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let completed: Vec<CompletedMatrix> = match config.missing_value_policy {
        MissingValuePolicy::ImputeAnalystAverage => impute_missing(&aligned)?,
        MissingValuePolicy::Reject => aligned.iter().map(CompletedMatrix::from_scores).collect::<Result<_, _>>()?,
    };
    let normalized = completed
        .iter()
        .map(|m| normalize_matrix(m, config.normalization))
        .collect::<Result<Vec<_>, _>>()?;

    let per_analyst = normalized
        .iter()
        .zip(&weights)
        .map(|(n, w)| Ok(RankingVector { analyst_id: w.owner.analyst().cloned().unwrap(), values: rank_for_analyst(n, w)? }))
        .collect::<Result<Vec<_>, EngineError>>()?;

    let group: Vec<f64> =
        (0..input.sources.len()).map(|d| mean(per_analyst.iter().map(|y| y.values[d]))).collect();
    let max = group.iter().copied().fold(0.0, f64::max);
    let degenerate = max <= 0.0;
    let group_scaled = if config.scale_final && !degenerate { group.iter().map(|v| v / max).collect() } else { group.clone() };
    let ranks = dense_ranks(&input.sources, &group, &group_scaled);

    Ok(RankingResult {
        config: *config,
        analysts,
        criteria: input.criteria.clone(),
        sources: input.sources.clone(),
        weights,
        group_weights,
        normalized,
        imputed: completed.into_iter().flat_map(|m| m.imputed).collect(),
        per_analyst,
        group,
        group_scaled,
        degenerate,
        ranks,
    })
}

/// The second aggregation route: group weights applied to the cellwise mean
/// of the normalized matrices.
pub fn alternative_group_ranking(result: &RankingResult) -> Result<Vec<f64>, EngineError> {
    rank_for_analyst(&group_matrix(&result.normalized)?, &result.group_weights)
}

/// Dense ranks in descending score order. Ties keep source order.
pub fn dense_ranks(sources: &[SourceId], scores: &[f64], scaled: &[f64]) -> Vec<RankedSource> {
    let mut order: Vec<usize> = (0..sources.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    let mut ranked = Vec::with_capacity(order.len());
    let mut rank = 0;
    let mut leader = f64::NAN;
    for &i in &order {
        if rank == 0 || (leader - scores[i]).abs() > TIE_TOLERANCE {
            rank += 1;
            leader = scores[i];
        }
        ranked.push(RankedSource { rank, source: sources[i].clone(), score: scores[i], scaled: scaled[i], tie_size: 0 });
    }
    for i in 0..ranked.len() {
        let r = ranked[i].rank;
        ranked[i].tie_size = ranked.iter().filter(|x| x.rank == r).count();
    }
    ranked
}

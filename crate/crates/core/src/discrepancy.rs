//! Quantifying and classifying disagreement between analysts.
//!
//! Distances compare the analysts' ranking vectors. Spreads and deltas are
//! mapped onto three fuzzy bands whose cut points default to 0.3 and 0.7;
//! a value equal to a cut point falls into the lower band.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::{group_matrix, rank_for_analyst, EngineError, RankingResult};
use crate::model::{AnalystId, CriterionId, DiscrepancyCause, Session, SourceId};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiscrepancyError {
    #[error("value {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("band cut points must satisfy 0 < low < high < 1 (got {low}, {high})")]
    InvalidBands { low: f64, high: f64 },
    #[error("unknown criterion {0}")]
    UnknownCriterion(CriterionId),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuzzyBands {
    pub low_cut: f64,
    pub high_cut: f64,
}

impl Default for FuzzyBands {
    fn default() -> Self {
        Self { low_cut: 0.3, high_cut: 0.7 }
    }
}

impl FuzzyBands {
    pub fn new(low_cut: f64, high_cut: f64) -> Result<Self, DiscrepancyError> {
        if 0.0 < low_cut && low_cut < high_cut && high_cut < 1.0 {
            Ok(Self { low_cut, high_cut })
        } else {
            Err(DiscrepancyError::InvalidBands { low: low_cut, high: high_cut })
        }
    }

    /// 0, 1 or 2 for the lower, middle and upper band.
    fn band(&self, value: f64) -> Result<u8, DiscrepancyError> {
        if !(0.0..=1.0).contains(&value) {
            return Err(DiscrepancyError::OutOfRange(value));
        }
        Ok(if value <= self.low_cut {
            0
        } else if value <= self.high_cut {
            1
        } else {
            2
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relevance {
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Discrepancy {
    Negligible,
    Moderate,
    Severe,
}

pub fn classify_relevance(score: f64, bands: &FuzzyBands) -> Result<Relevance, DiscrepancyError> {
    Ok(match bands.band(score)? {
        0 => Relevance::Low,
        1 => Relevance::Medium,
        _ => Relevance::High,
    })
}

pub fn classify_discrepancy(delta: f64, bands: &FuzzyBands) -> Result<Discrepancy, DiscrepancyError> {
    Ok(match bands.band(delta)? {
        0 => Discrepancy::Negligible,
        1 => Discrepancy::Moderate,
        _ => Discrepancy::Severe,
    })
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Symmetric matrix of Euclidean distances between analysts' rankings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub analysts: Vec<AnalystId>,
    pub distances: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    pub fn get(&self, a: &AnalystId, b: &AnalystId) -> Option<f64> {
        let i = self.analysts.iter().position(|x| x == a)?;
        let j = self.analysts.iter().position(|x| x == b)?;
        Some(self.distances[i][j])
    }

    /// Each unordered pair once, in analyst order.
    pub fn pairs(&self) -> Vec<PairDistance> {
        let k = self.analysts.len();
        (0..k)
            .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
            .map(|(i, j)| PairDistance {
                first: self.analysts[i].clone(),
                second: self.analysts[j].clone(),
                distance: self.distances[i][j],
            })
            .collect()
    }

    /// Mean over analyst pairs; zero for a panel of one.
    pub fn mean_distance(&self) -> f64 {
        let pairs = self.pairs();
        if pairs.is_empty() {
            0.0
        } else {
            pairs.iter().map(|p| p.distance).sum::<f64>() / pairs.len() as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDistance {
    pub first: AnalystId,
    pub second: AnalystId,
    pub distance: f64,
}

pub fn pairwise_agreement(result: &RankingResult) -> DistanceMatrix {
    let ys = &result.per_analyst;
    let distances = ys.iter().map(|a| ys.iter().map(|b| euclidean(&a.values, &b.values)).collect()).collect();
    DistanceMatrix { analysts: result.per_analyst.iter().map(|y| y.analyst_id.clone()).collect(), distances }
}

fn spread(values: impl IntoIterator<Item = f64>) -> f64 {
    let (lo, hi) = values.into_iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo.is_finite() {
        hi - lo
    } else {
        0.0
    }
}

/// Per-source disagreement and relevance. Classes are absent when the
/// underlying value is not on a [0, 1] scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpread {
    pub source: SourceId,
    /// max minus min of the analysts' scores for the source.
    pub spread: f64,
    pub discrepancy: Option<Discrepancy>,
    pub relevance: Option<f64>,
    pub relevance_class: Option<Relevance>,
}

pub fn per_source_spread(result: &RankingResult, bands: &FuzzyBands) -> Vec<SourceSpread> {
    let relevance = result.relevance_scores();
    result
        .sources
        .iter()
        .enumerate()
        .map(|(d, source)| {
            let spread = spread(result.per_analyst.iter().map(|y| y.values[d]));
            let score = relevance.map(|r| r[d]);
            SourceSpread {
                source: source.clone(),
                spread,
                discrepancy: classify_discrepancy(spread, bands).ok(),
                relevance: score,
                relevance_class: score.and_then(|s| classify_relevance(s, bands).ok()),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalystColumn {
    pub analyst_id: AnalystId,
    pub values: Vec<f64>,
    /// Absolute difference from the group column, per source.
    pub deviations: Vec<f64>,
}

/// How each analyst rated the sources on a single criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionBreakdown {
    pub criterion: CriterionId,
    pub sources: Vec<SourceId>,
    pub analysts: Vec<AnalystColumn>,
    pub group: Vec<f64>,
    /// Per source, max minus min across analysts.
    pub spreads: Vec<f64>,
    pub classes: Vec<Option<Discrepancy>>,
}

pub fn per_criterion_drilldown(
    result: &RankingResult,
    criterion: &CriterionId,
    bands: &FuzzyBands,
) -> Result<CriterionBreakdown, DiscrepancyError> {
    let j = result
        .criteria
        .iter()
        .position(|c| c == criterion)
        .ok_or_else(|| DiscrepancyError::UnknownCriterion(criterion.clone()))?;
    let group = group_matrix(&result.normalized)?.column(j);
    let analysts: Vec<AnalystColumn> = result
        .normalized
        .iter()
        .map(|m| {
            let values = m.column(j);
            let deviations = values.iter().zip(&group).map(|(v, g)| (v - g).abs()).collect();
            AnalystColumn { analyst_id: m.owner.analyst().cloned().unwrap_or_else(|| AnalystId::new("group")), values, deviations }
        })
        .collect();
    let spreads: Vec<f64> = (0..result.sources.len()).map(|d| spread(analysts.iter().map(|a| a.values[d]))).collect();
    Ok(CriterionBreakdown {
        criterion: criterion.clone(),
        sources: result.sources.clone(),
        classes: spreads.iter().map(|s| classify_discrepancy(*s, bands).ok()).collect(),
        analysts,
        group,
        spreads,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalystWeights {
    pub analyst_id: AnalystId,
    pub weights: Vec<f64>,
    /// |own weight - group weight| per criterion.
    pub deltas: Vec<f64>,
    pub classes: Vec<Option<Discrepancy>>,
    /// The analyst's ranking with their own weights.
    pub own_ranking: Vec<f64>,
    /// The same matrix ranked with the group weights instead.
    pub group_weight_ranking: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightBreakdown {
    pub criteria: Vec<CriterionId>,
    pub group: Vec<f64>,
    pub analysts: Vec<AnalystWeights>,
}

pub fn weight_drilldown(result: &RankingResult, bands: &FuzzyBands) -> Result<WeightBreakdown, DiscrepancyError> {
    let group = &result.group_weights.values;
    let analysts = result
        .weights
        .iter()
        .zip(&result.normalized)
        .zip(&result.per_analyst)
        .map(|((w, n), y)| {
            let deltas: Vec<f64> = w.values.iter().zip(group).map(|(a, g)| (a - g).abs()).collect();
            Ok(AnalystWeights {
                analyst_id: y.analyst_id.clone(),
                weights: w.values.clone(),
                classes: deltas.iter().map(|d| classify_discrepancy(*d, bands).ok()).collect(),
                deltas,
                own_ranking: y.values.clone(),
                group_weight_ranking: rank_for_analyst(n, &result.group_weights)?,
            })
        })
        .collect::<Result<Vec<_>, DiscrepancyError>>()?;
    Ok(WeightBreakdown { criteria: result.criteria.clone(), group: group.clone(), analysts })
}

/// Everything the discrepancy step reports for one computed round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub bands: FuzzyBands,
    pub pairwise: DistanceMatrix,
    pub mean_distance: f64,
    pub sources: Vec<SourceSpread>,
    pub criteria: Vec<CriterionBreakdown>,
    pub weights: WeightBreakdown,
    /// Facilitator-entered causes keyed by source or criterion id.
    pub annotations: BTreeMap<String, DiscrepancyCause>,
}

pub fn build_report(
    result: &RankingResult,
    bands: &FuzzyBands,
    annotations: &BTreeMap<String, DiscrepancyCause>,
) -> Result<DiscrepancyReport, DiscrepancyError> {
    let pairwise = pairwise_agreement(result);
    Ok(DiscrepancyReport {
        bands: *bands,
        mean_distance: pairwise.mean_distance(),
        pairwise,
        sources: per_source_spread(result, bands),
        criteria: result
            .criteria
            .iter()
            .map(|c| per_criterion_drilldown(result, c, bands))
            .collect::<Result<_, _>>()?,
        weights: weight_drilldown(result, bands)?,
        annotations: annotations.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundConvergence {
    pub round: usize,
    pub mean_distance: f64,
    pub pairs: Vec<PairDistance>,
}

pub fn convergence_series<'a>(results: impl IntoIterator<Item = (usize, &'a RankingResult)>) -> Vec<RoundConvergence> {
    results
        .into_iter()
        .map(|(round, result)| {
            let m = pairwise_agreement(result);
            RoundConvergence { round, mean_distance: m.mean_distance(), pairs: m.pairs() }
        })
        .collect()
}

/// Mean pairwise distance for every computed round of the session.
pub fn round_convergence(session: &Session) -> Vec<RoundConvergence> {
    convergence_series(session.rounds.iter().filter_map(|r| r.result.as_ref().map(|res| (r.index, res))))
}

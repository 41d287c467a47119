use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::model::{AnalystId, CriterionId, OrdinalScore, SourceId, SourceScoreMatrix};

use super::{mean, EngineError};

/// A source matrix with every cell filled, either by the analyst or by
/// imputation from the rest of the panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletedMatrix {
    pub analyst_id: AnalystId,
    pub sources: Vec<SourceId>,
    pub criteria: Vec<CriterionId>,
    pub cells: Vec<Vec<f64>>,
    pub imputed: Vec<ImputedCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputedCell {
    pub analyst_id: AnalystId,
    pub source: SourceId,
    pub criterion: CriterionId,
    pub value: f64,
}

impl CompletedMatrix {
    /// Converts a matrix with no missing cells.
    pub fn from_scores(matrix: &SourceScoreMatrix) -> Result<Self, EngineError> {
        let mut cells = Vec::with_capacity(matrix.sources.len());
        for (source, row) in matrix.sources.iter().zip(&matrix.cells) {
            let mut out = Vec::with_capacity(row.len());
            for (criterion, cell) in matrix.criteria.iter().zip(row) {
                match cell {
                    Some(s) => out.push(s.as_f64()),
                    None => {
                        return Err(EngineError::MissingCell {
                            analyst: matrix.analyst_id.clone(),
                            data_source: source.clone(),
                            criterion: criterion.clone(),
                        })
                    }
                }
            }
            cells.push(out);
        }
        Ok(Self {
            analyst_id: matrix.analyst_id.clone(),
            sources: matrix.sources.clone(),
            criteria: matrix.criteria.clone(),
            cells,
            imputed: Vec::new(),
        })
    }
}

/// Reorders `matrix` onto the given source and criterion axes. Extra
/// criteria columns in the matrix are dropped; missing rows or columns are
/// an error.
pub fn align_matrix(
    matrix: &SourceScoreMatrix,
    sources: &[SourceId],
    criteria: &[CriterionId],
) -> Result<SourceScoreMatrix, EngineError> {
    if !matrix.is_rectangular() {
        return Err(EngineError::DimensionMismatch(format!("matrix of {} is not rectangular", matrix.analyst_id)));
    }
    if matrix.sources.len() != sources.len() {
        return Err(EngineError::SourceMismatch(format!(
            "matrix of {} has {} sources, expected {}",
            matrix.analyst_id,
            matrix.sources.len(),
            sources.len()
        )));
    }
    let rows = sources
        .iter()
        .map(|s| {
            matrix.sources.iter().position(|x| x == s).ok_or_else(|| {
                EngineError::SourceMismatch(format!("matrix of {} lacks source {s}", matrix.analyst_id))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let cols = criteria
        .iter()
        .map(|c| {
            matrix.criteria.iter().position(|x| x == c).ok_or_else(|| {
                EngineError::CriterionMismatch(format!("matrix of {} lacks criterion {c}", matrix.analyst_id))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SourceScoreMatrix {
        analyst_id: matrix.analyst_id.clone(),
        sources: sources.to_vec(),
        criteria: criteria.to_vec(),
        cells: rows.iter().map(|&r| cols.iter().map(|&c| matrix.cells[r][c]).collect()).collect(),
    })
}

/// Fills each missing cell with the mean of the other analysts' raw scores
/// for the same (source, criterion) pair. Imputed values stay real-valued.
///
/// Cells are matched by id, so matrices may order their axes differently.
pub fn impute_missing(matrices: &[SourceScoreMatrix]) -> Result<Vec<CompletedMatrix>, EngineError> {
    let mut present: HashMap<(&SourceId, &CriterionId), Vec<(usize, OrdinalScore)>> = HashMap::new();
    for (i, m) in matrices.iter().enumerate() {
        if !m.is_rectangular() {
            return Err(EngineError::DimensionMismatch(format!("matrix of {} is not rectangular", m.analyst_id)));
        }
        for (source, row) in m.sources.iter().zip(&m.cells) {
            for (criterion, cell) in m.criteria.iter().zip(row) {
                if let Some(score) = cell {
                    present.entry((source, criterion)).or_default().push((i, *score));
                }
            }
        }
    }

    matrices
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let mut imputed = Vec::new();
            let mut cells = Vec::with_capacity(m.sources.len());
            for (source, row) in m.sources.iter().zip(&m.cells) {
                let mut out = Vec::with_capacity(row.len());
                for (criterion, cell) in m.criteria.iter().zip(row) {
                    let value = match cell {
                        Some(score) => score.as_f64(),
                        None => {
                            let others: Vec<f64> = present
                                .get(&(source, criterion))
                                .into_iter()
                                .flatten()
                                .filter(|(j, _)| *j != i)
                                .map(|(_, s)| s.as_f64())
                                .collect();
                            if others.is_empty() {
                                return Err(EngineError::Unimputable {
                                    data_source: source.clone(),
                                    criterion: criterion.clone(),
                                });
                            }
                            let value = mean(others);
                            imputed.push(ImputedCell {
                                analyst_id: m.analyst_id.clone(),
                                source: source.clone(),
                                criterion: criterion.clone(),
                                value,
                            });
                            value
                        }
                    };
                    out.push(value);
                }
                cells.push(out);
            }
            Ok(CompletedMatrix {
                analyst_id: m.analyst_id.clone(),
                sources: m.sources.clone(),
                criteria: m.criteria.clone(),
                cells,
                imputed,
            })
        })
        .collect()
}

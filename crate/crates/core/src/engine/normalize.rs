use serde::{Deserialize, Serialize};

use crate::model::{CriterionId, Normalization, SourceId};

use super::{mean, CompletedMatrix, EngineError, Owner};

/// Source-by-criterion matrix with every column scaled into [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedMatrix {
    pub owner: Owner,
    pub sources: Vec<SourceId>,
    pub criteria: Vec<CriterionId>,
    pub cells: Vec<Vec<f64>>,
}

impl NormalizedMatrix {
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.cells.iter().map(|row| row[j]).collect()
    }

    pub fn criterion_index(&self, criterion: &CriterionId) -> Option<usize> {
        self.criteria.iter().position(|c| c == criterion)
    }
}

/// Divides each criterion column by its sum or its maximum.
pub fn normalize_matrix(matrix: &CompletedMatrix, normalization: Normalization) -> Result<NormalizedMatrix, EngineError> {
    let divisors = (0..matrix.criteria.len())
        .map(|j| {
            let column = matrix.cells.iter().map(|row| row[j]);
            let d = match normalization {
                Normalization::Sum => column.sum::<f64>(),
                Normalization::Max => column.fold(0.0, f64::max),
            };
            if d > 0.0 {
                Ok(d)
            } else {
                Err(EngineError::ZeroColumn {
                    analyst: matrix.analyst_id.clone(),
                    criterion: matrix.criteria[j].clone(),
                })
            }
        })
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(NormalizedMatrix {
        owner: Owner::Analyst(matrix.analyst_id.clone()),
        sources: matrix.sources.clone(),
        criteria: matrix.criteria.clone(),
        cells: matrix.cells.iter().map(|row| row.iter().zip(&divisors).map(|(v, d)| v / d).collect()).collect(),
    })
}

/// Cellwise mean of the panel's normalized matrices.
pub fn group_matrix(normalized: &[NormalizedMatrix]) -> Result<NormalizedMatrix, EngineError> {
    let first = normalized.first().ok_or(EngineError::NoAnalysts)?;
    for m in &normalized[1..] {
        if m.sources != first.sources || m.criteria != first.criteria {
            return Err(EngineError::DimensionMismatch("normalized matrices have different axes".into()));
        }
    }
    let cells = (0..first.sources.len())
        .map(|r| (0..first.criteria.len()).map(|c| mean(normalized.iter().map(|m| m.cells[r][c]))).collect())
        .collect();
    Ok(NormalizedMatrix { owner: Owner::Group, sources: first.sources.clone(), criteria: first.criteria.clone(), cells })
}

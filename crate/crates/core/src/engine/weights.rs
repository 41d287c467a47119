use serde::{Deserialize, Serialize};

use crate::model::{CriterionId, CriterionScoreSheet, Normalization};

use super::{mean, EngineError, Owner};

/// Normalized criterion weights of one analyst or of the group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub owner: Owner,
    pub criteria: Vec<CriterionId>,
    pub values: Vec<f64>,
}

impl WeightVector {
    pub fn get(&self, criterion: &CriterionId) -> Option<f64> {
        self.criteria.iter().position(|c| c == criterion).map(|j| self.values[j])
    }
}

fn sheet_values(criteria: &[CriterionId], sheet: &CriterionScoreSheet) -> Result<Vec<f64>, EngineError> {
    if sheet.scores.len() != criteria.len() {
        return Err(EngineError::CriterionMismatch(format!(
            "sheet of {} covers {} criteria, expected {}",
            sheet.analyst_id,
            sheet.scores.len(),
            criteria.len()
        )));
    }
    criteria
        .iter()
        .map(|c| {
            sheet.scores.get(c).map(|s| s.as_f64()).ok_or_else(|| {
                EngineError::CriterionMismatch(format!("sheet of {} lacks criterion {c}", sheet.analyst_id))
            })
        })
        .collect()
}

/// Normalizes each analyst's criterion scores and averages them into the
/// group weights.
///
/// Sum normalization divides by the sheet total, max normalization by the
/// sheet's largest score. `criteria` fixes the output order.
pub fn weight_criteria(
    criteria: &[CriterionId],
    sheets: &[CriterionScoreSheet],
    normalization: Normalization,
) -> Result<(Vec<WeightVector>, WeightVector), EngineError> {
    if sheets.is_empty() {
        return Err(EngineError::NoAnalysts);
    }
    let mut per_analyst = Vec::with_capacity(sheets.len());
    for sheet in sheets {
        let raw = sheet_values(criteria, sheet)?;
        let divisor = match normalization {
            Normalization::Sum => raw.iter().sum::<f64>(),
            Normalization::Max => raw.iter().copied().fold(0.0, f64::max),
        };
        if divisor <= 0.0 {
            return Err(EngineError::ZeroSheet(sheet.analyst_id.clone()));
        }
        per_analyst.push(WeightVector {
            owner: Owner::Analyst(sheet.analyst_id.clone()),
            criteria: criteria.to_vec(),
            values: raw.iter().map(|v| v / divisor).collect(),
        });
    }
    let group = WeightVector {
        owner: Owner::Group,
        criteria: criteria.to_vec(),
        values: (0..criteria.len()).map(|j| mean(per_analyst.iter().map(|w| w.values[j]))).collect(),
    };
    Ok((per_analyst, group))
}

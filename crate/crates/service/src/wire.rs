//! Request bodies. Scores arrive as plain integers so an out-of-scale value
//! can be reported at its cell instead of as a generic parse failure.

use std::collections::BTreeMap;

use axum::http::StatusCode;
use dsrank_core::{
    AnalystId, CriterionBallot, CriterionId, CriterionScoreSheet, DiscrepancyCause, MethodConfig, OrdinalScore,
    ProblemStatement, Quorum, SessionState, SourceId, SourceScoreMatrix, Submission, Violation, ViolationKind,
};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::ApiError;

pub fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed request body: {e}")))
}

#[derive(Debug, Deserialize)]
pub struct CreateSession {
    pub problem: ProblemStatement,
    #[serde(default)]
    pub config: MethodConfig,
    #[serde(default)]
    pub quorum: Option<Quorum>,
}

#[derive(Debug, Deserialize)]
pub struct Advance {
    pub target: SessionState,
}

#[derive(Debug, Deserialize)]
pub struct Annotation {
    pub key: String,
    pub cause: DiscrepancyCause,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Vote {
    Flag(bool),
    Count(i64),
}

#[derive(Debug, Deserialize)]
struct BallotBody {
    analyst_id: AnalystId,
    votes: BTreeMap<CriterionId, Vote>,
}

#[derive(Debug, Deserialize)]
struct SheetBody {
    analyst_id: AnalystId,
    scores: BTreeMap<CriterionId, i64>,
}

#[derive(Debug, Deserialize)]
struct MatrixBody {
    analyst_id: AnalystId,
    sources: Vec<SourceId>,
    criteria: Vec<CriterionId>,
    cells: Vec<Vec<Option<i64>>>,
}

fn invalid(violations: Vec<Violation>) -> ApiError {
    let n = violations.len();
    ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "validation_failed", format!("{n} invalid value(s)"))
        .with_details(violations.iter().map(|v| serde_json::to_value(v).unwrap_or_default()).collect())
}

fn out_of_scale(analyst: &AnalystId, value: i64) -> Violation {
    Violation::new(ViolationKind::OutOfScale, analyst.as_str(), format!("score {value} is outside 0..=5"))
}

pub fn ballot(body: &[u8]) -> Result<Submission, ApiError> {
    let b: BallotBody = parse(body)?;
    let mut bad = Vec::new();
    let votes = b
        .votes
        .into_iter()
        .map(|(c, v)| {
            let keep = match v {
                Vote::Flag(f) => f,
                Vote::Count(1) => true,
                Vote::Count(0) => false,
                Vote::Count(n) => {
                    bad.push(
                        Violation::new(ViolationKind::OutOfScale, b.analyst_id.as_str(), format!("vote {n} is not 0 or 1"))
                            .at(None, Some(c.as_str())),
                    );
                    false
                }
            };
            (c, keep)
        })
        .collect();
    if !bad.is_empty() {
        return Err(invalid(bad));
    }
    Ok(Submission::Ballot(CriterionBallot { analyst_id: b.analyst_id, votes }))
}

pub fn sheet(body: &[u8]) -> Result<Submission, ApiError> {
    let s: SheetBody = parse(body)?;
    let mut bad = Vec::new();
    let mut scores = BTreeMap::new();
    for (c, v) in s.scores {
        match OrdinalScore::try_from(v) {
            Ok(score) => {
                scores.insert(c, score);
            }
            Err(_) => bad.push(out_of_scale(&s.analyst_id, v).at(None, Some(c.as_str()))),
        }
    }
    if !bad.is_empty() {
        return Err(invalid(bad));
    }
    Ok(Submission::Sheet(CriterionScoreSheet { analyst_id: s.analyst_id, scores }))
}

pub fn matrix(body: &[u8]) -> Result<Submission, ApiError> {
    let m: MatrixBody = parse(body)?;
    let mut bad = Vec::new();
    let mut cells = Vec::with_capacity(m.cells.len());
    for (r, row) in m.cells.iter().enumerate() {
        let mut out = Vec::with_capacity(row.len());
        for (c, cell) in row.iter().enumerate() {
            match cell.map(OrdinalScore::try_from) {
                None => out.push(None),
                Some(Ok(s)) => out.push(Some(s)),
                Some(Err(_)) => {
                    let source = m.sources.get(r).map(|s| s.as_str().to_owned()).unwrap_or_else(|| format!("row {r}"));
                    let criterion =
                        m.criteria.get(c).map(|c| c.as_str().to_owned()).unwrap_or_else(|| format!("column {c}"));
                    bad.push(out_of_scale(&m.analyst_id, cell.unwrap_or_default()).at(Some(&source), Some(&criterion)));
                    out.push(None);
                }
            }
        }
        cells.push(out);
    }
    if !bad.is_empty() {
        return Err(invalid(bad));
    }
    Ok(Submission::Matrix(SourceScoreMatrix { analyst_id: m.analyst_id, sources: m.sources, criteria: m.criteria, cells }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_out_of_scale_reports_cell() {
        let body = br#"{"analyst_id":"A1","sources":["d1","d2"],"criteria":["c1"],"cells":[[3],[9]]}"#;
        let err = matrix(body).unwrap_err();
        assert_eq!(err.status, StatusCode::UNPROCESSABLE_ENTITY);
        assert_eq!(err.details[0]["location"]["source"], "d2");
        assert_eq!(err.details[0]["location"]["criterion"], "c1");
    }

    #[test]
    fn ballot_accepts_flags_and_bits() {
        let body = br#"{"analyst_id":"A1","votes":{"c1":true,"c2":0,"c3":1}}"#;
        let Submission::Ballot(b) = ballot(body).unwrap() else { panic!() };
        assert_eq!(b.votes.values().copied().collect::<Vec<_>>(), vec![true, false, true]);
        assert!(ballot(br#"{"analyst_id":"A1","votes":{"c1":2}}"#).is_err());
    }

    #[test]
    fn sheet_rejects_negative() {
        let err = sheet(br#"{"analyst_id":"A1","scores":{"c1":-1}}"#).unwrap_err();
        assert_eq!(err.code, "validation_failed");
        assert!(sheet(b"{").unwrap_err().status == StatusCode::BAD_REQUEST);
    }
}

//! Structural checks over a session. Violations are reported as data so a
//! caller can show all of them at once.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::engine::{align_matrix, impute_missing, EngineError};
use crate::model::{
    CriterionBallot, CriterionId, CriterionScoreSheet, MissingValuePolicy, Session, SourceScoreMatrix, VoteThreshold,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    EmptyField,
    DuplicateId,
    InvalidThreshold,
    LimitExceeded,
    OutOfScale,
    UnknownAnalyst,
    DuplicateSubmission,
    Coverage,
    NotRectangular,
    ZeroSheet,
    ZeroColumn,
    MissingCell,
    Unimputable,
    EmptyShortlist,
}

/// Source/criterion coordinates of a cell-level problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criterion: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub entity: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<Location>,
}

impl Violation {
    pub fn new(kind: ViolationKind, entity: impl Into<String>, message: impl Into<String>) -> Self {
        Self { kind, entity: entity.into(), message: message.into(), location: None }
    }

    pub fn at(mut self, source: Option<&str>, criterion: Option<&str>) -> Self {
        self.location = Some(Location { source: source.map(str::to_owned), criterion: criterion.map(str::to_owned) });
        self
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.message)?;
        if let Some(loc) = &self.location {
            if let Some(s) = &loc.source {
                write!(f, " [source {s}]")?;
            }
            if let Some(c) = &loc.criterion {
                write!(f, " [criterion {c}]")?;
            }
        }
        Ok(())
    }
}

/// Soft size limits; the method itself has no bound on panel or catalog size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub max_analysts: usize,
    pub max_criteria: usize,
    pub max_sources: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self { max_analysts: 64, max_criteria: 256, max_sources: 1024 }
    }
}

pub fn validate_session(session: &Session) -> Vec<Violation> {
    validate_session_with(session, &Limits::default())
}

pub fn validate_session_with(session: &Session, limits: &Limits) -> Vec<Violation> {
    let mut out = Vec::new();
    for field in session.problem.missing_fields() {
        out.push(Violation::new(ViolationKind::EmptyField, "problem", format!("{field} is empty")));
    }

    check_ids("analyst", session.analysts.iter().map(|a| (a.id.as_str(), a.display_name.as_str())), &mut out);
    check_ids("criterion", session.criteria.iter().map(|c| (c.id.as_str(), c.name.as_str())), &mut out);
    check_ids("source", session.sources.iter().map(|s| (s.id.as_str(), s.name.as_str())), &mut out);

    for (what, n, max) in [
        ("analysts", session.analysts.len(), limits.max_analysts),
        ("criteria", session.criteria.len(), limits.max_criteria),
        ("sources", session.sources.len(), limits.max_sources),
    ] {
        if n > max {
            out.push(Violation::new(ViolationKind::LimitExceeded, what, format!("{n} exceeds the limit of {max}")));
        }
    }

    let k = session.analysts.len();
    if let VoteThreshold::AtLeast(t) = session.config.vote_threshold {
        if k > 0 && (t == 0 || t as usize > k) {
            out.push(Violation::new(
                ViolationKind::InvalidThreshold,
                "config",
                format!("vote threshold {t} is outside [1, {k}]"),
            ));
        }
    }

    for round in &session.rounds {
        let entity = |what: &str, who: &str| format!("round {} {what} {who}", round.index);

        let mut seen = HashSet::new();
        for b in &round.ballots {
            submission_owner(session, &entity("ballot", b.analyst_id.as_str()), b.analyst_id.as_str(), &mut seen, &mut out);
            out.extend(validate_ballot(session, b).into_iter().map(|mut v| {
                v.entity = entity("ballot", b.analyst_id.as_str());
                v
            }));
        }

        let criteria = round.shortlist.clone().unwrap_or_else(|| session.criterion_ids());
        if round.shortlist.as_ref().is_some_and(|s| s.is_empty()) {
            out.push(Violation::new(ViolationKind::EmptyShortlist, entity("shortlist", ""), "no criteria shortlisted"));
        }

        let mut seen = HashSet::new();
        for s in &round.sheets {
            submission_owner(session, &entity("sheet", s.analyst_id.as_str()), s.analyst_id.as_str(), &mut seen, &mut out);
            out.extend(validate_sheet(&criteria, s).into_iter().map(|mut v| {
                v.entity = entity("sheet", s.analyst_id.as_str());
                v
            }));
        }

        let mut seen = HashSet::new();
        let mut aligned = Vec::new();
        for m in &round.matrices {
            submission_owner(session, &entity("matrix", m.analyst_id.as_str()), m.analyst_id.as_str(), &mut seen, &mut out);
            let problems = validate_matrix(session, &criteria, m);
            if problems.is_empty() {
                if let Ok(a) = align_matrix(m, &session.source_ids(), &criteria) {
                    aligned.push(a);
                }
            }
            out.extend(problems.into_iter().map(|mut v| {
                v.entity = entity("matrix", m.analyst_id.as_str());
                v
            }));
        }
        out.extend(panel_checks(session.config.missing_value_policy, &aligned, round.index));
    }
    out
}

fn check_ids<'a>(what: &str, items: impl Iterator<Item = (&'a str, &'a str)>, out: &mut Vec<Violation>) {
    let mut seen = HashSet::new();
    for (id, name) in items {
        if id.trim().is_empty() {
            out.push(Violation::new(ViolationKind::EmptyField, what, "id is empty"));
        } else if !seen.insert(id) {
            out.push(Violation::new(ViolationKind::DuplicateId, format!("{what} {id}"), format!("duplicate {what} id")));
        }
        if name.trim().is_empty() {
            out.push(Violation::new(ViolationKind::EmptyField, format!("{what} {id}"), "name is empty"));
        }
    }
}

fn submission_owner<'a>(
    session: &Session,
    entity: &str,
    analyst: &'a str,
    seen: &mut HashSet<&'a str>,
    out: &mut Vec<Violation>,
) {
    if !session.analysts.iter().any(|a| a.id.as_str() == analyst) {
        out.push(Violation::new(ViolationKind::UnknownAnalyst, entity, "submitted by an analyst not in the session"));
    }
    if !seen.insert(analyst) {
        out.push(Violation::new(ViolationKind::DuplicateSubmission, entity, "more than one submission in this round"));
    }
}

fn coverage<'a>(
    expected: impl IntoIterator<Item = &'a str>,
    actual: impl IntoIterator<Item = &'a str>,
    what: &str,
) -> Vec<Violation> {
    let expected: BTreeSet<&str> = expected.into_iter().collect();
    let actual: BTreeSet<&str> = actual.into_iter().collect();
    let mut out = Vec::new();
    for missing in expected.difference(&actual) {
        out.push(Violation::new(ViolationKind::Coverage, "", format!("{what} {missing} is not covered")).at(
            (what == "source").then_some(*missing),
            (what == "criterion").then_some(*missing),
        ));
    }
    for extra in actual.difference(&expected) {
        out.push(Violation::new(ViolationKind::Coverage, "", format!("unexpected {what} {extra}")).at(
            (what == "source").then_some(*extra),
            (what == "criterion").then_some(*extra),
        ));
    }
    out
}

/// A ballot must vote on every criterion of the session.
pub fn validate_ballot(session: &Session, ballot: &CriterionBallot) -> Vec<Violation> {
    coverage(
        session.criteria.iter().map(|c| c.id.as_str()),
        ballot.votes.keys().map(|c| c.as_str()),
        "criterion",
    )
    .into_iter()
    .map(|mut v| {
        v.entity = format!("ballot {}", ballot.analyst_id);
        v
    })
    .collect()
}

/// A sheet must score exactly the shortlisted criteria, not all with 0.
pub fn validate_sheet(shortlist: &[CriterionId], sheet: &CriterionScoreSheet) -> Vec<Violation> {
    let entity = format!("sheet {}", sheet.analyst_id);
    let mut out: Vec<Violation> = coverage(
        shortlist.iter().map(|c| c.as_str()),
        sheet.scores.keys().map(|c| c.as_str()),
        "criterion",
    );
    if !sheet.scores.is_empty() && sheet.is_all_zero() {
        out.push(Violation::new(ViolationKind::ZeroSheet, "", "every criterion scored 0"));
    }
    for v in &mut out {
        v.entity = entity.clone();
    }
    out
}

/// A matrix must be rectangular over exactly the session's sources and the
/// shortlisted criteria.
pub fn validate_matrix(session: &Session, shortlist: &[CriterionId], matrix: &SourceScoreMatrix) -> Vec<Violation> {
    let entity = format!("matrix {}", matrix.analyst_id);
    if !matrix.is_rectangular() {
        return vec![Violation::new(
            ViolationKind::NotRectangular,
            entity,
            format!("expected {} rows of {} cells", matrix.sources.len(), matrix.criteria.len()),
        )];
    }
    let mut out = coverage(
        session.sources.iter().map(|s| s.id.as_str()),
        matrix.sources.iter().map(|s| s.as_str()),
        "source",
    );
    out.extend(coverage(shortlist.iter().map(|c| c.as_str()), matrix.criteria.iter().map(|c| c.as_str()), "criterion"));
    check_ids("source", matrix.sources.iter().map(|s| (s.as_str(), s.as_str())), &mut out);
    check_ids("criterion", matrix.criteria.iter().map(|c| (c.as_str(), c.as_str())), &mut out);
    for v in &mut out {
        v.entity = entity.clone();
    }
    out
}

/// Checks that need the whole panel: missing cells must be imputable and
/// no analyst may leave a criterion column at zero.
fn panel_checks(policy: MissingValuePolicy, aligned: &[SourceScoreMatrix], round: usize) -> Vec<Violation> {
    let mut out = Vec::new();
    if policy == MissingValuePolicy::Reject {
        for m in aligned {
            for (source, row) in m.sources.iter().zip(&m.cells) {
                for (criterion, cell) in m.criteria.iter().zip(row) {
                    if cell.is_none() {
                        out.push(
                            Violation::new(
                                ViolationKind::MissingCell,
                                format!("round {round} matrix {}", m.analyst_id),
                                "cell left unscored and imputation is disabled",
                            )
                            .at(Some(source.as_str()), Some(criterion.as_str())),
                        );
                    }
                }
            }
        }
        if !out.is_empty() {
            return out;
        }
    }
    let completed = match impute_missing(aligned) {
        Ok(c) => c,
        Err(EngineError::Unimputable { data_source: source, criterion }) => {
            return vec![Violation::new(
                ViolationKind::Unimputable,
                format!("round {round}"),
                "no analyst scored this cell",
            )
            .at(Some(source.as_str()), Some(criterion.as_str()))];
        }
        Err(e) => return vec![Violation::new(ViolationKind::NotRectangular, format!("round {round}"), e.to_string())],
    };
    for m in &completed {
        for (j, criterion) in m.criteria.iter().enumerate() {
            if !m.sources.is_empty() && m.cells.iter().all(|row| row[j] <= 0.0) {
                out.push(
                    Violation::new(
                        ViolationKind::ZeroColumn,
                        format!("round {round} matrix {}", m.analyst_id),
                        "every source scored 0 for this criterion",
                    )
                    .at(None, Some(criterion.as_str())),
                );
            }
        }
    }
    out
}

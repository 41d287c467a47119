//! File-backed session persistence with optimistic concurrency.
//!
//! Each session lives in `<data-dir>/sessions/<session_id>.json`. Every
//! accepted mutation bumps the record's revision and replaces the file
//! atomically (write to a temporary file, then rename).

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::engine::{compute_ranking, shortlist_criteria, EngineError, RankingResult, RoundInput};
use crate::model::{
    Analyst, AnalystId, Criterion, CriterionBallot, CriterionScoreSheet, DataSource, DiscrepancyCause, MethodConfig,
    ProblemStatement, Quorum, Round, Session, SessionId, SessionState, SourceScoreMatrix,
};
use crate::validate::{validate_ballot, validate_matrix, validate_session, validate_sheet, Violation, ViolationKind};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreRecord {
    pub schema: u32,
    pub session_id: SessionId,
    pub revision: u64,
    pub updated_at: DateTime<Utc>,
    pub session: Session,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Submission {
    Ballot(CriterionBallot),
    Sheet(CriterionScoreSheet),
    Matrix(SourceScoreMatrix),
    SetCriteria { criteria: Vec<Criterion> },
    SetSources { sources: Vec<DataSource> },
    AddAnalyst(Analyst),
    SetQuorum { quorum: Quorum },
    Annotate { key: String, cause: DiscrepancyCause },
    Notes { notes: String },
}

impl Submission {
    pub fn kind(&self) -> &'static str {
        match self {
            Submission::Ballot(_) => "ballot",
            Submission::Sheet(_) => "sheet",
            Submission::Matrix(_) => "matrix",
            Submission::SetCriteria { .. } => "criteria",
            Submission::SetSources { .. } => "sources",
            Submission::AddAnalyst(_) => "analyst",
            Submission::SetQuorum { .. } => "quorum",
            Submission::Annotate { .. } => "annotation",
            Submission::Notes { .. } => "notes",
        }
    }

    pub fn analyst(&self) -> Option<&AnalystId> {
        match self {
            Submission::Ballot(b) => Some(&b.analyst_id),
            Submission::Sheet(s) => Some(&s.analyst_id),
            Submission::Matrix(m) => Some(&m.analyst_id),
            _ => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("unknown session {0}")]
    UnknownSession(SessionId),
    #[error("revision conflict: expected {expected}, current {current}")]
    RevisionConflict { expected: u64, current: u64 },
    #[error("a {kind} cannot be submitted while the session is {state}")]
    WrongState { state: SessionState, kind: &'static str },
    #[error("cannot move from {from} to {to}")]
    IllegalTransition { from: SessionState, to: SessionState },
    #[error("missing {artifact} from {}", .missing.iter().map(|a| a.as_str()).collect::<Vec<_>>().join(", "))]
    IncompleteSubmissions { artifact: &'static str, missing: Vec<AnalystId> },
    #[error("validation failed: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<Violation>),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("storage failure: {0}")]
    Storage(String),
}

impl From<std::io::Error> for StoreError {
    fn from(e: std::io::Error) -> Self {
        StoreError::Storage(e.to_string())
    }
}

impl From<serde_json::Error> for StoreError {
    fn from(e: serde_json::Error) -> Self {
        StoreError::Storage(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubmitOutcome {
    pub revision: u64,
    /// False when the submission was identical to what was already stored.
    pub changed: bool,
}

/// Session documents under a data directory.
#[derive(Debug)]
pub struct FileStore {
    dir: PathBuf,
    locks: Mutex<HashMap<SessionId, Arc<Mutex<()>>>>,
}

impl FileStore {
    /// Opens the store, creating `<data_dir>/sessions` if needed.
    pub fn open(data_dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = data_dir.as_ref().join("sessions");
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, locks: Mutex::new(HashMap::new()) })
    }

    pub fn data_dir(&self) -> &Path {
        self.dir.parent().unwrap_or(&self.dir)
    }

    fn path(&self, id: &SessionId) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    fn lock(&self, id: &SessionId) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().unwrap_or_else(|e| e.into_inner());
        locks.entry(id.clone()).or_default().clone()
    }

    pub fn create_session(&self, problem: ProblemStatement, config: MethodConfig) -> Result<StoreRecord, StoreError> {
        let missing = problem.missing_fields();
        if !missing.is_empty() {
            return Err(StoreError::Validation(
                missing
                    .into_iter()
                    .map(|f| Violation::new(ViolationKind::EmptyField, "problem", format!("{f} is empty")))
                    .collect(),
            ));
        }
        let id = SessionId(uuid::Uuid::new_v4().simple().to_string());
        let record = StoreRecord {
            schema: SCHEMA_VERSION,
            session_id: id.clone(),
            revision: 1,
            updated_at: Utc::now(),
            session: Session::new(id, problem, config),
        };
        self.write(&record)?;
        Ok(record)
    }

    pub fn load(&self, id: &SessionId) -> Result<StoreRecord, StoreError> {
        let path = self.path(id);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(StoreError::UnknownSession(id.clone())),
            Err(e) => return Err(e.into()),
        };
        let record: StoreRecord = serde_json::from_slice(&bytes)?;
        if record.schema != SCHEMA_VERSION {
            return Err(StoreError::Storage(format!("unsupported schema {} in {}", record.schema, path.display())));
        }
        Ok(record)
    }

    /// Session ids present on disk, sorted.
    pub fn list(&self) -> Result<Vec<SessionId>, StoreError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let name = entry?.file_name();
            if let Some(id) = name.to_str().and_then(|n| n.strip_suffix(".json")) {
                ids.push(SessionId::new(id));
            }
        }
        ids.sort();
        Ok(ids)
    }

    fn write(&self, record: &StoreRecord) -> Result<(), StoreError> {
        let json = serde_json::to_vec_pretty(record)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(&json)?;
        tmp.as_file().sync_all()?;
        tmp.persist(self.path(&record.session_id)).map_err(|e| StoreError::Storage(e.to_string()))?;
        Ok(())
    }

    /// Loads, applies `f` under the session's write lock and persists the
    /// result with the next revision.
    fn mutate<T>(
        &self,
        id: &SessionId,
        expected_revision: Option<u64>,
        f: impl FnOnce(&mut Session) -> Result<(T, bool), StoreError>,
    ) -> Result<(StoreRecord, T, bool), StoreError> {
        let lock = self.lock(id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut record = self.load(id)?;
        if let Some(expected) = expected_revision {
            if expected != record.revision {
                return Err(StoreError::RevisionConflict { expected, current: record.revision });
            }
        }
        let (value, changed) = f(&mut record.session)?;
        if changed {
            record.revision += 1;
            record.updated_at = Utc::now();
            self.write(&record)?;
        }
        Ok((record, value, changed))
    }

    pub fn submit(&self, id: &SessionId, expected_revision: u64, submission: Submission) -> Result<SubmitOutcome, StoreError> {
        let (record, (), changed) = self.mutate(id, Some(expected_revision), |s| Ok(((), apply(s, submission)?)))?;
        Ok(SubmitOutcome { revision: record.revision, changed })
    }

    pub fn advance_state(
        &self,
        id: &SessionId,
        expected_revision: Option<u64>,
        target: SessionState,
    ) -> Result<StoreRecord, StoreError> {
        let (record, (), _) = self.mutate(id, expected_revision, |s| advance(s, target).map(|()| ((), true)))?;
        Ok(record)
    }
}

fn require_state(session: &Session, ok: bool, kind: &'static str) -> Result<(), StoreError> {
    if ok {
        Ok(())
    } else {
        Err(StoreError::WrongState { state: session.state, kind })
    }
}

fn require_analyst(session: &Session, analyst: &AnalystId) -> Result<(), StoreError> {
    if session.has_analyst(analyst) {
        Ok(())
    } else {
        Err(StoreError::Validation(vec![Violation::new(
            ViolationKind::UnknownAnalyst,
            format!("analyst {analyst}"),
            "not registered in this session",
        )]))
    }
}

fn non_empty(violations: Vec<Violation>) -> Result<(), StoreError> {
    if violations.is_empty() {
        Ok(())
    } else {
        Err(StoreError::Validation(violations))
    }
}

/// Replaces the analyst's entry in `list`. Returns false if it was identical.
fn upsert<T: PartialEq>(list: &mut Vec<T>, item: T, same_owner: impl Fn(&T) -> bool) -> bool {
    match list.iter_mut().find(|x| same_owner(x)) {
        Some(existing) if *existing == item => false,
        Some(existing) => {
            *existing = item;
            true
        }
        None => {
            list.push(item);
            true
        }
    }
}

fn shortlist_of(session: &Session) -> Vec<crate::model::CriterionId> {
    session.current_round().and_then(|r| r.shortlist.clone()).unwrap_or_else(|| session.criterion_ids())
}

fn apply(session: &mut Session, submission: Submission) -> Result<bool, StoreError> {
    use SessionState::*;
    let kind = submission.kind();
    if session.state == Closed {
        return Err(StoreError::WrongState { state: Closed, kind });
    }
    match submission {
        Submission::Ballot(ballot) => {
            require_state(session, session.state == Voting, kind)?;
            require_analyst(session, &ballot.analyst_id)?;
            non_empty(validate_ballot(session, &ballot))?;
            let round = session.current_round_mut().expect("voting implies an open round");
            let owner = ballot.analyst_id.clone();
            Ok(upsert(&mut round.ballots, ballot, |b| b.analyst_id == owner))
        }
        Submission::Sheet(sheet) => {
            let revising = session.state == Scoring && session.current_round().is_some_and(|r| r.index > 0);
            require_state(session, session.state == Weighting || revising, kind)?;
            require_analyst(session, &sheet.analyst_id)?;
            non_empty(validate_sheet(&shortlist_of(session), &sheet))?;
            let round = session.current_round_mut().expect("open round");
            let owner = sheet.analyst_id.clone();
            Ok(upsert(&mut round.sheets, sheet, |s| s.analyst_id == owner))
        }
        Submission::Matrix(matrix) => {
            require_state(session, session.state == Scoring, kind)?;
            require_analyst(session, &matrix.analyst_id)?;
            non_empty(validate_matrix(session, &shortlist_of(session), &matrix))?;
            let round = session.current_round_mut().expect("open round");
            let owner = matrix.analyst_id.clone();
            Ok(upsert(&mut round.matrices, matrix, |m| m.analyst_id == owner))
        }
        Submission::SetCriteria { criteria } => {
            require_state(session, session.state == Drafting, kind)?;
            if session.criteria == criteria {
                return Ok(false);
            }
            let mut draft = session.clone();
            draft.criteria = criteria;
            non_empty(catalog_violations(&draft))?;
            *session = draft;
            Ok(true)
        }
        Submission::SetSources { sources } => {
            require_state(session, session.state == Drafting, kind)?;
            if session.sources == sources {
                return Ok(false);
            }
            let mut draft = session.clone();
            draft.sources = sources;
            non_empty(catalog_violations(&draft))?;
            *session = draft;
            Ok(true)
        }
        Submission::AddAnalyst(analyst) => {
            require_state(session, session.state == Drafting, kind)?;
            if session.analysts.contains(&analyst) {
                return Ok(false);
            }
            let mut draft = session.clone();
            draft.analysts.push(analyst);
            non_empty(catalog_violations(&draft))?;
            *session = draft;
            Ok(true)
        }
        Submission::SetQuorum { quorum } => {
            let changed = session.quorum != quorum;
            session.quorum = quorum;
            Ok(changed)
        }
        Submission::Annotate { key, cause } => {
            let round = session.current_round_mut().ok_or(StoreError::WrongState { state: Drafting, kind })?;
            Ok(round.annotations.insert(key, cause) != Some(cause))
        }
        Submission::Notes { notes } => {
            let round = session.current_round_mut().ok_or(StoreError::WrongState { state: Drafting, kind })?;
            let changed = round.notes != notes;
            round.notes = notes;
            Ok(changed)
        }
    }
}

fn catalog_violations(session: &Session) -> Vec<Violation> {
    validate_session(session)
        .into_iter()
        .filter(|v| matches!(v.kind, ViolationKind::DuplicateId | ViolationKind::EmptyField | ViolationKind::LimitExceeded))
        .collect()
}

fn check_quorum<T>(
    session: &Session,
    items: &[T],
    owner: impl Fn(&T) -> &AnalystId,
    artifact: &'static str,
) -> Result<(), StoreError> {
    let missing: Vec<AnalystId> =
        session.analysts.iter().map(|a| a.id.clone()).filter(|a| !items.iter().any(|x| owner(x) == a)).collect();
    let total = session.analysts.len();
    if total == 0 || !session.quorum.is_met(total - missing.len(), total) {
        return Err(StoreError::IncompleteSubmissions { artifact, missing });
    }
    Ok(())
}

/// Inputs of a round restricted to analysts who submitted both a sheet and
/// a matrix, in session analyst order.
pub fn round_input(session: &Session, round: &Round) -> RoundInput {
    let criteria = round.shortlist.clone().unwrap_or_else(|| session.criterion_ids());
    let mut sheets = Vec::new();
    let mut matrices = Vec::new();
    for a in &session.analysts {
        if let (Some(s), Some(m)) = (round.sheet(&a.id), round.matrix(&a.id)) {
            sheets.push(s.clone());
            matrices.push(m.clone());
        }
    }
    RoundInput { criteria, sources: session.source_ids(), sheets, matrices }
}

/// Recomputes a stored round from its stored inputs.
pub fn replay_round(session: &Session, round_index: usize) -> Result<RankingResult, EngineError> {
    let round = session.rounds.iter().find(|r| r.index == round_index).ok_or(EngineError::NoAnalysts)?;
    compute_ranking(&round_input(session, round), &session.config)
}

fn advance(session: &mut Session, target: SessionState) -> Result<(), StoreError> {
    use SessionState::*;
    let from = session.state;
    if !from.can_transition_to(target) {
        return Err(StoreError::IllegalTransition { from, to: target });
    }
    match (from, target) {
        (_, Closed) => {}
        (Drafting, Voting) => {
            let mut problems = catalog_violations(session);
            for (what, empty) in [
                ("analysts", session.analysts.is_empty()),
                ("criteria", session.criteria.is_empty()),
                ("sources", session.sources.is_empty()),
            ] {
                if empty {
                    problems.push(Violation::new(ViolationKind::EmptyField, what, "catalog is empty"));
                }
            }
            non_empty(problems)?;
            if session.rounds.is_empty() {
                session.rounds.push(Round::new(0));
            }
        }
        (Voting, Weighting) => {
            let round = session.current_round().expect("open round");
            check_quorum(session, &round.ballots, |b| &b.analyst_id, "ballots")?;
            let shortlist = shortlist_criteria(
                &session.criterion_ids(),
                &round.ballots,
                session.config.vote_threshold,
                round.ballots.len(),
            )?;
            session.current_round_mut().expect("open round").shortlist = Some(shortlist);
        }
        (Weighting, Scoring) => {
            let round = session.current_round().expect("open round");
            check_quorum(session, &round.sheets, |s| &s.analyst_id, "criterion scores")?;
        }
        (Scoring, Computed) => {
            let round = session.current_round().expect("open round");
            check_quorum(session, &round.matrices, |m| &m.analyst_id, "source matrices")?;
            let result = compute_ranking(&round_input(session, round), &session.config)?;
            session.current_round_mut().expect("open round").result = Some(result);
        }
        (Computed, Scoring) => {
            let prev = session.current_round().expect("computed implies a round").clone();
            session.rounds.push(Round {
                index: prev.index + 1,
                ballots: prev.ballots,
                shortlist: prev.shortlist,
                sheets: prev.sheets,
                matrices: prev.matrices,
                result: None,
                notes: String::new(),
                annotations: Default::default(),
            });
        }
        _ => unreachable!("transition table checked above"),
    }
    session.state = target;
    Ok(())
}

//! Domain types shared by every part of the method: the problem statement,
//! the three catalogs (analysts, criteria, sources), the ordinal scales and
//! the per-analyst artifacts collected in each round.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::engine::RankingResult;

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

string_id!(
    /// Identifier of an analyst, unique within a session.
    AnalystId
);
string_id!(
    /// Identifier of a criterion, unique within a session.
    CriterionId
);
string_id!(
    /// Identifier of a requirements source, unique within a session.
    SourceId
);
string_id!(SessionId);

/// Free-form description of the decision problem.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemStatement {
    pub current_situation: String,
    pub desired_situation: String,
    /// "Improve X by Y".
    pub gap_quantification: String,
    pub candidate_solutions: Vec<String>,
    #[serde(default)]
    pub trigger: String,
}

impl ProblemStatement {
    /// Names of the mandatory fields that are blank.
    pub fn missing_fields(&self) -> Vec<&'static str> {
        let mut missing = Vec::new();
        if self.current_situation.trim().is_empty() {
            missing.push("current_situation");
        }
        if self.desired_situation.trim().is_empty() {
            missing.push("desired_situation");
        }
        if self.gap_quantification.trim().is_empty() {
            missing.push("gap_quantification");
        }
        if self.candidate_solutions.iter().all(|s| s.trim().is_empty()) {
            missing.push("candidate_solutions");
        }
        missing
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Analyst {
    pub id: AnalystId,
    pub display_name: String,
    #[serde(default)]
    pub role_label: String,
}

impl Analyst {
    pub fn new(id: impl Into<String>) -> Self {
        let id = id.into();
        Self { display_name: id.clone(), id: AnalystId(id), role_label: String::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Criterion {
    pub id: CriterionId,
    pub name: String,
    #[serde(default)]
    pub category: String,
    #[serde(default)]
    pub description: String,
}

impl Criterion {
    pub fn new(id: impl Into<String>) -> Self {
        let id = id.into();
        Self { name: id.clone(), id: CriterionId(id), category: String::new(), description: String::new() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceCategory {
    InternalStakeholder,
    ExternalStakeholder,
    Analytics,
    Report,
    Environment,
    #[default]
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSource {
    pub id: SourceId,
    pub name: String,
    #[serde(default)]
    pub category: SourceCategory,
    #[serde(default)]
    pub description: String,
}

impl DataSource {
    pub fn new(id: impl Into<String>) -> Self {
        let id = id.into();
        Self { name: id.clone(), id: SourceId(id), category: SourceCategory::Other, description: String::new() }
    }
}

/// A score on the six-level ordinal scale used for both criteria relevance
/// and source evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub struct OrdinalScore(u8);

impl OrdinalScore {
    pub const MAX: u8 = 5;

    pub fn new(value: u8) -> Option<Self> {
        (value <= Self::MAX).then_some(Self(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0)
    }

    /// Meaning of the score when rating how relevant a criterion is.
    pub fn criterion_meaning(self) -> &'static str {
        match self.0 {
            0 => "Not relevant at all",
            1 => "Marginally relevant",
            2 => "Somewhat relevant",
            3 => "Moderately relevant",
            4 => "Very relevant",
            _ => "Most relevant",
        }
    }

    /// Meaning of the score when rating a source against a criterion.
    pub fn source_meaning(self) -> &'static str {
        match self.0 {
            0 => "Does not favorably contribute to the criterion at all",
            1 => "Provides a marginal favorable contribution",
            2 => "Provides a somewhat favorable contribution",
            3 => "Provides a moderately favorable contribution",
            4 => "Provides a favorable contribution",
            _ => "Most favorably contributes to the criterion",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("score {0} is outside the 0-5 scale")]
pub struct OutOfScale(pub i64);

impl TryFrom<i64> for OrdinalScore {
    type Error = OutOfScale;

    fn try_from(v: i64) -> Result<Self, Self::Error> {
        u8::try_from(v).ok().and_then(OrdinalScore::new).ok_or(OutOfScale(v))
    }
}

impl From<OrdinalScore> for u8 {
    fn from(s: OrdinalScore) -> u8 {
        s.0
    }
}

impl fmt::Display for OrdinalScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One analyst's relevant / not-relevant votes over the full criteria list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionBallot {
    pub analyst_id: AnalystId,
    pub votes: BTreeMap<CriterionId, bool>,
}

/// One analyst's relevance scores over the shortlisted criteria.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionScoreSheet {
    pub analyst_id: AnalystId,
    pub scores: BTreeMap<CriterionId, OrdinalScore>,
}

impl CriterionScoreSheet {
    pub fn is_all_zero(&self) -> bool {
        self.scores.values().all(|s| s.value() == 0)
    }
}

/// One analyst's evaluation of every source against every shortlisted
/// criterion. `None` cells are explicitly missing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceScoreMatrix {
    pub analyst_id: AnalystId,
    pub sources: Vec<SourceId>,
    pub criteria: Vec<CriterionId>,
    /// Row per source, column per criterion.
    pub cells: Vec<Vec<Option<OrdinalScore>>>,
}

impl SourceScoreMatrix {
    pub fn get(&self, source: &SourceId, criterion: &CriterionId) -> Option<Option<OrdinalScore>> {
        let r = self.sources.iter().position(|s| s == source)?;
        let c = self.criteria.iter().position(|k| k == criterion)?;
        self.cells.get(r).and_then(|row| row.get(c)).copied()
    }

    pub fn is_rectangular(&self) -> bool {
        self.cells.len() == self.sources.len() && self.cells.iter().all(|row| row.len() == self.criteria.len())
    }

    pub fn missing_count(&self) -> usize {
        self.cells.iter().flatten().filter(|c| c.is_none()).count()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    Sum,
    Max,
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::Sum => "sum",
            Normalization::Max => "max",
        })
    }
}

/// Cutoff applied to summed criterion votes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "policy", content = "min_votes", rename_all = "kebab-case")]
pub enum VoteThreshold {
    /// Keep criteria with more than k/2 votes.
    #[default]
    StrictMajority,
    AtLeast(u32),
    AcceptAll,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingValuePolicy {
    #[default]
    ImputeAnalystAverage,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MethodConfig {
    pub normalization: Normalization,
    pub vote_threshold: VoteThreshold,
    pub scale_final: bool,
    pub missing_value_policy: MissingValuePolicy,
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self {
            normalization: Normalization::Sum,
            vote_threshold: VoteThreshold::StrictMajority,
            scale_final: true,
            missing_value_policy: MissingValuePolicy::ImputeAnalystAverage,
        }
    }
}

/// How many analysts must have submitted before a step may be closed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "quorum", content = "count", rename_all = "kebab-case")]
pub enum Quorum {
    #[default]
    All,
    AtLeast(usize),
}

impl Quorum {
    pub fn is_met(self, submitted: usize, total: usize) -> bool {
        match self {
            Quorum::All => submitted >= total,
            Quorum::AtLeast(n) => submitted >= n.min(total),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionState {
    Drafting,
    Voting,
    Weighting,
    Scoring,
    Computed,
    Closed,
}

impl SessionState {
    /// Whether the session state machine permits `self -> to`.
    pub fn can_transition_to(self, to: SessionState) -> bool {
        use SessionState::*;
        matches!(
            (self, to),
            (Drafting, Voting) | (Voting, Weighting) | (Weighting, Scoring) | (Scoring, Computed) | (Computed, Scoring)
        ) || (to == Closed && self != Closed)
    }
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SessionState::Drafting => "drafting",
            SessionState::Voting => "voting",
            SessionState::Weighting => "weighting",
            SessionState::Scoring => "scoring",
            SessionState::Computed => "computed",
            SessionState::Closed => "closed",
        };
        f.write_str(s)
    }
}

/// Human-entered explanation attached to a flagged discrepancy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscrepancyCause {
    Mistake,
    Misunderstanding,
    DifferentPerspective,
    Unresolved,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub index: usize,
    pub ballots: Vec<CriterionBallot>,
    /// Criteria kept after voting, in catalog order.
    #[serde(default)]
    pub shortlist: Option<Vec<CriterionId>>,
    pub sheets: Vec<CriterionScoreSheet>,
    pub matrices: Vec<SourceScoreMatrix>,
    #[serde(default)]
    pub result: Option<RankingResult>,
    #[serde(default)]
    pub notes: String,
    /// Keyed by source or criterion id.
    #[serde(default)]
    pub annotations: BTreeMap<String, DiscrepancyCause>,
}

impl Round {
    pub fn new(index: usize) -> Self {
        Self { index, ..Self::default() }
    }

    pub fn is_completed(&self) -> bool {
        self.result.is_some()
    }

    pub fn ballot(&self, analyst: &AnalystId) -> Option<&CriterionBallot> {
        self.ballots.iter().find(|b| &b.analyst_id == analyst)
    }

    pub fn sheet(&self, analyst: &AnalystId) -> Option<&CriterionScoreSheet> {
        self.sheets.iter().find(|s| &s.analyst_id == analyst)
    }

    pub fn matrix(&self, analyst: &AnalystId) -> Option<&SourceScoreMatrix> {
        self.matrices.iter().find(|m| &m.analyst_id == analyst)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: SessionId,
    pub problem: ProblemStatement,
    pub analysts: Vec<Analyst>,
    pub criteria: Vec<Criterion>,
    pub sources: Vec<DataSource>,
    pub config: MethodConfig,
    #[serde(default)]
    pub quorum: Quorum,
    pub rounds: Vec<Round>,
    pub state: SessionState,
}

impl Session {
    pub fn new(id: SessionId, problem: ProblemStatement, config: MethodConfig) -> Self {
        Self {
            id,
            problem,
            analysts: Vec::new(),
            criteria: Vec::new(),
            sources: Vec::new(),
            config,
            quorum: Quorum::All,
            rounds: Vec::new(),
            state: SessionState::Drafting,
        }
    }

    pub fn current_round(&self) -> Option<&Round> {
        self.rounds.last()
    }

    pub fn current_round_mut(&mut self) -> Option<&mut Round> {
        self.rounds.last_mut()
    }

    pub fn analyst_ids(&self) -> Vec<AnalystId> {
        self.analysts.iter().map(|a| a.id.clone()).collect()
    }

    pub fn criterion_ids(&self) -> Vec<CriterionId> {
        self.criteria.iter().map(|c| c.id.clone()).collect()
    }

    pub fn source_ids(&self) -> Vec<SourceId> {
        self.sources.iter().map(|s| s.id.clone()).collect()
    }

    pub fn has_analyst(&self, id: &AnalystId) -> bool {
        self.analysts.iter().any(|a| &a.id == id)
    }
}

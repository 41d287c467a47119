//! Group ranking of requirements sources.
//!
//! A panel of analysts votes criteria onto a shortlist, weights them on a
//! 0-5 scale and scores every candidate source against every shortlisted
//! criterion. The [`engine`] turns those inputs into per-analyst and group
//! rankings; [`discrepancy`] measures where the analysts disagree so the
//! group can discuss and rescore in a new round. Sessions are persisted by
//! [`store`], and [`io`] moves round inputs and results in and out as CSV
//! and JSON.

pub mod discrepancy;
pub mod engine;
pub mod io;
pub mod model;
pub mod store;
pub mod validate;

pub use discrepancy::{
    build_report, classify_discrepancy, classify_relevance, pairwise_agreement, per_criterion_drilldown,
    round_convergence, weight_drilldown, Discrepancy, DiscrepancyReport, FuzzyBands, Relevance,
};
pub use engine::{compute_ranking, EngineError, RankingResult, RoundInput};
pub use model::*;
pub use store::{FileStore, StoreError, StoreRecord, Submission, SCHEMA_VERSION};
pub use validate::{validate_session, Violation, ViolationKind};

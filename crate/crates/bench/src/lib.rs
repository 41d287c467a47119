//! Synthetic panels for the criterion benchmarks.

use dsrank_core::engine::RoundInput;
use dsrank_core::{AnalystId, CriterionId, CriterionScoreSheet, OrdinalScore, SourceId, SourceScoreMatrix};

/// A deterministic panel of `analysts` x `sources` x `criteria` with every
/// column nonzero. Scores come from a small linear congruential sequence.
pub fn synthetic_round(analysts: usize, sources: usize, criteria: usize) -> RoundInput {
    let mut state: u64 = 0x2545_f491_4f6c_dd1d;
    let mut next = move || {
        state = state.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
        OrdinalScore::new(((state >> 33) % 5 + 1) as u8).expect("1..=5")
    };
    let criteria_ids: Vec<CriterionId> = (0..criteria).map(|j| CriterionId(format!("c{j}"))).collect();
    let source_ids: Vec<SourceId> = (0..sources).map(|d| SourceId(format!("d{d}"))).collect();
    let mut sheets = Vec::with_capacity(analysts);
    let mut matrices = Vec::with_capacity(analysts);
    for i in 0..analysts {
        let analyst_id = AnalystId(format!("a{i}"));
        sheets.push(CriterionScoreSheet {
            analyst_id: analyst_id.clone(),
            scores: criteria_ids.iter().map(|c| (c.clone(), next())).collect(),
        });
        matrices.push(SourceScoreMatrix {
            analyst_id,
            sources: source_ids.clone(),
            criteria: criteria_ids.clone(),
            cells: (0..sources).map(|_| (0..criteria).map(|_| Some(next())).collect()).collect(),
        });
    }
    RoundInput { criteria: criteria_ids, sources: source_ids, sheets, matrices }
}

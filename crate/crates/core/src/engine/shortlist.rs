use crate::model::{CriterionBallot, CriterionId, VoteThreshold};

use super::EngineError;

/// Summed votes per criterion, in the given criterion order. A criterion
/// absent from a ballot counts as a "not relevant" vote.
pub fn vote_counts(criteria: &[CriterionId], ballots: &[CriterionBallot]) -> Vec<(CriterionId, u32)> {
    criteria
        .iter()
        .map(|c| {
            let votes = ballots.iter().filter(|b| b.votes.get(c).copied().unwrap_or(false)).count();
            (c.clone(), votes as u32)
        })
        .collect()
}

/// Criteria kept by the vote threshold, in catalog order.
///
/// `analysts` is the panel size k; strict majority keeps criteria whose vote
/// count exceeds k/2.
pub fn shortlist_criteria(
    criteria: &[CriterionId],
    ballots: &[CriterionBallot],
    policy: VoteThreshold,
    analysts: usize,
) -> Result<Vec<CriterionId>, EngineError> {
    if analysts == 0 {
        return Err(EngineError::NoAnalysts);
    }
    if let VoteThreshold::AtLeast(t) = policy {
        if t == 0 || t as usize > analysts {
            return Err(EngineError::InvalidThreshold { threshold: t, analysts });
        }
    }
    let kept: Vec<CriterionId> = vote_counts(criteria, ballots)
        .into_iter()
        .filter(|(_, votes)| match policy {
            VoteThreshold::StrictMajority => 2 * (*votes as usize) > analysts,
            VoteThreshold::AtLeast(t) => *votes >= t,
            VoteThreshold::AcceptAll => true,
        })
        .map(|(c, _)| c)
        .collect();
    if kept.is_empty() {
        return Err(EngineError::EmptyShortlist);
    }
    Ok(kept)
}

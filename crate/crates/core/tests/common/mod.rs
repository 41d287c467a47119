//! Plain-array fixtures and a naive reference computation shared by the
//! integration tests.

#![allow(dead_code)]

use dsrank_core::{
    AnalystId, CriterionId, CriterionScoreSheet, OrdinalScore, RoundInput, SourceId, SourceScoreMatrix,
};
use proptest::prelude::*;

/// One round as raw numbers: `sheets[i][j]`, `matrices[i][r][j]`.
#[derive(Debug, Clone)]
pub struct Instance {
    pub sheets: Vec<Vec<u8>>,
    pub matrices: Vec<Vec<Vec<u8>>>,
}

impl Instance {
    pub fn analysts(&self) -> usize {
        self.sheets.len()
    }
    pub fn sources(&self) -> usize {
        self.matrices[0].len()
    }
    pub fn criteria(&self) -> usize {
        self.sheets[0].len()
    }

    /// Forces every sheet and every matrix column to have a nonzero entry.
    pub fn repaired(mut self) -> Self {
        for s in &mut self.sheets {
            if s.iter().all(|&v| v == 0) {
                s[0] = 1;
            }
        }
        let m = self.criteria();
        for mat in &mut self.matrices {
            for j in 0..m {
                if mat.iter().all(|row| row[j] == 0) {
                    mat[0][j] = 1;
                }
            }
        }
        self
    }

    pub fn input(&self) -> RoundInput {
        let criteria = ids::<CriterionId>("c", self.criteria());
        let sources = ids::<SourceId>("d", self.sources());
        let score = |v: u8| OrdinalScore::new(v).unwrap();
        RoundInput {
            criteria: criteria.clone(),
            sources: sources.clone(),
            sheets: self
                .sheets
                .iter()
                .enumerate()
                .map(|(i, s)| CriterionScoreSheet {
                    analyst_id: AnalystId(format!("a{i}")),
                    scores: criteria.iter().cloned().zip(s.iter().map(|&v| score(v))).collect(),
                })
                .collect(),
            matrices: self
                .matrices
                .iter()
                .enumerate()
                .map(|(i, m)| SourceScoreMatrix {
                    analyst_id: AnalystId(format!("a{i}")),
                    sources: sources.clone(),
                    criteria: criteria.clone(),
                    cells: m.iter().map(|row| row.iter().map(|&v| Some(score(v))).collect()).collect(),
                })
                .collect(),
        }
    }
}

pub fn ids<T: From<String>>(prefix: &str, n: usize) -> Vec<T> {
    (0..n).map(|i| T::from(format!("{prefix}{i}"))).collect()
}

/// Random instance with `k` analysts, `n` sources, `m` criteria and scores
/// drawn from `lo..=hi`, repaired so no sheet or column is all zero.
pub fn instance_in(k: std::ops::RangeInclusive<usize>, n: std::ops::RangeInclusive<usize>, m: std::ops::RangeInclusive<usize>, hi: u8) -> impl Strategy<Value = Instance> {
    (k, n, m)
        .prop_flat_map(move |(k, n, m)| {
            (
                prop::collection::vec(prop::collection::vec(0..=hi, m), k),
                prop::collection::vec(prop::collection::vec(prop::collection::vec(0..=hi, m), n), k),
            )
        })
        .prop_map(|(sheets, matrices)| Instance { sheets, matrices }.repaired())
}

pub fn instance() -> impl Strategy<Value = Instance> {
    instance_in(1..=4, 1..=5, 1..=4, 5)
}

/// Straight loops over the raw numbers: per-analyst rankings and their mean.
#[allow(clippy::needless_range_loop)]
pub fn naive(inst: &Instance, by_max: bool) -> (Vec<Vec<f64>>, Vec<f64>) {
    let (k, n, m) = (inst.analysts(), inst.sources(), inst.criteria());
    let mut per = vec![vec![0.0; n]; k];
    for i in 0..k {
        let w: Vec<f64> = inst.sheets[i].iter().map(|&v| v as f64).collect();
        let wd = if by_max { w.iter().cloned().fold(0.0, f64::max) } else { w.iter().sum() };
        for j in 0..m {
            let col: Vec<f64> = (0..n).map(|r| inst.matrices[i][r][j] as f64).collect();
            let cd = if by_max { col.iter().cloned().fold(0.0, f64::max) } else { col.iter().sum() };
            for r in 0..n {
                per[i][r] += col[r] / cd * (w[j] / wd);
            }
        }
    }
    let group = (0..n).map(|r| per.iter().map(|y| y[r]).sum::<f64>() / k as f64).collect();
    (per, group)
}

pub fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use dsrank_core::discrepancy::{convergence_series, RoundConvergence};
use dsrank_core::io::{import_round, read_bundle_file, to_stable_json};
use dsrank_core::store::replay_round;
use dsrank_core::{compute_ranking, MethodConfig, RankingResult, Session, StoreRecord};
use serde_json::json;

use crate::Failure;

fn load_session(path: &Path) -> Result<Session, Failure> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("zip")) {
        return read_bundle_file(path).map(|(s, _)| s).map_err(|e| Failure::validation(format!("{}: {e}", path.display())));
    }
    let text = fs::read_to_string(path).map_err(|e| Failure::environment(format!("{}: {e}", path.display())))?;
    serde_json::from_str::<StoreRecord>(&text)
        .map(|r| r.session)
        .or_else(|_| serde_json::from_str::<Session>(&text))
        .map_err(|e| Failure::validation(format!("{}: not a session file: {e}", path.display())))
}

/// Results per round from a session, recomputing rounds that hold inputs
/// but no stored result.
fn session_results(session: &Session) -> Vec<(usize, RankingResult)> {
    session
        .rounds
        .iter()
        .filter_map(|r| match &r.result {
            Some(res) => Some((r.index, res.clone())),
            None => replay_round(session, r.index).ok().map(|res| (r.index, res)),
        })
        .collect()
}

fn dir_results(dirs: &[PathBuf], config: &MethodConfig) -> Result<Vec<(usize, RankingResult)>, Failure> {
    dirs.iter()
        .enumerate()
        .map(|(i, dir)| {
            let round = import_round(dir).map_err(|e| Failure::validation(e.to_string()))?;
            let input = round.round_input(config.vote_threshold).map_err(Failure::from_engine)?;
            let result = compute_ranking(&input, config)
                .map_err(|e| Failure { message: format!("{}: {e}", dir.display()), ..Failure::from_engine(e) })?;
            Ok((i, result))
        })
        .collect()
}

fn ratio(prev: f64, next: f64) -> Option<f64> {
    (prev > 0.0).then(|| next / prev)
}

pub fn run(paths: &[PathBuf], config: &MethodConfig, out: Option<&Path>) -> Result<(), Failure> {
    let results = if paths.len() == 1 && paths[0].is_file() {
        session_results(&load_session(&paths[0])?)
    } else {
        dir_results(paths, config)?
    };
    if results.is_empty() {
        return Err(Failure::validation("no computed rounds to compare"));
    }
    let series: Vec<RoundConvergence> = convergence_series(results.iter().map(|(i, r)| (*i, r)));

    println!("{:>5}  {:>13}  {:>8}", "round", "mean distance", "ratio");
    for (k, s) in series.iter().enumerate() {
        let r = if k == 0 { None } else { ratio(series[k - 1].mean_distance, s.mean_distance) };
        println!("{:>5}  {:>13.4}  {:>8}", s.round, s.mean_distance, r.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into()));
    }

    let mut pairs: BTreeMap<(String, String), Vec<Option<f64>>> = BTreeMap::new();
    for (k, s) in series.iter().enumerate() {
        for p in &s.pairs {
            let row = pairs.entry((p.first.to_string(), p.second.to_string())).or_insert_with(|| vec![None; series.len()]);
            row[k] = Some(p.distance);
        }
    }
    if !pairs.is_empty() {
        println!();
        print!("{:<24}", "pair");
        for s in &series {
            print!(" {:>9}", format!("round {}", s.round));
        }
        println!();
        for ((a, b), row) in &pairs {
            print!("{:<24}", format!("{a} / {b}"));
            for d in row {
                print!(" {:>9}", d.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into()));
            }
            println!();
        }
    }

    if let Some(path) = out {
        let ratios: Vec<_> = series
            .windows(2)
            .map(|w| json!({ "from": w[0].round, "to": w[1].round, "ratio": ratio(w[0].mean_distance, w[1].mean_distance) }))
            .collect();
        let body = to_stable_json(&json!({ "series": series, "ratios": ratios }))
            .map_err(|e| Failure::environment(e.to_string()))?;
        fs::write(path, body).map_err(|e| Failure::environment(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

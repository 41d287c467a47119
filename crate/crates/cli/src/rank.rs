use std::fs;
use std::path::Path;

use dsrank_core::engine::{shortlist_criteria, vote_counts};
use dsrank_core::io::{chart_series, chart_series_json, discrepancies_json, import_round, import_votes, result_json};
use dsrank_core::{build_report, compute_ranking, EngineError, FuzzyBands, MethodConfig, VoteThreshold};

use crate::Failure;

fn label<T: std::fmt::Debug>(v: Option<T>) -> String {
    v.map(|x| format!("{x:?}").to_lowercase()).unwrap_or_else(|| "-".into())
}

pub fn run_rank(input: &Path, config: &MethodConfig, out: Option<&Path>) -> Result<(), Failure> {
    let round = import_round(input).map_err(|e| Failure::validation(e.to_string()))?;
    let round_input = round.round_input(config.vote_threshold).map_err(Failure::from_engine)?;
    let result = compute_ranking(&round_input, config).map_err(Failure::from_engine)?;
    let bands = FuzzyBands::default();
    let report = build_report(&result, &bands, &Default::default()).map_err(|e| Failure::validation(e.to_string()))?;

    if let Some(dir) = out {
        let write = |name: &str, body: String| {
            fs::write(dir.join(name), body).map_err(|e| Failure::environment(format!("{}: {e}", dir.join(name).display())))
        };
        fs::create_dir_all(dir).map_err(|e| Failure::environment(format!("{}: {e}", dir.display())))?;
        write("result.json", result_json(&result))?;
        write("discrepancies.json", discrepancies_json(&report))?;
        write("charts.json", chart_series_json(&chart_series(&result, &report)))?;
    }

    println!(
        "{} analysts, {} criteria shortlisted, {} sources, {} normalization{}",
        result.analysts.len(),
        result.criteria.len(),
        result.sources.len(),
        result.config.normalization,
        if result.degenerate { " (all scores zero, not scaled)" } else { "" }
    );
    println!();
    println!("{:>4}  {:<24} {:>8} {:>8}  {:<9} {:>8}  discrepancy", "rank", "source", "Y", "scaled", "relevance", "spread");
    for r in &result.ranks {
        let spread = report.sources.iter().find(|s| s.source == r.source);
        println!(
            "{:>4}  {:<24} {:>8.4} {:>8.4}  {:<9} {:>8}  {}",
            r.rank,
            r.source.as_str(),
            r.score,
            r.scaled,
            label(spread.and_then(|s| s.relevance_class)),
            spread.map(|s| format!("{:.4}", s.spread)).unwrap_or_else(|| "-".into()),
            label(spread.and_then(|s| s.discrepancy)),
        );
    }
    let pairs = report.pairwise.pairs();
    if !pairs.is_empty() {
        println!();
        println!("pairwise distance");
        for p in &pairs {
            println!("  {:<12} {:<12} {:>8.4}", p.first.as_str(), p.second.as_str(), p.distance);
        }
        println!("  mean{:>30.4}", report.mean_distance);
    }
    if !result.imputed.is_empty() {
        println!();
        println!("imputed cells");
        for c in &result.imputed {
            println!("  {:<12} {:<24} {:<16} {:>8.4}", c.analyst_id.as_str(), c.source.as_str(), c.criterion.as_str(), c.value);
        }
    }
    Ok(())
}

pub fn run_shortlist(votes: &Path, threshold: VoteThreshold) -> Result<(), Failure> {
    let (criteria, ballots) = import_votes(votes).map_err(|e| Failure::validation(e.to_string()))?;
    let counts = vote_counts(&criteria, &ballots);
    let outcome = shortlist_criteria(&criteria, &ballots, threshold, ballots.len());
    let kept = match &outcome {
        Ok(kept) => kept.clone(),
        Err(EngineError::EmptyShortlist) => Vec::new(),
        Err(e) => return Err(Failure::from_engine(e.clone())),
    };
    println!("{} analysts", ballots.len());
    println!("{:<24} {:>5}  decision", "criterion", "votes");
    for (c, n) in &counts {
        println!("{:<24} {:>5}  {}", c.as_str(), n, if kept.contains(c) { "kept" } else { "dropped" });
    }
    outcome.map(|_| ()).map_err(Failure::from_engine)
}

//! Acceptance criteria A1-A9. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use dsrank_core::engine::{impute_missing, shortlist_criteria};
use dsrank_core::io::{export_round, import_round, result_json, ImportedRound};
use dsrank_core::{
    classify_discrepancy, classify_relevance, compute_ranking, pairwise_agreement, round_convergence, Analyst,
    AnalystId, Criterion, CriterionBallot, CriterionId, CriterionScoreSheet, DataSource, Discrepancy, EngineError,
    FileStore, FuzzyBands, MethodConfig, Normalization, OrdinalScore, ProblemStatement, RankingResult, Relevance,
    RoundInput, SessionState, SourceId, SourceScoreMatrix, Submission, VoteThreshold,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

type Outcome = Result<String, String>;

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {{
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    }};
}

// ---------------------------------------------------------------- fixtures

/// Raw round: `sheets[i][j]`, `cells[i][r][j]` (None = missing).
#[derive(Debug, Clone)]
struct Raw {
    sheets: Vec<Vec<u8>>,
    cells: Vec<Vec<Vec<Option<u8>>>>,
}

impl Raw {
    fn k(&self) -> usize {
        self.sheets.len()
    }
    fn n(&self) -> usize {
        self.cells[0].len()
    }
    fn m(&self) -> usize {
        self.sheets[0].len()
    }

    fn full(sheets: Vec<Vec<u8>>, mats: Vec<Vec<Vec<u8>>>) -> Self {
        let cells = mats.into_iter().map(|m| m.into_iter().map(|r| r.into_iter().map(Some).collect()).collect()).collect();
        Raw { sheets, cells }
    }

    fn value(&self, i: usize, r: usize, j: usize) -> f64 {
        self.cells[i][r][j].expect("complete instance") as f64
    }

    fn input(&self) -> RoundInput {
        let criteria: Vec<CriterionId> = (0..self.m()).map(|j| CriterionId(format!("c{}", j + 1))).collect();
        let sources: Vec<SourceId> = (0..self.n()).map(|r| SourceId(format!("d{}", r + 1))).collect();
        let score = |v: u8| OrdinalScore::new(v).unwrap();
        RoundInput {
            criteria: criteria.clone(),
            sources: sources.clone(),
            sheets: self
                .sheets
                .iter()
                .enumerate()
                .map(|(i, s)| CriterionScoreSheet {
                    analyst_id: AnalystId(format!("A{}", i + 1)),
                    scores: criteria.iter().cloned().zip(s.iter().map(|&v| score(v))).collect(),
                })
                .collect(),
            matrices: self
                .cells
                .iter()
                .enumerate()
                .map(|(i, m)| SourceScoreMatrix {
                    analyst_id: AnalystId(format!("A{}", i + 1)),
                    sources: sources.clone(),
                    criteria: criteria.clone(),
                    cells: m.iter().map(|row| row.iter().map(|v| v.map(score)).collect()).collect(),
                })
                .collect(),
        }
    }

    fn imported(&self) -> ImportedRound {
        let input = self.input();
        ImportedRound {
            analysts: input.sheets.iter().map(|s| s.analyst_id.clone()).collect(),
            criteria: input.criteria.clone(),
            sources: input.sources.clone(),
            ballots: input
                .sheets
                .iter()
                .map(|s| CriterionBallot {
                    analyst_id: s.analyst_id.clone(),
                    votes: input.criteria.iter().map(|c| (c.clone(), true)).collect(),
                })
                .collect(),
            sheets: input.sheets.clone(),
            matrices: input.matrices.clone(),
        }
    }
}

fn a2_fixture() -> Raw {
    Raw::full(vec![vec![3, 5], vec![4, 2]], vec![vec![vec![4, 1], vec![2, 3]], vec![vec![5, 5], vec![0, 5]]])
}

/// Random complete instance with scores in `0..=hi`, resampled until no
/// sheet and no matrix column is all zero.
fn random_raw(rng: &mut ChaCha8Rng, k: usize, n: usize, m: usize, hi: u8) -> Raw {
    loop {
        let sheets: Vec<Vec<u8>> = (0..k).map(|_| (0..m).map(|_| rng.gen_range(0..=hi)).collect()).collect();
        let mats: Vec<Vec<Vec<u8>>> =
            (0..k).map(|_| (0..n).map(|_| (0..m).map(|_| rng.gen_range(0..=hi)).collect()).collect()).collect();
        let sheets_ok = sheets.iter().all(|s| s.iter().any(|&v| v > 0));
        let cols_ok = mats.iter().all(|mat| (0..m).all(|j| mat.iter().any(|row| row[j] > 0)));
        if sheets_ok && cols_ok {
            return Raw::full(sheets, mats);
        }
    }
}

fn random_small(rng: &mut ChaCha8Rng, hi: u8) -> Raw {
    let (k, n, m) = (rng.gen_range(1..=3), rng.gen_range(1..=4), rng.gen_range(1..=3));
    random_raw(rng, k, n, m, hi)
}

/// Per-analyst and group rankings by straight loops over the raw numbers.
#[allow(clippy::needless_range_loop)]
fn oracle(raw: &Raw, by_max: bool) -> (Vec<Vec<f64>>, Vec<f64>) {
    let (k, n, m) = (raw.k(), raw.n(), raw.m());
    let mut y = vec![vec![0.0; n]; k];
    for i in 0..k {
        let mut wdiv = 0.0f64;
        for j in 0..m {
            let w = raw.sheets[i][j] as f64;
            wdiv = if by_max { wdiv.max(w) } else { wdiv + w };
        }
        for j in 0..m {
            let mut cdiv = 0.0f64;
            for r in 0..n {
                let u = raw.value(i, r, j);
                cdiv = if by_max { cdiv.max(u) } else { cdiv + u };
            }
            for r in 0..n {
                y[i][r] += raw.value(i, r, j) / cdiv * (raw.sheets[i][j] as f64 / wdiv);
            }
        }
    }
    let mut group = vec![0.0; n];
    for r in 0..n {
        for yi in &y {
            group[r] += yi[r];
        }
        group[r] /= k as f64;
    }
    (y, group)
}

fn config(norm: Normalization) -> MethodConfig {
    MethodConfig { normalization: norm, ..MethodConfig::default() }
}

fn rank(raw: &Raw, norm: Normalization) -> RankingResult {
    compute_ranking(&raw.input(), &config(norm)).expect("valid instance")
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// ---------------------------------------------------------------- criteria

fn a1_classifiers() -> Outcome {
    let b = FuzzyBands::default();
    let rel = [(0.717, Relevance::High), (0.475, Relevance::Medium), (0.180, Relevance::Low)];
    for (x, want) in rel {
        let got = classify_relevance(x, &b).map_err(|e| e.to_string())?;
        check!(got == want, "relevance({x}) = {got:?}, want {want:?}");
    }
    let dis = [(0.567, Discrepancy::Moderate), (0.000, Discrepancy::Negligible)];
    for (x, want) in dis {
        let got = classify_discrepancy(x, &b).map_err(|e| e.to_string())?;
        check!(got == want, "discrepancy({x}) = {got:?}, want {want:?}");
    }
    Ok("5 published values in their bands".into())
}

fn a2_fixture_oracle() -> Outcome {
    // Hand-traced with exact fractions before the engine existed.
    let y1 = [13.0 / 32.0, 19.0 / 32.0];
    let y2 = [5.0 / 6.0, 1.0 / 6.0];
    let group = [119.0 / 192.0, 73.0 / 192.0];
    let scaled = [1.0, 73.0 / 119.0];

    let r = rank(&a2_fixture(), Normalization::Sum);
    let errs = [
        max_diff(&r.per_analyst[0].values, &y1),
        max_diff(&r.per_analyst[1].values, &y2),
        max_diff(&r.group, &group),
        max_diff(&r.group_scaled, &scaled),
    ];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    check!(worst <= 1e-9, "max deviation {worst:e} (y1, y2, Y, scaled: {errs:?})");
    check!(r.ranks[0].source.as_str() == "d1" && r.ranks[0].rank == 1, "d1 should rank first");
    Ok(format!("y1, y2, Y, scaled Y within {worst:.1e}"))
}

fn a3_brute_force() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA3);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let raw = random_small(&mut rng, 5);
        for norm in [Normalization::Sum, Normalization::Max] {
            let r = rank(&raw, norm);
            let (y, group) = oracle(&raw, norm == Normalization::Max);
            let mut d = max_diff(&r.group, &group);
            for (i, yi) in y.iter().enumerate() {
                d = d.max(max_diff(&r.per_analyst[i].values, yi));
            }
            check!(d <= 1e-9, "case {case} ({norm}) deviates by {d:e}: {raw:?}");
            worst = worst.max(d);
        }
    }
    Ok(format!("1000 instances x 2 normalizations, max deviation {worst:.1e}"))
}

const A4_CASES: usize = 250;

fn a4_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA4);
    let norms = [Normalization::Sum, Normalization::Max];

    // Column scale: doubling one analyst's column changes nothing.
    for case in 0..A4_CASES {
        let raw = random_small(&mut rng, 2);
        let norm = norms[case % 2];
        let (i, j) = (rng.gen_range(0..raw.k()), rng.gen_range(0..raw.m()));
        let mut scaled = raw.clone();
        for row in &mut scaled.cells[i] {
            row[j] = row[j].map(|v| v * 2);
        }
        let d = max_diff(&rank(&raw, norm).group, &rank(&scaled, norm).group);
        check!(d <= 1e-9, "column scale, case {case}: {d:e}");
    }

    // Sheet scale: doubling an analyst's weights changes nothing.
    for case in 0..A4_CASES {
        let raw = random_small(&mut rng, 2);
        let norm = norms[case % 2];
        let i = rng.gen_range(0..raw.k());
        let mut scaled = raw.clone();
        scaled.sheets[i].iter_mut().for_each(|w| *w *= 2);
        let d = max_diff(&rank(&raw, norm).group, &rank(&scaled, norm).group);
        check!(d <= 1e-9, "sheet scale, case {case}: {d:e}");
    }

    // Group mean and scaled argmax.
    for case in 0..A4_CASES {
        let raw = random_small(&mut rng, 5);
        let r = rank(&raw, norms[case % 2]);
        for s in 0..raw.n() {
            let mean = r.per_analyst.iter().map(|y| y.values[s]).sum::<f64>() / raw.k() as f64;
            check!((mean - r.group[s]).abs() <= 1e-12, "group mean, case {case}");
        }
        let max = r.group.iter().cloned().fold(f64::MIN, f64::max);
        let top = r.group.iter().position(|&v| v == max).unwrap();
        check!(r.group_scaled[top] == 1.0, "scaled argmax, case {case}: {}", r.group_scaled[top]);
        check!(r.group_scaled.iter().all(|&v| v <= 1.0), "scaled above 1, case {case}");
    }

    // Permutations: sources permute outputs, analysts leave Y alone.
    for case in 0..A4_CASES {
        let raw = random_small(&mut rng, 5);
        let norm = norms[case % 2];
        let mut perm: Vec<usize> = (0..raw.n()).collect();
        for a in (1..perm.len()).rev() {
            perm.swap(a, rng.gen_range(0..=a));
        }
        let mut by_source = raw.clone();
        for (mat, orig) in by_source.cells.iter_mut().zip(&raw.cells) {
            *mat = perm.iter().map(|&p| orig[p].clone()).collect();
        }
        let (a, b) = (rank(&raw, norm), rank(&by_source, norm));
        let permuted: Vec<f64> = perm.iter().map(|&p| a.group[p]).collect();
        check!(max_diff(&b.group, &permuted) <= 1e-12, "source permutation, case {case}");
        for i in 0..raw.k() {
            let permuted: Vec<f64> = perm.iter().map(|&p| a.per_analyst[i].values[p]).collect();
            check!(max_diff(&b.per_analyst[i].values, &permuted) <= 1e-12, "source permutation y_{i}, case {case}");
        }
        let mut by_analyst = raw.clone();
        by_analyst.sheets.reverse();
        by_analyst.cells.reverse();
        check!(max_diff(&a.group, &rank(&by_analyst, norm).group) <= 1e-12, "analyst permutation, case {case}");
    }

    // Distances: symmetric, zero diagonal, triangle inequality.
    for case in 0..A4_CASES {
        let (k, n, m) = (rng.gen_range(2..=5), rng.gen_range(1..=4), rng.gen_range(1..=3));
        let raw = random_raw(&mut rng, k, n, m, 5);
        let d = pairwise_agreement(&rank(&raw, norms[case % 2]));
        for a in 0..k {
            check!(d.distances[a][a] == 0.0, "diagonal, case {case}");
            for b in 0..k {
                check!(d.distances[a][b] == d.distances[b][a], "symmetry, case {case}");
                for c in 0..k {
                    check!(d.distances[a][c] <= d.distances[a][b] + d.distances[b][c] + 1e-12, "triangle, case {case}");
                }
            }
        }
    }

    // Bands: every value in [0,1] lands in exactly one band, monotonically.
    let b = FuzzyBands::default();
    for case in 0..A4_CASES {
        let (x, y): (f64, f64) = (rng.gen(), rng.gen());
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        let r = (classify_relevance(lo, &b), classify_relevance(hi, &b));
        let d = (classify_discrepancy(lo, &b), classify_discrepancy(hi, &b));
        let (Ok(r0), Ok(r1), Ok(d0), Ok(d1)) = (r.0, r.1, d.0, d.1) else {
            return Err(format!("band partition, case {case}: {lo} or {hi} unclassified"));
        };
        check!(r0 <= r1 && d0 <= d1, "band monotonicity, case {case}: {lo} -> {r0:?}, {hi} -> {r1:?}");
        let in_band = [lo <= 0.3, lo > 0.3 && lo <= 0.7, lo > 0.7];
        check!(in_band.iter().filter(|&&x| x).count() == 1, "partition, case {case}");
        check!(in_band[r0 as usize], "band of {lo} is {r0:?}");
    }
    Ok(format!("7 properties x {A4_CASES} instances"))
}

fn a5_shortlisting() -> Outcome {
    let criteria: Vec<CriterionId> = (1..=5).map(|j| CriterionId(format!("c{j}"))).collect();
    let mut patterns = 0usize;
    for k in 2..=7usize {
        let mut ballots: Vec<CriterionBallot> = (0..k)
            .map(|i| CriterionBallot {
                analyst_id: AnalystId(format!("A{i}")),
                votes: criteria.iter().map(|c| (c.clone(), false)).collect(),
            })
            .collect();
        let total = (k + 1).pow(5);
        for code in 0..total {
            let counts: Vec<usize> = (0..5).map(|j| code / (k + 1).pow(j as u32) % (k + 1)).collect();
            // Exactly v yes votes for a criterion, rotated so the voters differ per criterion.
            for (i, b) in ballots.iter_mut().enumerate() {
                for (j, (vote, &v)) in b.votes.values_mut().zip(&counts).enumerate() {
                    *vote = (i + j + v) % k < v;
                }
            }
            let expected: Vec<CriterionId> =
                criteria.iter().zip(&counts).filter(|(_, &v)| 2 * v > k).map(|(c, _)| c.clone()).collect();
            let got = shortlist_criteria(&criteria, &ballots, VoteThreshold::StrictMajority, k);
            match got {
                Ok(kept) => check!(kept == expected, "k={k} counts={counts:?}: kept {kept:?}, want {expected:?}"),
                Err(EngineError::EmptyShortlist) => {
                    check!(expected.is_empty(), "k={k} counts={counts:?}: empty, want {expected:?}")
                }
                Err(e) => return Err(format!("k={k} counts={counts:?}: {e}")),
            }
            patterns += 1;
        }
    }
    Ok(format!("{patterns} vote-count patterns for k = 2..7"))
}

fn a6_imputation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA6);
    let mut checked = 0usize;
    for case in 0..500 {
        let (k, n, m) = (rng.gen_range(2..=5), rng.gen_range(1..=6), rng.gen_range(1..=5));
        let mut raw = random_raw(&mut rng, k, n, m, 5);
        let budget = (k * n * m) / 5;
        let mut holes = Vec::new();
        for _ in 0..budget {
            let (i, r, j) = (rng.gen_range(0..k), rng.gen_range(0..n), rng.gen_range(0..m));
            let others_present = (0..k).filter(|&o| o != i && raw.cells[o][r][j].is_some()).count();
            if raw.cells[i][r][j].is_some() && others_present >= 1 {
                raw.cells[i][r][j] = None;
                holes.push((i, r, j));
            }
        }
        check!(holes.len() * 5 <= k * n * m, "case {case}: too many holes");
        let completed = impute_missing(&raw.input().matrices).map_err(|e| format!("case {case}: {e}"))?;
        for &(i, r, j) in &holes {
            let present: Vec<f64> = (0..k).filter_map(|o| raw.cells[o][r][j].map(|v| v as f64)).collect();
            let want = present.iter().sum::<f64>() / present.len() as f64;
            let got = completed[i].cells[r][j];
            check!((got - want).abs() <= 1e-12, "case {case} cell ({i},{r},{j}): {got} vs {want}");
            checked += 1;
        }
        check!(
            completed.iter().map(|c| c.imputed.len()).sum::<usize>() == holes.len(),
            "case {case}: imputed count mismatch"
        );
    }

    let mut raw = a2_fixture();
    raw.cells[0][1][0] = None;
    raw.cells[1][1][0] = None;
    match impute_missing(&raw.input().matrices) {
        Err(EngineError::Unimputable { data_source, criterion }) => {
            check!(data_source.as_str() == "d2" && criterion.as_str() == "c1", "wrong cell {data_source}/{criterion}")
        }
        other => return Err(format!("fully missing cell gave {other:?}")),
    }
    Ok(format!("{checked} imputed cells over 500 instances; Unimputable raised"))
}

fn a7_replay() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA7);
    let mut rounds = vec![a2_fixture()];
    for _ in 0..20 {
        let (k, n, m) = (rng.gen_range(1..=4), rng.gen_range(1..=6), rng.gen_range(1..=4));
        let mut raw = random_raw(&mut rng, k, n, m, 5);
        if k > 1 {
            raw.cells[0][0][0] = None;
        }
        rounds.push(raw);
    }
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    for (t, raw) in rounds.iter().enumerate() {
        for norm in [Normalization::Sum, Normalization::Max] {
            let cfg = MethodConfig { vote_threshold: VoteThreshold::AcceptAll, ..config(norm) };
            let first_dir = tmp.path().join(format!("{t}-{norm}-a"));
            export_round(&raw.imported(), &first_dir).map_err(|e| e.to_string())?;

            let imported = import_round(&first_dir).map_err(|e| e.to_string())?;
            let input = imported.round_input(cfg.vote_threshold).map_err(|e| e.to_string())?;
            let first = result_json(&compute_ranking(&input, &cfg).map_err(|e| e.to_string())?);
            std::fs::write(first_dir.join("result.json"), &first).map_err(|e| e.to_string())?;

            let second_dir = tmp.path().join(format!("{t}-{norm}-b"));
            export_round(&imported, &second_dir).map_err(|e| e.to_string())?;
            let again = import_round(&second_dir).map_err(|e| e.to_string())?;
            let input = again.round_input(cfg.vote_threshold).map_err(|e| e.to_string())?;
            let second = result_json(&compute_ranking(&input, &cfg).map_err(|e| e.to_string())?);
            std::fs::write(second_dir.join("result.json"), &second).map_err(|e| e.to_string())?;

            let a = std::fs::read(first_dir.join("result.json")).map_err(|e| e.to_string())?;
            let b = std::fs::read(second_dir.join("result.json")).map_err(|e| e.to_string())?;
            check!(a == b, "round {t} ({norm}): result.json differs after replay");
        }
    }
    Ok(format!("{} rounds x 2 normalizations byte-identical", rounds.len()))
}

async fn a8_service() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let state = dsrank_service::AppState::open(tmp.path()).map_err(|e| e.to_string())?;
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.map_err(|e| e.to_string())?;
    let base = format!("http://{}", listener.local_addr().map_err(|e| e.to_string())?);
    let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(dsrank_service::serve(listener, state, async {
        let _ = stopped.await;
    }));

    let outcome = a8_drive(&base).await;
    let _ = stop.send(());
    server.await.map_err(|e| e.to_string())?.map_err(|e| e.to_string())?;
    outcome
}

async fn a8_drive(base: &str) -> Outcome {
    let http = reqwest::Client::new();
    let err = |e: reqwest::Error| e.to_string();

    let created: Value = http
        .post(format!("{base}/sessions"))
        .json(&json!({ "problem": {
            "current_situation": "Sources are picked ad hoc",
            "desired_situation": "Sources are ranked by the group",
            "gap_quantification": "Improve elicitation yield by 25%",
            "candidate_solutions": ["ranking workshop"]
        }}))
        .send()
        .await
        .map_err(err)?
        .json()
        .await
        .map_err(err)?;
    let id = created["session_id"].as_str().ok_or("no session id")?.to_owned();
    let fac = created["token"]["secret"].as_str().ok_or("no facilitator token")?.to_owned();
    let url = |p: &str| format!("{base}/sessions/{id}{p}");
    let mut revision = created["revision"].as_u64().ok_or("no revision")?;

    let mut analysts = Vec::new();
    for a in ["A1", "A2"] {
        let resp = http.post(url("/analysts")).bearer_auth(&fac).json(&json!({ "id": a, "display_name": a })).send().await.map_err(err)?;
        check!(resp.status() == 201, "register {a}: {}", resp.status());
        let v: Value = resp.json().await.map_err(err)?;
        analysts.push(v["token"]["secret"].as_str().ok_or("no analyst token")?.to_owned());
    }
    for (path, body) in [
        ("/criteria", json!([{ "id": "c1", "name": "c1" }, { "id": "c2", "name": "c2" }])),
        ("/sources", json!([{ "id": "d1", "name": "d1" }, { "id": "d2", "name": "d2" }])),
    ] {
        let resp = http.put(url(path)).bearer_auth(&fac).json(&body).send().await.map_err(err)?;
        check!(resp.status() == 200, "{path}: {}", resp.status());
    }

    async fn advance(http: &reqwest::Client, url: &str, fac: &str, to: &str) -> Result<(u64, Value), String> {
        let resp = http.post(url).bearer_auth(fac).json(&json!({ "target": to })).send().await.map_err(|e| e.to_string())?;
        let status = resp.status();
        let v: Value = resp.json().await.map_err(|e| e.to_string())?;
        if status != 200 {
            return Err(format!("advance to {to}: {status} {v}"));
        }
        Ok((v["revision"].as_u64().unwrap_or_default(), v))
    }

    let submit = |what: &'static str, who: usize, body: Value, rev: u64| {
        let req = http
            .post(url(&format!("/rounds/0/{what}")))
            .bearer_auth(&analysts[who])
            .header("If-Match", format!("\"{rev}\""))
            .json(&body);
        async move { req.send().await.map_err(|e| e.to_string()) }
    };
    let next_rev = |v: &Value| v["revision"].as_u64().ok_or_else(|| format!("no revision in {v}"));

    revision = advance(&http, &url("/advance"), &fac, "voting").await?.0.max(revision);
    for (i, a) in ["A1", "A2"].iter().enumerate() {
        let resp = submit("ballots", i, json!({ "analyst_id": a, "votes": { "c1": true, "c2": true } }), revision).await?;
        check!(resp.status() == 200, "ballot {a}: {}", resp.status());
        revision = next_rev(&resp.json().await.map_err(err)?)?;
    }
    revision = advance(&http, &url("/advance"), &fac, "weighting").await?.0;
    let fx = a2_fixture();
    for (i, a) in ["A1", "A2"].iter().enumerate() {
        let body = json!({ "analyst_id": a, "scores": { "c1": fx.sheets[i][0], "c2": fx.sheets[i][1] } });
        let resp = submit("sheets", i, body, revision).await?;
        check!(resp.status() == 200, "sheet {a}: {}", resp.status());
        revision = next_rev(&resp.json().await.map_err(err)?)?;
    }
    let stale = revision - 1;
    revision = advance(&http, &url("/advance"), &fac, "scoring").await?.0;

    let matrix = |i: usize, owner: &str| {
        json!({ "analyst_id": owner, "sources": ["d1", "d2"], "criteria": ["c1", "c2"], "cells": fx.cells[i] })
    };
    // Cross-analyst submission.
    let resp = submit("matrices", 0, matrix(1, "A2"), revision).await?;
    check!(resp.status() == 403, "cross-analyst matrix gave {}", resp.status());

    let resp = submit("matrices", 0, matrix(0, "A1"), revision).await?;
    check!(resp.status() == 200, "matrix A1: {}", resp.status());
    revision = next_rev(&resp.json().await.map_err(err)?)?;

    // Stale If-Match.
    let resp = submit("matrices", 1, matrix(1, "A2"), stale).await?;
    check!(resp.status() == 409, "stale If-Match gave {}", resp.status());
    let body: Value = resp.json().await.map_err(err)?;
    check!(body["code"] == "revision_conflict", "stale If-Match code {}", body["code"]);

    let resp = submit("matrices", 1, matrix(1, "A2"), revision).await?;
    check!(resp.status() == 200, "matrix A2: {}", resp.status());

    let (_, computed) = advance(&http, &url("/advance"), &fac, "computed").await?;
    let peak = computed["result"]["group_scaled"]
        .as_array()
        .ok_or("no group_scaled")?
        .iter()
        .filter_map(Value::as_f64)
        .fold(f64::MIN, f64::max);
    check!(peak == 1.0, "group_scaled max is {peak}");

    let over_wire = http.get(url("/rounds/0/result")).bearer_auth(&analysts[0]).send().await.map_err(err)?;
    check!(over_wire.status() == 200, "result: {}", over_wire.status());
    let etag = over_wire.headers().get("etag").and_then(|v| v.to_str().ok()).map(str::to_owned);
    let over_wire = over_wire.bytes().await.map_err(err)?;
    let in_process = result_json(&rank(&fx, Normalization::Sum));
    check!(over_wire.as_ref() == in_process.as_bytes(), "over-the-wire result.json differs from in-process");

    let etag = etag.ok_or("no ETag")?;
    let cached = http.get(url("/rounds/0/result")).bearer_auth(&fac).header("If-None-Match", etag).send().await.map_err(err)?;
    check!(cached.status() == 304, "conditional GET gave {}", cached.status());
    Ok("byte-identical result; stale If-Match 409; cross-analyst 403".into())
}

fn a9_convergence() -> Outcome {
    // Round 2 moves each analyst halfway toward the pair's mean evaluation.
    // Column sums and weights are shared, so rankings contract linearly.
    let round1 = [vec![vec![4, 0], vec![0, 4], vec![0, 0]], vec![vec![0, 0], vec![0, 0], vec![4, 4]]];
    let round2 = [vec![vec![3, 0], vec![0, 3], vec![1, 1]], vec![vec![1, 0], vec![0, 1], vec![3, 3]]];

    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store = FileStore::open(tmp.path()).map_err(|e| e.to_string())?;
    let problem = ProblemStatement {
        current_situation: "a".into(),
        desired_situation: "b".into(),
        gap_quantification: "c".into(),
        candidate_solutions: vec!["d".into()],
        trigger: String::new(),
    };
    let id = store.create_session(problem, MethodConfig::default()).map_err(|e| e.to_string())?.session_id;
    let rev = || store.load(&id).map(|r| r.revision).map_err(|e| e.to_string());
    let submit = |s: Submission| -> Result<(), String> {
        store.submit(&id, rev()?, s).map(|_| ()).map_err(|e| e.to_string())
    };
    let advance = |to: SessionState| -> Result<(), String> {
        store.advance_state(&id, Some(rev()?), to).map(|_| ()).map_err(|e| e.to_string())
    };
    let criteria: Vec<CriterionId> = vec!["c1".into(), "c2".into()];
    let sources: Vec<SourceId> = vec!["d1".into(), "d2".into(), "d3".into()];
    let matrix = |a: &str, cells: &Vec<Vec<u8>>| SourceScoreMatrix {
        analyst_id: a.into(),
        sources: sources.clone(),
        criteria: criteria.clone(),
        cells: cells.iter().map(|r| r.iter().map(|&v| Some(OrdinalScore::new(v).unwrap())).collect()).collect(),
    };

    for a in ["A1", "A2"] {
        submit(Submission::AddAnalyst(Analyst::new(a)))?;
    }
    submit(Submission::SetCriteria { criteria: criteria.iter().map(|c| Criterion::new(c.as_str())).collect() })?;
    submit(Submission::SetSources { sources: sources.iter().map(|s| DataSource::new(s.as_str())).collect() })?;
    advance(SessionState::Voting)?;
    for a in ["A1", "A2"] {
        submit(Submission::Ballot(CriterionBallot {
            analyst_id: a.into(),
            votes: criteria.iter().map(|c| (c.clone(), true)).collect(),
        }))?;
    }
    advance(SessionState::Weighting)?;
    for a in ["A1", "A2"] {
        let scores: BTreeMap<CriterionId, OrdinalScore> =
            criteria.iter().cloned().zip([3, 5].map(|v| OrdinalScore::new(v).unwrap())).collect();
        submit(Submission::Sheet(CriterionScoreSheet { analyst_id: a.into(), scores }))?;
    }
    advance(SessionState::Scoring)?;
    submit(Submission::Matrix(matrix("A1", &round1[0])))?;
    submit(Submission::Matrix(matrix("A2", &round1[1])))?;
    advance(SessionState::Computed)?;
    advance(SessionState::Scoring)?;
    submit(Submission::Matrix(matrix("A1", &round2[0])))?;
    submit(Submission::Matrix(matrix("A2", &round2[1])))?;
    advance(SessionState::Computed)?;

    let session = store.load(&id).map_err(|e| e.to_string())?.session;
    let series = round_convergence(&session);
    check!(series.len() == 2, "expected 2 computed rounds, got {}", series.len());
    let (d1, d2) = (series[0].mean_distance, series[1].mean_distance);
    check!(d1 > 0.0, "round 1 shows no disagreement");
    let ratio = d2 / d1;
    check!((ratio - 0.5).abs() <= 1e-9, "ratio {ratio}");
    Ok(format!("round distances {d1:.6} -> {d2:.6}, ratio {ratio:.12}"))
}

// ---------------------------------------------------------------- runner

fn run(id: &str, title: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    });
    let took = start.elapsed();
    let outcome = match outcome {
        Ok(detail) if took > limit => Err(format!("{detail}, but took {took:.2?} (limit {limit:?})")),
        other => other,
    };
    match &outcome {
        Ok(detail) => println!("{id} PASS  {title}: {detail} [{took:.2?}]"),
        Err(why) => println!("{id} FAIL  {title}: {why} [{took:.2?}]"),
    }
    outcome.is_ok()
}

fn main() {
    // Accept and ignore libtest arguments such as --nocapture or filters.
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build().expect("tokio runtime");
    let secs = Duration::from_secs;
    let results = [
        run("A1", "classifier fixtures", secs(1), a1_classifiers),
        run("A2", "fixture oracle", secs(1), a2_fixture_oracle),
        run("A3", "brute-force equivalence", secs(10), a3_brute_force),
        run("A4", "invariant suite", secs(30), a4_invariants),
        run("A5", "shortlisting", secs(1), a5_shortlisting),
        run("A6", "imputation", secs(5), a6_imputation),
        run("A7", "replay determinism", secs(5), a7_replay),
        run("A8", "service contract", secs(10), || runtime.block_on(a8_service())),
        run("A9", "convergence metric", secs(5), a9_convergence),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

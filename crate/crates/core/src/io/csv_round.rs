//! Round inputs as plain CSV files, one directory per round:
//!
//! * `criteria_votes.csv`: header `criterion,<analyst>...`, one row per
//!   criterion, cells `0` or `1`.
//! * `criteria_scores.csv`: same layout, cells `0`-`5`; an empty cell means
//!   the analyst did not score that criterion.
//! * `matrix_<analyst>.csv`: header `source,<criterion>...`, one row per
//!   source, cells `0`-`5`; an empty cell is a missing evaluation.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use crate::engine::{align_matrix, shortlist_criteria, EngineError, RoundInput};
use crate::model::{
    AnalystId, CriterionBallot, CriterionId, CriterionScoreSheet, OrdinalScore, SourceId, SourceScoreMatrix,
    VoteThreshold,
};

pub const VOTES_FILE: &str = "criteria_votes.csv";
pub const SCORES_FILE: &str = "criteria_scores.csv";

pub fn matrix_file_name(analyst: &AnalystId) -> String {
    format!("matrix_{analyst}.csv")
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ImportError {
    #[error("{file}: {message}")]
    Io { file: String, message: String },
    #[error("{file}:{line}:{column}: {reason}")]
    Parse { file: String, line: u64, column: usize, reason: String },
    #[error("{file}:{line}:{column}: value {value:?} is outside the 0-5 scale")]
    OutOfScaleValue { file: String, line: u64, column: usize, value: String },
    #[error("{file}: analysts differ from {reference}: {detail}")]
    InconsistentAnalysts { file: String, reference: String, detail: String },
    #[error("{file}: {detail}")]
    Inconsistent { file: String, detail: String },
}

/// Everything read from one round directory, before shortlisting.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportedRound {
    pub analysts: Vec<AnalystId>,
    pub criteria: Vec<CriterionId>,
    pub sources: Vec<SourceId>,
    pub ballots: Vec<CriterionBallot>,
    /// Scores over every criterion the analyst scored.
    pub sheets: Vec<CriterionScoreSheet>,
    pub matrices: Vec<SourceScoreMatrix>,
}

impl ImportedRound {
    /// Applies the vote threshold and restricts sheets and matrices to the
    /// shortlist.
    pub fn round_input(&self, threshold: VoteThreshold) -> Result<RoundInput, EngineError> {
        let shortlist = shortlist_criteria(&self.criteria, &self.ballots, threshold, self.analysts.len())?;
        let sheets = self
            .sheets
            .iter()
            .map(|s| CriterionScoreSheet {
                analyst_id: s.analyst_id.clone(),
                scores: s.scores.iter().filter(|(c, _)| shortlist.contains(c)).map(|(c, v)| (c.clone(), *v)).collect(),
            })
            .collect();
        let matrices = self
            .matrices
            .iter()
            .map(|m| align_matrix(m, &self.sources, &shortlist))
            .collect::<Result<_, _>>()?;
        Ok(RoundInput { criteria: shortlist, sources: self.sources.clone(), sheets, matrices })
    }
}

struct Table {
    file: String,
    header: Vec<String>,
    /// (line, cells)
    rows: Vec<(u64, Vec<String>)>,
}

fn read_table(path: &Path) -> Result<Table, ImportError> {
    let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let data = fs::read(path).map_err(|e| ImportError::Io { file: file.clone(), message: e.to_string() })?;
    parse_table(&file, &data)
}

fn parse_table(file: &str, data: &[u8]) -> Result<Table, ImportError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(data);
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            ImportError::Parse { file: file.to_owned(), line, column: 0, reason: e.to_string() }
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let cells: Vec<String> = rec.iter().map(|c| c.trim().to_owned()).collect();
        if cells.iter().all(|c| c.is_empty()) {
            continue;
        }
        records.push((line, cells));
    }
    let mut iter = records.into_iter();
    let (header_line, header) = iter.next().ok_or_else(|| ImportError::Parse {
        file: file.to_owned(),
        line: 1,
        column: 1,
        reason: "file is empty".into(),
    })?;
    let mut seen = HashSet::new();
    for (i, name) in header.iter().enumerate() {
        if i > 0 && name.is_empty() {
            return Err(ImportError::Parse { file: file.to_owned(), line: header_line, column: i + 1, reason: "empty header".into() });
        }
        if i > 0 && !seen.insert(name.as_str()) {
            return Err(ImportError::Parse {
                file: file.to_owned(),
                line: header_line,
                column: i + 1,
                reason: format!("duplicate header {name:?}"),
            });
        }
    }
    let mut rows = Vec::new();
    let mut labels = HashSet::new();
    for (line, cells) in iter {
        if cells.len() != header.len() {
            return Err(ImportError::Parse {
                file: file.to_owned(),
                line,
                column: cells.len().min(header.len()) + 1,
                reason: format!("expected {} fields, found {}", header.len(), cells.len()),
            });
        }
        if cells[0].is_empty() {
            return Err(ImportError::Parse { file: file.to_owned(), line, column: 1, reason: "empty row label".into() });
        }
        if !labels.insert(cells[0].clone()) {
            return Err(ImportError::Parse {
                file: file.to_owned(),
                line,
                column: 1,
                reason: format!("duplicate row label {:?}", cells[0]),
            });
        }
        rows.push((line, cells));
    }
    Ok(Table { file: file.to_owned(), header, rows })
}

fn parse_score(table: &Table, line: u64, column: usize, raw: &str) -> Result<OrdinalScore, ImportError> {
    let value: i64 = raw.parse().map_err(|_| ImportError::Parse {
        file: table.file.clone(),
        line,
        column,
        reason: format!("{raw:?} is not an integer"),
    })?;
    OrdinalScore::try_from(value).map_err(|_| ImportError::OutOfScaleValue {
        file: table.file.clone(),
        line,
        column,
        value: raw.to_owned(),
    })
}

fn same_analysts(reference: &str, expected: &[AnalystId], file: &str, actual: &[AnalystId]) -> Result<(), ImportError> {
    let e: HashSet<&AnalystId> = expected.iter().collect();
    let a: HashSet<&AnalystId> = actual.iter().collect();
    if e == a {
        return Ok(());
    }
    let mut detail = Vec::new();
    let mut missing: Vec<_> = e.difference(&a).map(|x| x.as_str()).collect();
    missing.sort();
    let mut extra: Vec<_> = a.difference(&e).map(|x| x.as_str()).collect();
    extra.sort();
    if !missing.is_empty() {
        detail.push(format!("missing {}", missing.join(", ")));
    }
    if !extra.is_empty() {
        detail.push(format!("unexpected {}", extra.join(", ")));
    }
    Err(ImportError::InconsistentAnalysts { file: file.to_owned(), reference: reference.to_owned(), detail: detail.join("; ") })
}

/// Reads `criteria_votes.csv`, `criteria_scores.csv` and one
/// `matrix_<analyst>.csv` per analyst from `dir`.
pub fn import_round(dir: impl AsRef<Path>) -> Result<ImportedRound, ImportError> {
    let dir = dir.as_ref();
    let votes = read_table(&dir.join(VOTES_FILE))?;
    let scores = read_table(&dir.join(SCORES_FILE))?;

    let analysts: Vec<AnalystId> = scores.header[1..].iter().map(|a| AnalystId::new(a.as_str())).collect();
    let vote_analysts: Vec<AnalystId> = votes.header[1..].iter().map(|a| AnalystId::new(a.as_str())).collect();
    same_analysts(SCORES_FILE, &analysts, VOTES_FILE, &vote_analysts)?;

    let criteria: Vec<CriterionId> = votes.rows.iter().map(|(_, r)| CriterionId::new(r[0].as_str())).collect();
    let score_criteria: HashSet<&str> = scores.rows.iter().map(|(_, r)| r[0].as_str()).collect();
    if score_criteria != criteria.iter().map(|c| c.as_str()).collect() {
        return Err(ImportError::Inconsistent {
            file: SCORES_FILE.into(),
            detail: format!("criteria differ from {VOTES_FILE}"),
        });
    }

    let (_, mut ballots) = parse_votes(&votes)?;
    // present ballots in the same analyst order as the sheets
    ballots.sort_by_key(|b| analysts.iter().position(|a| a == &b.analyst_id));

    let mut sheets: Vec<CriterionScoreSheet> =
        analysts.iter().map(|a| CriterionScoreSheet { analyst_id: a.clone(), scores: BTreeMap::new() }).collect();
    for (line, row) in &scores.rows {
        for (i, raw) in row[1..].iter().enumerate() {
            if raw.is_empty() {
                continue;
            }
            let score = parse_score(&scores, *line, i + 2, raw)?;
            sheets[i].scores.insert(CriterionId::new(row[0].as_str()), score);
        }
    }

    let mut matrix_analysts = Vec::new();
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| ImportError::Io { file: dir.display().to_string(), message: e.to_string() })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    let mut tables = Vec::new();
    for path in entries {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if let Some(analyst) = name.strip_prefix("matrix_").and_then(|n| n.strip_suffix(".csv")) {
            matrix_analysts.push(AnalystId::new(analyst));
            tables.push((AnalystId::new(analyst), read_table(&path)?));
        }
    }
    same_analysts(SCORES_FILE, &analysts, "matrix files", &matrix_analysts)?;

    let mut sources: Option<Vec<SourceId>> = None;
    let mut matrices = Vec::new();
    for analyst in &analysts {
        let (_, table) = tables.iter().find(|(a, _)| a == analyst).expect("checked above");
        let header_line = 1;
        for (j, name) in table.header.iter().enumerate().skip(1) {
            if !criteria.iter().any(|c| c.as_str() == name) {
                return Err(ImportError::Parse {
                    file: table.file.clone(),
                    line: header_line,
                    column: j + 1,
                    reason: format!("unknown criterion {name:?}"),
                });
            }
        }
        let row_sources: Vec<SourceId> = table.rows.iter().map(|(_, r)| SourceId::new(r[0].as_str())).collect();
        match &sources {
            None => sources = Some(row_sources.clone()),
            Some(s) => {
                let a: HashSet<&SourceId> = s.iter().collect();
                let b: HashSet<&SourceId> = row_sources.iter().collect();
                if a != b {
                    return Err(ImportError::Inconsistent {
                        file: table.file.clone(),
                        detail: "sources differ from the other matrix files".into(),
                    });
                }
            }
        }
        let mut cells = Vec::with_capacity(table.rows.len());
        for (line, row) in &table.rows {
            let mut out = Vec::with_capacity(row.len() - 1);
            for (j, raw) in row[1..].iter().enumerate() {
                out.push(if raw.is_empty() { None } else { Some(parse_score(table, *line, j + 2, raw)?) });
            }
            cells.push(out);
        }
        matrices.push(SourceScoreMatrix {
            analyst_id: analyst.clone(),
            sources: row_sources,
            criteria: table.header[1..].iter().map(|c| CriterionId::new(c.as_str())).collect(),
            cells,
        });
    }

    Ok(ImportedRound { analysts, criteria, sources: sources.unwrap_or_default(), ballots, sheets, matrices })
}

fn write_csv(path: &Path, rows: Vec<Vec<String>>) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()
}

/// Writes a round in the layout `import_round` reads.
pub fn export_round(round: &ImportedRound, dir: impl AsRef<Path>) -> std::io::Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let header = |first: &str| {
        std::iter::once(first.to_owned()).chain(round.analysts.iter().map(|a| a.to_string())).collect::<Vec<_>>()
    };

    let mut votes = vec![header("criterion")];
    let mut scores = vec![header("criterion")];
    for c in &round.criteria {
        let mut v = vec![c.to_string()];
        let mut s = vec![c.to_string()];
        for a in &round.analysts {
            let voted = round.ballots.iter().find(|b| &b.analyst_id == a).and_then(|b| b.votes.get(c)).copied();
            v.push(if voted.unwrap_or(false) { "1" } else { "0" }.into());
            let score = round.sheets.iter().find(|x| &x.analyst_id == a).and_then(|x| x.scores.get(c));
            s.push(score.map(|x| x.to_string()).unwrap_or_default());
        }
        votes.push(v);
        scores.push(s);
    }
    write_csv(&dir.join(VOTES_FILE), votes)?;
    write_csv(&dir.join(SCORES_FILE), scores)?;

    for m in &round.matrices {
        let mut rows = vec![std::iter::once("source".to_owned()).chain(m.criteria.iter().map(|c| c.to_string())).collect()];
        for (s, row) in m.sources.iter().zip(&m.cells) {
            rows.push(
                std::iter::once(s.to_string())
                    .chain(row.iter().map(|c| c.map(|v| v.to_string()).unwrap_or_default()))
                    .collect(),
            );
        }
        write_csv(&dir.join(matrix_file_name(&m.analyst_id)), rows)?;
    }
    Ok(())
}

/// Reads a standalone votes file (`criteria_votes.csv` layout).
pub fn import_votes(path: impl AsRef<Path>) -> Result<(Vec<CriterionId>, Vec<CriterionBallot>), ImportError> {
    parse_votes(&read_table(path.as_ref())?)
}

fn parse_votes(table: &Table) -> Result<(Vec<CriterionId>, Vec<CriterionBallot>), ImportError> {
    let criteria: Vec<CriterionId> = table.rows.iter().map(|(_, r)| CriterionId::new(r[0].as_str())).collect();
    let mut ballots: Vec<CriterionBallot> = table.header[1..]
        .iter()
        .map(|a| CriterionBallot { analyst_id: AnalystId::new(a.as_str()), votes: BTreeMap::new() })
        .collect();
    for (line, row) in &table.rows {
        for (i, raw) in row[1..].iter().enumerate() {
            let vote = match raw.as_str() {
                "1" => true,
                "0" => false,
                _ => {
                    return Err(ImportError::Parse {
                        file: table.file.clone(),
                        line: *line,
                        column: i + 2,
                        reason: format!("vote {raw:?} must be 0 or 1"),
                    })
                }
            };
            ballots[i].votes.insert(CriterionId::new(row[0].as_str()), vote);
        }
    }
    Ok((criteria, ballots))
}

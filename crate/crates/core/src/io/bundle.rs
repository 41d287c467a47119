//! Single-file session bundle for offline exchange: a zip archive holding
//! `session.json` and `rounds/<index>/` directories in the round CSV layout.

use std::fs;
use std::io::{Read, Seek, Write};
use std::path::Path;

use zip::write::SimpleFileOptions;

use super::csv_round::{export_round, import_round, ImportError, ImportedRound};
use crate::model::{Round, Session};

#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error("bundle i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("bundle archive: {0}")]
    Zip(#[from] zip::result::ZipError),
    #[error("bundle session.json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bundle round: {0}")]
    Round(#[from] ImportError),
}

/// CSV view of a stored round. Only analysts with a ballot, a sheet and a
/// matrix are included; `None` if there are none.
pub fn round_to_csv_inputs(session: &Session, round: &Round) -> Option<ImportedRound> {
    let analysts: Vec<_> = session
        .analysts
        .iter()
        .map(|a| a.id.clone())
        .filter(|a| round.ballot(a).is_some() && round.sheet(a).is_some() && round.matrix(a).is_some())
        .collect();
    if analysts.is_empty() {
        return None;
    }
    Some(ImportedRound {
        criteria: session.criterion_ids(),
        sources: session.source_ids(),
        ballots: analysts.iter().filter_map(|a| round.ballot(a).cloned()).collect(),
        sheets: analysts.iter().filter_map(|a| round.sheet(a).cloned()).collect(),
        matrices: analysts.iter().filter_map(|a| round.matrix(a).cloned()).collect(),
        analysts,
    })
}

pub fn export_bundle<W: Write + Seek>(session: &Session, writer: W) -> Result<(), BundleError> {
    let mut zip = zip::ZipWriter::new(writer);
    let options = SimpleFileOptions::default();
    zip.start_file("session.json", options)?;
    zip.write_all(&serde_json::to_vec_pretty(session)?)?;

    let scratch = tempfile::tempdir()?;
    for round in &session.rounds {
        let Some(inputs) = round_to_csv_inputs(session, round) else { continue };
        let dir = scratch.path().join(round.index.to_string());
        export_round(&inputs, &dir)?;
        let mut names: Vec<_> = fs::read_dir(&dir)?.filter_map(|e| e.ok()).map(|e| e.file_name()).collect();
        names.sort();
        for name in names {
            let name = name.to_string_lossy();
            zip.start_file(format!("rounds/{}/{name}", round.index), options)?;
            zip.write_all(&fs::read(dir.join(name.as_ref()))?)?;
        }
    }
    zip.finish()?;
    Ok(())
}

pub fn import_bundle<R: Read + Seek>(reader: R) -> Result<(Session, Vec<(usize, ImportedRound)>), BundleError> {
    let mut archive = zip::ZipArchive::new(reader)?;
    let scratch = tempfile::tempdir()?;
    archive.extract(scratch.path())?;
    let session: Session = serde_json::from_slice(&fs::read(scratch.path().join("session.json"))?)?;
    let mut rounds = Vec::new();
    let rounds_dir = scratch.path().join("rounds");
    if rounds_dir.is_dir() {
        for entry in fs::read_dir(&rounds_dir)? {
            let entry = entry?;
            if let Some(index) = entry.file_name().to_str().and_then(|n| n.parse::<usize>().ok()) {
                rounds.push((index, import_round(entry.path())?));
            }
        }
    }
    rounds.sort_by_key(|(i, _)| *i);
    Ok((session, rounds))
}

pub fn write_bundle_file(session: &Session, path: impl AsRef<Path>) -> Result<(), BundleError> {
    export_bundle(session, fs::File::create(path)?)
}

pub fn read_bundle_file(path: impl AsRef<Path>) -> Result<(Session, Vec<(usize, ImportedRound)>), BundleError> {
    import_bundle(fs::File::open(path)?)
}

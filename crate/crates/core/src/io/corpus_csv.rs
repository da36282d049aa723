//! The two corpus input files.
//!
//! `units.csv`: unit_id, sentence, target_word, candidates, gold. Candidates
//! are semicolon-joined frame ids; gold may be empty.
//! `judgments.csv`: worker_id, unit_id, selections. Selections are
//! semicolon-joined frame ids or the literal token `NONE`.
//!
//! Both files carry a header row and standard CSV quoting. Parsing checks
//! structure only (field shapes, legal tokens); semantic rules such as
//! candidate counts or unknown-unit references belong to corpus validation.

use std::collections::BTreeSet;
use std::fs::File;
use std::path::Path;

use csv::{Reader, ReaderBuilder, StringRecord, Writer, WriterBuilder};

use super::IoError;
use crate::corpus::{Choice, FrameId, Judgment, Unit, UnitId, WorkerId};

const UNITS_HEADER: [&str; 5] = ["unit_id", "sentence", "target_word", "candidates", "gold"];
const JUDGMENTS_HEADER: [&str; 3] = ["worker_id", "unit_id", "selections"];

fn open_reader(path: &Path, header: &[&str]) -> Result<Reader<File>, IoError> {
    let mut reader = ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| IoError::from_csv(path, e))?;
    let got = reader.headers().map_err(|e| IoError::from_csv(path, e))?;
    if got.iter().ne(header.iter().copied()) {
        return Err(IoError::malformed(
            path,
            format!("expected header {:?}, got {:?}", header.join(","), got.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    Ok(reader)
}

fn record_line(record: &StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

// An empty field is an empty list; empty tokens inside a list are malformed.
fn split_frames(path: &Path, line: u64, column: usize, field: &str) -> Result<Vec<FrameId>, IoError> {
    if field.is_empty() {
        return Ok(Vec::new());
    }
    field
        .split(';')
        .map(|tok| FrameId::new(tok).map_err(|e| IoError::row(path, line, column, e.to_string())))
        .collect()
}

// Duplicate tokens collapse silently: a selection set has no multiplicity.
fn split_selections(path: &Path, line: u64, column: usize, field: &str) -> Result<BTreeSet<Choice>, IoError> {
    if field.is_empty() {
        return Ok(BTreeSet::new());
    }
    field
        .split(';')
        .map(|tok| Choice::from_token(tok).map_err(|e| IoError::row(path, line, column, e.to_string())))
        .collect()
}

pub fn read_units(path: &Path) -> Result<Vec<Unit>, IoError> {
    let mut reader = open_reader(path, &UNITS_HEADER)?;
    let mut units = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| IoError::from_csv(path, e))?;
        let line = record_line(&record);
        let unit_id =
            UnitId::new(&record[0]).map_err(|e| IoError::row(path, line, 1, e.to_string()))?;
        let candidates = split_frames(path, line, 4, &record[3])?;
        let gold = if record[4].is_empty() {
            None
        } else {
            Some(FrameId::new(&record[4]).map_err(|e| IoError::row(path, line, 5, e.to_string()))?)
        };
        units.push(Unit {
            unit_id,
            sentence: record[1].to_string(),
            target_word: record[2].to_string(),
            candidates,
            gold,
        });
    }
    Ok(units)
}

pub fn read_judgments(path: &Path) -> Result<Vec<Judgment>, IoError> {
    let mut reader = open_reader(path, &JUDGMENTS_HEADER)?;
    let mut judgments = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| IoError::from_csv(path, e))?;
        let line = record_line(&record);
        let worker =
            WorkerId::new(&record[0]).map_err(|e| IoError::row(path, line, 1, e.to_string()))?;
        let unit =
            UnitId::new(&record[1]).map_err(|e| IoError::row(path, line, 2, e.to_string()))?;
        let selections = split_selections(path, line, 3, &record[2])?;
        judgments.push(Judgment {
            worker,
            unit,
            selections,
        });
    }
    Ok(judgments)
}

/// Reads both corpus files. The result is raw: feed it to corpus validation
/// before computing anything.
pub fn parse_corpus(units_path: &Path, judgments_path: &Path) -> Result<(Vec<Unit>, Vec<Judgment>), IoError> {
    Ok((read_units(units_path)?, read_judgments(judgments_path)?))
}

pub(super) fn open_writer(path: &Path) -> Result<Writer<File>, IoError> {
    WriterBuilder::new()
        .from_path(path)
        .map_err(|e| IoError::from_csv(path, e))
}

pub(super) fn finish_writer(path: &Path, mut writer: Writer<File>) -> Result<(), IoError> {
    writer.flush().map_err(|e| IoError::file(path, e))
}

pub fn write_units<'a>(path: &Path, units: impl IntoIterator<Item = &'a Unit>) -> Result<(), IoError> {
    let mut writer = open_writer(path)?;
    writer
        .write_record(UNITS_HEADER)
        .map_err(|e| IoError::from_csv(path, e))?;
    for unit in units {
        let candidates = unit
            .candidates
            .iter()
            .map(FrameId::as_str)
            .collect::<Vec<_>>()
            .join(";");
        let gold = unit.gold.as_ref().map(FrameId::as_str).unwrap_or("");
        writer
            .write_record([
                unit.unit_id.as_str(),
                &unit.sentence,
                &unit.target_word,
                &candidates,
                gold,
            ])
            .map_err(|e| IoError::from_csv(path, e))?;
    }
    finish_writer(path, writer)
}

pub fn write_judgments<'a>(path: &Path, judgments: impl IntoIterator<Item = &'a Judgment>) -> Result<(), IoError> {
    let mut writer = open_writer(path)?;
    writer
        .write_record(JUDGMENTS_HEADER)
        .map_err(|e| IoError::from_csv(path, e))?;
    for judgment in judgments {
        let selections = judgment
            .selections
            .iter()
            .map(Choice::as_str)
            .collect::<Vec<_>>()
            .join(";");
        writer
            .write_record([judgment.worker.as_str(), judgment.unit.as_str(), &selections])
            .map_err(|e| IoError::from_csv(path, e))?;
    }
    finish_writer(path, writer)
}

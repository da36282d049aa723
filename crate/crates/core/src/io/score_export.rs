//! Score artifacts: one CSV table per metric, a units snapshot, a JSON
//! mirror of all scores, and a run manifest.
//!
//! Everything numeric is quantized to the canonical 6-decimal precision at
//! write time, so reading an export and writing it again reproduces every
//! file byte for byte.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use super::corpus_csv::{finish_writer, open_writer, read_units, write_units};
use super::{fmt6, parse_score, quantize6, IoError};
use crate::corpus::{Choice, FrameId, Unit, UnitId, WorkerId};
use crate::metrics::{FixedPointConfig, QualityScores};

const FSS_HEADER: [&str; 3] = ["unit_id", "choice", "fss"];
const SQS_HEADER: [&str; 2] = ["unit_id", "sqs"];
const WQS_HEADER: [&str; 2] = ["worker_id", "wqs"];
const FQS_HEADER: [&str; 2] = ["frame_id", "fqs"];

/// SHA-256 of a file's raw bytes, lowercase hex.
pub fn sha256_hex(path: &Path) -> Result<String, IoError> {
    let bytes = fs::read(path).map_err(|e| IoError::file(path, e))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputChecksums {
    pub units_sha256: String,
    pub judgments_sha256: String,
}

/// Everything needed to audit a scoring run: the config, how the iteration
/// went, and checksums of the inputs it consumed. No paths, no timestamps;
/// equal runs produce equal manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: FixedPointConfig,
    pub iterations: usize,
    pub converged: bool,
    pub delta_trace: Vec<f64>,
    pub lone_workers: Vec<WorkerId>,
    pub inputs: InputChecksums,
}

/// A scores directory in memory: the unit snapshot the scores were computed
/// over, the scores themselves, and the run manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreExport {
    pub units: BTreeMap<UnitId, Unit>,
    pub scores: QualityScores,
    pub manifest: RunManifest,
}

pub(super) fn write_table2<'a>(
    path: &Path,
    header: [&'a str; 2],
    rows: impl Iterator<Item = (&'a str, f64)>,
) -> Result<(), IoError> {
    let mut writer = open_writer(path)?;
    writer.write_record(header).map_err(|e| IoError::from_csv(path, e))?;
    for (key, value) in rows {
        writer
            .write_record([key, &fmt6(value)])
            .map_err(|e| IoError::from_csv(path, e))?;
    }
    finish_writer(path, writer)
}

fn read_table2(path: &Path, header: [&str; 2]) -> Result<Vec<(String, f64, u64)>, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| IoError::from_csv(path, e))?;
    let got = reader.headers().map_err(|e| IoError::from_csv(path, e))?;
    if got.iter().ne(header.iter().copied()) {
        return Err(IoError::malformed(
            path,
            format!("expected header {:?}", header.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| IoError::from_csv(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let value = parse_score(path, line, 2, &record[1])?;
        rows.push((record[0].to_string(), value, line));
    }
    Ok(rows)
}

fn scores_json(scores: &QualityScores) -> Value {
    let fss: Map<String, Value> = scores
        .fss
        .iter()
        .map(|(unit, row)| {
            let row: Map<String, Value> = row
                .iter()
                .map(|(choice, v)| (choice.to_string(), json!(quantize6(*v))))
                .collect();
            (unit.to_string(), Value::Object(row))
        })
        .collect();
    json!({
        "fss": fss,
        "sqs": scores.sqs.iter().map(|(k, v)| (k.to_string(), json!(quantize6(*v)))).collect::<Map<_, _>>(),
        "wqs": scores.wqs.iter().map(|(k, v)| (k.to_string(), json!(quantize6(*v)))).collect::<Map<_, _>>(),
        "fqs": scores.fqs.iter().map(|(k, v)| (k.to_string(), json!(quantize6(*v)))).collect::<Map<_, _>>(),
        "iterations": scores.iterations,
        "converged": scores.converged,
    })
}

pub(super) fn write_json(path: &Path, value: &impl Serialize) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| IoError::malformed(path, e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| IoError::file(path, e))
}

impl ScoreExport {
    /// Pairs freshly computed scores with their run description. The
    /// manifest's iteration fields are copied from the scores so the two
    /// never disagree.
    pub fn new(
        units: BTreeMap<UnitId, Unit>,
        scores: QualityScores,
        config: FixedPointConfig,
        inputs: InputChecksums,
    ) -> ScoreExport {
        let manifest = RunManifest {
            config,
            iterations: scores.iterations,
            converged: scores.converged,
            delta_trace: scores.delta_trace.clone(),
            lone_workers: scores.lone_workers.clone(),
            inputs,
        };
        ScoreExport {
            units,
            scores,
            manifest,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), IoError> {
        fs::create_dir_all(dir).map_err(|e| IoError::file(dir, e))?;
        write_units(&dir.join("units.csv"), self.units.values())?;

        // fss rows follow each unit's dimension order: candidates as
        // declared, then NONE
        let fss_path = dir.join("fss.csv");
        let mut writer = open_writer(&fss_path)?;
        writer
            .write_record(FSS_HEADER)
            .map_err(|e| IoError::from_csv(&fss_path, e))?;
        for (unit_id, unit) in &self.units {
            let row = self
                .scores
                .fss
                .get(unit_id)
                .expect("scores cover every unit in the export");
            for choice in unit.choices() {
                let value = *row.get(&choice).expect("scores cover every choice of the unit");
                writer
                    .write_record([unit_id.as_str(), choice.as_str(), &fmt6(value)])
                    .map_err(|e| IoError::from_csv(&fss_path, e))?;
            }
        }
        finish_writer(&fss_path, writer)?;

        write_table2(
            &dir.join("sqs.csv"),
            SQS_HEADER,
            self.scores.sqs.iter().map(|(k, v)| (k.as_str(), *v)),
        )?;
        write_table2(
            &dir.join("wqs.csv"),
            WQS_HEADER,
            self.scores.wqs.iter().map(|(k, v)| (k.as_str(), *v)),
        )?;
        write_table2(
            &dir.join("fqs.csv"),
            FQS_HEADER,
            self.scores.fqs.iter().map(|(k, v)| (k.as_str(), *v)),
        )?;
        write_json(&dir.join("scores.json"), &scores_json(&self.scores))?;
        write_json(&dir.join("manifest.json"), &self.manifest)
    }

    pub fn read(dir: &Path) -> Result<ScoreExport, IoError> {
        let units_path = dir.join("units.csv");
        let mut units: BTreeMap<UnitId, Unit> = BTreeMap::new();
        for unit in read_units(&units_path)? {
            let id = unit.unit_id.clone();
            if units.insert(id.clone(), unit).is_some() {
                return Err(IoError::malformed(&units_path, format!("duplicate unit {id}")));
            }
        }

        let fss_path = dir.join("fss.csv");
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(&fss_path)
            .map_err(|e| IoError::from_csv(&fss_path, e))?;
        let got = reader.headers().map_err(|e| IoError::from_csv(&fss_path, e))?;
        if got.iter().ne(FSS_HEADER.iter().copied()) {
            return Err(IoError::malformed(&fss_path, format!("expected header {:?}", FSS_HEADER.join(","))));
        }
        let mut fss: BTreeMap<UnitId, BTreeMap<Choice, f64>> = BTreeMap::new();
        for record in reader.records() {
            let record = record.map_err(|e| IoError::from_csv(&fss_path, e))?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let unit_id =
                UnitId::new(&record[0]).map_err(|e| IoError::row(&fss_path, line, 1, e.to_string()))?;
            let unit = units
                .get(&unit_id)
                .ok_or_else(|| IoError::row(&fss_path, line, 1, format!("unknown unit {unit_id}")))?;
            let choice = Choice::from_token(&record[1])
                .map_err(|e| IoError::row(&fss_path, line, 2, e.to_string()))?;
            if unit.choice_index(&choice).is_none() {
                return Err(IoError::row(
                    &fss_path,
                    line,
                    2,
                    format!("{choice} is not a choice of unit {unit_id}"),
                ));
            }
            let value = parse_score(&fss_path, line, 3, &record[2])?;
            if fss.entry(unit_id.clone()).or_default().insert(choice, value).is_some() {
                return Err(IoError::row(&fss_path, line, 2, "duplicate row".to_string()));
            }
        }
        for (unit_id, unit) in &units {
            let row = fss
                .get(unit_id)
                .ok_or_else(|| IoError::malformed(&fss_path, format!("no rows for unit {unit_id}")))?;
            if row.len() != unit.candidates.len() + 1 {
                return Err(IoError::malformed(
                    &fss_path,
                    format!("unit {unit_id} has {} rows, expected {}", row.len(), unit.candidates.len() + 1),
                ));
            }
        }

        let sqs_path = dir.join("sqs.csv");
        let mut sqs: BTreeMap<UnitId, f64> = BTreeMap::new();
        for (key, value, line) in read_table2(&sqs_path, SQS_HEADER)? {
            let unit_id = UnitId::new(key).map_err(|e| IoError::row(&sqs_path, line, 1, e.to_string()))?;
            if !units.contains_key(&unit_id) {
                return Err(IoError::row(&sqs_path, line, 1, format!("unknown unit {unit_id}")));
            }
            if sqs.insert(unit_id, value).is_some() {
                return Err(IoError::row(&sqs_path, line, 1, "duplicate row".to_string()));
            }
        }
        if sqs.len() != units.len() {
            return Err(IoError::malformed(&sqs_path, "missing units".to_string()));
        }

        let wqs_path = dir.join("wqs.csv");
        let mut wqs: BTreeMap<WorkerId, f64> = BTreeMap::new();
        for (key, value, line) in read_table2(&wqs_path, WQS_HEADER)? {
            let worker = WorkerId::new(key).map_err(|e| IoError::row(&wqs_path, line, 1, e.to_string()))?;
            if wqs.insert(worker, value).is_some() {
                return Err(IoError::row(&wqs_path, line, 1, "duplicate row".to_string()));
            }
        }

        let fqs_path = dir.join("fqs.csv");
        let candidates: BTreeSet<&FrameId> = units.values().flat_map(|u| u.candidates.iter()).collect();
        let mut fqs: BTreeMap<FrameId, f64> = BTreeMap::new();
        for (key, value, line) in read_table2(&fqs_path, FQS_HEADER)? {
            let frame = FrameId::new(key).map_err(|e| IoError::row(&fqs_path, line, 1, e.to_string()))?;
            if !candidates.contains(&frame) {
                return Err(IoError::row(&fqs_path, line, 1, format!("unknown frame {frame}")));
            }
            if fqs.insert(frame, value).is_some() {
                return Err(IoError::row(&fqs_path, line, 1, "duplicate row".to_string()));
            }
        }
        if fqs.len() != candidates.len() {
            return Err(IoError::malformed(&fqs_path, "missing frames".to_string()));
        }

        let manifest_path = dir.join("manifest.json");
        let text = fs::read_to_string(&manifest_path).map_err(|e| IoError::file(&manifest_path, e))?;
        let manifest: RunManifest =
            serde_json::from_str(&text).map_err(|e| IoError::malformed(&manifest_path, e.to_string()))?;

        let scores = QualityScores {
            fss,
            sqs,
            fqs,
            wqs,
            iterations: manifest.iterations,
            converged: manifest.converged,
            delta_trace: manifest.delta_trace.clone(),
            lone_workers: manifest.lone_workers.clone(),
        };
        Ok(ScoreExport {
            units,
            scores,
            manifest,
        })
    }
}

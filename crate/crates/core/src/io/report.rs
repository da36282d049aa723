//! Report emitters: ranked per-unit ambiguity tables, per-frame quality
//! tables, and (when evaluation context is present) the sweep curve and
//! binned score-vs-F1 series.
//!
//! TSV mode writes one file per table; JSON mode writes a single
//! `report.json` with the same content. Numbers are quantized to the
//! canonical 6-decimal precision in both modes.

use std::path::Path;

use csv::WriterBuilder;
use serde_json::{json, Map, Value};

use super::score_export::{write_json, ScoreExport};
use super::{fmt6, quantize6, IoError};
use crate::corpus::{Choice, UnitId};
use crate::evaluation::{Sweep, SweepPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Tsv,
    Json,
}

/// One row of a binned score-vs-F1 series: scores in [lo, hi) (last bin
/// closed), the member count, and the member means. Empty bins keep their
/// place with no means.
#[derive(Debug, Clone, PartialEq)]
pub struct BinRow {
    pub bin: usize,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub mean_score: Option<f64>,
    pub mean_f1: Option<f64>,
}

pub(super) const NUM_BINS: usize = 10;

/// Ten equal-width bins over [0, 1] of (score, f1) pairs.
pub(super) fn bin_series(pairs: &[(f64, f64)]) -> Vec<BinRow> {
    let mut sums = vec![(0usize, 0.0f64, 0.0f64); NUM_BINS];
    for &(score, f1) in pairs {
        let idx = ((score * NUM_BINS as f64) as usize).min(NUM_BINS - 1);
        sums[idx].0 += 1;
        sums[idx].1 += score;
        sums[idx].2 += f1;
    }
    sums.into_iter()
        .enumerate()
        .map(|(bin, (count, score_sum, f1_sum))| BinRow {
            bin,
            lo: bin as f64 / NUM_BINS as f64,
            hi: (bin + 1) as f64 / NUM_BINS as f64,
            count,
            mean_score: (count > 0).then(|| score_sum / count as f64),
            mean_f1: (count > 0).then(|| f1_sum / count as f64),
        })
        .collect()
}

/// Evaluation-dependent report inputs, computed upstream from the scores and
/// the gold-bearing units the evaluation ran on.
pub(super) struct EvalArtifacts {
    pub sweep: Sweep,
    pub best_threshold: f64,
    pub sqs_f1: Vec<BinRow>,
    pub fqs_f1: Vec<BinRow>,
}

// Ranked rows of one unit: every choice with positive score, plus the gold
// frame even at zero. Descending score, ties in choice order.
fn unit_rows(export: &ScoreExport, unit_id: &UnitId) -> Vec<(Choice, f64, bool)> {
    let unit = &export.units[unit_id];
    let fss = &export.scores.fss[unit_id];
    let gold_choice = unit.gold.clone().map(Choice::Frame);
    let mut rows: Vec<(Choice, f64, bool)> = unit
        .choices()
        .filter_map(|choice| {
            let score = fss[&choice];
            let is_gold = Some(&choice) == gold_choice.as_ref();
            (score > 0.0 || is_gold).then_some((choice, score, is_gold))
        })
        .collect();
    rows.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    rows
}

// Units supporting one frame: positive-score occurrences, descending score,
// ties by unit id.
fn frame_support(export: &ScoreExport, frame: &crate::corpus::FrameId) -> Vec<(UnitId, f64)> {
    let choice = Choice::Frame(frame.clone());
    let mut support: Vec<(UnitId, f64)> = export
        .scores
        .fss
        .iter()
        .filter_map(|(unit_id, row)| {
            row.get(&choice)
                .filter(|&&v| v > 0.0)
                .map(|&v| (unit_id.clone(), v))
        })
        .collect();
    support.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    support
}

const TOP_UNITS: usize = 3;

fn tsv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, IoError> {
    WriterBuilder::new()
        .delimiter(b'\t')
        .from_path(path)
        .map_err(|e| IoError::from_csv(path, e))
}

fn write_units_report(path: &Path, export: &ScoreExport) -> Result<(), IoError> {
    let mut writer = tsv_writer(path)?;
    writer
        .write_record(["unit_id", "sqs", "choice", "fss", "gold"])
        .map_err(|e| IoError::from_csv(path, e))?;
    for unit_id in export.units.keys() {
        let sqs = fmt6(export.scores.sqs[unit_id]);
        for (choice, score, is_gold) in unit_rows(export, unit_id) {
            writer
                .write_record([
                    unit_id.as_str(),
                    &sqs,
                    choice.as_str(),
                    &fmt6(score),
                    if is_gold { "1" } else { "0" },
                ])
                .map_err(|e| IoError::from_csv(path, e))?;
        }
    }
    writer.flush().map_err(|e| IoError::file(path, e))
}

fn write_frames_report(path: &Path, export: &ScoreExport) -> Result<(), IoError> {
    let mut writer = tsv_writer(path)?;
    writer
        .write_record(["frame_id", "fqs", "support_count", "top_units"])
        .map_err(|e| IoError::from_csv(path, e))?;
    for (frame, fqs) in &export.scores.fqs {
        let support = frame_support(export, frame);
        let top = support
            .iter()
            .take(TOP_UNITS)
            .map(|(u, v)| format!("{u}:{}", fmt6(*v)))
            .collect::<Vec<_>>()
            .join(";");
        writer
            .write_record([frame.as_str(), &fmt6(*fqs), &support.len().to_string(), &top])
            .map_err(|e| IoError::from_csv(path, e))?;
    }
    writer.flush().map_err(|e| IoError::file(path, e))
}

const SWEEP_HEADER: [&str; 13] = [
    "threshold",
    "tp",
    "fp",
    "fn",
    "tn",
    "micro_precision",
    "micro_recall",
    "micro_f1",
    "micro_accuracy",
    "macro_sentence_f1",
    "macro_sentence_accuracy",
    "macro_frame_f1",
    "macro_frame_accuracy",
];

pub(super) fn write_sweep_csv(path: &Path, sweep: &Sweep) -> Result<(), IoError> {
    let mut writer = csv::WriterBuilder::new()
        .from_path(path)
        .map_err(|e| IoError::from_csv(path, e))?;
    writer
        .write_record(SWEEP_HEADER)
        .map_err(|e| IoError::from_csv(path, e))?;
    for p in &sweep.points {
        writer
            .write_record([
                fmt6(p.threshold),
                p.counts.tpc.to_string(),
                p.counts.fpc.to_string(),
                p.counts.fnc.to_string(),
                p.counts.tnc.to_string(),
                fmt6(p.micro.precision),
                fmt6(p.micro.recall),
                fmt6(p.micro.f1),
                fmt6(p.micro.accuracy),
                fmt6(p.macro_sentence.f1),
                fmt6(p.macro_sentence.accuracy),
                fmt6(p.macro_frame.f1),
                fmt6(p.macro_frame.accuracy),
            ])
            .map_err(|e| IoError::from_csv(path, e))?;
    }
    writer.flush().map_err(|e| IoError::file(path, e))
}

fn write_bins_csv(path: &Path, bins: &[BinRow]) -> Result<(), IoError> {
    let mut writer = csv::WriterBuilder::new()
        .from_path(path)
        .map_err(|e| IoError::from_csv(path, e))?;
    writer
        .write_record(["bin", "lo", "hi", "count", "mean_score", "mean_f1"])
        .map_err(|e| IoError::from_csv(path, e))?;
    for row in bins {
        writer
            .write_record([
                row.bin.to_string(),
                fmt6(row.lo),
                fmt6(row.hi),
                row.count.to_string(),
                row.mean_score.map(fmt6).unwrap_or_default(),
                row.mean_f1.map(fmt6).unwrap_or_default(),
            ])
            .map_err(|e| IoError::from_csv(path, e))?;
    }
    writer.flush().map_err(|e| IoError::file(path, e))
}

fn sweep_point_json(p: &SweepPoint) -> Value {
    json!({
        "threshold": quantize6(p.threshold),
        "tp": p.counts.tpc,
        "fp": p.counts.fpc,
        "fn": p.counts.fnc,
        "tn": p.counts.tnc,
        "micro": {
            "precision": quantize6(p.micro.precision),
            "recall": quantize6(p.micro.recall),
            "f1": quantize6(p.micro.f1),
            "accuracy": quantize6(p.micro.accuracy),
        },
        "macro_sentence": {
            "f1": quantize6(p.macro_sentence.f1),
            "accuracy": quantize6(p.macro_sentence.accuracy),
        },
        "macro_frame": {
            "f1": quantize6(p.macro_frame.f1),
            "accuracy": quantize6(p.macro_frame.accuracy),
        },
    })
}

fn bin_row_json(row: &BinRow) -> Value {
    json!({
        "bin": row.bin,
        "lo": quantize6(row.lo),
        "hi": quantize6(row.hi),
        "count": row.count,
        "mean_score": row.mean_score.map(quantize6),
        "mean_f1": row.mean_f1.map(quantize6),
    })
}

fn report_json(export: &ScoreExport, eval: Option<&EvalArtifacts>) -> Value {
    let units: Vec<Value> = export
        .units
        .iter()
        .map(|(unit_id, unit)| {
            let rows: Vec<Value> = unit_rows(export, unit_id)
                .into_iter()
                .map(|(choice, score, is_gold)| {
                    json!({
                        "choice": choice.as_str(),
                        "fss": quantize6(score),
                        "gold": is_gold,
                    })
                })
                .collect();
            json!({
                "unit_id": unit_id.as_str(),
                "sentence": unit.sentence,
                "target_word": unit.target_word,
                "sqs": quantize6(export.scores.sqs[unit_id]),
                "gold": unit.gold.as_ref().map(|g| g.as_str()),
                "frames": rows,
            })
        })
        .collect();

    let frames: Vec<Value> = export
        .scores
        .fqs
        .iter()
        .map(|(frame, fqs)| {
            let support = frame_support(export, frame);
            let top: Vec<Value> = support
                .iter()
                .take(TOP_UNITS)
                .map(|(u, v)| json!({"unit": u.as_str(), "fss": quantize6(*v)}))
                .collect();
            json!({
                "frame_id": frame.as_str(),
                "fqs": quantize6(*fqs),
                "support_count": support.len(),
                "top_units": top,
            })
        })
        .collect();

    let mut root = Map::new();
    root.insert("units".into(), Value::Array(units));
    root.insert("frames".into(), Value::Array(frames));
    if let Some(eval) = eval {
        root.insert(
            "sweep".into(),
            Value::Array(eval.sweep.points.iter().map(sweep_point_json).collect()),
        );
        root.insert("best_threshold".into(), json!(quantize6(eval.best_threshold)));
        root.insert(
            "sqs_f1".into(),
            Value::Array(eval.sqs_f1.iter().map(bin_row_json).collect()),
        );
        root.insert(
            "fqs_f1".into(),
            Value::Array(eval.fqs_f1.iter().map(bin_row_json).collect()),
        );
    }
    Value::Object(root)
}

pub(super) fn write_reports(
    out_dir: &Path,
    format: ReportFormat,
    export: &ScoreExport,
    eval: Option<&EvalArtifacts>,
) -> Result<(), IoError> {
    std::fs::create_dir_all(out_dir).map_err(|e| IoError::file(out_dir, e))?;
    match format {
        ReportFormat::Json => write_json(&out_dir.join("report.json"), &report_json(export, eval)),
        ReportFormat::Tsv => {
            write_units_report(&out_dir.join("units_report.tsv"), export)?;
            write_frames_report(&out_dir.join("frames_report.tsv"), export)?;
            if let Some(eval) = eval {
                write_sweep_csv(&out_dir.join("sweep.csv"), &eval.sweep)?;
                write_bins_csv(&out_dir.join("sqs_f1.csv"), &eval.sqs_f1)?;
                write_bins_csv(&out_dir.join("fqs_f1.csv"), &eval.fqs_f1)?;
            }
            Ok(())
        }
    }
}

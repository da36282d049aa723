//! Subcommand drivers: each CLI verb is a function here, so the whole
//! pipeline is scriptable as a library.
//!
//! Errors split into two exit-code classes: `Validation` for rejected input
//! or infeasible configuration, `Io` for unreadable or malformed files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::corpus_csv::{finish_writer, open_writer, parse_corpus, read_units, write_judgments, write_units};
use super::report::{bin_series, write_reports, write_sweep_csv, EvalArtifacts, ReportFormat};
use super::score_export::{sha256_hex, write_json, write_table2, InputChecksums, ScoreExport};
use super::{fmt6, quantize6, IoError};
use crate::corpus::{validate_corpus, validate_units, Choice, Unit, UnitId, ValidationReport, Warning};
use crate::evaluation::{fss_anova, per_frame_prf, per_unit_prf, threshold_sweep, EvalError, Sweep, SweepPoint};
use crate::metrics::{run_fixed_point, FixedPointConfig, MetricsError};
use crate::simulator::{generate_corpus, SimConfig, SimError};

#[derive(Debug, Error)]
pub enum CliError {
    /// Rejected input: corpus violations, bad configuration, degenerate
    /// evaluation requests. Exit code 1.
    #[error("{0}")]
    Validation(String),
    /// Unreadable, unwritable, or malformed files. Exit code 2.
    #[error(transparent)]
    Io(#[from] IoError),
}

impl From<ValidationReport> for CliError {
    fn from(report: ValidationReport) -> CliError {
        CliError::Validation(report.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(err: EvalError) -> CliError {
        CliError::Validation(err.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(err: SimError) -> CliError {
        CliError::Validation(err.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(err: MetricsError) -> CliError {
        CliError::Validation(err.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateSummary {
    pub units: usize,
    pub workers: usize,
    pub judgments: usize,
    pub iterations: usize,
    pub converged: bool,
    pub lone_workers: usize,
    pub warnings: Vec<Warning>,
}

/// Parses and validates a corpus, runs the fixed point, and writes a scores
/// directory.
pub fn aggregate(
    units_path: &Path,
    judgments_path: &Path,
    out_dir: &Path,
    config: FixedPointConfig,
) -> Result<AggregateSummary, CliError> {
    let (units, judgments) = parse_corpus(units_path, judgments_path)?;
    let (corpus, warnings) = validate_corpus(units, judgments)?;
    let scores = run_fixed_point(&corpus, config)?;
    let inputs = InputChecksums {
        units_sha256: sha256_hex(units_path)?,
        judgments_sha256: sha256_hex(judgments_path)?,
    };
    let summary = AggregateSummary {
        units: corpus.units().len(),
        workers: corpus.workers().len(),
        judgments: corpus.num_judgments(),
        iterations: scores.iterations,
        converged: scores.converged,
        lone_workers: scores.lone_workers.len(),
        warnings,
    };
    ScoreExport::new(corpus.units().clone(), scores, config, inputs).write(out_dir)?;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnovaStatus {
    Ok,
    Degenerate,
    TooFewObservations,
}

/// ANOVA block of `eval.json`. F and p are fixed-format strings so that an
/// infinite F (zero within-group variance with distinct means) survives JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaJson {
    pub status: AnovaStatus,
    pub f_value: Option<String>,
    pub p_value: Option<String>,
    pub df_between: Option<usize>,
    pub df_within: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestPoint {
    pub threshold: f64,
    pub f1: f64,
}

/// Contents of `eval.json`: the sweep step, the argmax of each averaging
/// variant, and the gold-vs-rest ANOVA over FSS values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalJson {
    pub step: f64,
    pub best_micro: BestPoint,
    pub best_macro_sentence: BestPoint,
    pub best_macro_frame: BestPoint,
    pub anova: AnovaJson,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub gold_units: usize,
    pub eval: EvalJson,
}

// Every gold-bearing unit under evaluation must have scores for all of its
// candidates; pair construction relies on it.
fn check_coverage(export: &ScoreExport, units: &BTreeMap<UnitId, Unit>) -> Result<(), CliError> {
    for (id, unit) in units {
        if unit.gold.is_none() {
            continue;
        }
        let Some(row) = export.scores.fss.get(id) else {
            return Err(CliError::Validation(format!("scores do not cover unit {id}")));
        };
        for c in &unit.candidates {
            if !row.contains_key(&Choice::Frame(c.clone())) {
                return Err(CliError::Validation(format!(
                    "scores for unit {id} do not cover frame {c}"
                )));
            }
        }
    }
    Ok(())
}

fn anova_block(
    fss: &BTreeMap<UnitId, BTreeMap<Choice, f64>>,
    units: &BTreeMap<UnitId, Unit>,
) -> Result<AnovaJson, CliError> {
    let empty = |status| AnovaJson {
        status,
        f_value: None,
        p_value: None,
        df_between: None,
        df_within: None,
    };
    match fss_anova(fss, units) {
        Ok(a) => Ok(AnovaJson {
            status: AnovaStatus::Ok,
            f_value: Some(format!("{:.6}", a.f_value)),
            p_value: Some(format!("{:.6e}", a.p_value)),
            df_between: Some(a.df_between),
            df_within: Some(a.df_within),
        }),
        Err(EvalError::DegenerateVariance) => Ok(empty(AnovaStatus::Degenerate)),
        Err(EvalError::TooFewObservations) => Ok(empty(AnovaStatus::TooFewObservations)),
        Err(e) => Err(e.into()),
    }
}

fn best_point(sweep: &Sweep, threshold: f64, pick: impl Fn(&SweepPoint) -> f64) -> BestPoint {
    let point = sweep
        .points
        .iter()
        .find(|p| p.threshold == threshold)
        .expect("best threshold lies on the grid");
    BestPoint {
        threshold: quantize6(threshold),
        f1: quantize6(pick(point)),
    }
}

/// Sweeps thresholds over an exported scores directory against a units file
/// carrying expert gold. Writes the sweep curve, `eval.json`, and a snapshot
/// of the units evaluated against.
pub fn evaluate(
    scores_dir: &Path,
    units_path: &Path,
    out_dir: &Path,
    step: f64,
) -> Result<EvalSummary, CliError> {
    let export = ScoreExport::read(scores_dir)?;
    let units = validate_units(read_units(units_path)?)?;
    check_coverage(&export, &units)?;
    let sweep = threshold_sweep(&export.scores.fss, &units, step)?;
    let anova = anova_block(&export.scores.fss, &units)?;
    let eval = EvalJson {
        step,
        best_micro: best_point(&sweep, sweep.best_micro, |p| p.micro.f1),
        best_macro_sentence: best_point(&sweep, sweep.best_macro_sentence, |p| p.macro_sentence.f1),
        best_macro_frame: best_point(&sweep, sweep.best_macro_frame, |p| p.macro_frame.f1),
        anova,
    };
    fs::create_dir_all(out_dir).map_err(|e| IoError::file(out_dir, e))?;
    write_units(&out_dir.join("units.csv"), units.values())?;
    write_sweep_csv(&out_dir.join("sweep.csv"), &sweep)?;
    write_json(&out_dir.join("eval.json"), &eval)?;
    Ok(EvalSummary {
        gold_units: units.values().filter(|u| u.gold.is_some()).count(),
        eval,
    })
}

/// Side file of `simulate` describing the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimManifest {
    pub config: SimConfig,
    pub num_judgments: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimSummary {
    pub units: usize,
    pub workers: usize,
    pub judgments: usize,
    pub warnings: usize,
}

/// Generates a synthetic corpus and writes it in the corpus input schema,
/// along with the planted truth and a manifest of the generating config.
pub fn simulate(config: SimConfig, out_dir: &Path) -> Result<SimSummary, CliError> {
    let (corpus, truth, warnings) = generate_corpus(&config)?;
    fs::create_dir_all(out_dir).map_err(|e| IoError::file(out_dir, e))?;
    write_units(&out_dir.join("units.csv"), corpus.units().values())?;
    write_judgments(&out_dir.join("judgments.csv"), corpus.all_judgments())?;
    write_table2(
        &out_dir.join("truth_workers.csv"),
        ["worker_id", "reliability"],
        truth.reliabilities.iter().map(|(k, v)| (k.as_str(), *v)),
    )?;

    let truth_units_path = out_dir.join("truth_units.csv");
    let mut writer = open_writer(&truth_units_path)?;
    writer
        .write_record(["unit_id", "clarity", "gold"])
        .map_err(|e| IoError::from_csv(&truth_units_path, e))?;
    for (unit_id, clarity) in &truth.clarities {
        writer
            .write_record([unit_id.as_str(), &fmt6(*clarity), truth.gold[unit_id].as_str()])
            .map_err(|e| IoError::from_csv(&truth_units_path, e))?;
    }
    finish_writer(&truth_units_path, writer)?;

    write_json(
        &out_dir.join("sim_manifest.json"),
        &SimManifest {
            config,
            num_judgments: corpus.num_judgments(),
        },
    )?;
    Ok(SimSummary {
        units: corpus.units().len(),
        workers: corpus.workers().len(),
        judgments: corpus.num_judgments(),
        warnings: warnings.len(),
    })
}

/// Emits the ambiguity report from a scores directory, and the sweep curve
/// plus binned score-vs-F1 series when an evaluation directory is given.
pub fn report(
    scores_dir: &Path,
    eval_dir: Option<&Path>,
    format: ReportFormat,
    out_dir: &Path,
) -> Result<(), CliError> {
    let export = ScoreExport::read(scores_dir)?;
    let eval = match eval_dir {
        None => None,
        Some(dir) => {
            let eval_path = dir.join("eval.json");
            let text = fs::read_to_string(&eval_path).map_err(|e| IoError::file(&eval_path, e))?;
            let eval_json: EvalJson = serde_json::from_str(&text)
                .map_err(|e| IoError::malformed(&eval_path, e.to_string()))?;
            let units = validate_units(read_units(&dir.join("units.csv"))?)?;
            check_coverage(&export, &units)?;

            let sweep = threshold_sweep(&export.scores.fss, &units, eval_json.step)?;
            let best_t = eval_json.best_micro.threshold;
            let by_unit = per_unit_prf(&export.scores.fss, &units, best_t)?;
            let sqs_pairs: Vec<(f64, f64)> = by_unit
                .iter()
                .map(|(u, prf)| (export.scores.sqs[u], prf.f1))
                .collect();
            let by_frame = per_frame_prf(&export.scores.fss, &units, best_t)?;
            let fqs_pairs: Vec<(f64, f64)> = by_frame
                .iter()
                .filter(|(_, (_, gold_positive))| *gold_positive)
                .map(|(f, (prf, _))| (export.scores.fqs[f], prf.f1))
                .collect();
            Some(EvalArtifacts {
                sweep,
                best_threshold: best_t,
                sqs_f1: bin_series(&sqs_pairs),
                fqs_f1: bin_series(&fqs_pairs),
            })
        }
    };
    write_reports(out_dir, format, &export, eval.as_ref())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNITS: &str = "unit_id,sentence,target_word,candidates,gold\n\
        u1,The kettle began to boil.,boil,Apply_heat;Cause_harm,Apply_heat\n\
        u2,They boil with anger.,boil,Apply_heat;Cause_harm,Cause_harm\n";
    const JUDGMENTS: &str = "worker_id,unit_id,selections\n\
        w1,u1,Apply_heat\n\
        w2,u1,Apply_heat\n\
        w3,u1,Apply_heat;Cause_harm\n\
        w1,u2,Cause_harm\n\
        w2,u2,Cause_harm\n\
        w3,u2,NONE\n";

    fn write_inputs(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
        let units = dir.join("units.csv");
        let judgments = dir.join("judgments.csv");
        fs::write(&units, UNITS).unwrap();
        fs::write(&judgments, JUDGMENTS).unwrap();
        (units, judgments)
    }

    #[test]
    fn aggregate_writes_a_readable_export() {
        let tmp = tempfile::tempdir().unwrap();
        let (units, judgments) = write_inputs(tmp.path());
        let out = tmp.path().join("scores");
        let summary = aggregate(&units, &judgments, &out, Default::default()).unwrap();
        assert_eq!((summary.units, summary.workers, summary.judgments), (2, 3, 6));
        assert!(summary.converged);
        assert_eq!(summary.lone_workers, 0);
        assert_eq!(summary.warnings.len(), 2);

        let export = ScoreExport::read(&out).unwrap();
        assert_eq!(export.scores.iterations, summary.iterations);
        assert_eq!(export.manifest.inputs.units_sha256, sha256_hex(&units).unwrap());
    }

    #[test]
    fn aggregate_rejects_invalid_corpus() {
        let tmp = tempfile::tempdir().unwrap();
        let units = tmp.path().join("units.csv");
        // gold is not among the candidates
        fs::write(
            &units,
            "unit_id,sentence,target_word,candidates,gold\nu1,a word,word,A;B,C\n",
        )
        .unwrap();
        let judgments = tmp.path().join("judgments.csv");
        fs::write(&judgments, "worker_id,unit_id,selections\nw1,u1,A\n").unwrap();
        let err = aggregate(&units, &judgments, &tmp.path().join("out"), Default::default()).unwrap_err();
        assert!(matches!(err, CliError::Validation(_)));
    }

    #[test]
    fn aggregate_missing_file_is_io() {
        let tmp = tempfile::tempdir().unwrap();
        let err = aggregate(
            &tmp.path().join("absent.csv"),
            &tmp.path().join("also_absent.csv"),
            &tmp.path().join("out"),
            Default::default(),
        )
        .unwrap_err();
        assert!(matches!(err, CliError::Io(_)));
    }

    #[test]
    fn evaluate_writes_sweep_and_eval_json() {
        let tmp = tempfile::tempdir().unwrap();
        let (units, judgments) = write_inputs(tmp.path());
        let scores = tmp.path().join("scores");
        aggregate(&units, &judgments, &scores, Default::default()).unwrap();
        let out = tmp.path().join("eval");
        let summary = evaluate(&scores, &units, &out, 0.1).unwrap();
        assert_eq!(summary.gold_units, 2);
        assert_eq!(summary.eval.anova.status, AnovaStatus::Ok);
        // perfect separation here: gold frames score 1.0, the rest below
        assert_eq!(summary.eval.best_micro.f1, 1.0);

        let text = fs::read_to_string(out.join("eval.json")).unwrap();
        let parsed: EvalJson = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed, summary.eval);
        let sweep_lines = fs::read_to_string(out.join("sweep.csv")).unwrap();
        assert_eq!(sweep_lines.lines().count(), 12);
        assert!(out.join("units.csv").exists());
    }

    #[test]
    fn evaluate_rejects_uncovered_units() {
        let tmp = tempfile::tempdir().unwrap();
        let (units, judgments) = write_inputs(tmp.path());
        let scores = tmp.path().join("scores");
        aggregate(&units, &judgments, &scores, Default::default()).unwrap();
        let bigger = tmp.path().join("more_units.csv");
        fs::write(
            &bigger,
            format!("{UNITS}u3,another word here.,word,Apply_heat;Motion,Motion\n"),
        )
        .unwrap();
        let err = evaluate(&scores, &bigger, &tmp.path().join("eval"), 0.1).unwrap_err();
        match err {
            CliError::Validation(message) => assert!(message.contains("u3")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn simulate_output_feeds_aggregate() {
        let tmp = tempfile::tempdir().unwrap();
        let sim = tmp.path().join("sim");
        let config = SimConfig {
            num_units: 6,
            num_workers: 6,
            workers_per_unit: 6,
            ..Default::default()
        };
        let summary = simulate(config, &sim).unwrap();
        assert_eq!(summary.units, 6);
        assert_eq!(summary.judgments, 36);
        for name in [
            "units.csv",
            "judgments.csv",
            "truth_workers.csv",
            "truth_units.csv",
            "sim_manifest.json",
        ] {
            assert!(sim.join(name).exists(), "missing {name}");
        }
        let manifest: SimManifest =
            serde_json::from_str(&fs::read_to_string(sim.join("sim_manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest.config, config);
        assert_eq!(manifest.num_judgments, 36);

        let scores = tmp.path().join("scores");
        let agg = aggregate(&sim.join("units.csv"), &sim.join("judgments.csv"), &scores, Default::default()).unwrap();
        assert_eq!(agg.units, 6);
    }

    #[test]
    fn report_sweep_matches_evaluate_sweep() {
        let tmp = tempfile::tempdir().unwrap();
        let (units, judgments) = write_inputs(tmp.path());
        let scores = tmp.path().join("scores");
        aggregate(&units, &judgments, &scores, Default::default()).unwrap();
        let eval = tmp.path().join("eval");
        evaluate(&scores, &units, &eval, 0.25).unwrap();
        let out = tmp.path().join("report");
        report(&scores, Some(&eval), ReportFormat::Tsv, &out).unwrap();

        for name in ["units_report.tsv", "frames_report.tsv", "sweep.csv", "sqs_f1.csv", "fqs_f1.csv"] {
            assert!(out.join(name).exists(), "missing {name}");
        }
        assert_eq!(
            fs::read(out.join("sweep.csv")).unwrap(),
            fs::read(eval.join("sweep.csv")).unwrap()
        );

        let json_out = tmp.path().join("report_json");
        report(&scores, Some(&eval), ReportFormat::Json, &json_out).unwrap();
        let value: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(json_out.join("report.json")).unwrap()).unwrap();
        for key in ["units", "frames", "sweep", "best_threshold", "sqs_f1", "fqs_f1"] {
            assert!(value.get(key).is_some(), "report.json is missing {key}");
        }
    }

    #[test]
    fn report_without_eval_serves_tables_only() {
        let tmp = tempfile::tempdir().unwrap();
        let (units, judgments) = write_inputs(tmp.path());
        let scores = tmp.path().join("scores");
        aggregate(&units, &judgments, &scores, Default::default()).unwrap();
        let out = tmp.path().join("report");
        report(&scores, None, ReportFormat::Tsv, &out).unwrap();
        assert!(out.join("units_report.tsv").exists());
        assert!(!out.join("sweep.csv").exists());
    }
}

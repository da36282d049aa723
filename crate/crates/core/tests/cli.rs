//! Black-box tests of the crowdscore binary: exit codes, file layout, and
//! reproducibility across invocations.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const UNITS: &str = "\
unit_id,sentence,target_word,candidates,gold
u1,The kettle began to boil.,boil,Apply_heat;Cause_harm,Apply_heat
u2,She boiled with anger.,boiled,Apply_heat;Cause_harm,Cause_harm
";

const JUDGMENTS: &str = "\
worker_id,unit_id,selections
w1,u1,Apply_heat
w2,u1,Apply_heat
w3,u1,Apply_heat;Cause_harm
w1,u2,Cause_harm
w2,u2,Cause_harm
w3,u2,NONE
";

fn crowdscore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crowdscore"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn write_fixture(dir: &Path) -> (String, String) {
    let units = dir.join("units.csv");
    let judgments = dir.join("judgments.csv");
    fs::write(&units, UNITS).unwrap();
    fs::write(&judgments, JUDGMENTS).unwrap();
    (
        units.to_str().unwrap().to_owned(),
        judgments.to_str().unwrap().to_owned(),
    )
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn full_pipeline_succeeds() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    let out = crowdscore(&[
        "simulate",
        "--seed",
        "3",
        "--units",
        "8",
        "--workers",
        "6",
        "--out",
        sim.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    for file in ["units.csv", "judgments.csv", "truth_workers.csv", "truth_units.csv", "sim_manifest.json"] {
        assert!(sim.join(file).exists(), "missing {file}");
    }

    let scores = tmp.path().join("scores");
    let out = crowdscore(&[
        "aggregate",
        "--units",
        sim.join("units.csv").to_str().unwrap(),
        "--judgments",
        sim.join("judgments.csv").to_str().unwrap(),
        "--out",
        scores.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    for file in ["units.csv", "fss.csv", "sqs.csv", "wqs.csv", "fqs.csv", "scores.json", "manifest.json"] {
        assert!(scores.join(file).exists(), "missing {file}");
    }

    let eval = tmp.path().join("eval");
    let out = crowdscore(&[
        "evaluate",
        "--scores",
        scores.to_str().unwrap(),
        "--units",
        sim.join("units.csv").to_str().unwrap(),
        "--out",
        eval.to_str().unwrap(),
        "--step",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    for file in ["units.csv", "sweep.csv", "eval.json"] {
        assert!(eval.join(file).exists(), "missing {file}");
    }
    let sweep = fs::read_to_string(eval.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 12, "header plus thresholds 0.0..=1.0 by 0.1");

    let tsv = tmp.path().join("report_tsv");
    let out = crowdscore(&[
        "report",
        "--scores",
        scores.to_str().unwrap(),
        "--eval",
        eval.to_str().unwrap(),
        "--format",
        "tsv",
        "--out",
        tsv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    for file in ["units_report.tsv", "frames_report.tsv", "sweep.csv", "sqs_f1.csv", "fqs_f1.csv"] {
        assert!(tsv.join(file).exists(), "missing {file}");
    }

    let json = tmp.path().join("report_json");
    let out = crowdscore(&[
        "report",
        "--scores",
        scores.to_str().unwrap(),
        "--format",
        "json",
        "--out",
        json.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    assert!(json.join("report.json").exists());
}

#[test]
fn invalid_corpus_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let (units_path, judgments_path) = write_fixture(tmp.path());
    fs::write(
        &units_path,
        "unit_id,sentence,target_word,candidates,gold\nu1,text,word,Apply_heat;Cause_harm,Motion\n",
    )
    .unwrap();
    let out = crowdscore(&[
        "aggregate",
        "--units",
        &units_path,
        "--judgments",
        &judgments_path,
        "--out",
        tmp.path().join("scores").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_of(&out);
    assert!(err.starts_with("error:"), "stderr was: {err}");
    assert!(err.contains("Motion"), "stderr was: {err}");
}

#[test]
fn invalid_step_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let (units_path, judgments_path) = write_fixture(tmp.path());
    let scores = tmp.path().join("scores");
    let out = crowdscore(&[
        "aggregate",
        "--units",
        &units_path,
        "--judgments",
        &judgments_path,
        "--out",
        scores.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));

    let out = crowdscore(&[
        "evaluate",
        "--scores",
        scores.to_str().unwrap(),
        "--units",
        &units_path,
        "--out",
        tmp.path().join("eval").to_str().unwrap(),
        "--step",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr_of(&out));
}

#[test]
fn missing_input_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = crowdscore(&[
        "aggregate",
        "--units",
        tmp.path().join("absent.csv").to_str().unwrap(),
        "--judgments",
        tmp.path().join("also_absent.csv").to_str().unwrap(),
        "--out",
        tmp.path().join("scores").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("absent.csv"));
}

#[test]
fn malformed_row_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let (units_path, _) = write_fixture(tmp.path());
    let judgments_path = tmp.path().join("bad.csv");
    fs::write(&judgments_path, "worker_id,unit_id,selections\nw1,u1,Apply_heat\nw2,u1\n").unwrap();
    let out = crowdscore(&[
        "aggregate",
        "--units",
        &units_path,
        "--judgments",
        judgments_path.to_str().unwrap(),
        "--out",
        tmp.path().join("scores").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.contains("bad.csv:3"), "stderr was: {err}");
}

#[test]
fn same_seed_reproduces_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for dir in &dirs {
        let out = crowdscore(&[
            "simulate",
            "--seed",
            "42",
            "--units",
            "10",
            "--workers",
            "8",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    }
    for file in ["units.csv", "judgments.csv", "truth_workers.csv", "truth_units.csv", "sim_manifest.json"] {
        let a = fs::read(dirs[0].join(file)).unwrap();
        let b = fs::read(dirs[1].join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

#[test]
fn help_lists_subcommands() {
    let out = crowdscore(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    for sub in ["aggregate", "evaluate", "simulate", "report"] {
        assert!(text.contains(sub), "help is missing {sub}");
    }
}

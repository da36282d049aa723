//! File formats and pipeline plumbing: corpus CSV ingestion, score exports,
//! report emitters, and the subcommand drivers behind the CLI.
//!
//! Every emitter writes in canonical order (map iteration order, fixed column
//! sets) with 6-decimal fixed formatting, so equal inputs produce
//! byte-identical files and exports survive an import/re-export round trip
//! unchanged.

use std::path::{Path, PathBuf};

use thiserror::Error;

mod corpus_csv;
mod pipeline;
mod report;
mod score_export;

pub use corpus_csv::{parse_corpus, read_judgments, read_units, write_judgments, write_units};
pub use pipeline::{
    aggregate, evaluate, report, simulate, AggregateSummary, AnovaJson, AnovaStatus, BestPoint, CliError,
    EvalJson, EvalSummary, SimManifest, SimSummary,
};
pub use report::{BinRow, ReportFormat};
pub use score_export::{sha256_hex, InputChecksums, RunManifest, ScoreExport};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: column {column}: {message}")]
    MalformedRow {
        path: PathBuf,
        line: u64,
        column: usize,
        message: String,
    },
    #[error("{path}:{line}: invalid UTF-8")]
    Encoding { path: PathBuf, line: u64 },
    #[error("{path}: {message}")]
    MalformedFile { path: PathBuf, message: String },
}

impl IoError {
    fn file(path: &Path, source: std::io::Error) -> IoError {
        IoError::File {
            path: path.to_path_buf(),
            source,
        }
    }

    fn row(path: &Path, line: u64, column: usize, message: impl Into<String>) -> IoError {
        IoError::MalformedRow {
            path: path.to_path_buf(),
            line,
            column,
            message: message.into(),
        }
    }

    fn malformed(path: &Path, message: impl Into<String>) -> IoError {
        IoError::MalformedFile {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }

    fn from_csv(path: &Path, err: csv::Error) -> IoError {
        let line = err.position().map(|p| p.line()).unwrap_or(0);
        let message = err.to_string();
        match err.into_kind() {
            csv::ErrorKind::Io(source) => IoError::file(path, source),
            csv::ErrorKind::Utf8 { .. } => IoError::Encoding {
                path: path.to_path_buf(),
                line,
            },
            csv::ErrorKind::UnequalLengths { expected_len, len, .. } => IoError::row(
                path,
                line,
                1,
                format!("expected {expected_len} fields, found {len}"),
            ),
            _ => IoError::row(path, line, 1, message),
        }
    }
}

/// Canonical 6-decimal rendering used in every tabular artifact.
pub fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

/// Rounds to the canonical 6-decimal precision. Idempotent, and
/// `fmt6(quantize6(v)) == fmt6(v)`, so JSON artifacts built from quantized
/// values agree with their CSV counterparts and are stable under
/// import/re-export.
pub fn quantize6(v: f64) -> f64 {
    fmt6(v).parse().expect("fixed-format float always parses")
}

fn parse_score(path: &Path, line: u64, column: usize, field: &str) -> Result<f64, IoError> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(IoError::row(path, line, column, format!("expected a finite number, got {field:?}"))),
    }
}

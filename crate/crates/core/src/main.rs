use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use crowdscore::io::{self, CliError, ReportFormat};
use crowdscore::simulator::SimConfig;
use crowdscore::FixedPointConfig;

/// Disagreement-aware quality scores for multi-choice crowd annotation.
#[derive(Parser)]
#[command(name = "crowdscore", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutputFormat {
    Tsv,
    Json,
}

impl From<OutputFormat> for ReportFormat {
    fn from(format: OutputFormat) -> ReportFormat {
        match format {
            OutputFormat::Tsv => ReportFormat::Tsv,
            OutputFormat::Json => ReportFormat::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Score a corpus: iterate the four quality metrics to their fixed point
    /// and export them as a scores directory
    Aggregate {
        /// Units CSV (unit_id, sentence, target_word, candidates, gold)
        #[arg(long)]
        units: PathBuf,
        /// Judgments CSV (worker_id, unit_id, selections)
        #[arg(long)]
        judgments: PathBuf,
        /// Output directory for the scores
        #[arg(long)]
        out: PathBuf,
        /// Convergence threshold on the largest per-iteration score change
        #[arg(long, default_value_t = 1e-4)]
        epsilon: f64,
        /// Iteration cap
        #[arg(long = "max-iter", default_value_t = 50)]
        max_iter: usize,
        /// Agreement weight of the NONE choice, in (0, 1]
        #[arg(long = "none-weight", default_value_t = 1.0)]
        none_weight: f64,
    },
    /// Sweep classification thresholds over exported scores against expert
    /// gold
    Evaluate {
        /// Scores directory written by aggregate
        #[arg(long)]
        scores: PathBuf,
        /// Units CSV carrying the expert gold column
        #[arg(long)]
        units: PathBuf,
        /// Output directory for sweep.csv and eval.json
        #[arg(long)]
        out: PathBuf,
        /// Threshold grid spacing in (0, 1]
        #[arg(long, default_value_t = 0.05)]
        step: f64,
    },
    /// Generate a synthetic corpus with planted worker reliability and
    /// sentence clarity
    Simulate {
        /// RNG seed; equal seeds and knobs give byte-identical output
        #[arg(long)]
        seed: u64,
        /// Number of units
        #[arg(long)]
        units: usize,
        /// Worker pool size
        #[arg(long)]
        workers: usize,
        /// Distractor confusability in [0, 1]
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        /// Beta(alpha, beta) shape of worker reliability
        #[arg(long = "alpha-r", default_value_t = 4.0)]
        alpha_r: f64,
        #[arg(long = "beta-r", default_value_t = 2.0)]
        beta_r: f64,
        /// Beta(alpha, beta) shape of sentence clarity
        #[arg(long = "alpha-c", default_value_t = 3.0)]
        alpha_c: f64,
        #[arg(long = "beta-c", default_value_t = 2.0)]
        beta_c: f64,
        /// Annotators drawn per unit; defaults to the pool size capped at 15
        #[arg(long = "per-unit")]
        per_unit: Option<usize>,
        /// Number of distinct frames candidates are drawn from
        #[arg(long = "frame-pool", default_value_t = 40)]
        frame_pool: usize,
        /// Candidate frames per unit, inclusive range within [2, 20]
        #[arg(long = "min-candidates", default_value_t = 2)]
        min_candidates: usize,
        #[arg(long = "max-candidates", default_value_t = 8)]
        max_candidates: usize,
        /// Output directory for the corpus and planted truth
        #[arg(long)]
        out: PathBuf,
    },
    /// Render ranked ambiguity tables, plus sweep and score-vs-F1 series
    /// when an evaluation directory is given
    Report {
        /// Scores directory written by aggregate
        #[arg(long)]
        scores: PathBuf,
        /// Evaluation directory written by evaluate
        #[arg(long)]
        eval: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Tsv)]
        format: OutputFormat,
        /// Output directory for the report files
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Aggregate {
            units,
            judgments,
            out,
            epsilon,
            max_iter,
            none_weight,
        } => {
            let config = FixedPointConfig {
                epsilon,
                max_iterations: max_iter,
                none_weight,
            };
            let summary = io::aggregate(&units, &judgments, &out, config)?;
            for warning in &summary.warnings {
                eprintln!("warning: {warning}");
            }
            println!(
                "scored {} units, {} workers, {} judgments",
                summary.units, summary.workers, summary.judgments
            );
            if summary.converged {
                println!("converged in {} iterations", summary.iterations);
            } else {
                println!("stopped after {} iterations without converging", summary.iterations);
            }
            if summary.lone_workers > 0 {
                println!("{} worker(s) share no unit with anyone; their quality is uninformed", summary.lone_workers);
            }
            println!("scores written to {}", out.display());
        }
        Command::Evaluate {
            scores,
            units,
            out,
            step,
        } => {
            let summary = io::evaluate(&scores, &units, &out, step)?;
            let eval = &summary.eval;
            println!("evaluated {} gold units at step {}", summary.gold_units, step);
            println!(
                "best micro F1 {:.6} at threshold {:.6}",
                eval.best_micro.f1, eval.best_micro.threshold
            );
            println!(
                "best macro-sentence F1 {:.6} at threshold {:.6}",
                eval.best_macro_sentence.f1, eval.best_macro_sentence.threshold
            );
            println!(
                "best macro-frame F1 {:.6} at threshold {:.6}",
                eval.best_macro_frame.f1, eval.best_macro_frame.threshold
            );
            match (&eval.anova.f_value, &eval.anova.p_value) {
                (Some(f), Some(p)) => println!(
                    "anova gold vs rest: F({}, {}) = {}, p = {}",
                    eval.anova.df_between.unwrap_or(0),
                    eval.anova.df_within.unwrap_or(0),
                    f,
                    p
                ),
                _ => println!("anova gold vs rest: not defined for this corpus"),
            }
            println!("evaluation written to {}", out.display());
        }
        Command::Simulate {
            seed,
            units,
            workers,
            gamma,
            alpha_r,
            beta_r,
            alpha_c,
            beta_c,
            per_unit,
            frame_pool,
            min_candidates,
            max_candidates,
            out,
        } => {
            let config = SimConfig {
                seed,
                num_units: units,
                frame_pool_size: frame_pool,
                candidates_per_unit: (min_candidates, max_candidates),
                num_workers: workers,
                workers_per_unit: per_unit.unwrap_or_else(|| workers.min(15)),
                reliability_alpha: alpha_r,
                reliability_beta: beta_r,
                clarity_alpha: alpha_c,
                clarity_beta: beta_c,
                confusability: gamma,
            };
            let summary = io::simulate(config, &out)?;
            println!(
                "simulated {} units, {} workers, {} judgments (seed {})",
                summary.units, summary.workers, summary.judgments, seed
            );
            println!("corpus and planted truth written to {}", out.display());
        }
        Command::Report {
            scores,
            eval,
            format,
            out,
        } => {
            io::report(&scores, eval.as_deref(), format.into(), &out)?;
            println!("report written to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                CliError::Validation(_) => ExitCode::from(1),
                CliError::Io(_) => ExitCode::from(2),
            }
        }
    }
}

//! Disagreement-aware aggregation of multi-choice crowd annotations.
//!
//! Workers annotate units (a sentence with a highlighted target word and a
//! list of candidate frames) by selecting every frame that fits, or NONE.
//! Instead of majority voting, the library scores the annotations with four
//! mutually dependent quality metrics computed to a fixed point:
//!
//! * FSS, how clearly a frame fits a unit (worker-quality-weighted fraction)
//! * SQS, how much a unit's annotators agree (weighted pairwise cosine)
//! * FQS, how coherently a frame is selected across the corpus
//! * WQS, how much a worker agrees with co-annotators
//!
//! [`evaluation`] compares converged FSS against expert gold labels,
//! [`simulator`] generates synthetic corpora with planted ground truth, and
//! [`io`] holds the file schemas and the CLI pipeline.

pub mod corpus;
pub mod dist;
pub mod evaluation;
pub mod io;
pub mod metrics;
pub mod simulator;

pub use corpus::{
    build_annotation_vector, validate_corpus, validate_units, Choice, Corpus, FrameId, Judgment, Unit, UnitId,
    WorkerId,
};
pub use metrics::{run_fixed_point, FixedPointConfig, QualityScores};

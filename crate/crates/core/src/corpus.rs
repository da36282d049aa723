//! Domain types for units, workers, and judgments, their binary vector
//! encoding, and whole-corpus validation.
//!
//! The reserved token `NONE` means "no candidate frame fits" and is never a
//! frame id; it occupies the extra final dimension of every annotation vector.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reserved selection token for "none of the candidate frames fit".
pub const NONE_TOKEN: &str = "NONE";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IdError {
    #[error("id must be non-empty")]
    Empty,
    #[error("`{NONE_TOKEN}` is reserved and cannot be used as a frame id")]
    ReservedNone,
    #[error("frame id {0:?} contains ';', the candidate-list separator")]
    SeparatorInId(String),
}

/// Identifier of a semantic frame. Never empty, never the `NONE` token, and
/// never contains `;` (frame lists are semicolon-joined in the CSV schema).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FrameId(String);

impl FrameId {
    pub fn new(id: impl Into<String>) -> Result<Self, IdError> {
        let id = id.into();
        if id.is_empty() {
            return Err(IdError::Empty);
        }
        if id == NONE_TOKEN {
            return Err(IdError::ReservedNone);
        }
        if id.contains(';') {
            return Err(IdError::SeparatorInId(id));
        }
        Ok(FrameId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Identifier of a crowd worker. Never empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct WorkerId(String);

impl WorkerId {
    pub fn new(id: impl Into<String>) -> Result<Self, IdError> {
        let id = id.into();
        if id.is_empty() {
            return Err(IdError::Empty);
        }
        Ok(WorkerId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Identifier of an annotation unit (one sentence-word pair). Never empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct UnitId(String);

impl UnitId {
    pub fn new(id: impl Into<String>) -> Result<Self, IdError> {
        let id = id.into();
        if id.is_empty() {
            return Err(IdError::Empty);
        }
        Ok(UnitId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

macro_rules! id_conversions {
    ($t:ty) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
        impl TryFrom<String> for $t {
            type Error = IdError;
            fn try_from(s: String) -> Result<Self, IdError> {
                Self::new(s)
            }
        }
        impl From<$t> for String {
            fn from(id: $t) -> String {
                id.0
            }
        }
    };
}

id_conversions!(FrameId);
id_conversions!(WorkerId);
id_conversions!(UnitId);

/// One selectable option on a unit: a candidate frame or the NONE token.
///
/// The derived order puts frames (lexicographic) before NONE, which is the
/// canonical row order of every per-unit listing.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Choice {
    Frame(FrameId),
    None,
}

impl Choice {
    /// Parses a selection token. `NONE` is the reserved token, anything else
    /// must be a legal frame id.
    pub fn from_token(s: &str) -> Result<Choice, IdError> {
        if s == NONE_TOKEN {
            Ok(Choice::None)
        } else {
            FrameId::new(s).map(Choice::Frame)
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            Choice::Frame(f) => f.as_str(),
            Choice::None => NONE_TOKEN,
        }
    }

    pub fn frame(&self) -> Option<&FrameId> {
        match self {
            Choice::Frame(f) => Some(f),
            Choice::None => None,
        }
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One annotation task: a sentence with a highlighted target word and its
/// candidate frames. `gold` is the expert frame when one is known.
///
/// Hard invariants (2..=20 distinct candidates, gold among candidates,
/// target word occurring in the sentence) are enforced by [`validate_corpus`],
/// not by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unit {
    pub unit_id: UnitId,
    pub sentence: String,
    pub target_word: String,
    pub candidates: Vec<FrameId>,
    pub gold: Option<FrameId>,
}

impl Unit {
    /// All choices of the unit in canonical dimension order: candidates in
    /// unit order, then NONE.
    pub fn choices(&self) -> impl Iterator<Item = Choice> + '_ {
        self.candidates
            .iter()
            .cloned()
            .map(Choice::Frame)
            .chain(std::iter::once(Choice::None))
    }

    /// Dimension index of a choice in this unit's annotation vectors.
    pub fn choice_index(&self, choice: &Choice) -> Option<usize> {
        match choice {
            Choice::None => Some(self.candidates.len()),
            Choice::Frame(f) => self.candidates.iter().position(|c| c == f),
        }
    }
}

/// One worker's selections on one unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Judgment {
    pub worker: WorkerId,
    pub unit: UnitId,
    pub selections: BTreeSet<Choice>,
}

/// Binary encoding of a judgment over a unit's choice dimensions.
/// Length is |candidates| + 1; the last component is NONE.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationVector {
    pub(crate) unit: UnitId,
    pub(crate) worker: WorkerId,
    pub(crate) components: Vec<u8>,
}

impl AnnotationVector {
    pub fn unit_id(&self) -> &UnitId {
        &self.unit
    }

    pub fn worker(&self) -> &WorkerId {
        &self.worker
    }

    pub fn components(&self) -> &[u8] {
        &self.components
    }

    /// Decodes the vector back into the selection set it encodes.
    pub fn selections(&self, unit: &Unit) -> BTreeSet<Choice> {
        let mut out = BTreeSet::new();
        for (i, &c) in self.components.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if i == unit.candidates.len() {
                out.insert(Choice::None);
            } else {
                out.insert(Choice::Frame(unit.candidates[i].clone()));
            }
        }
        out
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VectorError {
    #[error("{worker} on {unit}: selection {frame} is not a candidate of the unit")]
    UnknownFrame {
        unit: UnitId,
        worker: WorkerId,
        frame: FrameId,
    },
    #[error("{worker} on {unit}: NONE co-selected with a frame")]
    MixedNone { unit: UnitId, worker: WorkerId },
}

/// Encodes a judgment as a binary vector over the unit's choice dimensions.
///
/// Component `i` is 1 iff candidate `i` was selected; the final component is
/// 1 iff NONE was selected. The judgment must belong to the unit and must
/// have at least one selection (both are contract violations, not data
/// errors, so they panic).
pub fn build_annotation_vector(judgment: &Judgment, unit: &Unit) -> Result<AnnotationVector, VectorError> {
    assert_eq!(judgment.unit, unit.unit_id, "judgment does not belong to this unit");
    assert!(!judgment.selections.is_empty(), "judgment has no selections");

    let mut components = vec![0u8; unit.candidates.len() + 1];
    let mut has_frame = false;
    let mut has_none = false;
    for sel in &judgment.selections {
        match sel {
            Choice::None => {
                has_none = true;
                *components.last_mut().expect("vector is non-empty") = 1;
            }
            Choice::Frame(f) => {
                has_frame = true;
                let i = unit.candidates.iter().position(|c| c == f).ok_or_else(|| {
                    VectorError::UnknownFrame {
                        unit: unit.unit_id.clone(),
                        worker: judgment.worker.clone(),
                        frame: f.clone(),
                    }
                })?;
                components[i] = 1;
            }
        }
    }
    if has_none && has_frame {
        return Err(VectorError::MixedNone {
            unit: unit.unit_id.clone(),
            worker: judgment.worker.clone(),
        });
    }
    Ok(AnnotationVector {
        unit: unit.unit_id.clone(),
        worker: judgment.worker.clone(),
        components,
    })
}

/// A fatal corpus defect. Carries enough of a locator to find the offending
/// row. The derived order gives reports a stable listing.
#[derive(Debug, Error, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Violation {
    #[error("unit {unit}: {count} candidate frame(s), at least 2 required")]
    MinCandidates { unit: UnitId, count: usize },
    #[error("unit {unit}: {count} candidate frames, at most 20 allowed")]
    MaxCandidates { unit: UnitId, count: usize },
    #[error("unit {unit}: duplicate candidate {frame}")]
    DuplicateCandidate { unit: UnitId, frame: FrameId },
    #[error("unit {unit}: gold frame {frame} is not a candidate")]
    GoldNotCandidate { unit: UnitId, frame: FrameId },
    #[error("unit {unit}: target word {word:?} does not occur in the sentence")]
    TargetWordMissing { unit: UnitId, word: String },
    #[error("duplicate unit id {unit}")]
    DuplicateUnit { unit: UnitId },
    #[error("judgment by {worker}: unknown unit {unit}")]
    UnknownUnit { unit: UnitId, worker: WorkerId },
    #[error("judgment by {worker} on {unit}: {frame} is not a candidate of the unit")]
    UnknownFrame {
        unit: UnitId,
        worker: WorkerId,
        frame: FrameId,
    },
    #[error("judgment by {worker} on {unit}: NONE co-selected with a frame")]
    MixedNone { unit: UnitId, worker: WorkerId },
    #[error("judgment by {worker} on {unit}: empty selection set")]
    EmptySelections { unit: UnitId, worker: WorkerId },
    #[error("duplicate judgment by {worker} on {unit}")]
    DuplicateJudgment { unit: UnitId, worker: WorkerId },
    #[error("unit {unit} has no judgments")]
    NoJudgments { unit: UnitId },
}

/// A non-fatal observation about an otherwise valid corpus.
#[derive(Debug, Error, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Warning {
    #[error("unit {unit} has only {count} judgment(s), 15 or more recommended")]
    FewJudgments { unit: UnitId, count: usize },
}

/// Everything wrong with a rejected corpus, deterministically ordered.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<Warning>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} violation(s), {} warning(s)", self.violations.len(), self.warnings.len())?;
        for v in &self.violations {
            writeln!(f, "error: {v}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

/// A validated, immutable annotation corpus.
///
/// Judgments are stored per unit, sorted by worker id; units, workers, and
/// frames are in their natural order. All downstream computation inherits
/// this canonical ordering, which is what makes runs reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    units: BTreeMap<UnitId, Unit>,
    judgments: BTreeMap<UnitId, Vec<Judgment>>,
    workers: BTreeSet<WorkerId>,
    frames: BTreeSet<FrameId>,
}

impl Corpus {
    pub fn units(&self) -> &BTreeMap<UnitId, Unit> {
        &self.units
    }

    pub fn unit(&self, id: &UnitId) -> Option<&Unit> {
        self.units.get(id)
    }

    /// Judgments on one unit, sorted by worker id. Empty only for unknown ids.
    pub fn judgments_for(&self, id: &UnitId) -> &[Judgment] {
        self.judgments.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn workers(&self) -> &BTreeSet<WorkerId> {
        &self.workers
    }

    /// Every frame appearing as a candidate anywhere in the corpus.
    pub fn frames(&self) -> &BTreeSet<FrameId> {
        &self.frames
    }

    /// All judgments in canonical order (unit-major, then worker).
    pub fn all_judgments(&self) -> impl Iterator<Item = &Judgment> {
        self.judgments.values().flatten()
    }

    pub fn num_judgments(&self) -> usize {
        self.judgments.values().map(Vec::len).sum()
    }
}

fn check_units(units: Vec<Unit>, violations: &mut Vec<Violation>) -> BTreeMap<UnitId, Unit> {
    let mut unit_map: BTreeMap<UnitId, Unit> = BTreeMap::new();
    for u in units {
        let id = u.unit_id.clone();
        if u.candidates.len() < 2 {
            violations.push(Violation::MinCandidates { unit: id.clone(), count: u.candidates.len() });
        }
        if u.candidates.len() > 20 {
            violations.push(Violation::MaxCandidates { unit: id.clone(), count: u.candidates.len() });
        }
        let mut seen = BTreeSet::new();
        for c in &u.candidates {
            if !seen.insert(c) {
                violations.push(Violation::DuplicateCandidate { unit: id.clone(), frame: c.clone() });
            }
        }
        if let Some(g) = &u.gold {
            if !u.candidates.contains(g) {
                violations.push(Violation::GoldNotCandidate { unit: id.clone(), frame: g.clone() });
            }
        }
        if u.target_word.is_empty() || !u.sentence.contains(&u.target_word) {
            violations.push(Violation::TargetWordMissing { unit: id.clone(), word: u.target_word.clone() });
        }
        // first occurrence keeps the slot so reference checks can continue
        if unit_map.contains_key(&id) {
            violations.push(Violation::DuplicateUnit { unit: id });
        } else {
            unit_map.insert(id, u);
        }
    }
    unit_map
}

/// Unit-level validation alone, for consumers that work from previously
/// exported scores and need only the unit table (no judgments in sight).
pub fn validate_units(units: Vec<Unit>) -> Result<BTreeMap<UnitId, Unit>, ValidationReport> {
    let mut violations = Vec::new();
    let unit_map = check_units(units, &mut violations);
    violations.sort();
    violations.dedup();
    if violations.is_empty() {
        Ok(unit_map)
    } else {
        Err(ValidationReport { violations, warnings: Vec::new() })
    }
}

/// Checks every hard invariant and builds a [`Corpus`] when all of them hold.
///
/// On success the warning list flags units with fewer than 15 judgments. On
/// failure the report lists every violation found, not just the first. The
/// result is independent of input order: units and judgments are re-sorted
/// into canonical order, and the violation list is sorted too.
pub fn validate_corpus(units: Vec<Unit>, judgments: Vec<Judgment>) -> Result<(Corpus, Vec<Warning>), ValidationReport> {
    let mut violations = Vec::new();
    let mut warnings = Vec::new();

    let unit_map = check_units(units, &mut violations);

    let mut by_unit: BTreeMap<UnitId, Vec<Judgment>> = BTreeMap::new();
    let mut seen_pairs: BTreeSet<(UnitId, WorkerId)> = BTreeSet::new();
    for j in judgments {
        let Some(unit) = unit_map.get(&j.unit) else {
            violations.push(Violation::UnknownUnit { unit: j.unit.clone(), worker: j.worker.clone() });
            continue;
        };
        if j.selections.is_empty() {
            violations.push(Violation::EmptySelections { unit: j.unit.clone(), worker: j.worker.clone() });
        }
        let mut has_none = false;
        let mut has_frame = false;
        for sel in &j.selections {
            match sel {
                Choice::None => has_none = true,
                Choice::Frame(f) => {
                    has_frame = true;
                    if !unit.candidates.contains(f) {
                        violations.push(Violation::UnknownFrame {
                            unit: j.unit.clone(),
                            worker: j.worker.clone(),
                            frame: f.clone(),
                        });
                    }
                }
            }
        }
        if has_none && has_frame {
            violations.push(Violation::MixedNone { unit: j.unit.clone(), worker: j.worker.clone() });
        }
        if !seen_pairs.insert((j.unit.clone(), j.worker.clone())) {
            violations.push(Violation::DuplicateJudgment { unit: j.unit.clone(), worker: j.worker.clone() });
            continue;
        }
        by_unit.entry(j.unit.clone()).or_default().push(j);
    }

    for id in unit_map.keys() {
        let n = by_unit.get(id).map(Vec::len).unwrap_or(0);
        if n == 0 {
            violations.push(Violation::NoJudgments { unit: id.clone() });
        } else if n < 15 {
            warnings.push(Warning::FewJudgments { unit: id.clone(), count: n });
        }
    }

    violations.sort();
    violations.dedup();
    warnings.sort();

    if !violations.is_empty() {
        return Err(ValidationReport { violations, warnings });
    }

    let mut workers = BTreeSet::new();
    for js in by_unit.values_mut() {
        js.sort_by(|a, b| a.worker.cmp(&b.worker));
        for j in js.iter() {
            workers.insert(j.worker.clone());
        }
    }
    let mut frames = BTreeSet::new();
    for u in unit_map.values() {
        frames.extend(u.candidates.iter().cloned());
    }

    Ok((
        Corpus {
            units: unit_map,
            judgments: by_unit,
            workers,
            frames,
        },
        warnings,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fid(s: &str) -> FrameId {
        FrameId::new(s).unwrap()
    }

    fn wid(s: &str) -> WorkerId {
        WorkerId::new(s).unwrap()
    }

    fn uid(s: &str) -> UnitId {
        UnitId::new(s).unwrap()
    }

    fn mk_unit(id: &str, candidates: &[&str], gold: Option<&str>) -> Unit {
        Unit {
            unit_id: uid(id),
            sentence: format!("a sentence with word inside, unit {id}"),
            target_word: "word".into(),
            candidates: candidates.iter().map(|c| fid(c)).collect(),
            gold: gold.map(fid),
        }
    }

    fn mk_j(worker: &str, unit: &str, sels: &[&str]) -> Judgment {
        Judgment {
            worker: wid(worker),
            unit: uid(unit),
            selections: sels.iter().map(|s| Choice::from_token(s).unwrap()).collect(),
        }
    }

    #[test]
    fn frame_id_rejects_reserved_and_malformed() {
        assert_eq!(FrameId::new(""), Err(IdError::Empty));
        assert_eq!(FrameId::new("NONE"), Err(IdError::ReservedNone));
        assert!(matches!(FrameId::new("a;b"), Err(IdError::SeparatorInId(_))));
        assert!(FrameId::new("Being_located").is_ok());
    }

    #[test]
    fn choice_order_puts_none_last() {
        let mut choices = vec![Choice::None, Choice::Frame(fid("Z")), Choice::Frame(fid("A"))];
        choices.sort();
        assert_eq!(choices.last(), Some(&Choice::None));
        assert_eq!(choices[0], Choice::Frame(fid("A")));
    }

    #[test]
    fn vector_encoding_matches_selection_positions() {
        let unit = mk_unit("u1", &["A", "B"], None);
        let v = build_annotation_vector(&mk_j("w1", "u1", &["A"]), &unit).unwrap();
        assert_eq!(v.components(), &[1, 0, 0]);

        let v = build_annotation_vector(&mk_j("w1", "u1", &["NONE"]), &unit).unwrap();
        assert_eq!(v.components(), &[0, 0, 1]);

        let unit3 = mk_unit("u2", &["A", "B", "C"], None);
        let v = build_annotation_vector(&mk_j("w1", "u2", &["A", "C"]), &unit3).unwrap();
        assert_eq!(v.components(), &[1, 0, 1, 0]);
    }

    #[test]
    fn vector_errors() {
        let unit = mk_unit("u1", &["A", "B"], None);
        let err = build_annotation_vector(&mk_j("w1", "u1", &["C"]), &unit).unwrap_err();
        assert!(matches!(err, VectorError::UnknownFrame { frame, .. } if frame == fid("C")));

        let err = build_annotation_vector(&mk_j("w1", "u1", &["A", "NONE"]), &unit).unwrap_err();
        assert!(matches!(err, VectorError::MixedNone { .. }));
    }

    #[test]
    fn encode_decode_round_trips_exhaustively() {
        // every legal selection set (non-empty frame subsets plus {NONE}) for
        // 2 to 5 candidates
        for n in 2usize..=5 {
            let names: Vec<String> = (0..n).map(|i| format!("F{i}")).collect();
            let cand_refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let unit = mk_unit("u", &cand_refs, None);
            for mask in 1u32..(1 << n) {
                let sels: Vec<&str> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| cand_refs[i]).collect();
                let j = mk_j("w", "u", &sels);
                let v = build_annotation_vector(&j, &unit).unwrap();
                assert_eq!(v.components().len(), n + 1);
                assert_eq!(v.selections(&unit), j.selections);
            }
            let j = mk_j("w", "u", &["NONE"]);
            let v = build_annotation_vector(&j, &unit).unwrap();
            assert_eq!(v.selections(&unit), j.selections);
        }
    }

    #[test]
    fn validate_accepts_well_formed_corpus() {
        let units = vec![mk_unit("u1", &["A", "B"], Some("A")), mk_unit("u2", &["A", "C"], None)];
        let judgments = vec![
            mk_j("w1", "u1", &["A"]),
            mk_j("w2", "u1", &["A", "B"]),
            mk_j("w3", "u1", &["NONE"]),
            mk_j("w1", "u2", &["A"]),
            mk_j("w2", "u2", &["C"]),
        ];
        let (corpus, warnings) = validate_corpus(units, judgments).unwrap();
        let want: BTreeSet<WorkerId> = ["w1", "w2", "w3"].iter().map(|w| wid(w)).collect();
        assert_eq!(corpus.workers(), &want);
        assert_eq!(corpus.num_judgments(), 5);
        assert_eq!(corpus.judgments_for(&uid("u1")).len(), 3);
        // both units are under 15 judgments
        assert_eq!(warnings.len(), 2);
        assert_eq!(warnings[0], Warning::FewJudgments { unit: uid("u1"), count: 3 });
    }

    #[test]
    fn validate_rejects_candidate_count_extremes() {
        let one = mk_unit("u1", &["A"], None);
        let names: Vec<String> = (0..21).map(|i| format!("F{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let twenty_one = mk_unit("u2", &refs, None);
        let judgments = vec![mk_j("w1", "u1", &["A"]), mk_j("w1", "u2", &["F0"])];
        let report = validate_corpus(vec![one, twenty_one], judgments).unwrap_err();
        assert!(report.violations.contains(&Violation::MinCandidates { unit: uid("u1"), count: 1 }));
        assert!(report.violations.contains(&Violation::MaxCandidates { unit: uid("u2"), count: 21 }));
    }

    #[test]
    fn validate_rejects_reference_defects() {
        let units = vec![mk_unit("u1", &["A", "B"], Some("C"))];
        let judgments = vec![
            mk_j("w1", "u1", &["A"]),
            mk_j("w1", "u1", &["B"]),
            mk_j("w2", "u9", &["A"]),
            mk_j("w3", "u1", &["D"]),
        ];
        let report = validate_corpus(units, judgments).unwrap_err();
        assert!(report.violations.contains(&Violation::GoldNotCandidate { unit: uid("u1"), frame: fid("C") }));
        assert!(report.violations.contains(&Violation::DuplicateJudgment { unit: uid("u1"), worker: wid("w1") }));
        assert!(report.violations.contains(&Violation::UnknownUnit { unit: uid("u9"), worker: wid("w2") }));
        assert!(report
            .violations
            .contains(&Violation::UnknownFrame { unit: uid("u1"), worker: wid("w3"), frame: fid("D") }));
    }

    #[test]
    fn validate_rejects_unjudged_units_and_missing_target() {
        let mut bad_target = mk_unit("u2", &["A", "B"], None);
        bad_target.target_word = "absent".into();
        let units = vec![mk_unit("u1", &["A", "B"], None), bad_target];
        let judgments = vec![mk_j("w1", "u2", &["A"])];
        let report = validate_corpus(units, judgments).unwrap_err();
        assert!(report.violations.contains(&Violation::NoJudgments { unit: uid("u1") }));
        assert!(report
            .violations
            .contains(&Violation::TargetWordMissing { unit: uid("u2"), word: "absent".into() }));
    }

    #[test]
    fn validate_units_checks_unit_invariants_only() {
        let got = validate_units(vec![mk_unit("u1", &["A", "B"], Some("A"))]).unwrap();
        assert_eq!(got.len(), 1);
        let report = validate_units(vec![mk_unit("u1", &["A"], None)]).unwrap_err();
        assert_eq!(report.violations, vec![Violation::MinCandidates { unit: uid("u1"), count: 1 }]);
    }

    #[test]
    fn validate_is_order_insensitive() {
        let units = || vec![mk_unit("u1", &["A", "B"], Some("A")), mk_unit("u2", &["A", "C"], None)];
        let judgments = vec![
            mk_j("w1", "u1", &["A"]),
            mk_j("w2", "u1", &["B"]),
            mk_j("w1", "u2", &["A"]),
            mk_j("w2", "u2", &["NONE"]),
        ];
        let mut reversed = judgments.clone();
        reversed.reverse();
        let (a, wa) = validate_corpus(units(), judgments).unwrap();
        let (b, wb) = validate_corpus(units().into_iter().rev().collect(), reversed).unwrap();
        assert_eq!(a, b);
        assert_eq!(wa, wb);
    }
}

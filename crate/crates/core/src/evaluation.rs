//! Comparison of converged FSS against expert gold labels: threshold
//! classification over candidate (frame, unit) pairs, micro and macro F1 and
//! accuracy sweeps, and a one-way ANOVA of FSS grouped by the expert
//! decision.
//!
//! Only units carrying a gold label participate, and the NONE dimension is
//! never an evaluation pair. Classification uses a closed boundary, FSS >= t,
//! so t = 0 predicts every pair positive.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{Choice, FrameId, Unit, UnitId};
use crate::dist::f_p_value;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("no unit carries an expert gold label")]
    NoGoldUnits,
    #[error("threshold step must lie in (0, 1], got {0}")]
    InvalidStep(f64),
    #[error("ANOVA is undefined: no within-group variance and equal group means")]
    DegenerateVariance,
    #[error("ANOVA needs two non-empty groups and at least 3 observations")]
    TooFewObservations,
}

/// 2x2 confusion counts over candidate (frame, unit) pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionCounts {
    #[serde(rename = "tp")]
    pub tpc: u64,
    #[serde(rename = "fp")]
    pub fpc: u64,
    #[serde(rename = "fn")]
    pub fnc: u64,
    #[serde(rename = "tn")]
    pub tnc: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tpc + self.fpc + self.fnc + self.tnc
    }

    fn add(&mut self, predicted: bool, gold: bool) {
        match (predicted, gold) {
            (true, true) => self.tpc += 1,
            (true, false) => self.fpc += 1,
            (false, true) => self.fnc += 1,
            (false, false) => self.tnc += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

/// Precision, recall, F1, and accuracy with explicit zero-division
/// conventions: precision 0 when nothing is predicted positive, recall 0
/// when nothing is gold positive, F1 0 when precision + recall is 0.
pub fn prf_accuracy(counts: ConfusionCounts) -> Prf {
    let tp = counts.tpc as f64;
    let precision = if counts.tpc + counts.fpc == 0 {
        0.0
    } else {
        tp / (counts.tpc + counts.fpc) as f64
    };
    let recall = if counts.tpc + counts.fnc == 0 {
        0.0
    } else {
        tp / (counts.tpc + counts.fnc) as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let accuracy = if counts.total() == 0 {
        0.0
    } else {
        (counts.tpc + counts.tnc) as f64 / counts.total() as f64
    };
    Prf {
        precision,
        recall,
        f1,
        accuracy,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MacroScores {
    pub f1: f64,
    pub accuracy: f64,
}

/// Metrics of one threshold of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub counts: ConfusionCounts,
    pub micro: Prf,
    pub macro_sentence: MacroScores,
    pub macro_frame: MacroScores,
}

/// A full threshold sweep with the argmax-F1 threshold per averaging variant
/// (ties resolved toward the lowest threshold).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub step: f64,
    pub points: Vec<SweepPoint>,
    pub best_micro: f64,
    pub best_macro_sentence: f64,
    pub best_macro_frame: f64,
}

// One evaluation pair: a candidate frame of a gold-bearing unit.
struct PairRow {
    unit: UnitId,
    frame: FrameId,
    fss: f64,
    gold: bool,
}

fn pair_table(
    fss: &BTreeMap<UnitId, BTreeMap<Choice, f64>>,
    units: &BTreeMap<UnitId, Unit>,
) -> Result<Vec<PairRow>, EvalError> {
    let mut rows = Vec::new();
    for (uid, unit) in units {
        let Some(gold) = &unit.gold else { continue };
        let scores = fss.get(uid).expect("fss must cover every gold-bearing unit");
        for c in &unit.candidates {
            let s = *scores
                .get(&Choice::Frame(c.clone()))
                .expect("fss must cover every candidate of the unit");
            rows.push(PairRow {
                unit: uid.clone(),
                frame: c.clone(),
                fss: s,
                gold: c == gold,
            });
        }
    }
    if rows.is_empty() {
        return Err(EvalError::NoGoldUnits);
    }
    Ok(rows)
}

/// All candidate (unit, frame) pairs of gold-bearing units whose FSS reaches
/// the threshold. The NONE dimension never participates.
pub fn classify_at_threshold(
    fss: &BTreeMap<UnitId, BTreeMap<Choice, f64>>,
    units: &BTreeMap<UnitId, Unit>,
    t: f64,
) -> Result<BTreeSet<(UnitId, FrameId)>, EvalError> {
    assert!((0.0..=1.0).contains(&t), "threshold must lie in [0, 1]");
    Ok(pair_table(fss, units)?
        .into_iter()
        .filter(|r| r.fss >= t)
        .map(|r| (r.unit, r.frame))
        .collect())
}

/// Confusion counts of a predicted-positive set against the expert gold,
/// over every candidate pair of every gold-bearing unit.
pub fn confusion_counts(
    predicted: &BTreeSet<(UnitId, FrameId)>,
    units: &BTreeMap<UnitId, Unit>,
) -> ConfusionCounts {
    let mut counts = ConfusionCounts::default();
    for (uid, unit) in units {
        let Some(gold) = &unit.gold else { continue };
        for c in &unit.candidates {
            counts.add(predicted.contains(&(uid.clone(), c.clone())), c == gold);
        }
    }
    counts
}

// Micro plus per-unit and per-frame counts at one threshold.
struct Tally<'a> {
    micro: ConfusionCounts,
    per_unit: BTreeMap<&'a UnitId, ConfusionCounts>,
    per_frame: BTreeMap<&'a FrameId, ConfusionCounts>,
}

fn tally(rows: &[PairRow], t: f64) -> Tally<'_> {
    let mut micro = ConfusionCounts::default();
    let mut per_unit: BTreeMap<&UnitId, ConfusionCounts> = BTreeMap::new();
    let mut per_frame: BTreeMap<&FrameId, ConfusionCounts> = BTreeMap::new();
    for r in rows {
        let predicted = r.fss >= t;
        micro.add(predicted, r.gold);
        per_unit.entry(&r.unit).or_default().add(predicted, r.gold);
        per_frame.entry(&r.frame).or_default().add(predicted, r.gold);
    }
    Tally {
        micro,
        per_unit,
        per_frame,
    }
}

/// Per-unit metrics at one threshold, over gold-bearing units.
pub fn per_unit_prf(
    fss: &BTreeMap<UnitId, BTreeMap<Choice, f64>>,
    units: &BTreeMap<UnitId, Unit>,
    t: f64,
) -> Result<BTreeMap<UnitId, Prf>, EvalError> {
    let rows = pair_table(fss, units)?;
    Ok(tally(&rows, t)
        .per_unit
        .into_iter()
        .map(|(u, c)| (u.clone(), prf_accuracy(c)))
        .collect())
}

/// Per-frame metrics at one threshold, over candidate frames of gold-bearing
/// units. The flag says whether the frame is gold anywhere (frames that are
/// not have no defined recall and are excluded from macro-frame F1).
pub fn per_frame_prf(
    fss: &BTreeMap<UnitId, BTreeMap<Choice, f64>>,
    units: &BTreeMap<UnitId, Unit>,
    t: f64,
) -> Result<BTreeMap<FrameId, (Prf, bool)>, EvalError> {
    let rows = pair_table(fss, units)?;
    let gold_frames: BTreeSet<&FrameId> = rows.iter().filter(|r| r.gold).map(|r| &r.frame).collect();
    Ok(tally(&rows, t)
        .per_frame
        .into_iter()
        .map(|(f, c)| {
            let gold_positive = gold_frames.contains(f);
            (f.clone(), (prf_accuracy(c), gold_positive))
        })
        .collect())
}

/// Sweeps classification thresholds 0, step, 2*step, ... (plus 1.0 when the
/// grid reaches it) and computes micro, macro-per-sentence, and
/// macro-per-frame metrics at each.
///
/// Macro-sentence averages over gold-bearing units. Macro-frame averages F1
/// over frames with at least one gold-positive pair (recall is undefined for
/// the rest) but averages accuracy over every frame that appears as a
/// candidate of a gold-bearing unit.
pub fn threshold_sweep(
    fss: &BTreeMap<UnitId, BTreeMap<Choice, f64>>,
    units: &BTreeMap<UnitId, Unit>,
    step: f64,
) -> Result<Sweep, EvalError> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(EvalError::InvalidStep(step));
    }
    let rows = pair_table(fss, units)?;

    let gold_frames: BTreeSet<&FrameId> = rows.iter().filter(|r| r.gold).map(|r| &r.frame).collect();

    let steps = (1.0 / step + 1e-9).floor() as usize;
    let mut points = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = (k as f64 * step).min(1.0);
        let counts = tally(&rows, t);

        let unit_prfs: Vec<Prf> = counts.per_unit.values().map(|&c| prf_accuracy(c)).collect();
        let macro_sentence = MacroScores {
            f1: unit_prfs.iter().map(|p| p.f1).sum::<f64>() / unit_prfs.len() as f64,
            accuracy: unit_prfs.iter().map(|p| p.accuracy).sum::<f64>() / unit_prfs.len() as f64,
        };

        let mut f1_sum = 0.0;
        let mut f1_n = 0usize;
        let mut acc_sum = 0.0;
        let mut acc_n = 0usize;
        for (frame, &c) in &counts.per_frame {
            let p = prf_accuracy(c);
            if gold_frames.contains(frame) {
                f1_sum += p.f1;
                f1_n += 1;
            }
            acc_sum += p.accuracy;
            acc_n += 1;
        }
        let macro_frame = MacroScores {
            f1: if f1_n == 0 { 0.0 } else { f1_sum / f1_n as f64 },
            accuracy: acc_sum / acc_n as f64,
        };

        points.push(SweepPoint {
            threshold: t,
            counts: counts.micro,
            micro: prf_accuracy(counts.micro),
            macro_sentence,
            macro_frame,
        });
    }

    let argmax = |f: fn(&SweepPoint) -> f64| {
        points
            .iter()
            .fold((0.0f64, f64::NEG_INFINITY), |(bt, bv), p| {
                if f(p) > bv {
                    (p.threshold, f(p))
                } else {
                    (bt, bv)
                }
            })
            .0
    };
    let best_micro = argmax(|p| p.micro.f1);
    let best_macro_sentence = argmax(|p| p.macro_sentence.f1);
    let best_macro_frame = argmax(|p| p.macro_frame.f1);

    Ok(Sweep {
        step,
        points,
        best_micro,
        best_macro_sentence,
        best_macro_frame,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnovaResult {
    pub f_value: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p_value: f64,
}

/// Classic one-way ANOVA for two groups, with the p value from the F
/// distribution's upper tail.
///
/// When the within-group sum of squares is zero: differing means produce an
/// infinite F with p = 0 (the limit), equal means are degenerate and
/// rejected.
pub fn one_way_anova(group_a: &[f64], group_b: &[f64]) -> Result<AnovaResult, EvalError> {
    let (na, nb) = (group_a.len(), group_b.len());
    let n = na + nb;
    if na == 0 || nb == 0 || n < 3 {
        return Err(EvalError::TooFewObservations);
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let ma = mean(group_a);
    let mb = mean(group_b);
    let grand = (group_a.iter().sum::<f64>() + group_b.iter().sum::<f64>()) / n as f64;

    let ssb = na as f64 * (ma - grand).powi(2) + nb as f64 * (mb - grand).powi(2);
    let ssw = group_a.iter().map(|x| (x - ma).powi(2)).sum::<f64>()
        + group_b.iter().map(|x| (x - mb).powi(2)).sum::<f64>();

    let df_between = 1;
    let df_within = n - 2;
    let f_value = if ssw == 0.0 {
        if ssb == 0.0 {
            return Err(EvalError::DegenerateVariance);
        }
        f64::INFINITY
    } else {
        (ssb / df_between as f64) / (ssw / df_within as f64)
    };
    Ok(AnovaResult {
        f_value,
        df_between,
        df_within,
        p_value: f_p_value(f_value, df_between, df_within),
    })
}

/// ANOVA of FSS values grouped by the expert decision: gold pairs against
/// non-gold pairs over all gold-bearing units.
pub fn fss_anova(
    fss: &BTreeMap<UnitId, BTreeMap<Choice, f64>>,
    units: &BTreeMap<UnitId, Unit>,
) -> Result<AnovaResult, EvalError> {
    let rows = pair_table(fss, units)?;
    let mut positive = Vec::new();
    let mut negative = Vec::new();
    for r in rows {
        if r.gold {
            positive.push(r.fss);
        } else {
            negative.push(r.fss);
        }
    }
    one_way_anova(&positive, &negative)
}

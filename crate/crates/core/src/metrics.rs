//! The disagreement-metric core: weighted cosine over annotation vectors and
//! the mutually dependent FSS / SQS / WQS / FQS fixed point.
//!
//! All four metrics are weighted averages of [0,1] quantities, so every score
//! stays in [0,1] at every iteration. Updates run in the order FSS, SQS, WQS,
//! FQS, each using the freshest values available, except that WQS weights
//! co-worker contributions by the previous iteration's WQS. Convergence is
//! the L-infinity change over SQS, WQS, and FQS (FSS is a pure function of
//! WQS and is excluded).
//!
//! [`FixedPointEngine`] produces bit-identical results in serial and parallel
//! mode: work is partitioned per unit, worker, or frame, and every inner
//! reduction runs in a fixed canonical order.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{
    build_annotation_vector, AnnotationVector, Choice, Corpus, FrameId, Judgment, Unit, UnitId, VectorError,
    WorkerId,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("unit {0} has no judgments")]
    EmptyUnit(UnitId),
    #[error("vector has zero weighted norm, cosine undefined")]
    ZeroVector,
    #[error("frame {0} is not a candidate of any unit")]
    UnknownFrame(FrameId),
    #[error("invalid fixed-point config: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Vector(#[from] VectorError),
}

/// Knobs of the fixed-point computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointConfig {
    /// Convergence threshold on the L-infinity change per iteration.
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Cosine weight of the NONE dimension. Frames are weighted by their
    /// FQS; NONE has no FQS, so its weight is fixed here.
    pub none_weight: f64,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig {
            epsilon: 1e-4,
            max_iterations: 50,
            none_weight: 1.0,
        }
    }
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if !(self.epsilon > 0.0) {
            return Err(MetricsError::InvalidConfig("epsilon must be positive"));
        }
        if self.max_iterations < 1 {
            return Err(MetricsError::InvalidConfig("max_iterations must be at least 1"));
        }
        if !(self.none_weight > 0.0 && self.none_weight <= 1.0) {
            return Err(MetricsError::InvalidConfig("none_weight must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Converged (or best-effort) scores plus the iteration trace.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityScores {
    /// Per unit, a score for every candidate frame and for NONE.
    pub fss: BTreeMap<UnitId, BTreeMap<Choice, f64>>,
    pub sqs: BTreeMap<UnitId, f64>,
    pub fqs: BTreeMap<FrameId, f64>,
    pub wqs: BTreeMap<WorkerId, f64>,
    pub iterations: usize,
    pub converged: bool,
    /// L-infinity change of each iteration; length equals `iterations`.
    pub delta_trace: Vec<f64>,
    /// Workers who share no unit with anyone. Their WQS is pinned at 1.0
    /// because no agreement evidence exists either way.
    pub lone_workers: Vec<WorkerId>,
}

// Weighted cosine over binary vectors. u_i^2 = u_i for binary components, so
// the weighted norms reduce to sums of the weights on selected dimensions.
// None when either vector has zero weighted norm.
fn cosine_opt(u: &[u8], v: &[u8], q: &[f64]) -> Option<f64> {
    debug_assert_eq!(u.len(), q.len());
    debug_assert_eq!(v.len(), q.len());
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for i in 0..q.len() {
        if u[i] != 0 {
            nu += q[i];
            if v[i] != 0 {
                dot += q[i];
            }
        }
        if v[i] != 0 {
            nv += q[i];
        }
    }
    if nu == 0.0 || nv == 0.0 {
        None
    } else {
        // Cauchy-Schwarz bounds the true value by 1; clamp rounding spill
        Some((dot / (nu.sqrt() * nv.sqrt())).min(1.0))
    }
}

/// Cosine similarity of two annotation vectors under per-dimension weights.
///
/// Both vectors must come from the same unit and `weights` must cover every
/// dimension (frame weights first, NONE weight last).
pub fn weighted_cosine(u: &AnnotationVector, v: &AnnotationVector, weights: &[f64]) -> Result<f64, MetricsError> {
    assert_eq!(u.components().len(), v.components().len(), "vectors of different units");
    assert_eq!(weights.len(), u.components().len(), "weight per dimension required");
    cosine_opt(u.components(), v.components(), weights).ok_or(MetricsError::ZeroVector)
}

// (worker weight, vector) rows of one unit, in canonical worker order.
type Rows<'a> = [(f64, &'a [u8])];

fn fss_core(rows: &Rows, dims: usize) -> Vec<f64> {
    let total: f64 = rows.iter().map(|(w, _)| *w).sum();
    let mut out = vec![0.0; dims];
    for (d, slot) in out.iter_mut().enumerate() {
        if total > 0.0 {
            let mut num = 0.0;
            for (w, v) in rows {
                if v[d] != 0 {
                    num += *w;
                }
            }
            *slot = num / total;
        } else {
            // all worker weights are 0, fall back to the unweighted fraction
            let count = rows.iter().filter(|(_, v)| v[d] != 0).count();
            *slot = count as f64 / rows.len() as f64;
        }
    }
    out
}

fn sqs_core(rows: &Rows, q: &[f64]) -> f64 {
    if rows.len() < 2 {
        return 0.0;
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            // pairs with an undefined cosine drop out of both sums
            if let Some(c) = cosine_opt(rows[i].1, rows[j].1, q) {
                let w = rows[i].0 * rows[j].0;
                num += w * c;
                den += w;
            }
        }
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

// terms: (sentence quality, co-worker prior, cosine when defined)
fn wqs_core(terms: impl Iterator<Item = (f64, f64, Option<f64>)>) -> (f64, bool) {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut lone = true;
    for (s, prior, cos) in terms {
        lone = false;
        if let Some(c) = cos {
            num += s * prior * c;
            den += s * prior;
        }
    }
    if lone {
        (1.0, true)
    } else if den > 0.0 {
        (num / den, false)
    } else {
        (0.0, false)
    }
}

// support: (sentence quality, positive FSS) over units where the frame scored
// above zero. None observed at all means the frame was never selected.
fn fqs_core(support: impl Iterator<Item = (f64, f64)>) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut any = false;
    for (s, fss) in support {
        any = true;
        num += s * fss;
        den += s;
    }
    if !any {
        1.0
    } else if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn unit_rows<'a>(
    unit: &Unit,
    judgments: &[Judgment],
    weight_of: impl Fn(&WorkerId) -> f64,
    store: &'a mut Vec<(f64, AnnotationVector)>,
) -> Result<Vec<(f64, &'a [u8])>, MetricsError> {
    store.clear();
    for j in judgments {
        let v = build_annotation_vector(j, unit)?;
        store.push((weight_of(&j.worker), v));
    }
    Ok(store.iter().map(|(w, v)| (*w, v.components())).collect())
}

fn cosine_weights(unit: &Unit, fqs: &BTreeMap<FrameId, f64>, none_weight: f64) -> Vec<f64> {
    let mut q: Vec<f64> = unit
        .candidates
        .iter()
        // frames absent from the map get the neutral never-selected default
        .map(|c| fqs.get(c).copied().unwrap_or(1.0))
        .collect();
    q.push(none_weight);
    q
}

/// Frame-sentence score of every choice of one unit: the worker-quality-
/// weighted fraction of the unit's annotators selecting the choice.
pub fn compute_fss(
    unit: &Unit,
    judgments: &[Judgment],
    wqs: &BTreeMap<WorkerId, f64>,
) -> Result<BTreeMap<Choice, f64>, MetricsError> {
    if judgments.is_empty() {
        return Err(MetricsError::EmptyUnit(unit.unit_id.clone()));
    }
    let mut store = Vec::new();
    let weight = |w: &WorkerId| *wqs.get(w).expect("wqs must cover every worker of the unit");
    let rows = unit_rows(unit, judgments, weight, &mut store)?;
    let scores = fss_core(&rows, unit.candidates.len() + 1);
    Ok(unit.choices().zip(scores).collect())
}

/// Sentence quality score of one unit: the quality-weighted average pairwise
/// cosine among its annotation vectors. Zero when fewer than two judgments.
pub fn compute_sqs(
    unit: &Unit,
    judgments: &[Judgment],
    wqs: &BTreeMap<WorkerId, f64>,
    fqs: &BTreeMap<FrameId, f64>,
    none_weight: f64,
) -> Result<f64, MetricsError> {
    if judgments.is_empty() {
        return Err(MetricsError::EmptyUnit(unit.unit_id.clone()));
    }
    let mut store = Vec::new();
    let weight = |w: &WorkerId| *wqs.get(w).expect("wqs must cover every worker of the unit");
    let rows = unit_rows(unit, judgments, weight, &mut store)?;
    Ok(sqs_core(&rows, &cosine_weights(unit, fqs, none_weight)))
}

/// Worker quality score: the sentence-quality- and co-worker-prior-weighted
/// average cosine of the worker's vectors against co-annotators.
///
/// Returns `(score, lone)`. A lone worker (no co-annotated unit anywhere)
/// gets 1.0 and the flag, since no agreement evidence exists.
pub fn compute_wqs(
    worker: &WorkerId,
    corpus: &Corpus,
    sqs: &BTreeMap<UnitId, f64>,
    fqs: &BTreeMap<FrameId, f64>,
    wqs_prev: &BTreeMap<WorkerId, f64>,
    none_weight: f64,
) -> Result<(f64, bool), MetricsError> {
    let mut terms = Vec::new();
    for (uid, unit) in corpus.units() {
        let judgments = corpus.judgments_for(uid);
        let Some(own) = judgments.iter().find(|j| &j.worker == worker) else {
            continue;
        };
        let own_vec = build_annotation_vector(own, unit)?;
        let q = cosine_weights(unit, fqs, none_weight);
        let s = *sqs.get(uid).expect("sqs must cover every unit");
        for j in judgments {
            if &j.worker == worker {
                continue;
            }
            let other = build_annotation_vector(j, unit)?;
            let prior = *wqs_prev.get(&j.worker).expect("wqs_prev must cover every worker");
            terms.push((s, prior, cosine_opt(own_vec.components(), other.components(), &q)));
        }
    }
    Ok(wqs_core(terms.into_iter()))
}

/// Frame quality score: the sentence-quality-weighted average of the frame's
/// positive FSS values across the corpus. Never-selected frames get the
/// neutral 1.0.
pub fn compute_fqs(
    frame: &FrameId,
    fss_all: &BTreeMap<UnitId, BTreeMap<Choice, f64>>,
    sqs: &BTreeMap<UnitId, f64>,
) -> Result<f64, MetricsError> {
    let key = Choice::Frame(frame.clone());
    let mut known = false;
    let mut support = Vec::new();
    for (uid, row) in fss_all {
        if let Some(&v) = row.get(&key) {
            known = true;
            if v > 0.0 {
                support.push((*sqs.get(uid).expect("sqs must cover every unit"), v));
            }
        }
    }
    if !known {
        return Err(MetricsError::UnknownFrame(frame.clone()));
    }
    Ok(fqs_core(support.into_iter()))
}

/// The iterative engine behind [`run_fixed_point`], exposed so tests can
/// observe per-iteration state.
///
/// Indices are canonical everywhere: units, workers, and frames are numbered
/// in their sorted id order, and judgment rows within a unit are sorted by
/// worker. Every reduction follows those orders, so results do not depend on
/// thread scheduling.
pub struct FixedPointEngine<'a> {
    corpus: &'a Corpus,
    config: FixedPointConfig,
    parallel: bool,
    dims: Vec<usize>,
    // per unit: (worker index, vector components), in worker order
    rows: Vec<Vec<(usize, Vec<u8>)>>,
    // per unit: frame index of each candidate dimension
    unit_frames: Vec<Vec<usize>>,
    // per worker: (unit index, own row index)
    worker_rows: Vec<Vec<(usize, usize)>>,
    lone: Vec<bool>,
    // per frame: (unit index, dimension) where the frame is a candidate
    frame_sites: Vec<Vec<(usize, usize)>>,
    wqs: Vec<f64>,
    sqs: Vec<f64>,
    fqs: Vec<f64>,
    fss: Vec<Vec<f64>>,
    iterations: usize,
    delta_trace: Vec<f64>,
    converged: bool,
}

impl<'a> FixedPointEngine<'a> {
    pub fn new(corpus: &'a Corpus, config: FixedPointConfig) -> Result<Self, MetricsError> {
        config.validate()?;

        let unit_ids: Vec<&UnitId> = corpus.units().keys().collect();
        let worker_ids: Vec<&WorkerId> = corpus.workers().iter().collect();
        let frame_ids: Vec<&FrameId> = corpus.frames().iter().collect();
        let widx = |w: &WorkerId| worker_ids.binary_search(&w).expect("worker is indexed");
        let fidx = |f: &FrameId| frame_ids.binary_search(&f).expect("frame is indexed");

        let mut dims = Vec::with_capacity(unit_ids.len());
        let mut rows = Vec::with_capacity(unit_ids.len());
        let mut unit_frames = Vec::with_capacity(unit_ids.len());
        let mut worker_rows = vec![Vec::new(); worker_ids.len()];
        let mut frame_sites = vec![Vec::new(); frame_ids.len()];

        for (ui, uid) in unit_ids.iter().enumerate() {
            let unit = corpus.unit(uid).expect("unit is indexed");
            let judgments = corpus.judgments_for(uid);
            if judgments.is_empty() {
                return Err(MetricsError::EmptyUnit((*uid).clone()));
            }
            dims.push(unit.candidates.len() + 1);
            let mut unit_rows = Vec::with_capacity(judgments.len());
            for (ri, j) in judgments.iter().enumerate() {
                let v = build_annotation_vector(j, unit)?;
                let w = widx(&j.worker);
                worker_rows[w].push((ui, ri));
                unit_rows.push((w, v.components().to_vec()));
            }
            rows.push(unit_rows);
            let mut frames_here = Vec::with_capacity(unit.candidates.len());
            for (d, c) in unit.candidates.iter().enumerate() {
                let fi = fidx(c);
                frames_here.push(fi);
                frame_sites[fi].push((ui, d));
            }
            unit_frames.push(frames_here);
        }

        let lone: Vec<bool> = worker_rows
            .iter()
            .map(|sites| sites.iter().all(|&(u, _)| rows[u].len() == 1))
            .collect();

        let fss = dims.iter().map(|&d| vec![0.0; d]).collect();
        Ok(FixedPointEngine {
            corpus,
            config,
            parallel: true,
            wqs: vec![1.0; worker_ids.len()],
            sqs: vec![1.0; unit_ids.len()],
            fqs: vec![1.0; frame_ids.len()],
            fss,
            dims,
            rows,
            unit_frames,
            worker_rows,
            lone,
            frame_sites,
            iterations: 0,
            delta_trace: Vec::new(),
            converged: false,
        })
    }

    /// Serial and parallel mode produce bit-identical scores; parallel is the
    /// default.
    pub fn set_parallel(&mut self, parallel: bool) {
        self.parallel = parallel;
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    fn unit_q(&self, u: usize) -> Vec<f64> {
        let mut q: Vec<f64> = self.unit_frames[u].iter().map(|&fi| self.fqs[fi]).collect();
        q.push(self.config.none_weight);
        q
    }

    fn fss_unit(&self, u: usize) -> Vec<f64> {
        let rows: Vec<(f64, &[u8])> = self.rows[u].iter().map(|(w, v)| (self.wqs[*w], v.as_slice())).collect();
        fss_core(&rows, self.dims[u])
    }

    fn sqs_unit(&self, u: usize, q: &[f64]) -> f64 {
        let rows: Vec<(f64, &[u8])> = self.rows[u].iter().map(|(w, v)| (self.wqs[*w], v.as_slice())).collect();
        sqs_core(&rows, q)
    }

    fn wqs_worker(&self, w: usize, sqs_new: &[f64], qs: &[Vec<f64>]) -> f64 {
        if self.lone[w] {
            return 1.0;
        }
        let terms = self.worker_rows[w].iter().flat_map(|&(u, ri)| {
            let rows = &self.rows[u];
            let own = rows[ri].1.as_slice();
            rows.iter().enumerate().filter_map(move |(rj, (w2, other))| {
                if rj == ri {
                    None
                } else {
                    Some((sqs_new[u], self.wqs[*w2], cosine_opt(own, other, &qs[u])))
                }
            })
        });
        wqs_core(terms).0
    }

    fn fqs_frame(&self, f: usize, fss_new: &[Vec<f64>], sqs_new: &[f64]) -> f64 {
        let support = self.frame_sites[f]
            .iter()
            .map(|&(u, d)| (sqs_new[u], fss_new[u][d]))
            .filter(|&(_, v)| v > 0.0);
        fqs_core(support)
    }

    /// Runs one update round and returns its L-infinity change.
    pub fn step(&mut self) -> f64 {
        let n_units = self.rows.len();
        let n_workers = self.worker_rows.len();
        let n_frames = self.frame_sites.len();

        // cosine weights of the iteration, from the previous FQS
        let qs: Vec<Vec<f64>> = (0..n_units).map(|u| self.unit_q(u)).collect();

        let (fss_new, sqs_new): (Vec<Vec<f64>>, Vec<f64>) = if self.parallel {
            (
                (0..n_units).into_par_iter().map(|u| self.fss_unit(u)).collect(),
                (0..n_units).into_par_iter().map(|u| self.sqs_unit(u, &qs[u])).collect(),
            )
        } else {
            (
                (0..n_units).map(|u| self.fss_unit(u)).collect(),
                (0..n_units).map(|u| self.sqs_unit(u, &qs[u])).collect(),
            )
        };

        let wqs_new: Vec<f64> = if self.parallel {
            (0..n_workers)
                .into_par_iter()
                .map(|w| self.wqs_worker(w, &sqs_new, &qs))
                .collect()
        } else {
            (0..n_workers).map(|w| self.wqs_worker(w, &sqs_new, &qs)).collect()
        };

        let fqs_new: Vec<f64> = if self.parallel {
            (0..n_frames)
                .into_par_iter()
                .map(|f| self.fqs_frame(f, &fss_new, &sqs_new))
                .collect()
        } else {
            (0..n_frames).map(|f| self.fqs_frame(f, &fss_new, &sqs_new)).collect()
        };

        let mut delta: f64 = 0.0;
        for (new, old) in sqs_new.iter().zip(&self.sqs) {
            delta = delta.max((new - old).abs());
        }
        for (new, old) in wqs_new.iter().zip(&self.wqs) {
            delta = delta.max((new - old).abs());
        }
        for (new, old) in fqs_new.iter().zip(&self.fqs) {
            delta = delta.max((new - old).abs());
        }

        self.fss = fss_new;
        self.sqs = sqs_new;
        self.wqs = wqs_new;
        self.fqs = fqs_new;
        self.iterations += 1;
        self.delta_trace.push(delta);
        self.converged = delta < self.config.epsilon;
        delta
    }

    /// Iterates from the current state until convergence or the iteration
    /// cap, then returns a snapshot.
    pub fn run(&mut self) -> QualityScores {
        loop {
            let delta = self.step();
            if delta < self.config.epsilon || self.iterations >= self.config.max_iterations {
                break;
            }
        }
        self.scores()
    }

    /// Snapshot of the current state as id-keyed maps.
    pub fn scores(&self) -> QualityScores {
        let mut fss = BTreeMap::new();
        let mut sqs = BTreeMap::new();
        for (ui, (uid, unit)) in self.corpus.units().iter().enumerate() {
            fss.insert(uid.clone(), unit.choices().zip(self.fss[ui].iter().copied()).collect());
            sqs.insert(uid.clone(), self.sqs[ui]);
        }
        let wqs = self.corpus.workers().iter().cloned().zip(self.wqs.iter().copied()).collect();
        let fqs = self.corpus.frames().iter().cloned().zip(self.fqs.iter().copied()).collect();
        let lone_workers = self
            .corpus
            .workers()
            .iter()
            .zip(&self.lone)
            .filter(|(_, &l)| l)
            .map(|(w, _)| w.clone())
            .collect();
        QualityScores {
            fss,
            sqs,
            fqs,
            wqs,
            iterations: self.iterations,
            converged: self.converged,
            delta_trace: self.delta_trace.clone(),
            lone_workers,
        }
    }
}

/// Computes all four metrics to a fixed point and returns the scores with
/// their iteration trace. Non-convergence within the iteration cap is not an
/// error; the scores come back with `converged = false`.
pub fn run_fixed_point(corpus: &Corpus, config: FixedPointConfig) -> Result<QualityScores, MetricsError> {
    let mut engine = FixedPointEngine::new(corpus, config)?;
    Ok(engine.run())
}

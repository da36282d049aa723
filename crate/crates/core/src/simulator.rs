//! Synthetic crowd generator with planted ground truth.
//!
//! Every worker has a reliability r and every unit a clarity c, both Beta
//! distributed. A worker includes the gold frame with probability
//! (1 + c*r) / 2, anchoring a zero-reliability worker at chance, and each
//! distractor independently with probability gamma * (1 - r) * (1 - c). A
//! judgment that selects nothing becomes NONE.
//!
//! Generation is fully deterministic per seed. The RNG is ChaCha8 seeded
//! from the config's 64-bit seed, and the draw order (workers' reliabilities,
//! then per unit: candidate set, gold, clarity, annotator set, judgments in
//! worker order with choices tested in candidate order) is part of the
//! format: the same config yields the same corpus byte for byte.

use std::collections::BTreeMap;

use rand::seq::index::sample as index_sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{validate_corpus, Choice, Corpus, FrameId, Judgment, Unit, UnitId, Warning, WorkerId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("infeasible config: {0}")]
    InfeasibleConfig(&'static str),
    #[error("invalid config: {0}")]
    InvalidConfig(&'static str),
}

/// Knobs of the generative model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub num_units: usize,
    pub frame_pool_size: usize,
    /// Inclusive candidate-count range per unit, within [2, 20].
    pub candidates_per_unit: (usize, usize),
    /// Size of the worker pool; each unit samples its annotators from it.
    pub num_workers: usize,
    pub workers_per_unit: usize,
    pub reliability_alpha: f64,
    pub reliability_beta: f64,
    pub clarity_alpha: f64,
    pub clarity_beta: f64,
    /// Gamma in [0, 1], scaling distractor selection.
    pub confusability: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            num_units: 100,
            frame_pool_size: 40,
            candidates_per_unit: (2, 8),
            num_workers: 15,
            workers_per_unit: 15,
            reliability_alpha: 4.0,
            reliability_beta: 2.0,
            clarity_alpha: 3.0,
            clarity_beta: 2.0,
            confusability: 0.5,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let (lo, hi) = self.candidates_per_unit;
        if lo < 2 || hi > 20 || lo > hi {
            return Err(SimError::InvalidConfig("candidates_per_unit must lie within [2, 20]"));
        }
        if self.num_units < 1 {
            return Err(SimError::InvalidConfig("num_units must be at least 1"));
        }
        if self.workers_per_unit < 2 {
            return Err(SimError::InvalidConfig("workers_per_unit must be at least 2"));
        }
        if self.num_workers < self.workers_per_unit {
            return Err(SimError::InvalidConfig("worker pool must cover workers_per_unit"));
        }
        for p in [
            self.reliability_alpha,
            self.reliability_beta,
            self.clarity_alpha,
            self.clarity_beta,
        ] {
            if !(p > 0.0) {
                return Err(SimError::InvalidConfig("Beta parameters must be positive"));
            }
        }
        if !(0.0..=1.0).contains(&self.confusability) {
            return Err(SimError::InvalidConfig("confusability must lie in [0, 1]"));
        }
        if self.frame_pool_size < hi {
            return Err(SimError::InfeasibleConfig("frame pool smaller than the maximum candidate count"));
        }
        Ok(())
    }
}

/// The ground truth a recovery test measures against.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedTruth {
    pub reliabilities: BTreeMap<WorkerId, f64>,
    pub clarities: BTreeMap<UnitId, f64>,
    pub gold: BTreeMap<UnitId, FrameId>,
}

// Beta samples at exactly 0 or 1 (possible through rounding for extreme
// shapes) would break the open-interval invariant.
fn sample_open_unit(beta: &Beta<f64>, rng: &mut impl Rng) -> f64 {
    beta.sample(rng).clamp(1e-12, 1.0 - 1e-12)
}

fn digits(n: usize) -> usize {
    n.max(1).to_string().len()
}

/// One worker's selections on one unit under the generative model.
///
/// The unit must carry its gold frame. Choices are tested in candidate
/// order; selecting nothing yields NONE.
pub fn sample_judgment(
    worker: WorkerId,
    unit: &Unit,
    reliability: f64,
    clarity: f64,
    confusability: f64,
    rng: &mut impl Rng,
) -> Judgment {
    let gold = unit.gold.as_ref().expect("simulated units always carry gold");
    let p_gold = (1.0 + clarity * reliability) / 2.0;
    let p_distractor = confusability * (1.0 - reliability) * (1.0 - clarity);

    let mut selections = std::collections::BTreeSet::new();
    for c in &unit.candidates {
        let p = if c == gold { p_gold } else { p_distractor };
        if rng.gen_bool(p) {
            selections.insert(Choice::Frame(c.clone()));
        }
    }
    if selections.is_empty() {
        selections.insert(Choice::None);
    }
    Judgment {
        worker,
        unit: unit.unit_id.clone(),
        selections,
    }
}

/// Generates a corpus and its planted truth, deterministically per seed.
///
/// The output always satisfies every corpus invariant; it is routed through
/// [`validate_corpus`] before being returned, and the validator's warnings
/// (units with fewer than 15 judgments) are passed along.
pub fn generate_corpus(config: &SimConfig) -> Result<(Corpus, PlantedTruth, Vec<Warning>), SimError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let reliability_dist = Beta::new(config.reliability_alpha, config.reliability_beta)
        .expect("parameters checked by validate");
    let clarity_dist = Beta::new(config.clarity_alpha, config.clarity_beta).expect("parameters checked by validate");

    let ww = digits(config.num_workers);
    let uw = digits(config.num_units);
    let fw = digits(config.frame_pool_size);

    let workers: Vec<WorkerId> = (1..=config.num_workers)
        .map(|i| WorkerId::new(format!("w{i:0ww$}")).expect("generated id is valid"))
        .collect();
    let frame_pool: Vec<FrameId> = (1..=config.frame_pool_size)
        .map(|i| FrameId::new(format!("F{i:0fw$}")).expect("generated id is valid"))
        .collect();

    let mut reliabilities = BTreeMap::new();
    for w in &workers {
        reliabilities.insert(w.clone(), sample_open_unit(&reliability_dist, &mut rng));
    }

    let (lo, hi) = config.candidates_per_unit;
    let mut units = Vec::with_capacity(config.num_units);
    let mut judgments = Vec::new();
    let mut clarities = BTreeMap::new();
    let mut gold_map = BTreeMap::new();

    for i in 1..=config.num_units {
        let unit_id = UnitId::new(format!("u{i:0uw$}")).expect("generated id is valid");
        let n_cand = rng.gen_range(lo..=hi);
        let mut cand_idx = index_sample(&mut rng, config.frame_pool_size, n_cand).into_vec();
        cand_idx.sort_unstable();
        let candidates: Vec<FrameId> = cand_idx.iter().map(|&k| frame_pool[k].clone()).collect();
        let gold = candidates[rng.gen_range(0..n_cand)].clone();
        let clarity = sample_open_unit(&clarity_dist, &mut rng);

        let unit = Unit {
            unit_id: unit_id.clone(),
            sentence: format!("Synthetic sentence {i}, with a planted token for annotation."),
            target_word: "token".into(),
            candidates,
            gold: Some(gold.clone()),
        };

        let mut annotators = index_sample(&mut rng, config.num_workers, config.workers_per_unit).into_vec();
        annotators.sort_unstable();
        for &k in &annotators {
            let worker = workers[k].clone();
            let r = reliabilities[&worker];
            judgments.push(sample_judgment(worker, &unit, r, clarity, config.confusability, &mut rng));
        }

        clarities.insert(unit_id.clone(), clarity);
        gold_map.insert(unit_id, gold);
        units.push(unit);
    }

    let (corpus, warnings) = validate_corpus(units, judgments).expect("generated corpus always validates");
    Ok((
        corpus,
        PlantedTruth {
            reliabilities,
            clarities,
            gold: gold_map,
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

    fn test_unit() -> Unit {
        Unit {
            unit_id: UnitId::new("u1").unwrap(),
            sentence: "a token here".into(),
            target_word: "token".into(),
            candidates: vec![fid("A"), fid("B"), fid("C"), fid("D")],
            gold: Some(fid("B")),
        }
    }

    #[test]
    fn noiseless_worker_selects_exactly_gold() {
        let unit = test_unit();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let j = sample_judgment(WorkerId::new("w").unwrap(), &unit, 1.0, 1.0, 0.0, &mut rng);
            assert_eq!(j.selections.len(), 1);
            assert!(j.selections.contains(&Choice::Frame(fid("B"))));
        }
    }

    #[test]
    fn selection_frequencies_match_closed_form() {
        // r 0.8, c 0.75: p_gold 0.8, p_distractor 0.5 * 0.2 * 0.25 = 0.025
        let unit = test_unit();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000u32;
        let mut gold_hits = 0u32;
        let mut distractor_hits = 0u64;
        for _ in 0..n {
            let j = sample_judgment(WorkerId::new("w").unwrap(), &unit, 0.8, 0.75, 0.5, &mut rng);
            if j.selections.contains(&Choice::Frame(fid("B"))) {
                gold_hits += 1;
            }
            distractor_hits += j
                .selections
                .iter()
                .filter(|s| matches!(s, Choice::Frame(f) if *f != fid("B")))
                .count() as u64;
        }
        let gold_freq = gold_hits as f64 / n as f64;
        let distractor_freq = distractor_hits as f64 / (3 * n) as f64;
        assert!((gold_freq - 0.8).abs() < 0.002, "gold frequency {gold_freq}");
        assert!((distractor_freq - 0.025).abs() < 0.002, "distractor frequency {distractor_freq}");
    }

    #[test]
    fn zero_reliability_is_a_coin_flip_regardless_of_clarity() {
        let unit = test_unit();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for clarity in [0.1, 0.9] {
            let n = 200_000u32;
            let hits = (0..n)
                .filter(|_| {
                    sample_judgment(WorkerId::new("w").unwrap(), &unit, 0.0, clarity, 0.0, &mut rng)
                        .selections
                        .contains(&Choice::Frame(fid("B")))
                })
                .count();
            let freq = hits as f64 / n as f64;
            assert!((freq - 0.5).abs() < 0.005, "clarity {clarity}: gold frequency {freq}");
        }
    }

    #[test]
    fn gold_frequency_is_monotone_in_reliability_and_clarity() {
        let unit = test_unit();
        let grid = [0.1, 0.3, 0.5, 0.7, 0.9];
        let n = 200_000u32;
        let mut freq = [[0.0f64; 5]; 5];
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for (i, &r) in grid.iter().enumerate() {
            for (j, &c) in grid.iter().enumerate() {
                let hits = (0..n)
                    .filter(|_| {
                        sample_judgment(WorkerId::new("w").unwrap(), &unit, r, c, 0.5, &mut rng)
                            .selections
                            .contains(&Choice::Frame(fid("B")))
                    })
                    .count();
                freq[i][j] = hits as f64 / n as f64;
            }
        }
        for i in 0..5 {
            for j in 0..4 {
                assert!(freq[i][j + 1] >= freq[i][j] - 0.004, "not monotone in clarity at ({i},{j})");
                assert!(freq[j + 1][i] >= freq[j][i] - 0.004, "not monotone in reliability at ({j},{i})");
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let config = SimConfig {
            num_units: 12,
            num_workers: 6,
            workers_per_unit: 5,
            ..Default::default()
        };
        let (c1, t1, w1) = generate_corpus(&config).unwrap();
        let (c2, t2, w2) = generate_corpus(&config).unwrap();
        assert_eq!(c1, c2);
        assert_eq!(t1, t2);
        assert_eq!(w1, w2);

        let (c3, _, _) = generate_corpus(&SimConfig { seed: 1, ..config }).unwrap();
        assert_ne!(c1, c3);
    }

    #[test]
    fn generated_corpus_is_valid_and_truth_is_consistent() {
        let config = SimConfig {
            num_units: 30,
            num_workers: 10,
            workers_per_unit: 7,
            candidates_per_unit: (2, 6),
            frame_pool_size: 9,
            ..Default::default()
        };
        let (corpus, truth, warnings) = generate_corpus(&config).unwrap();
        assert_eq!(corpus.units().len(), 30);
        assert_eq!(corpus.workers().len(), 10);
        // 7 annotators per unit is below the 15 the validator recommends
        assert_eq!(warnings.len(), 30);
        for (uid, unit) in corpus.units() {
            assert_eq!(corpus.judgments_for(uid).len(), 7);
            let gold = &truth.gold[uid];
            assert!(unit.candidates.contains(gold));
            let c = truth.clarities[uid];
            assert!(c > 0.0 && c < 1.0);
        }
        for r in truth.reliabilities.values() {
            assert!(*r > 0.0 && *r < 1.0);
        }
    }

    #[test]
    fn default_config_yields_no_warnings() {
        let config = SimConfig {
            num_units: 5,
            ..Default::default()
        };
        let (_, _, warnings) = generate_corpus(&config).unwrap();
        assert!(warnings.is_empty());
    }

    #[test]
    fn config_validation_errors() {
        let bad = SimConfig {
            frame_pool_size: 5,
            candidates_per_unit: (2, 8),
            ..Default::default()
        };
        assert!(matches!(generate_corpus(&bad), Err(SimError::InfeasibleConfig(_))));
        let bad = SimConfig {
            candidates_per_unit: (1, 8),
            ..Default::default()
        };
        assert!(matches!(generate_corpus(&bad), Err(SimError::InvalidConfig(_))));
        let bad = SimConfig {
            workers_per_unit: 20,
            num_workers: 10,
            ..Default::default()
        };
        assert!(matches!(generate_corpus(&bad), Err(SimError::InvalidConfig(_))));
        let bad = SimConfig {
            confusability: 1.5,
            ..Default::default()
        };
        assert!(matches!(generate_corpus(&bad), Err(SimError::InvalidConfig(_))));
    }
}

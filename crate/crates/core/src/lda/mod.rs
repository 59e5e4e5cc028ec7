//! Latent Dirichlet allocation fitted by collapsed Gibbs sampling, with
//! asymmetric document-topic prior optimisation, held-out scoring and
//! per-document topic inference.
//!
//! Count layout: document-topic counts are stored document-major
//! (`doc * K + topic`), topic-word counts word-major (`word * K + topic`) so
//! that the inner sampling loop over topics walks contiguous memory.

mod hyper;
mod infer;
mod model;
mod select;
mod state;
mod train;

pub use hyper::{dirichlet_multinomial_log_evidence, optimize_alpha, optimize_alpha_counts, AlphaUpdate};
pub use infer::{held_out_log_likelihood, infer, infer_corpus, HeldOutScore, DEFAULT_INFER_ITERATIONS};
pub use model::{LdaModel, TopWord, MODEL_MAGIC, MODEL_VERSION};
pub use select::{sweep_hyperparameters, GridPoint, SweepOutcome, SweepRow};
pub use state::{gibbs_sweep, init_assignments, GibbsState};
pub use train::{train, SweepRecord, TrainOutput};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{TokenSequence, Vocabulary};

/// Lower bound applied to every prior component after an update.
pub const ALPHA_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub topics: usize,
    /// Initial prior: per-topic value, or the concentration sum when
    /// `alpha_is_sum` is set.
    pub alpha_init: f64,
    pub alpha_is_sum: bool,
    pub beta: f64,
    pub burn_in: usize,
    pub total_iterations: usize,
    /// Sweeps between prior updates once burn-in is over; 0 disables them.
    pub hyperopt_interval: usize,
    pub seed: u64,
    /// Document-partitioned sampling threads. 1 is exact and bit-deterministic;
    /// more workers sample against per-sweep snapshots of topic-word counts.
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            topics: 250,
            alpha_init: 1.0,
            alpha_is_sum: false,
            beta: 0.01,
            burn_in: 100,
            total_iterations: 500,
            hyperopt_interval: 10,
            seed: 1,
            workers: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.topics < 1 {
            return Err(Error::argument("topics must be at least 1"));
        }
        if !(self.alpha_init > 0.0 && self.alpha_init.is_finite()) {
            return Err(Error::argument("alpha_init must be positive and finite"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::argument("beta must be positive and finite"));
        }
        if self.burn_in >= self.total_iterations {
            return Err(Error::argument("burn_in must be smaller than total_iterations"));
        }
        if self.workers < 1 {
            return Err(Error::argument("workers must be at least 1"));
        }
        Ok(())
    }

    pub fn initial_alpha(&self) -> Vec<f64> {
        let a = if self.alpha_is_sum {
            self.alpha_init / self.topics as f64
        } else {
            self.alpha_init
        };
        vec![a; self.topics]
    }
}

/// Documents as vocabulary ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedCorpus {
    docs: Vec<Vec<u32>>,
    vocab_size: usize,
    vocab_fingerprint: u64,
}

impl EncodedCorpus {
    pub fn new(docs: Vec<Vec<u32>>, vocab_size: usize) -> Result<Self> {
        if let Some(bad) = docs.iter().flatten().find(|&&w| w as usize >= vocab_size) {
            return Err(Error::argument(format!(
                "word id {bad} out of range for vocabulary of {vocab_size}"
            )));
        }
        Ok(EncodedCorpus {
            docs,
            vocab_size,
            vocab_fingerprint: 0,
        })
    }

    pub fn encode<'a, I>(vocab: &Vocabulary, docs: I) -> Self
    where
        I: IntoIterator<Item = &'a TokenSequence>,
    {
        EncodedCorpus {
            docs: docs.into_iter().map(|d| vocab.encode(d)).collect(),
            vocab_size: vocab.len(),
            vocab_fingerprint: vocab.fingerprint(),
        }
    }

    pub fn docs(&self) -> &[Vec<u32>] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn vocab_fingerprint(&self) -> u64 {
        self.vocab_fingerprint
    }

    pub fn token_count(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }
}

/// Per-document topic proportions.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicDistribution(pub Vec<f64>);

impl TopicDistribution {
    pub fn topics(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn prior_mean(alpha: &[f64]) -> Self {
        let sum: f64 = alpha.iter().sum();
        TopicDistribution(alpha.iter().map(|a| a / sum).collect())
    }
}

// Distinct stream families so that initialisation, sweeps and inference never
// share random words.
pub(crate) const PURPOSE_INIT: u64 = 1;
pub(crate) const PURPOSE_SWEEP: u64 = 2;
pub(crate) const PURPOSE_INFER: u64 = 3;

/// Counter-addressed generator: the draws for (`stream`, `counter`) depend only
/// on the seed and those two coordinates, not on which thread asks.
pub(crate) fn stream_rng(seed: u64, purpose: u64, stream: u64, counter: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(stream);
    rng.set_word_pos((counter as u128) << 32);
    rng
}

/// Draws an index proportionally to `weights[..]` given their total.
#[inline]
pub(crate) fn draw_index(weights: &[f64], total: f64, u: f64) -> usize {
    let mut target = u * total;
    for (k, &w) in weights.iter().enumerate() {
        target -= w;
        if target < 0.0 {
            return k;
        }
    }
    // Rounding left a sliver of mass; fall back to the last positive weight.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

/// `ln Γ(n + offset)` for small integer `n`, falling back to direct evaluation.
pub(crate) struct LnGammaTable {
    offset: f64,
    values: Vec<f64>,
}

impl LnGammaTable {
    pub(crate) fn new(offset: f64, max_n: usize) -> Self {
        LnGammaTable {
            offset,
            values: (0..=max_n)
                .map(|n| statrs::function::gamma::ln_gamma(n as f64 + offset))
                .collect(),
        }
    }

    #[inline]
    pub(crate) fn get(&self, n: u32) -> f64 {
        match self.values.get(n as usize) {
            Some(&v) => v,
            None => statrs::function::gamma::ln_gamma(n as f64 + self.offset),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = [
            TrainConfig { topics: 0, ..Default::default() },
            TrainConfig { beta: 0.0, ..Default::default() },
            TrainConfig { alpha_init: -1.0, ..Default::default() },
            TrainConfig { burn_in: 500, ..Default::default() },
            TrainConfig { workers: 0, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn alpha_modes() {
        let c = TrainConfig { topics: 4, alpha_init: 2.0, ..Default::default() };
        assert_eq!(c.initial_alpha(), vec![2.0; 4]);
        let c = TrainConfig { alpha_is_sum: true, ..c };
        assert_eq!(c.initial_alpha(), vec![0.5; 4]);
    }

    #[test]
    fn encoded_corpus_checks_ids() {
        assert!(EncodedCorpus::new(vec![vec![0, 3]], 3).is_err());
        let c = EncodedCorpus::new(vec![vec![0, 2], vec![]], 3).unwrap();
        assert_eq!(c.token_count(), 2);
    }

    #[test]
    fn draw_index_edges() {
        let w = [0.0, 1.0, 0.0, 3.0];
        assert_eq!(draw_index(&w, 4.0, 0.0), 1);
        assert_eq!(draw_index(&w, 4.0, 0.2499), 1);
        assert_eq!(draw_index(&w, 4.0, 0.25), 3);
        assert_eq!(draw_index(&w, 4.0, 0.999_999_999), 3);
        assert_eq!(draw_index(&w, 4.0 + 1e-9, 1.0), 3);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        use rand::Rng;
        let a: Vec<u64> = (0..4).map(|_| 0).scan(stream_rng(7, 2, 3, 4), |r, _| Some(r.random())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(stream_rng(7, 2, 3, 4), |r, _| Some(r.random())).collect();
        let c: Vec<u64> = (0..4).map(|_| 0).scan(stream_rng(7, 2, 3, 5), |r, _| Some(r.random())).collect();
        let d: Vec<u64> = (0..4).map(|_| 0).scan(stream_rng(7, 2, 4, 4), |r, _| Some(r.random())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn ln_gamma_table_matches_direct() {
        let t = LnGammaTable::new(0.37, 8);
        for n in 0..20u32 {
            let direct = statrs::function::gamma::ln_gamma(n as f64 + 0.37);
            assert_eq!(t.get(n), direct);
        }
    }
}

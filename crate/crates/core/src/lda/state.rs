use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{draw_index, stream_rng, EncodedCorpus, LnGammaTable, TrainConfig, PURPOSE_INIT, PURPOSE_SWEEP};
use crate::error::{Error, Result};

/// Topic assignments of every token together with the count tables they imply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GibbsState {
    topics: usize,
    vocab_size: usize,
    words: Vec<Vec<u32>>,
    z: Vec<Vec<u32>>,
    doc_topic: Vec<u32>,
    word_topic: Vec<u32>,
    topic_totals: Vec<u32>,
    doc_lengths: Vec<u32>,
}

/// Uniform random topic for every token.
pub fn init_assignments(corpus: &EncodedCorpus, config: &TrainConfig) -> Result<GibbsState> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::argument("cannot initialise a sampler on an empty corpus"));
    }
    let k = config.topics;
    let z: Vec<Vec<u32>> = corpus
        .docs()
        .iter()
        .enumerate()
        .map(|(d, doc)| {
            let mut rng = stream_rng(config.seed, PURPOSE_INIT, d as u64, 0);
            doc.iter().map(|_| rng.random_range(0..k as u32)).collect()
        })
        .collect();
    GibbsState::from_assignments(corpus, k, z)
}

impl GibbsState {
    /// Builds the count tables implied by explicit assignments.
    pub fn from_assignments(corpus: &EncodedCorpus, topics: usize, z: Vec<Vec<u32>>) -> Result<Self> {
        if topics < 1 {
            return Err(Error::argument("topics must be at least 1"));
        }
        if z.len() != corpus.len()
            || z.iter().zip(corpus.docs()).any(|(zd, wd)| zd.len() != wd.len())
        {
            return Err(Error::argument("assignments do not match corpus shape"));
        }
        if z.iter().flatten().any(|&t| t as usize >= topics) {
            return Err(Error::argument("assignment outside topic range"));
        }
        let words = corpus.docs().to_vec();
        let (doc_topic, word_topic, topic_totals) = tally(&words, &z, topics, corpus.vocab_size());
        Ok(GibbsState {
            topics,
            vocab_size: corpus.vocab_size(),
            doc_lengths: words.iter().map(|d| d.len() as u32).collect(),
            words,
            z,
            doc_topic,
            word_topic,
            topic_totals,
        })
    }

    pub fn topics(&self) -> usize {
        self.topics
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn num_docs(&self) -> usize {
        self.words.len()
    }

    pub fn words(&self) -> &[Vec<u32>] {
        &self.words
    }

    pub fn assignments(&self) -> &[Vec<u32>] {
        &self.z
    }

    pub fn doc_lengths(&self) -> &[u32] {
        &self.doc_lengths
    }

    /// Row `d` of the document-topic table.
    pub fn doc_topic_row(&self, d: usize) -> &[u32] {
        &self.doc_topic[d * self.topics..(d + 1) * self.topics]
    }

    pub fn doc_topic_counts(&self) -> &[u32] {
        &self.doc_topic
    }

    pub fn topic_word(&self, topic: usize, word: usize) -> u32 {
        self.word_topic[word * self.topics + topic]
    }

    /// Word-major topic-word counts.
    pub fn word_topic_counts(&self) -> &[u32] {
        &self.word_topic
    }

    pub fn topic_totals(&self) -> &[u32] {
        &self.topic_totals
    }

    /// Recounts every table from `z` and compares with the incremental ones.
    pub fn check_consistency(&self) -> Result<()> {
        let (dt, wt, tt) = tally(&self.words, &self.z, self.topics, self.vocab_size);
        if dt != self.doc_topic {
            return Err(Error::Internal("document-topic counts drifted from assignments".into()));
        }
        if wt != self.word_topic {
            return Err(Error::Internal("topic-word counts drifted from assignments".into()));
        }
        if tt != self.topic_totals {
            return Err(Error::Internal("topic totals drifted from assignments".into()));
        }
        for (d, &n) in self.doc_lengths.iter().enumerate() {
            if self.doc_topic_row(d).iter().sum::<u32>() != n {
                return Err(Error::Internal(format!("document {d} row sum differs from length")));
            }
        }
        Ok(())
    }

    /// Full conditional of token `i` of document `d`, with that token's own
    /// assignment removed from the counts. Normalised.
    pub fn conditional(&self, d: usize, i: usize, alpha: &[f64], beta: f64) -> Vec<f64> {
        let k = self.topics;
        let w = self.words[d][i] as usize;
        let mut weights = vec![0.0; k];
        let total = fill_weights(
            self.doc_topic_row(d),
            &self.word_topic[w * k..(w + 1) * k],
            &self.topic_totals,
            alpha,
            beta,
            beta * self.vocab_size as f64,
            Some(self.z[d][i] as usize),
            &mut weights,
        );
        weights.iter_mut().for_each(|p| *p /= total);
        weights
    }

    /// Collapsed joint `ln p(w, z | α, β)`.
    pub fn log_likelihood(&self, alpha: &[f64], beta: f64) -> f64 {
        self.log_likelihood_in(alpha, beta, None)
    }

    pub(crate) fn log_likelihood_in(
        &self,
        alpha: &[f64],
        beta: f64,
        pool: Option<&rayon::ThreadPool>,
    ) -> f64 {
        use statrs::function::gamma::ln_gamma;
        let k = self.topics;
        let alpha_sum: f64 = alpha.iter().sum();
        let max_len = self.doc_lengths.iter().copied().max().unwrap_or(0) as usize;
        let tables: Vec<LnGammaTable> = alpha.iter().map(|&a| LnGammaTable::new(a, max_len)).collect();
        let lg_alpha: Vec<f64> = alpha.iter().map(|&a| ln_gamma(a)).collect();
        let lg_alpha_sum = ln_gamma(alpha_sum);

        let doc_part = |rows: &[u32], lens: &[u32]| -> f64 {
            let mut acc = 0.0;
            for (row, &n) in rows.chunks_exact(k).zip(lens) {
                acc += lg_alpha_sum - ln_gamma(n as f64 + alpha_sum);
                for (t, &c) in row.iter().enumerate() {
                    if c > 0 {
                        acc += tables[t].get(c) - lg_alpha[t];
                    }
                }
            }
            acc
        };

        let max_count = self.word_topic.iter().copied().max().unwrap_or(0).min(1 << 12) as usize;
        let beta_table = LnGammaTable::new(beta, max_count);
        let lg_beta = ln_gamma(beta);
        let word_part = |cells: &[u32]| -> f64 {
            cells
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| beta_table.get(c) - lg_beta)
                .sum::<f64>()
        };

        let vbeta = beta * self.vocab_size as f64;
        let topic_part: f64 = self
            .topic_totals
            .iter()
            .map(|&n| ln_gamma(vbeta) - ln_gamma(n as f64 + vbeta))
            .sum();

        let (docs, words) = match pool {
            Some(pool) if pool.current_num_threads() > 1 => {
                let chunk_docs = self.doc_lengths.len().div_ceil(pool.current_num_threads()).max(1);
                let chunk_cells = self.word_topic.len().div_ceil(pool.current_num_threads()).max(1);
                pool.install(|| {
                    let docs: f64 = self
                        .doc_topic
                        .par_chunks(chunk_docs * k)
                        .zip(self.doc_lengths.par_chunks(chunk_docs))
                        .map(|(rows, lens)| doc_part(rows, lens))
                        .collect::<Vec<f64>>()
                        .into_iter()
                        .sum();
                    let words: f64 = self
                        .word_topic
                        .par_chunks(chunk_cells)
                        .map(word_part)
                        .collect::<Vec<f64>>()
                        .into_iter()
                        .sum();
                    (docs, words)
                })
            }
            _ => (doc_part(&self.doc_topic, &self.doc_lengths), word_part(&self.word_topic)),
        };
        docs + words + topic_part
    }
}

fn tally(words: &[Vec<u32>], z: &[Vec<u32>], k: usize, v: usize) -> (Vec<u32>, Vec<u32>, Vec<u32>) {
    let mut doc_topic = vec![0u32; words.len() * k];
    let mut word_topic = vec![0u32; v * k];
    let mut totals = vec![0u32; k];
    for (d, (wd, zd)) in words.iter().zip(z).enumerate() {
        for (&w, &t) in wd.iter().zip(zd) {
            doc_topic[d * k + t as usize] += 1;
            word_topic[w as usize * k + t as usize] += 1;
            totals[t as usize] += 1;
        }
    }
    (doc_topic, word_topic, totals)
}

/// Unnormalised conditional weights
/// `(n_dk + α_k)(n_kw + β)/(n_k + Vβ)`, optionally discounting one token
/// currently assigned to `exclude`. Returns the total mass.
#[inline]
#[allow(clippy::too_many_arguments)]
pub(crate) fn fill_weights(
    doc_row: &[u32],
    word_row: &[u32],
    totals: &[u32],
    alpha: &[f64],
    beta: f64,
    vbeta: f64,
    exclude: Option<usize>,
    out: &mut [f64],
) -> f64 {
    let mut sum = 0.0;
    for t in 0..out.len() {
        let own = (exclude == Some(t)) as u32;
        let p = (f64::from(doc_row[t] - own) + alpha[t]) * (f64::from(word_row[t] - own) + beta)
            / (f64::from(totals[t] - own) + vbeta);
        out[t] = p;
        sum += p;
    }
    sum
}

/// Resamples one document in place against the supplied topic-word tables.
#[allow(clippy::too_many_arguments)]
fn sample_doc(
    words: &[u32],
    z: &mut [u32],
    doc_row: &mut [u32],
    word_topic: &mut [u32],
    totals: &mut [u32],
    alpha: &[f64],
    beta: f64,
    vbeta: f64,
    rng: &mut ChaCha8Rng,
    weights: &mut [f64],
) {
    let k = doc_row.len();
    for (&w, zi) in words.iter().zip(z.iter_mut()) {
        let w = w as usize;
        let old = *zi as usize;
        let word_row = &mut word_topic[w * k..(w + 1) * k];
        doc_row[old] -= 1;
        word_row[old] -= 1;
        totals[old] -= 1;
        let total = fill_weights(doc_row, word_row, totals, alpha, beta, vbeta, None, weights);
        let new = draw_index(weights, total, rng.random::<f64>());
        doc_row[new] += 1;
        word_row[new] += 1;
        totals[new] += 1;
        *zi = new as u32;
    }
}

/// One full sweep in document order on a single thread. `sweep` indexes the
/// random stream so repeated sweeps draw fresh numbers.
pub fn gibbs_sweep(state: &mut GibbsState, alpha: &[f64], beta: f64, seed: u64, sweep: u64) -> Result<()> {
    check_alpha(state, alpha)?;
    let k = state.topics;
    let vbeta = beta * state.vocab_size as f64;
    let mut weights = vec![0.0; k];
    for d in 0..state.words.len() {
        let mut rng = stream_rng(seed, PURPOSE_SWEEP, d as u64, sweep);
        sample_doc(
            &state.words[d],
            &mut state.z[d],
            &mut state.doc_topic[d * k..(d + 1) * k],
            &mut state.word_topic,
            &mut state.topic_totals,
            alpha,
            beta,
            vbeta,
            &mut rng,
            &mut weights,
        );
    }
    if cfg!(debug_assertions) {
        state.check_consistency()?;
    }
    Ok(())
}

fn check_alpha(state: &GibbsState, alpha: &[f64]) -> Result<()> {
    if alpha.len() != state.topics {
        return Err(Error::argument(format!(
            "alpha has {} components for {} topics",
            alpha.len(),
            state.topics
        )));
    }
    Ok(())
}

/// Approximate parallel sweep: documents are split into contiguous blocks,
/// each worker samples against a private copy of the topic-word tables taken
/// at the start of the sweep, and the per-worker deltas are summed afterwards.
/// Each document still draws from its own counter-addressed stream.
pub(crate) fn gibbs_sweep_parallel(
    state: &mut GibbsState,
    alpha: &[f64],
    beta: f64,
    seed: u64,
    sweep: u64,
    pool: &rayon::ThreadPool,
) -> Result<()> {
    let workers = pool.current_num_threads();
    if workers <= 1 || state.words.len() < 2 {
        return gibbs_sweep(state, alpha, beta, seed, sweep);
    }
    check_alpha(state, alpha)?;
    let k = state.topics;
    let vbeta = beta * state.vocab_size as f64;
    let block = block_size(&state.doc_lengths, workers);

    let base_words = &state.word_topic;
    let base_totals = &state.topic_totals;
    let locals: Vec<(Vec<u32>, Vec<u32>)> = pool.install(|| {
        state
            .words
            .par_chunks(block)
            .zip(state.z.par_chunks_mut(block))
            .zip(state.doc_topic.par_chunks_mut(block * k))
            .enumerate()
            .map(|(b, ((words, zs), rows))| {
                let mut word_topic = base_words.clone();
                let mut totals = base_totals.clone();
                let mut weights = vec![0.0; k];
                for (j, (wd, zd)) in words.iter().zip(zs.iter_mut()).enumerate() {
                    let d = b * block + j;
                    let mut rng = stream_rng(seed, PURPOSE_SWEEP, d as u64, sweep);
                    sample_doc(
                        wd,
                        zd,
                        &mut rows[j * k..(j + 1) * k],
                        &mut word_topic,
                        &mut totals,
                        alpha,
                        beta,
                        vbeta,
                        &mut rng,
                        &mut weights,
                    );
                }
                (word_topic, totals)
            })
            .collect()
    });

    // Reconcile: new = base + Σ (local − base), evaluated per cell.
    let n_local = locals.len() as i64;
    let chunk = state.word_topic.len().div_ceil(workers).max(1);
    pool.install(|| {
        state
            .word_topic
            .par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(c, cells)| {
                let offset = c * chunk;
                for (i, cell) in cells.iter_mut().enumerate() {
                    let sum: i64 = locals.iter().map(|l| l.0[offset + i] as i64).sum();
                    *cell = (sum - (n_local - 1) * *cell as i64) as u32;
                }
            });
    });
    for (t, cell) in state.topic_totals.iter_mut().enumerate() {
        let sum: i64 = locals.iter().map(|l| l.1[t] as i64).sum();
        *cell = (sum - (n_local - 1) * *cell as i64) as u32;
    }

    if cfg!(debug_assertions) {
        state.check_consistency()?;
    }
    Ok(())
}

/// Documents per worker block.
fn block_size(doc_lengths: &[u32], workers: usize) -> usize {
    doc_lengths.len().div_ceil(workers).max(1)
}

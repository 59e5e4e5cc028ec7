use std::fs;
use std::io::Write;
use std::path::Path;

use super::GibbsState;
use crate::error::{Error, Result};
use crate::text::Vocabulary;

pub const MODEL_MAGIC: [u8; 4] = *b"STLM";
pub const MODEL_VERSION: u8 = 1;

/// Trained topic model: prior, smoothing and a snapshot of topic-word counts.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    topics: usize,
    vocab_size: usize,
    alpha: Vec<f64>,
    beta: f64,
    seed: u64,
    vocab_fingerprint: u64,
    word_topic: Vec<u32>,
    topic_totals: Vec<u64>,
    phi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopWord {
    pub term: String,
    pub prob: f64,
}

impl LdaModel {
    pub fn from_state(state: &GibbsState, alpha: Vec<f64>, beta: f64, seed: u64, vocab_fingerprint: u64) -> Self {
        Self::from_counts(
            state.topics(),
            state.vocab_size(),
            alpha,
            beta,
            seed,
            vocab_fingerprint,
            state.word_topic_counts().to_vec(),
        )
    }

    fn from_counts(
        topics: usize,
        vocab_size: usize,
        alpha: Vec<f64>,
        beta: f64,
        seed: u64,
        vocab_fingerprint: u64,
        word_topic: Vec<u32>,
    ) -> Self {
        let mut topic_totals = vec![0u64; topics];
        for row in word_topic.chunks_exact(topics) {
            for (t, &c) in row.iter().enumerate() {
                topic_totals[t] += c as u64;
            }
        }
        let vbeta = beta * vocab_size as f64;
        let phi = word_topic
            .chunks_exact(topics)
            .flat_map(|row| {
                row.iter()
                    .zip(&topic_totals)
                    .map(|(&c, &n)| (c as f64 + beta) / (n as f64 + vbeta))
                    .collect::<Vec<_>>()
            })
            .collect();
        LdaModel {
            topics,
            vocab_size,
            alpha,
            beta,
            seed,
            vocab_fingerprint,
            word_topic,
            topic_totals,
            phi,
        }
    }

    pub fn topics(&self) -> usize {
        self.topics
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn vocab_fingerprint(&self) -> u64 {
        self.vocab_fingerprint
    }

    pub fn topic_word_count(&self, topic: usize, word: usize) -> u32 {
        self.word_topic[word * self.topics + topic]
    }

    pub fn topic_total(&self, topic: usize) -> u64 {
        self.topic_totals[topic]
    }

    /// `φ̂_kw = (n_kw + β)/(n_k + Vβ)`.
    #[inline]
    pub fn phi(&self, topic: usize, word: usize) -> f64 {
        self.phi[word * self.topics + topic]
    }

    /// `φ̂_·w` over all topics.
    #[inline]
    pub fn word_column(&self, word: usize) -> &[f64] {
        &self.phi[word * self.topics..(word + 1) * self.topics]
    }

    pub fn topic_row(&self, topic: usize) -> Vec<f64> {
        (0..self.vocab_size).map(|w| self.phi(topic, w)).collect()
    }

    pub fn check_vocabulary(&self, vocab: &Vocabulary) -> Result<()> {
        if vocab.len() != self.vocab_size || vocab.fingerprint() != self.vocab_fingerprint {
            return Err(Error::Format(
                "vocabulary does not match the one the model was trained with".into(),
            ));
        }
        Ok(())
    }

    /// Highest-probability terms of a topic; ties are ordered by term.
    pub fn top_words(&self, vocab: &Vocabulary, topic: usize, n: usize) -> Result<Vec<TopWord>> {
        if topic >= self.topics {
            return Err(Error::argument(format!(
                "topic {topic} out of range for {} topics",
                self.topics
            )));
        }
        if vocab.len() != self.vocab_size {
            return Err(Error::argument("vocabulary size does not match model"));
        }
        let mut ranked: Vec<(f64, &str)> = (0..self.vocab_size)
            .map(|w| (self.phi(topic, w), vocab.term(w as u32).unwrap_or("")))
            .collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        Ok(ranked
            .into_iter()
            .take(n)
            .map(|(prob, term)| TopWord {
                term: term.to_owned(),
                prob,
            })
            .collect())
    }

    /// `topic<TAB>rank<TAB>term<TAB>prob` for the first `n` terms of each topic.
    pub fn write_topic_report<W: Write>(&self, mut out: W, vocab: &Vocabulary, n: usize) -> Result<()> {
        for k in 0..self.topics {
            for (rank, tw) in self.top_words(vocab, k, n)?.into_iter().enumerate() {
                writeln!(out, "{k}\t{}\t{}\t{}", rank + 1, tw.term, tw.prob)?;
            }
        }
        Ok(())
    }

    /// Versioned little-endian binary: magic, version, K, V, β, seed,
    /// vocabulary fingerprint, α, then sparse `(topic, word, count)` triples in
    /// topic-then-word order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&MODEL_MAGIC);
        out.push(MODEL_VERSION);
        out.extend_from_slice(&(self.topics as u32).to_le_bytes());
        out.extend_from_slice(&(self.vocab_size as u32).to_le_bytes());
        out.extend_from_slice(&self.beta.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&self.vocab_fingerprint.to_le_bytes());
        for a in &self.alpha {
            out.extend_from_slice(&a.to_le_bytes());
        }
        let mut triples = Vec::new();
        for k in 0..self.topics {
            for w in 0..self.vocab_size {
                let c = self.topic_word_count(k, w);
                if c > 0 {
                    triples.push((k as u32, w as u32, c));
                }
            }
        }
        out.extend_from_slice(&(triples.len() as u64).to_le_bytes());
        for (k, w, c) in triples {
            out.extend_from_slice(&k.to_le_bytes());
            out.extend_from_slice(&w.to_le_bytes());
            out.extend_from_slice(&c.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader(bytes);
        if r.take(4)? != MODEL_MAGIC {
            return Err(Error::Format("not a model file (bad magic)".into()));
        }
        let version = r.take(1)?[0];
        if version != MODEL_VERSION {
            return Err(Error::Format(format!("unsupported model version {version}")));
        }
        let topics = r.u32()? as usize;
        let vocab_size = r.u32()? as usize;
        let beta = r.f64()?;
        let seed = r.u64()?;
        let vocab_fingerprint = r.u64()?;
        if topics == 0 {
            return Err(Error::Format("model has zero topics".into()));
        }
        let alpha = (0..topics).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let n = r.u64()? as usize;
        let mut word_topic = vec![0u32; topics * vocab_size];
        for _ in 0..n {
            let (k, w, c) = (r.u32()? as usize, r.u32()? as usize, r.u32()?);
            if k >= topics || w >= vocab_size {
                return Err(Error::Format("count triple out of range".into()));
            }
            word_topic[w * topics + k] = c;
        }
        if !r.0.is_empty() {
            return Err(Error::Format("trailing bytes after model".into()));
        }
        if !(beta.is_finite() && beta > 0.0) || alpha.iter().any(|a| !a.is_finite() || *a <= 0.0) {
            return Err(Error::Format("non-positive prior in model file".into()));
        }
        Ok(Self::from_counts(topics, vocab_size, alpha, beta, seed, vocab_fingerprint, word_topic))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(Error::at(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact {
                artifact: "model file",
                path: path.to_owned(),
                command: "train",
            });
        }
        Self::from_bytes(&fs::read(path).map_err(Error::at(path))?)
    }
}

struct Reader<'a>(&'a [u8]);

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.0.len() < n {
            return Err(Error::Format("truncated model file".into()));
        }
        let (head, tail) = self.0.split_at(n);
        self.0 = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

use rand::Rng;
use rayon::prelude::*;

use super::{draw_index, stream_rng, EncodedCorpus, LdaModel, TopicDistribution, PURPOSE_INFER};

pub const DEFAULT_INFER_ITERATIONS: usize = 200;

/// Topic proportions of one document with the topic-word distributions held
/// fixed. Deterministic in `(model, doc, iterations, seed)`.
pub fn infer(model: &LdaModel, doc: &[u32], iterations: usize, seed: u64) -> TopicDistribution {
    infer_stream(model, doc, iterations, seed, 0)
}

fn infer_stream(model: &LdaModel, doc: &[u32], iterations: usize, seed: u64, stream: u64) -> TopicDistribution {
    let alpha = model.alpha();
    let k = model.topics();
    if doc.is_empty() || iterations == 0 {
        return TopicDistribution::prior_mean(alpha);
    }
    let mut rng = stream_rng(seed, PURPOSE_INFER, stream, 0);
    let mut counts = vec![0u32; k];
    let mut z = Vec::with_capacity(doc.len());
    let mut weights = vec![0.0; k];

    // Sequential initialisation from the partially built document.
    for &w in doc {
        let col = model.word_column(w as usize);
        let mut total = 0.0;
        for t in 0..k {
            weights[t] = (counts[t] as f64 + alpha[t]) * col[t];
            total += weights[t];
        }
        let t = draw_index(&weights, total, rng.random::<f64>());
        counts[t] += 1;
        z.push(t);
    }

    let burn = iterations / 2;
    let n = doc.len() as f64;
    let alpha_sum: f64 = alpha.iter().sum();
    let mut acc = vec![0.0; k];
    for sweep in 0..iterations {
        for (i, &w) in doc.iter().enumerate() {
            counts[z[i]] -= 1;
            let col = model.word_column(w as usize);
            let mut total = 0.0;
            for t in 0..k {
                weights[t] = (counts[t] as f64 + alpha[t]) * col[t];
                total += weights[t];
            }
            let t = draw_index(&weights, total, rng.random::<f64>());
            counts[t] += 1;
            z[i] = t;
        }
        if sweep >= burn {
            for t in 0..k {
                acc[t] += (counts[t] as f64 + alpha[t]) / (n + alpha_sum);
            }
        }
    }
    let kept = (iterations - burn) as f64;
    TopicDistribution(acc.into_iter().map(|a| a / kept).collect())
}

/// Infers every document in parallel; document `d` uses its own random stream
/// so results do not depend on scheduling.
pub fn infer_corpus(model: &LdaModel, docs: &EncodedCorpus, iterations: usize, seed: u64) -> Vec<TopicDistribution> {
    docs.docs()
        .par_iter()
        .enumerate()
        .map(|(d, doc)| infer_stream(model, doc, iterations, seed, d as u64))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeldOutScore {
    pub total: f64,
    pub per_token: f64,
    pub tokens: usize,
}

/// `Σ_d Σ_i log Σ_k θ_dk φ̂_k,w_i` with θ inferred per document.
pub fn held_out_log_likelihood(model: &LdaModel, docs: &EncodedCorpus, iterations: usize, seed: u64) -> HeldOutScore {
    let thetas = infer_corpus(model, docs, iterations, seed);
    let total: f64 = docs
        .docs()
        .par_iter()
        .zip(thetas.par_iter())
        .map(|(doc, theta)| {
            doc.iter()
                .map(|&w| {
                    model
                        .word_column(w as usize)
                        .iter()
                        .zip(theta.as_slice())
                        .map(|(p, t)| p * t)
                        .sum::<f64>()
                        .ln()
                })
                .sum::<f64>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    let tokens = docs.token_count();
    HeldOutScore {
        total,
        per_token: if tokens == 0 { 0.0 } else { total / tokens as f64 },
        tokens,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lda::GibbsState;

    fn two_topic_model() -> LdaModel {
        // Topic 0 owns words 0..3, topic 1 owns words 3..6.
        let docs: Vec<Vec<u32>> = vec![vec![0, 1, 2, 0, 1, 2], vec![3, 4, 5, 3, 4, 5]];
        let corpus = EncodedCorpus::new(docs, 6).unwrap();
        let z = vec![vec![0; 6], vec![1; 6]];
        let state = GibbsState::from_assignments(&corpus, 2, z).unwrap();
        LdaModel::from_state(&state, vec![0.5, 1.5], 0.01, 0, 0)
    }

    #[test]
    fn empty_doc_gets_prior_mean() {
        let m = two_topic_model();
        assert_eq!(infer(&m, &[], 200, 1).0, vec![0.25, 0.75]);
    }

    #[test]
    fn single_topic_is_certain() {
        let corpus = EncodedCorpus::new(vec![vec![0, 1]], 2).unwrap();
        let state = GibbsState::from_assignments(&corpus, 1, vec![vec![0, 0]]).unwrap();
        let m = LdaModel::from_state(&state, vec![0.3], 0.01, 0, 0);
        assert_eq!(infer(&m, &[0, 1, 1], 50, 3).0, vec![1.0]);
        assert_eq!(infer(&m, &[], 50, 3).0, vec![1.0]);
    }

    #[test]
    fn separable_doc_concentrates() {
        let m = two_topic_model();
        let doc: Vec<u32> = (0..50).map(|i| (i % 3) as u32).collect();
        let theta = infer(&m, &doc, 200, 9);
        assert!(theta.0[0] >= 0.9, "{theta:?}");
        assert!((theta.0.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn inference_is_deterministic() {
        let m = two_topic_model();
        let doc = [0, 3, 4, 1, 5];
        assert_eq!(infer(&m, &doc, 100, 5), infer(&m, &doc, 100, 5));
        let corpus = EncodedCorpus::new(vec![doc.to_vec(), vec![2, 2]], 6).unwrap();
        let a = infer_corpus(&m, &corpus, 100, 5);
        let b = infer_corpus(&m, &corpus, 100, 5);
        assert_eq!(a, b);
    }

    #[test]
    fn single_token_contribution_is_log_mixture() {
        let m = two_topic_model();
        let corpus = EncodedCorpus::new(vec![vec![4]], 6).unwrap();
        let score = held_out_log_likelihood(&m, &corpus, 100, 2);
        let theta = infer_corpus(&m, &corpus, 100, 2).remove(0);
        let p = theta.0[0] * m.phi(0, 4) + theta.0[1] * m.phi(1, 4);
        assert!((score.total - p.ln()).abs() < 1e-12);
        assert_eq!(score.tokens, 1);
    }

    #[test]
    fn single_topic_score_is_unigram_likelihood() {
        let corpus = EncodedCorpus::new(vec![vec![0, 0, 1]], 3).unwrap();
        let state = GibbsState::from_assignments(&corpus, 1, vec![vec![0; 3]]).unwrap();
        let m = LdaModel::from_state(&state, vec![1.0], 0.5, 0, 0);
        let held = EncodedCorpus::new(vec![vec![0, 2], vec![1]], 3).unwrap();
        let score = held_out_log_likelihood(&m, &held, 50, 1);
        // Smoothed unigram: (2.5, 1.5, 0.5) / 4.5.
        let expected = (2.5f64 / 4.5).ln() + (0.5f64 / 4.5).ln() + (1.5f64 / 4.5).ln();
        assert!((score.total - expected).abs() < 1e-12);
        assert!((score.per_token - expected / 3.0).abs() < 1e-12);
    }
}

//! Fixed-point re-estimation of an asymmetric Dirichlet document-topic prior.

use statrs::function::gamma::{digamma, ln_gamma};

use super::{GibbsState, ALPHA_FLOOR};

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaUpdate {
    pub alpha: Vec<f64>,
    /// Set when the update was rejected and the previous prior kept.
    pub warning: Option<String>,
}

pub fn optimize_alpha(state: &GibbsState, alpha: &[f64]) -> AlphaUpdate {
    optimize_alpha_counts(state.doc_topic_counts(), state.topics(), state.doc_lengths(), alpha)
}

/// One update of
/// `α_k ← α_k · Σ_d [Ψ(n_dk+α_k) − Ψ(α_k)] / Σ_d [Ψ(n_d+Σα) − Ψ(Σα)]`
/// over a document-major count table with `topics` columns.
pub fn optimize_alpha_counts(
    doc_topic: &[u32],
    topics: usize,
    doc_lengths: &[u32],
    alpha: &[f64],
) -> AlphaUpdate {
    let keep = |why: String| AlphaUpdate {
        alpha: alpha.to_vec(),
        warning: Some(why),
    };
    if alpha.len() != topics || doc_topic.len() != topics * doc_lengths.len() {
        return keep("alpha/count shape mismatch".into());
    }
    if alpha.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return keep("alpha must be positive and finite".into());
    }

    // Histograms of count values let each distinct (topic, count) pair cost
    // one digamma evaluation.
    let max_len = doc_lengths.iter().copied().max().unwrap_or(0) as usize;
    let mut length_hist = vec![0u64; max_len + 1];
    for &n in doc_lengths {
        length_hist[n as usize] += 1;
    }
    let mut count_hist = vec![vec![0u64; max_len + 1]; topics];
    for row in doc_topic.chunks_exact(topics) {
        for (k, &c) in row.iter().enumerate() {
            if c > 0 {
                count_hist[k][c as usize] += 1;
            }
        }
    }

    let alpha_sum: f64 = alpha.iter().sum();
    let psi_sum = digamma(alpha_sum);
    let denom: f64 = length_hist
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &m)| m > 0)
        .map(|(n, &m)| m as f64 * (digamma(n as f64 + alpha_sum) - psi_sum))
        .sum();
    if !(denom.is_finite() && denom > 0.0) {
        return keep(format!("degenerate denominator {denom}"));
    }

    let mut next = Vec::with_capacity(topics);
    for (k, &a) in alpha.iter().enumerate() {
        let psi_a = digamma(a);
        let numer: f64 = count_hist[k]
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, &m)| m > 0)
            .map(|(n, &m)| m as f64 * (digamma(n as f64 + a) - psi_a))
            .sum();
        let updated = (a * numer / denom).max(ALPHA_FLOOR);
        if !updated.is_finite() {
            return keep(format!("non-finite update for topic {k}"));
        }
        next.push(updated);
    }
    AlphaUpdate {
        alpha: next,
        warning: None,
    }
}

/// Dirichlet-multinomial log evidence of the document-topic counts:
/// `Σ_d [lnΓ(Σα) − lnΓ(n_d+Σα) + Σ_k (lnΓ(n_dk+α_k) − lnΓ(α_k))]`.
pub fn dirichlet_multinomial_log_evidence(
    doc_topic: &[u32],
    topics: usize,
    doc_lengths: &[u32],
    alpha: &[f64],
) -> f64 {
    let alpha_sum: f64 = alpha.iter().sum();
    let lg_sum = ln_gamma(alpha_sum);
    let lg_alpha: Vec<f64> = alpha.iter().map(|&a| ln_gamma(a)).collect();
    doc_topic
        .chunks_exact(topics)
        .zip(doc_lengths)
        .map(|(row, &n)| {
            let mut acc = lg_sum - ln_gamma(n as f64 + alpha_sum);
            for (k, &c) in row.iter().enumerate() {
                if c > 0 {
                    acc += ln_gamma(c as f64 + alpha[k]) - lg_alpha[k];
                }
            }
            acc
        })
        .sum()
}

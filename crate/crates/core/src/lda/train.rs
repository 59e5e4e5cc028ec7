use std::io::Write;

use super::state::gibbs_sweep_parallel;
use super::{gibbs_sweep, init_assignments, optimize_alpha, EncodedCorpus, GibbsState, LdaModel, TopicDistribution, TrainConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub sweep: usize,
    pub log_likelihood: f64,
    pub alpha_sum: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: LdaModel,
    pub thetas: Vec<TopicDistribution>,
    pub log: Vec<SweepRecord>,
    pub warnings: Vec<String>,
    pub state: GibbsState,
}

impl TrainOutput {
    /// `sweep<TAB>log_likelihood<TAB>alpha_sum`.
    pub fn write_log<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "sweep\tlog_likelihood\talpha_sum")?;
        for r in &self.log {
            writeln!(out, "{}\t{}\t{}", r.sweep, r.log_likelihood, r.alpha_sum)?;
        }
        Ok(())
    }
}

pub fn train(corpus: &EncodedCorpus, config: &TrainConfig) -> Result<TrainOutput> {
    config.validate()?;
    let mut state = init_assignments(corpus, config)?;
    let mut alpha = config.initial_alpha();
    let pool = if config.workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.workers)
                .build()
                .map_err(|e| Error::Internal(e.to_string()))?,
        )
    } else {
        None
    };

    let mut log = Vec::with_capacity(config.total_iterations);
    let mut warnings = Vec::new();
    for sweep in 1..=config.total_iterations {
        match &pool {
            Some(pool) => gibbs_sweep_parallel(&mut state, &alpha, config.beta, config.seed, sweep as u64, pool)?,
            None => gibbs_sweep(&mut state, &alpha, config.beta, config.seed, sweep as u64)?,
        }
        if config.hyperopt_interval > 0 && sweep > config.burn_in && sweep % config.hyperopt_interval == 0 {
            let update = optimize_alpha(&state, &alpha);
            if let Some(w) = update.warning {
                log::warn!("sweep {sweep}: prior update skipped: {w}");
                warnings.push(format!("sweep {sweep}: {w}"));
            }
            alpha = update.alpha;
        }
        log.push(SweepRecord {
            sweep,
            log_likelihood: state.log_likelihood_in(&alpha, config.beta, pool.as_ref()),
            alpha_sum: alpha.iter().sum(),
        });
        if sweep % 50 == 0 {
            log::info!(
                "sweep {sweep}/{}: log-likelihood {:.3}",
                config.total_iterations,
                log.last().map(|r| r.log_likelihood).unwrap_or(f64::NAN)
            );
        }
    }

    let alpha_sum: f64 = alpha.iter().sum();
    let thetas = (0..state.num_docs())
        .map(|d| {
            let n = state.doc_lengths()[d] as f64;
            TopicDistribution(
                state
                    .doc_topic_row(d)
                    .iter()
                    .zip(&alpha)
                    .map(|(&c, &a)| (c as f64 + a) / (n + alpha_sum))
                    .collect(),
            )
        })
        .collect();
    let model = LdaModel::from_state(&state, alpha, config.beta, config.seed, corpus.vocab_fingerprint());
    Ok(TrainOutput {
        model,
        thetas,
        log,
        warnings,
        state,
    })
}

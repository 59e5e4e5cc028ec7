use std::io::Write;

use super::{held_out_log_likelihood, train, EncodedCorpus, HeldOutScore, TrainConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub topics: usize,
    pub alpha_init: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: GridPoint,
    pub score: HeldOutScore,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub best: TrainConfig,
    pub rows: Vec<SweepRow>,
}

impl SweepOutcome {
    /// `topics<TAB>alpha_init<TAB>heldout_ll<TAB>per_token` in grid order.
    pub fn write_table<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "topics\talpha_init\theldout_ll\tper_token")?;
        for r in &self.rows {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                r.point.topics, r.point.alpha_init, r.score.total, r.score.per_token
            )?;
        }
        Ok(())
    }
}

/// Trains one model per grid point from `base` and keeps the one with the best
/// per-token held-out log-likelihood. Ties prefer fewer topics, then the
/// smaller initial prior.
pub fn sweep_hyperparameters(
    docs: &EncodedCorpus,
    held_out: &EncodedCorpus,
    grid: &[GridPoint],
    base: &TrainConfig,
    infer_iterations: usize,
) -> Result<SweepOutcome> {
    if grid.is_empty() {
        return Err(Error::argument("hyperparameter grid is empty"));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &point in grid {
        let config = TrainConfig {
            topics: point.topics,
            alpha_init: point.alpha_init,
            ..base.clone()
        };
        log::info!("sweep: training K={} alpha_init={}", point.topics, point.alpha_init);
        let out = train(docs, &config)?;
        let score = held_out_log_likelihood(&out.model, held_out, infer_iterations, base.seed);
        rows.push(SweepRow { point, score });
    }
    let best = rows
        .iter()
        .min_by(|a, b| {
            b.score
                .per_token
                .total_cmp(&a.score.per_token)
                .then(a.point.topics.cmp(&b.point.topics))
                .then(a.point.alpha_init.total_cmp(&b.point.alpha_init))
        })
        .map(|r| r.point)
        .expect("grid is non-empty");
    Ok(SweepOutcome {
        best: TrainConfig {
            topics: best.topics,
            alpha_init: best.alpha_init,
            ..base.clone()
        },
        rows,
    })
}

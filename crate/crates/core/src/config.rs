//! Pipeline configuration: a sectioned `key = value` file (TOML).

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use crate::analytics::{self, Granularity, Weighting};
use crate::corpus::CollectionWindow;
use crate::error::{Error, Result};
use crate::lda::{self, TrainConfig};
use crate::text::DEFAULT_MAX_TYPES;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Threads for ingest parsing, training and inference.
    pub workers: usize,
    pub output: PathBuf,
    pub paths: Paths,
    pub corpus: CorpusSection,
    pub sample: SampleSection,
    pub text: TextSection,
    pub lda: LdaSection,
    pub analytics: AnalyticsSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Newline-delimited JSON tweet files.
    pub inputs: Vec<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub ambiguity: Option<PathBuf>,
    pub polls: Option<PathBuf>,
    pub events: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    /// Collection phrases; empty means the built-in list.
    pub keywords: Vec<String>,
    #[serde(deserialize_with = "timestamp")]
    pub window_start: DateTime<Utc>,
    #[serde(deserialize_with = "timestamp")]
    pub window_end: DateTime<Utc>,
}

/// Accepts a quoted RFC 3339 string or a bare TOML offset date-time.
fn timestamp<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<DateTime<Utc>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Text(String),
        Toml(toml::value::Datetime),
    }
    let text = match Raw::deserialize(d)? {
        Raw::Text(s) => s,
        Raw::Toml(t) => t.to_string(),
    };
    DateTime::parse_from_rfc3339(&text)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| D::Error::custom(format!("invalid timestamp {text:?}: {e}")))
}

impl Default for CorpusSection {
    fn default() -> Self {
        let w = CollectionWindow::default();
        CorpusSection {
            keywords: Vec::new(),
            window_start: w.start,
            window_end: w.end,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSection {
    /// Share of the corpus used for training.
    pub fraction: f64,
    /// Share of the remaining tweets kept for held-out scoring.
    pub heldout_fraction: f64,
    pub seed: u64,
}

impl Default for SampleSection {
    fn default() -> Self {
        SampleSection {
            fraction: 0.085,
            heldout_fraction: 0.1,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextSection {
    pub max_types: usize,
}

impl Default for TextSection {
    fn default() -> Self {
        TextSection {
            max_types: DEFAULT_MAX_TYPES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaSection {
    pub topics: usize,
    pub alpha_init: f64,
    pub alpha_is_sum: bool,
    pub beta: f64,
    pub burn_in: usize,
    pub total_iterations: usize,
    pub hyperopt_interval: usize,
    pub seed: u64,
    pub infer_iterations: usize,
    /// Candidate topic counts for `sweep`.
    pub grid_topics: Vec<usize>,
    /// Candidate initial priors for `sweep`.
    pub grid_alpha: Vec<f64>,
    /// Terms listed per topic in reports.
    pub top_words: usize,
}

impl Default for LdaSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        LdaSection {
            topics: t.topics,
            alpha_init: t.alpha_init,
            alpha_is_sum: t.alpha_is_sum,
            beta: t.beta,
            burn_in: t.burn_in,
            total_iterations: t.total_iterations,
            hyperopt_interval: t.hyperopt_interval,
            seed: t.seed,
            infer_iterations: lda::DEFAULT_INFER_ITERATIONS,
            grid_topics: vec![25, 50, 100, 250, 500],
            grid_alpha: vec![0.25, 1.0, 10.0],
            top_words: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticsSection {
    pub granularity: Granularity,
    pub spike_window: usize,
    pub spike_threshold: f64,
    pub min_support: u64,
    pub top_n: usize,
    pub weighting: Weighting,
    /// When set, each poll is compared with tweets from the preceding this
    /// many days instead of the whole collection.
    pub poll_window_days: Option<u64>,
}

impl Default for AnalyticsSection {
    fn default() -> Self {
        AnalyticsSection {
            granularity: Granularity::Week,
            spike_window: analytics::DEFAULT_TRAILING_WINDOW,
            spike_threshold: analytics::DEFAULT_Z_THRESHOLD,
            min_support: analytics::DEFAULT_MIN_SUPPORT,
            top_n: analytics::DEFAULT_TOP_TOPICS,
            weighting: Weighting::Tokens,
            poll_window_days: None,
        }
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            workers: 1,
            output: PathBuf::from("out"),
            paths: Paths::default(),
            corpus: CorpusSection::default(),
            sample: SampleSection::default(),
            text: TextSection::default(),
            lda: LdaSection::default(),
            analytics: AnalyticsSection::default(),
        }
    }
}

impl PipelineConfig {
    pub fn parse(src: &str, origin: &str) -> Result<Self> {
        toml::from_str(src).map_err(|e| {
            let line = e
                .span()
                .map(|s| src[..s.start.min(src.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::parse(origin, line, e.message().to_owned())
        })
    }

    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let src = fs::read_to_string(path).map_err(Error::at(path))?;
        let mut cfg = Self::parse(&src, &path.display().to_string())?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.rebase(base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output);
        self.paths.inputs.iter_mut().for_each(fix);
        for p in [
            &mut self.paths.stopwords,
            &mut self.paths.lexicon,
            &mut self.paths.gazetteer,
            &mut self.paths.ambiguity,
            &mut self.paths.polls,
            &mut self.paths.events,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers < 1 {
            return Err(Error::argument("workers must be at least 1"));
        }
        self.train_config().validate()?;
        CollectionWindow::new(self.corpus.window_start, self.corpus.window_end)?;
        if !(self.sample.fraction > 0.0 && self.sample.fraction <= 1.0) {
            return Err(Error::argument("sample.fraction must be in (0, 1]"));
        }
        if !(self.sample.heldout_fraction > 0.0 && self.sample.heldout_fraction <= 1.0) {
            return Err(Error::argument("sample.heldout_fraction must be in (0, 1]"));
        }
        if self.text.max_types < 1 {
            return Err(Error::argument("text.max_types must be at least 1"));
        }
        if self.analytics.spike_window < 1 {
            return Err(Error::argument("analytics.spike_window must be at least 1"));
        }
        let mut inputs: Vec<&PathBuf> = self.paths.inputs.iter().collect();
        inputs.extend(
            [
                &self.paths.stopwords,
                &self.paths.lexicon,
                &self.paths.gazetteer,
                &self.paths.ambiguity,
                &self.paths.polls,
                &self.paths.events,
            ]
            .into_iter()
            .flatten(),
        );
        if let Some(missing) = inputs.into_iter().find(|p| !p.exists()) {
            return Err(Error::argument(format!("input file {} does not exist", missing.display())));
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        let l = &self.lda;
        TrainConfig {
            topics: l.topics,
            alpha_init: l.alpha_init,
            alpha_is_sum: l.alpha_is_sum,
            beta: l.beta,
            burn_in: l.burn_in,
            total_iterations: l.total_iterations,
            hyperopt_interval: l.hyperopt_interval,
            seed: l.seed,
            workers: self.workers,
        }
    }

    pub fn window(&self) -> Result<CollectionWindow> {
        CollectionWindow::new(self.corpus.window_start, self.corpus.window_end)
    }

    /// Hex SHA-256 prefix of the effective settings. The output directory is
    /// left out so relocating results does not change it.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = PathBuf::new();
        let digest = Sha256::digest(c.to_toml().as_bytes());
        hex::encode(&digest[..8])
    }
}

//! Batch pipeline stages. Each stage reads upstream artifacts from the output
//! directory and writes its own, every text artifact opening with a `#`
//! metadata header (tool version, config hash, seeds and parameters).

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::Days;

use crate::analytics::{
    self, aggregate_counts, detect_spikes, event_topic_profile, read_events, stance_topic_distribution, top_topics,
    EventProfileRow, Granularity, TopicProfile,
};
use crate::config::PipelineConfig;
use crate::corpus::{ingest_file, sample_indices, CorpusStore, IngestOptions, IngestReport, KeywordFilter, LOG_FILE};
use crate::error::{Error, Result};
use crate::geo::{geocode_corpus, GeoAssignments, Gazetteer};
use crate::lda::{self, EncodedCorpus, GridPoint, LdaModel};
use crate::stance::{label_corpus, CorpusLabels, HashtagLexicon, StanceLabel};
use crate::stats::{correlate_polls, correlate_polls_with, load_polls_file};
use crate::text::{tokenize, StopwordList, TokenSequence, Vocabulary};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const CORPUS_DIR: &str = "corpus";
pub const INGEST_REPORT: &str = "ingest.tsv";
pub const SAMPLE_FILE: &str = "sample.tsv";
pub const VOCAB_FILE: &str = "vocab.tsv";
pub const MODEL_FILE: &str = "model.bin";
pub const TRAIN_LOG: &str = "train_log.tsv";
pub const TOPICS_FILE: &str = "topics.tsv";
pub const SWEEP_FILE: &str = "sweep.tsv";
pub const THETA_FILE: &str = "thetas.tsv";
pub const LABEL_FILE: &str = "labels.tsv";
pub const GEO_FILE: &str = "geo.tsv";
pub const TRENDS_FILE: &str = "trends.tsv";
pub const SPIKES_FILE: &str = "spikes.tsv";
pub const STANCE_TOPICS_FILE: &str = "stance_topics.tsv";
pub const EVENTS_FILE: &str = "event_profiles.tsv";
pub const SHARES_FILE: &str = "state_shares.tsv";
pub const EXCLUDED_FILE: &str = "state_excluded.tsv";
pub const CORRELATION_FILE: &str = "correlation.tsv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Heldout,
}

/// A validated configuration bound to its output directory.
#[derive(Debug, Clone)]
pub struct Pipeline {
    config: PipelineConfig,
    hash: String,
}

fn require(path: PathBuf, artifact: &'static str, command: &'static str) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::MissingArtifact {
            artifact,
            path,
            command,
        })
    }
}

fn open_lines(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(Error::at(path))?))
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let hash = config.hash();
        Ok(Pipeline { config, hash })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.config.output.join(name)
    }

    fn header(&self, command: &str, params: &[(&str, String)]) -> String {
        let mut h = format!(
            "# stancetopic {TOOL_VERSION}\n# command: {command}\n# config_hash: {}\n# seeds: sample={} lda={}\n",
            self.hash, self.config.sample.seed, self.config.lda.seed
        );
        for (k, v) in params {
            let _ = writeln!(h, "# {k}: {v}");
        }
        h
    }

    fn write_artifact<F>(&self, name: &str, command: &str, params: &[(&str, String)], body: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<()>,
    {
        fs::create_dir_all(&self.config.output).map_err(Error::at(&self.config.output))?;
        let mut buf = self.header(command, params).into_bytes();
        body(&mut buf)?;
        let path = self.out(name);
        fs::write(&path, buf).map_err(Error::at(&path))?;
        Ok(path)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.workers)
            .build()
            .map_err(|e| Error::Internal(e.to_string()))
    }

    // ---- loaders for upstream artifacts ----

    pub fn load_store(&self) -> Result<CorpusStore> {
        let dir = self.out(CORPUS_DIR);
        require(dir.join(LOG_FILE), "corpus store", "ingest")?;
        CorpusStore::open(&dir)
    }

    fn stopwords(&self) -> Result<StopwordList> {
        match &self.config.paths.stopwords {
            Some(p) => StopwordList::load(p),
            None => Ok(StopwordList::default_english()),
        }
    }

    fn lexicon(&self) -> Result<HashtagLexicon> {
        match &self.config.paths.lexicon {
            Some(p) => HashtagLexicon::load(p),
            None => Ok(HashtagLexicon::default()),
        }
    }

    fn gazetteer(&self) -> Result<Gazetteer> {
        match &self.config.paths.gazetteer {
            Some(p) => Gazetteer::load(p, self.config.paths.ambiguity.as_deref()),
            None => Ok(Gazetteer::builtin()),
        }
    }

    pub fn load_sample(&self) -> Result<BTreeMap<u64, Split>> {
        let path = require(self.out(SAMPLE_FILE), "sample split", "sample")?;
        let origin = path.display().to_string();
        let mut out = BTreeMap::new();
        for (i, line) in open_lines(&path)?.lines().enumerate() {
            let line = line?;
            if line.is_empty() || line.starts_with('#') || line.starts_with("tweet_id\t") {
                continue;
            }
            let (id, split) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(&origin, i + 1, "expected tweet_id<TAB>split"))?;
            let id: u64 = id.parse().map_err(|_| Error::parse(&origin, i + 1, "bad tweet id"))?;
            let split = match split {
                "train" => Split::Train,
                "heldout" => Split::Heldout,
                other => return Err(Error::parse(&origin, i + 1, format!("unknown split {other:?}"))),
            };
            out.insert(id, split);
        }
        Ok(out)
    }

    pub fn load_labels(&self) -> Result<CorpusLabels> {
        let path = require(self.out(LABEL_FILE), "stance labels", "label")?;
        CorpusLabels::read_tsv(open_lines(&path)?, &path.display().to_string())
    }

    pub fn load_geo(&self) -> Result<GeoAssignments> {
        let path = require(self.out(GEO_FILE), "geocoding", "geocode")?;
        GeoAssignments::read_tsv(open_lines(&path)?, &path.display().to_string())
    }

    pub fn load_model(&self) -> Result<(LdaModel, Vocabulary)> {
        let model_path = require(self.out(MODEL_FILE), "model file", "train")?;
        let vocab_path = require(self.out(VOCAB_FILE), "vocabulary", "train")?;
        let model = LdaModel::load(&model_path)?;
        let vocab = Vocabulary::load(&vocab_path)?;
        model.check_vocabulary(&vocab)?;
        Ok((model, vocab))
    }

    pub fn load_thetas(&self) -> Result<ThetaTable> {
        let path = require(self.out(THETA_FILE), "topic proportions", "infer")?;
        ThetaTable::read_tsv(open_lines(&path)?, &path.display().to_string())
    }

    // ---- stages ----

    pub fn ingest(&self) -> Result<IngestReport> {
        if self.config.paths.inputs.is_empty() {
            return Err(Error::argument("no input files configured (paths.inputs)"));
        }
        let filter = if self.config.corpus.keywords.is_empty() {
            KeywordFilter::default()
        } else {
            KeywordFilter::new(&self.config.corpus.keywords)?
        };
        let opts = IngestOptions {
            filter,
            window: self.config.window()?,
            workers: self.config.workers,
            replay_speedup: None,
        };
        let mut store = CorpusStore::new();
        let mut total = IngestReport::default();
        for input in &self.config.paths.inputs {
            let r = ingest_file(input, &opts, &mut store)?;
            total.lines += r.lines;
            total.accepted += r.accepted;
            total.no_keyword += r.no_keyword;
            total.outside_window += r.outside_window;
            total.malformed += r.malformed;
        }
        store.save(&self.out(CORPUS_DIR))?;
        self.write_artifact(INGEST_REPORT, "ingest", &[], |b| {
            writeln!(b, "lines\taccepted\tno_keyword\toutside_window\tmalformed")?;
            writeln!(
                b,
                "{}\t{}\t{}\t{}\t{}",
                total.lines, total.accepted, total.no_keyword, total.outside_window, total.malformed
            )?;
            Ok(())
        })?;
        Ok(total)
    }

    /// Draws the training sample, then a held-out sample from the remainder.
    pub fn sample(&self) -> Result<(usize, usize)> {
        let store = self.load_store()?;
        if store.is_empty() {
            return Err(Error::argument("corpus store is empty"));
        }
        let s = &self.config.sample;
        let train: Vec<usize> = sample_indices(store.len(), s.fraction, s.seed)?;
        let mut in_train = vec![false; store.len()];
        train.iter().for_each(|&i| in_train[i] = true);
        let rest: Vec<usize> = (0..store.len()).filter(|&i| !in_train[i]).collect();
        let heldout: Vec<usize> = if rest.is_empty() {
            Vec::new()
        } else {
            sample_indices(rest.len(), s.heldout_fraction, s.seed ^ 0x005E_ED0F_4E1D)?
                .into_iter()
                .map(|j| rest[j])
                .collect()
        };
        let mut split = vec![None; store.len()];
        train.iter().for_each(|&i| split[i] = Some("train"));
        heldout.iter().for_each(|&i| split[i] = Some("heldout"));
        let params = [
            ("fraction", s.fraction.to_string()),
            ("heldout_fraction", s.heldout_fraction.to_string()),
        ];
        self.write_artifact(SAMPLE_FILE, "sample", &params, |b| {
            writeln!(b, "tweet_id\tsplit")?;
            for (t, sp) in store.iter().zip(&split) {
                if let Some(sp) = sp {
                    writeln!(b, "{}\t{sp}", t.id)?;
                }
            }
            Ok(())
        })?;
        Ok((train.len(), heldout.len()))
    }

    fn split_docs(&self, store: &CorpusStore, want: Split) -> Result<Vec<TokenSequence>> {
        let sample = self.load_sample()?;
        let stop = self.stopwords()?;
        Ok(store
            .iter()
            .filter(|t| sample.get(&t.id) == Some(&want))
            .map(|t| tokenize(&t.text, &stop))
            .collect())
    }

    fn lda_params(&self) -> Vec<(&'static str, String)> {
        let t = self.config.train_config();
        vec![
            ("topics", t.topics.to_string()),
            ("alpha_init", t.alpha_init.to_string()),
            ("alpha_is_sum", t.alpha_is_sum.to_string()),
            ("beta", t.beta.to_string()),
            ("burn_in", t.burn_in.to_string()),
            ("total_iterations", t.total_iterations.to_string()),
            ("hyperopt_interval", t.hyperopt_interval.to_string()),
            ("workers", t.workers.to_string()),
        ]
    }

    pub fn train(&self) -> Result<lda::TrainOutput> {
        let store = self.load_store()?;
        let docs = self.split_docs(&store, Split::Train)?;
        let vocab = Vocabulary::build(&docs, self.config.text.max_types)?;
        let corpus = EncodedCorpus::encode(&vocab, &docs);
        let out = lda::train(&corpus, &self.config.train_config())?;
        fs::create_dir_all(&self.config.output).map_err(Error::at(&self.config.output))?;
        out.model.save(&self.out(MODEL_FILE))?;
        let params = self.lda_params();
        self.write_artifact(VOCAB_FILE, "train", &[], |b| vocab.write_tsv(b))?;
        self.write_artifact(TRAIN_LOG, "train", &params, |b| out.write_log(b))?;
        self.write_artifact(TOPICS_FILE, "train", &params, |b| {
            writeln!(b, "topic\trank\tterm\tprob")?;
            out.model.write_topic_report(b, &vocab, self.config.lda.top_words)
        })?;
        Ok(out)
    }

    pub fn sweep(&self) -> Result<lda::SweepOutcome> {
        let store = self.load_store()?;
        let docs = self.split_docs(&store, Split::Train)?;
        let held = self.split_docs(&store, Split::Heldout)?;
        let vocab = Vocabulary::build(&docs, self.config.text.max_types)?;
        let corpus = EncodedCorpus::encode(&vocab, &docs);
        let held = EncodedCorpus::encode(&vocab, &held);
        let grid: Vec<GridPoint> = self
            .config
            .lda
            .grid_topics
            .iter()
            .flat_map(|&topics| {
                self.config
                    .lda
                    .grid_alpha
                    .iter()
                    .map(move |&alpha_init| GridPoint { topics, alpha_init })
            })
            .collect();
        let outcome = self.pool()?.install(|| {
            lda::sweep_hyperparameters(
                &corpus,
                &held,
                &grid,
                &self.config.train_config(),
                self.config.lda.infer_iterations,
            )
        })?;
        let params = [
            ("best_topics", outcome.best.topics.to_string()),
            ("best_alpha_init", outcome.best.alpha_init.to_string()),
            ("heldout_tokens", held.token_count().to_string()),
        ];
        self.write_artifact(SWEEP_FILE, "sweep", &params, |b| outcome.write_table(b))?;
        Ok(outcome)
    }

    /// Topic proportions for every stored tweet.
    pub fn infer(&self) -> Result<ThetaTable> {
        let (model, vocab) = self.load_model()?;
        let store = self.load_store()?;
        let stop = self.stopwords()?;
        let docs: Vec<TokenSequence> = store.iter().map(|t| tokenize(&t.text, &stop)).collect();
        let corpus = EncodedCorpus::encode(&vocab, &docs);
        let iters = self.config.lda.infer_iterations;
        let seed = self.config.lda.seed;
        let thetas = self.pool()?.install(|| lda::infer_corpus(&model, &corpus, iters, seed));
        let table = ThetaTable {
            topics: model.topics(),
            rows: store
                .iter()
                .zip(corpus.docs())
                .zip(thetas)
                .map(|((t, d), th)| (t.id, (d.len(), th.0)))
                .collect(),
        };
        let order: Vec<u64> = store.iter().map(|t| t.id).collect();
        let params = [("infer_iterations", iters.to_string())];
        self.write_artifact(THETA_FILE, "infer", &params, |b| table.write_tsv(b, &order))?;
        Ok(table)
    }

    pub fn label(&self) -> Result<CorpusLabels> {
        let store = self.load_store()?;
        let labels = label_corpus(&store, &self.lexicon()?);
        let s = labels.summary;
        let params = [
            ("control", s.control.to_string()),
            ("rights", s.rights.to_string()),
            ("unlabeled", s.unlabeled.to_string()),
        ];
        self.write_artifact(LABEL_FILE, "label", &params, |b| labels.write_tsv(b, store.iter()))?;
        Ok(labels)
    }

    pub fn geocode(&self) -> Result<GeoAssignments> {
        let store = self.load_store()?;
        let geo = geocode_corpus(&store, &self.gazetteer()?);
        let params = [
            ("resolved", geo.resolved.to_string()),
            ("total", geo.total.to_string()),
            ("coverage", geo.coverage().to_string()),
        ];
        self.write_artifact(GEO_FILE, "geocode", &params, |b| geo.write_tsv(b, &store))?;
        Ok(geo)
    }

    pub fn trends(&self) -> Result<analytics::TimeSeries> {
        let store = self.load_store()?;
        let labels = self.load_labels()?;
        let g = self.config.analytics.granularity;
        let series = aggregate_counts(&store, &labels, g, &self.config.window()?);
        self.write_artifact(TRENDS_FILE, "trends", &[("granularity", g.to_string())], |b| series.write_tsv(b))?;
        Ok(series)
    }

    pub fn spikes(&self) -> Result<Vec<analytics::Spike>> {
        let store = self.load_store()?;
        let labels = self.load_labels()?;
        let a = &self.config.analytics;
        let series = aggregate_counts(&store, &labels, Granularity::Week, &self.config.window()?);
        let spikes = detect_spikes(&series, a.spike_window, a.spike_threshold)?;
        let params = [
            ("granularity", "week".to_owned()),
            ("trailing_window", a.spike_window.to_string()),
            ("z_threshold", a.spike_threshold.to_string()),
            ("stddev_floor", "1".to_owned()),
        ];
        self.write_artifact(SPIKES_FILE, "spikes", &params, |b| analytics::write_spikes_tsv(&spikes, b))?;
        Ok(spikes)
    }

    fn stance_distributions(
        &self,
        labels: &CorpusLabels,
        thetas: &ThetaTable,
    ) -> Result<Vec<(StanceLabel, Vec<f64>, TopicProfile)>> {
        let mut out = Vec::new();
        for stance in [StanceLabel::Control, StanceLabel::Rights] {
            let docs = thetas
                .rows
                .iter()
                .filter(|(id, _)| labels.get(**id) == stance)
                .map(|(_, (n, th))| (*n, th.as_slice()));
            let dist = match stance_topic_distribution(docs, self.config.analytics.weighting) {
                Ok(d) => d,
                Err(e) => {
                    log::warn!("{stance}: {e}");
                    continue;
                }
            };
            let n = self.config.analytics.top_n.min(dist.len());
            let profile = top_topics(&dist, n)?;
            out.push((stance, dist, profile));
        }
        Ok(out)
    }

    pub fn topics(&self) -> Result<Vec<(StanceLabel, TopicProfile)>> {
        let labels = self.load_labels()?;
        let thetas = self.load_thetas()?;
        let (model, vocab) = self.load_model()?;
        let dists = self.stance_distributions(&labels, &thetas)?;
        let a = &self.config.analytics;
        let params = [
            ("top_n", a.top_n.to_string()),
            ("weighting", format!("{:?}", a.weighting).to_lowercase()),
        ];
        self.write_artifact(STANCE_TOPICS_FILE, "topics", &params, |b| {
            writeln!(b, "stance\trank\ttopic\tprob\tshare\tterms")?;
            for (stance, dist, profile) in &dists {
                for (rank, (&k, share)) in profile.topic_ids.iter().zip(&profile.proportions).enumerate() {
                    let terms: Vec<String> = model
                        .top_words(&vocab, k, self.config.lda.top_words)?
                        .into_iter()
                        .map(|w| w.term)
                        .collect();
                    writeln!(b, "{stance}\t{}\t{k}\t{}\t{share}\t{}", rank + 1, dist[k], terms.join(" "))?;
                }
            }
            Ok(())
        })?;
        Ok(dists.into_iter().map(|(s, _, p)| (s, p)).collect())
    }

    pub fn events(&self) -> Result<Vec<EventProfileRow>> {
        let events_path = self
            .config
            .paths
            .events
            .as_ref()
            .ok_or_else(|| Error::argument("no events file configured (paths.events)"))?;
        let events = read_events(open_lines(events_path)?, &events_path.display().to_string())?;
        let store = self.load_store()?;
        let labels = self.load_labels()?;
        let thetas = self.load_thetas()?;
        let dists = self.stance_distributions(&labels, &thetas)?;
        let dates: HashMap<u64, chrono::NaiveDate> = store.iter().map(|t| (t.id, t.date())).collect();
        let mut rows = Vec::new();
        let mut warnings = Vec::new();
        for ev in &events {
            for (stance, _, overall) in &dists {
                let docs = thetas
                    .rows
                    .iter()
                    .filter(|(id, _)| labels.get(**id) == *stance)
                    .filter_map(|(id, (n, th))| dates.get(id).map(|d| (*d, *n, th.as_slice())));
                let (profile, warning) =
                    event_topic_profile(ev, &overall.topic_ids, docs, self.config.analytics.weighting)?;
                if let Some(w) = warning {
                    log::warn!("{stance}: {w}");
                    warnings.push(format!("{stance}: {w}"));
                }
                for (&k, &share) in profile.topic_ids.iter().zip(&profile.proportions) {
                    rows.push(EventProfileRow {
                        event: ev.name.clone(),
                        stance: *stance,
                        topic: k,
                        share,
                    });
                }
            }
        }
        let mut params = vec![("window_days", (2 * analytics::EVENT_HALF_WIDTH + 1).to_string())];
        params.extend(warnings.into_iter().map(|w| ("warning", w)));
        self.write_artifact(EVENTS_FILE, "events", &params, |b| analytics::write_event_profiles_tsv(&rows, b))?;
        Ok(rows)
    }

    pub fn correlate(&self) -> Result<crate::stats::Correlation> {
        let polls_path = self
            .config
            .paths
            .polls
            .as_ref()
            .ok_or_else(|| Error::argument("no poll file configured (paths.polls)"))?;
        let polls = load_polls_file(polls_path)?;
        let labels = self.load_labels()?;
        let geo = self.load_geo()?;
        let a = &self.config.analytics;
        let shares = analytics::state_stance_proportion(&labels, &geo, a.min_support);
        let corr = match a.poll_window_days {
            None => {
                let map = shares.shares.iter().map(|(s, v)| (*s, v.control_share)).collect();
                correlate_polls(&polls, &map)?
            }
            Some(days) => {
                let store = self.load_store()?;
                let dates: HashMap<u64, chrono::NaiveDate> = store.iter().map(|t| (t.id, t.date())).collect();
                correlate_polls_with(&polls, |p| {
                    let from = p.end_date - Days::new(days);
                    let windowed = analytics::state_stance_proportion_where(&labels, &geo, a.min_support, |id| {
                        dates.get(&id).is_some_and(|d| (from..=p.end_date).contains(d))
                    });
                    windowed.get(p.state).map(|s| s.control_share)
                })?
            }
        };
        let params = [("min_support", a.min_support.to_string())];
        self.write_artifact(SHARES_FILE, "correlate", &params, |b| shares.write_tsv(b))?;
        self.write_artifact(EXCLUDED_FILE, "correlate", &params, |b| shares.write_excluded_tsv(b))?;
        let mode = match a.poll_window_days {
            None => "full_collection".to_owned(),
            Some(d) => format!("poll_window_{d}_days"),
        };
        let params = [("share_window", mode), ("summary", corr.summary())];
        self.write_artifact(CORRELATION_FILE, "correlate", &params, |b| corr.write_tsv(b))?;
        Ok(corr)
    }

    /// label → geocode → infer → trends → spikes → topics → events → correlate.
    /// Events and correlation run only when their input files are configured.
    pub fn report(&self) -> Result<Vec<String>> {
        require(self.out(MODEL_FILE), "model file", "train")?;
        require(self.out(VOCAB_FILE), "vocabulary", "train")?;
        self.load_store()?;
        let mut lines = Vec::new();
        let s = self.label()?.summary;
        lines.push(format!("label: control={} rights={} unlabeled={}", s.control, s.rights, s.unlabeled));
        let g = self.geocode()?;
        lines.push(format!("geocode: resolved={} of {} ({:.4})", g.resolved, g.total, g.coverage()));
        self.infer()?;
        lines.push("infer: ok".to_owned());
        let t = self.trends()?;
        lines.push(format!("trends: {} buckets", t.len()));
        match self.spikes() {
            Ok(sp) => lines.push(format!("spikes: {}", sp.len())),
            Err(e) => lines.push(format!("spikes: skipped ({e})")),
        }
        let tp = self.topics()?;
        lines.push(format!("topics: {} stance profiles", tp.len()));
        if self.config.paths.events.is_some() {
            let rows = self.events()?;
            lines.push(format!("events: {} rows", rows.len()));
        }
        if self.config.paths.polls.is_some() {
            let c = self.correlate()?;
            lines.push(format!("correlate: {}", c.summary()));
        }
        Ok(lines)
    }
}

/// Inferred topic proportions keyed by tweet id, with token counts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ThetaTable {
    pub topics: usize,
    pub rows: BTreeMap<u64, (usize, Vec<f64>)>,
}

impl ThetaTable {
    /// `tweet_id<TAB>tokens<TAB>theta_0 ... theta_{K-1}` in the given order.
    pub fn write_tsv<W: Write>(&self, mut out: W, order: &[u64]) -> Result<()> {
        write!(out, "tweet_id\ttokens")?;
        for k in 0..self.topics {
            write!(out, "\ttheta_{k}")?;
        }
        writeln!(out)?;
        for id in order {
            if let Some((n, th)) = self.rows.get(id) {
                write!(out, "{id}\t{n}")?;
                for v in th {
                    write!(out, "\t{v}")?;
                }
                writeln!(out)?;
            }
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(reader: R, origin: &str) -> Result<Self> {
        let mut table = ThetaTable::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with("tweet_id\t") {
                table.topics = line.split('\t').count().saturating_sub(2);
                continue;
            }
            let mut fields = line.split('\t');
            let bad = |m: &str| Error::parse(origin, i + 1, m.to_owned());
            let id: u64 = fields.next().and_then(|f| f.parse().ok()).ok_or_else(|| bad("bad tweet id"))?;
            let n: usize = fields.next().and_then(|f| f.parse().ok()).ok_or_else(|| bad("bad token count"))?;
            let th = fields
                .map(|f| f.parse::<f64>().map_err(|_| bad("bad proportion")))
                .collect::<Result<Vec<_>>>()?;
            if th.len() != table.topics {
                return Err(bad("wrong number of topic columns"));
            }
            table.rows.insert(id, (n, th));
        }
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_table_round_trip() {
        let t = ThetaTable {
            topics: 2,
            rows: [(5u64, (3usize, vec![0.25, 0.75])), (9, (0, vec![0.5, 0.5]))].into_iter().collect(),
        };
        let mut buf = Vec::new();
        t.write_tsv(&mut buf, &[9, 5]).unwrap();
        let back = ThetaTable::read_tsv(buf.as_slice(), "t").unwrap();
        assert_eq!(back, t);
        assert!(ThetaTable::read_tsv("tweet_id\ttokens\ttheta_0\n1\t2\t0.5\t0.5\n".as_bytes(), "t").is_err());
    }

    #[test]
    fn downstream_stages_name_their_prerequisite() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig {
            output: dir.path().to_owned(),
            ..PipelineConfig::default()
        };
        let p = Pipeline::new(cfg).unwrap();
        let msg = |r: Result<()>| r.unwrap_err().to_string();
        assert!(msg(p.sample().map(|_| ())).contains("`ingest`"));
        assert!(msg(p.report().map(|_| ())).contains("`train`"));
        assert!(msg(p.infer().map(|_| ())).contains("`train`"));
        assert!(msg(p.trends().map(|_| ())).contains("`ingest`"));
    }
}

//! Seeded generators for synthetic corpora with known ground truth.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::{DateTime, Days, NaiveDate, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::analytics::EventWindow;
use crate::corpus::Tweet;
use crate::error::{Error, Result};
use crate::geo::StateCode;
use crate::stats::PollRecord;
use crate::text::TokenSequence;

/// Documents drawn from topics with disjoint vocabularies.
#[derive(Debug, Clone)]
pub struct SeparableCorpus {
    pub docs: Vec<TokenSequence>,
    /// Per topic: `(term, probability)` over that topic's own terms.
    pub topics: Vec<Vec<(String, f64)>>,
}

#[derive(Debug, Clone, Copy)]
pub struct SeparableSpec {
    pub topics: usize,
    pub words_per_topic: usize,
    pub docs: usize,
    pub tokens_per_doc: usize,
    /// Symmetric Dirichlet concentration of document mixtures.
    pub doc_concentration: f64,
    pub seed: u64,
}

impl Default for SeparableSpec {
    fn default() -> Self {
        SeparableSpec {
            topics: 2,
            words_per_topic: 50,
            docs: 500,
            tokens_per_doc: 50,
            doc_concentration: 0.5,
            seed: 1,
        }
    }
}

pub fn topic_term(topic: usize, word: usize) -> String {
    format!("t{topic}w{word:02}")
}

fn dirichlet(rng: &mut ChaCha8Rng, alpha: f64, n: usize) -> Vec<f64> {
    let g = Gamma::new(alpha, 1.0).expect("positive shape");
    let mut v: Vec<f64> = (0..n).map(|_| g.sample(rng).max(1e-300)).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

fn categorical(rng: &mut ChaCha8Rng, p: &[f64]) -> usize {
    let mut u: f64 = rng.random();
    for (i, &w) in p.iter().enumerate() {
        u -= w;
        if u < 0.0 {
            return i;
        }
    }
    p.len() - 1
}

pub fn separable_corpus(spec: &SeparableSpec) -> SeparableCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let phis: Vec<Vec<f64>> = (0..spec.topics)
        .map(|_| dirichlet(&mut rng, 1.0, spec.words_per_topic))
        .collect();
    let docs = (0..spec.docs)
        .map(|_| {
            let theta = dirichlet(&mut rng, spec.doc_concentration, spec.topics);
            let tokens = (0..spec.tokens_per_doc)
                .map(|_| {
                    let k = categorical(&mut rng, &theta);
                    topic_term(k, categorical(&mut rng, &phis[k]))
                })
                .collect::<Vec<_>>();
            TokenSequence(tokens)
        })
        .collect();
    let topics = phis
        .into_iter()
        .enumerate()
        .map(|(k, phi)| phi.into_iter().enumerate().map(|(w, p)| (topic_term(k, w), p)).collect())
        .collect();
    SeparableCorpus { docs, topics }
}

impl SeparableCorpus {
    /// One tweet per document, each carrying a collection keyword.
    pub fn to_tweets(&self, start_id: u64) -> Vec<Tweet> {
        let base = Utc.with_ymd_and_hms(2013, 1, 1, 0, 0, 0).unwrap();
        self.docs
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let at = base + chrono::Duration::minutes(37 * i as i64);
                Tweet::new(start_id + i as u64, at, format!("gun {}", d.0.join(" ")), None)
            })
            .collect()
    }
}

/// State and end date of each poll in the bundled poll calendar.
pub const POLL_CALENDAR: [(&str, &str); 20] = [
    ("AK", "2013-04-26"),
    ("AZ", "2013-04-26"),
    ("AR", "2013-05-23"),
    ("GA", "2013-05-23"),
    ("GA", "2013-08-05"),
    ("IA", "2013-06-07"),
    ("LA", "2013-05-01"),
    ("LA", "2013-08-19"),
    ("MI", "2013-06-02"),
    ("MN", "2013-05-19"),
    ("MT", "2013-06-23"),
    ("NV", "2013-04-26"),
    ("NC", "2013-05-01"),
    ("NC", "2013-07-14"),
    ("OH", "2013-04-26"),
    ("OH", "2013-08-19"),
    ("TN", "2013-05-23"),
    ("TX", "2013-07-01"),
    ("VA", "2013-07-14"),
    ("WY", "2013-07-21"),
];

#[derive(Debug, Clone, Copy)]
pub struct PipelineSpec {
    /// Labelled tweets per polled state.
    pub tweets_per_state: usize,
    /// Standard deviation of the gap between a state's tweet share and its polls.
    pub share_noise: f64,
    /// Extra tweets injected around each event date.
    pub spike_size: usize,
    pub seed: u64,
}

impl Default for PipelineSpec {
    fn default() -> Self {
        PipelineSpec {
            tweets_per_state: 400,
            share_noise: 0.05,
            spike_size: 400,
            seed: 7,
        }
    }
}

/// Synthetic collection whose per-state Control shares track poll support.
#[derive(Debug, Clone)]
pub struct SyntheticPipeline {
    pub tweets: Vec<Tweet>,
    pub polls: Vec<PollRecord>,
    /// Expected Control share per polled state.
    pub target_shares: BTreeMap<StateCode, f64>,
    pub events: Vec<EventWindow>,
    /// Stance whose activity is inflated around each event.
    pub event_stances: Vec<crate::stance::StanceLabel>,
}

const CONTROL_TAGS: [&str; 4] = ["#gunsense", "#momsdemandaction", "#demandaplan", "#endgunviolence"];
const RIGHTS_TAGS: [&str; 4] = ["#gunrights", "#molonlabe", "#protect2a", "#noguncontrol"];
const CONTROL_WORDS: [&str; 12] = [
    "background", "checks", "senate", "vote", "universal", "victims", "families", "newtown", "safety",
    "loophole", "congress", "support",
];
const RIGHTS_WORDS: [&str; 12] = [
    "constitution", "freedom", "registry", "confiscation", "tyranny", "liberty", "ammo", "rifle", "defend",
    "citizens", "infringed", "militia",
];
const SHARED_WORDS: [&str; 8] = ["debate", "today", "america", "people", "law", "news", "week", "state"];
const EVENT_WORDS: [[&str; 4]; 2] = [
    ["amendment", "manchin", "toomey", "filibuster"],
    ["recall", "colorado", "morse", "giron"],
];

fn day(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").expect("valid literal date")
}

fn at_time(rng: &mut ChaCha8Rng, d: NaiveDate) -> DateTime<Utc> {
    let secs = rng.random_range(0..86_400u32);
    Utc.from_utc_datetime(&d.and_hms_opt(secs / 3600, secs / 60 % 60, secs % 60).unwrap())
}

fn words(rng: &mut ChaCha8Rng, pool: &[&str], n: usize) -> Vec<String> {
    (0..n).map(|_| pool[rng.random_range(0..pool.len())].to_owned()).collect()
}

fn tweet_text(rng: &mut ChaCha8Rng, stance: Option<bool>, event: Option<usize>) -> String {
    let mut parts = vec!["gun".to_owned()];
    match stance {
        Some(true) => {
            parts.extend(words(rng, &CONTROL_WORDS, 5));
            parts.push(CONTROL_TAGS[rng.random_range(0..CONTROL_TAGS.len())].to_owned());
        }
        Some(false) => {
            parts.extend(words(rng, &RIGHTS_WORDS, 5));
            parts.push(RIGHTS_TAGS[rng.random_range(0..RIGHTS_TAGS.len())].to_owned());
        }
        None => {}
    }
    if let Some(e) = event {
        parts.extend(words(rng, &EVENT_WORDS[e], 4));
    }
    parts.extend(words(rng, &SHARED_WORDS, 3));
    parts.join(" ")
}

pub fn synthetic_pipeline(spec: &PipelineSpec) -> Result<SyntheticPipeline> {
    use crate::stance::StanceLabel;

    if spec.share_noise.is_nan() || spec.share_noise < 0.0 || spec.tweets_per_state == 0 {
        return Err(Error::argument("share noise must be non-negative and tweets_per_state positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.share_noise).map_err(|e| Error::argument(e.to_string()))?;
    let poll_jitter = Normal::new(0.0, 0.02).expect("valid sd");

    // Poll support: a latent level per state, each poll jittered around it.
    let mut level: BTreeMap<StateCode, f64> = BTreeMap::new();
    let mut polls = Vec::new();
    for (code, end) in POLL_CALENDAR {
        let state: StateCode = code.parse()?;
        let base = *level.entry(state).or_insert_with(|| rng.random_range(0.35..0.9));
        let v: f64 = (base + poll_jitter.sample(&mut rng)).clamp(0.0, 1.0);
        polls.push(PollRecord {
            state,
            end_date: day(end),
            support_fraction: Some((v * 1000.0).round() / 1000.0),
        });
    }
    let mut target_shares = BTreeMap::new();
    for &state in level.keys() {
        let ps: Vec<f64> = polls
            .iter()
            .filter(|p| p.state == state)
            .filter_map(|p| p.support_fraction)
            .collect();
        let mean = ps.iter().sum::<f64>() / ps.len() as f64;
        target_shares.insert(state, (mean + noise.sample(&mut rng)).clamp(0.02, 0.98));
    }

    let first = day("2013-01-01");
    let span = 365u64;
    let mut drafts: Vec<(DateTime<Utc>, String, Option<String>)> = Vec::new();
    for (&state, &share) in &target_shares {
        let n_control = (share * spec.tweets_per_state as f64).round() as usize;
        for i in 0..spec.tweets_per_state {
            let d = first + Days::new(rng.random_range(0..span));
            let loc = if rng.random_bool(0.5) {
                state.name().to_owned()
            } else {
                format!("Hometown, {}", state.name())
            };
            let text = tweet_text(&mut rng, Some(i < n_control), None);
            drafts.push((at_time(&mut rng, d), text, Some(loc)));
        }
        for _ in 0..spec.tweets_per_state / 4 {
            let d = first + Days::new(rng.random_range(0..span));
            drafts.push((at_time(&mut rng, d), tweet_text(&mut rng, None, None), Some(state.name().to_owned())));
        }
    }
    // Background chatter from unpolled or unresolvable places.
    let elsewhere = ["California", "Brooklyn, NY", "Earth", "London", "somewhere", "Springfield"];
    for i in 0..spec.tweets_per_state * 2 {
        let d = first + Days::new(rng.random_range(0..span));
        let stance = match i % 3 {
            0 => Some(true),
            1 => Some(false),
            _ => None,
        };
        let loc = elsewhere[rng.random_range(0..elsewhere.len())].to_owned();
        let loc = if i % 5 == 0 { None } else { Some(loc) };
        drafts.push((at_time(&mut rng, d), tweet_text(&mut rng, stance, None), loc));
    }

    let events = vec![
        EventWindow::new("Senate background check vote", day("2013-04-17")),
        EventWindow::new("Colorado recall election", day("2013-09-10")),
    ];
    let event_stances = vec![StanceLabel::Control, StanceLabel::Rights];
    for (e, ev) in events.iter().enumerate() {
        for _ in 0..spec.spike_size {
            let d = ev.first_day() + Days::new(rng.random_range(0..7));
            let text = tweet_text(&mut rng, Some(event_stances[e] == StanceLabel::Control), Some(e));
            drafts.push((at_time(&mut rng, d), text, None));
        }
    }

    drafts.sort_by_key(|d| d.0);
    let base_id = 300_000_000_000_000_000u64;
    let tweets = drafts
        .into_iter()
        .enumerate()
        .map(|(i, (at, text, loc))| Tweet::new(base_id + i as u64, at, text, loc))
        .collect();
    Ok(SyntheticPipeline {
        tweets,
        polls,
        target_shares,
        events,
        event_stances,
    })
}

/// Newline-delimited JSON in the ingest input format.
pub fn write_jsonl<'a, W: Write>(tweets: impl IntoIterator<Item = &'a Tweet>, mut out: W) -> Result<()> {
    for t in tweets {
        let rec = serde_json::json!({
            "id": t.id,
            "created_at": t.created_at.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            "text": t.text,
            "user_location": t.profile_location,
        });
        writeln!(out, "{rec}")?;
    }
    Ok(())
}

pub fn write_polls_csv<W: Write>(polls: &[PollRecord], mut out: W) -> Result<()> {
    writeln!(out, "state,end_date,support_fraction")?;
    for p in polls {
        match p.support_fraction {
            Some(v) => writeln!(out, "{},{},{v}", p.state, p.end_date)?,
            None => writeln!(out, "{},{},?", p.state, p.end_date)?,
        }
    }
    Ok(())
}

pub fn write_events_tsv<W: Write>(events: &[EventWindow], mut out: W) -> Result<()> {
    for e in events {
        writeln!(out, "{}\t{}", e.date, e.name)?;
    }
    Ok(())
}

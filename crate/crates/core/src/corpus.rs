//! Tweet records, keyword-filtered ingestion and the persisted corpus store.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Duration;

use chrono::{DateTime, NaiveDate, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::text::raw_tokens;

/// The six general-purpose collection keywords.
pub const DEFAULT_KEYWORDS: [&str; 6] = [
    "gun",
    "guns",
    "second amendment",
    "2nd amendment",
    "firearm",
    "firearms",
];

pub const LOG_MAGIC: [u8; 4] = *b"STCL";
pub const INDEX_MAGIC: [u8; 4] = *b"STCX";
pub const FORMAT_VERSION: u8 = 1;

pub const LOG_FILE: &str = "corpus.log";
pub const INDEX_FILE: &str = "corpus.idx";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tweet {
    pub id: u64,
    pub created_at: DateTime<Utc>,
    pub text: String,
    pub profile_location: Option<String>,
    pub hashtags: Vec<String>,
}

impl Tweet {
    pub fn new(
        id: u64,
        created_at: DateTime<Utc>,
        text: impl Into<String>,
        profile_location: Option<String>,
    ) -> Self {
        let text = text.into();
        let hashtags = extract_hashtags(&text);
        Tweet {
            id,
            created_at,
            text,
            profile_location,
            hashtags,
        }
    }

    pub fn date(&self) -> NaiveDate {
        self.created_at.date_naive()
    }
}

/// Lowercased tags: each maximal run of alphanumerics/underscores that
/// directly follows a `#`. Duplicates and order are kept.
pub fn extract_hashtags(text: &str) -> Vec<String> {
    let is_tag_char = |c: char| c.is_alphanumeric() || c == '_';
    let mut tags = Vec::new();
    let mut rest = text;
    while let Some(pos) = rest.find('#') {
        rest = &rest[pos + 1..];
        let end = rest.find(|c: char| !is_tag_char(c)).unwrap_or(rest.len());
        if end > 0 {
            tags.push(rest[..end].to_lowercase());
        }
        rest = &rest[end..];
    }
    tags
}

/// Inclusive UTC interval that ingested records must fall into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CollectionWindow {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl CollectionWindow {
    pub fn new(start: DateTime<Utc>, end: DateTime<Utc>) -> Result<Self> {
        if end < start {
            return Err(Error::argument("collection window ends before it starts"));
        }
        Ok(CollectionWindow { start, end })
    }

    pub fn contains(&self, t: &DateTime<Utc>) -> bool {
        *t >= self.start && *t <= self.end
    }

    pub fn first_day(&self) -> NaiveDate {
        self.start.date_naive()
    }

    pub fn last_day(&self) -> NaiveDate {
        self.end.date_naive()
    }
}

impl Default for CollectionWindow {
    fn default() -> Self {
        CollectionWindow {
            start: Utc.with_ymd_and_hms(2012, 12, 16, 0, 0, 0).unwrap(),
            end: Utc.with_ymd_and_hms(2013, 12, 31, 23, 59, 59).unwrap(),
        }
    }
}

/// Case-insensitive phrase filter that only matches whole tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordFilter {
    phrases: Vec<Vec<String>>,
}

impl KeywordFilter {
    pub fn new<I, S>(phrases: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let phrases: Vec<Vec<String>> = phrases
            .into_iter()
            .map(|p| raw_tokens(p.as_ref()))
            .filter(|p| !p.is_empty())
            .collect();
        if phrases.is_empty() {
            return Err(Error::argument("keyword filter needs at least one phrase"));
        }
        Ok(KeywordFilter { phrases })
    }

    pub fn phrases(&self) -> impl Iterator<Item = String> + '_ {
        self.phrases.iter().map(|p| p.join(" "))
    }

    pub fn matches(&self, text: &str) -> bool {
        let tokens = raw_tokens(text);
        self.phrases.iter().any(|phrase| {
            tokens
                .windows(phrase.len())
                .any(|w| w.iter().zip(phrase).all(|(a, b)| a == b))
        })
    }
}

impl Default for KeywordFilter {
    fn default() -> Self {
        KeywordFilter::new(DEFAULT_KEYWORDS).expect("default keywords are non-empty")
    }
}

/// Append-only sequence of tweets with a per-day index of record offsets.
#[derive(Debug, Clone, Default)]
pub struct CorpusStore {
    records: Vec<Tweet>,
    day_index: BTreeMap<NaiveDate, Vec<usize>>,
}

impl CorpusStore {
    pub fn new() -> Self {
        CorpusStore::default()
    }

    pub fn append(&mut self, tweet: Tweet) {
        let offset = self.records.len();
        self.day_index.entry(tweet.date()).or_default().push(offset);
        self.records.push(tweet);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Tweet> {
        self.records.iter()
    }

    pub fn records(&self) -> &[Tweet] {
        &self.records
    }

    pub fn get(&self, offset: usize) -> Option<&Tweet> {
        self.records.get(offset)
    }

    pub fn day_index(&self) -> &BTreeMap<NaiveDate, Vec<usize>> {
        &self.day_index
    }

    pub fn on_day(&self, day: NaiveDate) -> impl Iterator<Item = &Tweet> {
        self.day_index
            .get(&day)
            .into_iter()
            .flatten()
            .map(move |&i| &self.records[i])
    }

    /// Writes `corpus.log` and `corpus.idx` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(Error::at(dir))?;
        let log_path = dir.join(LOG_FILE);
        let mut log = BufWriter::new(File::create(&log_path).map_err(Error::at(&log_path))?);
        log.write_all(&LOG_MAGIC)?;
        log.write_all(&[FORMAT_VERSION])?;
        let mut byte_offsets = Vec::with_capacity(self.records.len());
        let mut pos = (LOG_MAGIC.len() + 1) as u64;
        for tweet in &self.records {
            let payload = encode_record(tweet);
            byte_offsets.push(pos);
            log.write_all(&(payload.len() as u32).to_le_bytes())?;
            log.write_all(&payload)?;
            pos += 4 + payload.len() as u64;
        }
        log.flush()?;

        let idx_path = dir.join(INDEX_FILE);
        let mut idx = BufWriter::new(File::create(&idx_path).map_err(Error::at(&idx_path))?);
        idx.write_all(&INDEX_MAGIC)?;
        idx.write_all(&[FORMAT_VERSION])?;
        idx.write_all(&(self.day_index.len() as u32).to_le_bytes())?;
        for (day, offsets) in &self.day_index {
            idx.write_all(&day_number(*day).to_le_bytes())?;
            idx.write_all(&(offsets.len() as u32).to_le_bytes())?;
            for &o in offsets {
                idx.write_all(&byte_offsets[o].to_le_bytes())?;
            }
        }
        idx.flush()?;
        Ok(())
    }

    /// Loads a store written by [`CorpusStore::save`], checking the sidecar
    /// index against the log.
    pub fn open(dir: &Path) -> Result<Self> {
        let log_path = dir.join(LOG_FILE);
        if !log_path.exists() {
            return Err(Error::MissingArtifact {
                artifact: "corpus store",
                path: log_path,
                command: "ingest",
            });
        }
        let bytes = fs::read(&log_path).map_err(Error::at(&log_path))?;
        let body = check_header(&bytes, LOG_MAGIC, "corpus log")?;
        let mut store = CorpusStore::new();
        let mut byte_offsets = Vec::new();
        let mut cursor = body;
        let mut pos = (LOG_MAGIC.len() + 1) as u64;
        while !cursor.is_empty() {
            let len = take_u32(&mut cursor)? as usize;
            if cursor.len() < len {
                return Err(Error::Format("truncated corpus record".into()));
            }
            let (payload, rest) = cursor.split_at(len);
            store.append(decode_record(payload)?);
            byte_offsets.push(pos);
            pos += 4 + len as u64;
            cursor = rest;
        }

        let idx_path = dir.join(INDEX_FILE);
        let idx_bytes = fs::read(&idx_path).map_err(Error::at(&idx_path))?;
        let mut cursor = check_header(&idx_bytes, INDEX_MAGIC, "corpus index")?;
        let n_days = take_u32(&mut cursor)? as usize;
        if n_days != store.day_index.len() {
            return Err(Error::Format("day index does not match corpus log".into()));
        }
        for (day, offsets) in &store.day_index {
            let stored_day = take_i64(&mut cursor)?;
            let count = take_u32(&mut cursor)? as usize;
            if stored_day != day_number(*day) || count != offsets.len() {
                return Err(Error::Format("day index does not match corpus log".into()));
            }
            for &o in offsets {
                if take_u64(&mut cursor)? != byte_offsets[o] {
                    return Err(Error::Format("day index offset mismatch".into()));
                }
            }
        }
        Ok(store)
    }
}

impl<'a> IntoIterator for &'a CorpusStore {
    type Item = &'a Tweet;
    type IntoIter = std::slice::Iter<'a, Tweet>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

fn day_number(day: NaiveDate) -> i64 {
    (day - NaiveDate::from_ymd_opt(1970, 1, 1).unwrap()).num_days()
}

fn encode_record(t: &Tweet) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + t.text.len());
    out.extend_from_slice(&t.id.to_le_bytes());
    out.extend_from_slice(&t.created_at.timestamp().to_le_bytes());
    out.extend_from_slice(&(t.text.len() as u32).to_le_bytes());
    out.extend_from_slice(t.text.as_bytes());
    match &t.profile_location {
        Some(loc) => {
            out.push(1);
            out.extend_from_slice(&(loc.len() as u32).to_le_bytes());
            out.extend_from_slice(loc.as_bytes());
        }
        None => out.push(0),
    }
    out
}

fn decode_record(mut buf: &[u8]) -> Result<Tweet> {
    let id = take_u64(&mut buf)?;
    let secs = take_i64(&mut buf)?;
    let created_at = Utc
        .timestamp_opt(secs, 0)
        .single()
        .ok_or_else(|| Error::Format(format!("bad timestamp {secs}")))?;
    let text = take_string(&mut buf)?;
    let location = match take_bytes(&mut buf, 1)?[0] {
        0 => None,
        1 => Some(take_string(&mut buf)?),
        tag => return Err(Error::Format(format!("bad location tag {tag}"))),
    };
    if !buf.is_empty() {
        return Err(Error::Format("trailing bytes in corpus record".into()));
    }
    Ok(Tweet::new(id, created_at, text, location))
}

fn check_header<'a>(bytes: &'a [u8], magic: [u8; 4], what: &str) -> Result<&'a [u8]> {
    if bytes.len() < 5 || bytes[..4] != magic {
        return Err(Error::Format(format!("{what}: bad magic")));
    }
    if bytes[4] != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "{what}: unsupported format version {}",
            bytes[4]
        )));
    }
    Ok(&bytes[5..])
}

fn take_bytes<'a>(buf: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if buf.len() < n {
        return Err(Error::Format("unexpected end of data".into()));
    }
    let (head, tail) = buf.split_at(n);
    *buf = tail;
    Ok(head)
}

fn take_u32(buf: &mut &[u8]) -> Result<u32> {
    Ok(u32::from_le_bytes(take_bytes(buf, 4)?.try_into().unwrap()))
}

fn take_u64(buf: &mut &[u8]) -> Result<u64> {
    Ok(u64::from_le_bytes(take_bytes(buf, 8)?.try_into().unwrap()))
}

fn take_i64(buf: &mut &[u8]) -> Result<i64> {
    Ok(i64::from_le_bytes(take_bytes(buf, 8)?.try_into().unwrap()))
}

fn take_string(buf: &mut &[u8]) -> Result<String> {
    let len = take_u32(buf)? as usize;
    let bytes = take_bytes(buf, len)?;
    String::from_utf8(bytes.to_vec()).map_err(|e| Error::Format(e.to_string()))
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    id: serde_json::Value,
    created_at: String,
    text: String,
    #[serde(default)]
    user_location: Option<String>,
}

/// Parses one newline-delimited JSON record.
pub fn parse_record(line: &str) -> Result<Tweet, String> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let id = match &raw.id {
        serde_json::Value::Number(n) => n.as_u64().ok_or("id is not a non-negative integer")?,
        serde_json::Value::String(s) => s.trim().parse::<u64>().map_err(|e| e.to_string())?,
        _ => return Err("id must be an integer or decimal string".into()),
    };
    let created_at = DateTime::parse_from_rfc3339(&raw.created_at)
        .map_err(|e| format!("created_at: {e}"))?
        .with_timezone(&Utc);
    let location = raw.user_location.filter(|s| !s.trim().is_empty());
    Ok(Tweet::new(id, created_at, raw.text, location))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub lines: usize,
    pub accepted: usize,
    pub no_keyword: usize,
    pub outside_window: usize,
    pub malformed: usize,
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub filter: KeywordFilter,
    pub window: CollectionWindow,
    /// Parse threads; records are still appended in input order.
    pub workers: usize,
    /// When set, accepted records are released at `speedup`× their original
    /// inter-arrival spacing.
    pub replay_speedup: Option<f64>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            filter: KeywordFilter::default(),
            window: CollectionWindow::default(),
            workers: 1,
            replay_speedup: None,
        }
    }
}

pub fn ingest<R: BufRead>(
    reader: R,
    filter: &KeywordFilter,
    window: &CollectionWindow,
    store: &mut CorpusStore,
) -> Result<IngestReport> {
    let opts = IngestOptions {
        filter: filter.clone(),
        window: *window,
        ..IngestOptions::default()
    };
    ingest_with(reader, &opts, store)
}

enum Verdict {
    Accept(Tweet),
    NoKeyword,
    OutsideWindow,
    Malformed(String),
}

fn judge(line: &str, opts: &IngestOptions) -> Verdict {
    match parse_record(line) {
        Err(e) => Verdict::Malformed(e),
        Ok(t) if !opts.window.contains(&t.created_at) => Verdict::OutsideWindow,
        Ok(t) if !opts.filter.matches(&t.text) => Verdict::NoKeyword,
        Ok(t) => Verdict::Accept(t),
    }
}

const CHUNK_LINES: usize = 4096;

pub fn ingest_with<R: BufRead>(
    reader: R,
    opts: &IngestOptions,
    store: &mut CorpusStore,
) -> Result<IngestReport> {
    let mut report = IngestReport::default();
    let mut throttle = opts.replay_speedup.map(|s| Throttle::new(s, std::thread::sleep));
    let pool = if opts.workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(opts.workers)
                .build()
                .map_err(|e| Error::Internal(e.to_string()))?,
        )
    } else {
        None
    };

    let mut lines = reader.lines();
    let mut chunk: Vec<String> = Vec::with_capacity(CHUNK_LINES);
    loop {
        chunk.clear();
        for line in lines.by_ref() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            chunk.push(line);
            if chunk.len() == CHUNK_LINES {
                break;
            }
        }
        if chunk.is_empty() {
            break;
        }
        let verdicts: Vec<Verdict> = match &pool {
            Some(pool) => pool.install(|| {
                use rayon::prelude::*;
                chunk.par_iter().map(|l| judge(l, opts)).collect()
            }),
            None => chunk.iter().map(|l| judge(l, opts)).collect(),
        };
        for v in verdicts {
            report.lines += 1;
            match v {
                Verdict::Accept(t) => {
                    if let Some(th) = throttle.as_mut() {
                        th.wait_for(&t.created_at);
                    }
                    report.accepted += 1;
                    store.append(t);
                }
                Verdict::NoKeyword => report.no_keyword += 1,
                Verdict::OutsideWindow => report.outside_window += 1,
                Verdict::Malformed(e) => {
                    log::debug!("skipping malformed record {}: {e}", report.lines);
                    report.malformed += 1;
                }
            }
        }
    }
    Ok(report)
}

pub fn ingest_file(path: &Path, opts: &IngestOptions, store: &mut CorpusStore) -> Result<IngestReport> {
    let file = File::open(path).map_err(Error::at(path))?;
    ingest_with(BufReader::new(file), opts, store)
}

/// Paces records by their timestamps, compressed by a speedup factor.
/// Gaps are capped at one second of wall time.
pub struct Throttle<F: FnMut(Duration)> {
    speedup: f64,
    last: Option<DateTime<Utc>>,
    sleep: F,
}

impl<F: FnMut(Duration)> Throttle<F> {
    pub fn new(speedup: f64, sleep: F) -> Self {
        Throttle {
            speedup: speedup.max(f64::MIN_POSITIVE),
            last: None,
            sleep,
        }
    }

    pub fn wait_for(&mut self, at: &DateTime<Utc>) {
        if let Some(prev) = self.last {
            let gap = (*at - prev).num_milliseconds();
            if gap > 0 {
                let secs = (gap as f64 / 1000.0 / self.speedup).min(1.0);
                (self.sleep)(Duration::from_secs_f64(secs));
            }
        }
        self.last = Some(*at);
    }
}

/// Indices selected by independent Bernoulli(`fraction`) draws.
pub fn sample_indices(n: usize, fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::argument(format!("sample fraction {fraction} not in (0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).filter(|_| rng.random::<f64>() < fraction).collect())
}

pub fn sample(store: &CorpusStore, fraction: f64, seed: u64) -> Result<Vec<&Tweet>> {
    if store.is_empty() {
        return Err(Error::argument("cannot sample from an empty store"));
    }
    Ok(sample_indices(store.len(), fraction, seed)?
        .into_iter()
        .map(|i| &store.records[i])
        .collect())
}

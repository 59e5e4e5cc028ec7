//! Time series of stance counts, spike detection, per-state stance shares and
//! stance-conditioned topic profiles.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use chrono::{Datelike, Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::corpus::{CollectionWindow, CorpusStore};
use crate::error::{Error, Result};
use crate::geo::{GeoAssignments, StateCode};
use crate::stance::{CorpusLabels, StanceLabel};

pub const DEFAULT_TRAILING_WINDOW: usize = 8;
pub const DEFAULT_Z_THRESHOLD: f64 = 2.0;
pub const DEFAULT_MIN_SUPPORT: u64 = 25;
pub const DEFAULT_TOP_TOPICS: usize = 10;
/// Days on either side of an event date.
pub const EVENT_HALF_WIDTH: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Day,
    Week,
}

impl Granularity {
    /// Start of the bucket containing `date`; weeks start on Monday.
    pub fn bucket_start(self, date: NaiveDate) -> NaiveDate {
        match self {
            Granularity::Day => date,
            Granularity::Week => date - Days::new(date.weekday().num_days_from_monday() as u64),
        }
    }

    fn step(self) -> Days {
        match self {
            Granularity::Day => Days::new(1),
            Granularity::Week => Days::new(7),
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::Day => "day",
            Granularity::Week => "week",
        })
    }
}

impl FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "day" => Ok(Granularity::Day),
            "week" => Ok(Granularity::Week),
            _ => Err(Error::argument(format!("unknown granularity {s:?} (day|week)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BucketCounts {
    pub overall: u64,
    pub control: u64,
    pub rights: u64,
}

impl BucketCounts {
    pub fn get(&self, stance: StanceLabel) -> u64 {
        match stance {
            StanceLabel::Control => self.control,
            StanceLabel::Rights => self.rights,
            StanceLabel::Unlabeled => self.overall - self.control - self.rights,
        }
    }
}

/// Contiguous, zero-filled buckets of raw (unnormalised) counts.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    granularity: Granularity,
    entries: Vec<(NaiveDate, BucketCounts)>,
}

impl TimeSeries {
    /// Zero-filled series spanning `first..=last`.
    pub fn empty(granularity: Granularity, first: NaiveDate, last: NaiveDate) -> Self {
        let mut entries = Vec::new();
        let mut b = granularity.bucket_start(first);
        let end = granularity.bucket_start(last.max(first));
        while b <= end {
            entries.push((b, BucketCounts::default()));
            b = b + granularity.step();
        }
        TimeSeries { granularity, entries }
    }

    /// Builds a series directly from per-bucket counts starting at `start`.
    pub fn from_counts(granularity: Granularity, start: NaiveDate, counts: Vec<BucketCounts>) -> Self {
        let mut b = granularity.bucket_start(start);
        let entries = counts
            .into_iter()
            .map(|c| {
                let e = (b, c);
                b = b + granularity.step();
                e
            })
            .collect();
        TimeSeries { granularity, entries }
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn entries(&self) -> &[(NaiveDate, BucketCounts)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn totals(&self) -> BucketCounts {
        self.entries.iter().fold(BucketCounts::default(), |acc, (_, c)| BucketCounts {
            overall: acc.overall + c.overall,
            control: acc.control + c.control,
            rights: acc.rights + c.rights,
        })
    }

    fn add(&mut self, date: NaiveDate, stance: StanceLabel) {
        let b = self.granularity.bucket_start(date);
        let first = self.entries[0].0;
        let idx = match self.granularity {
            Granularity::Day => (b - first).num_days() as usize,
            Granularity::Week => ((b - first).num_days() / 7) as usize,
        };
        let c = &mut self.entries[idx].1;
        c.overall += 1;
        match stance {
            StanceLabel::Control => c.control += 1,
            StanceLabel::Rights => c.rights += 1,
            StanceLabel::Unlabeled => {}
        }
    }

    /// `bucket_start<TAB>overall<TAB>control<TAB>rights`.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "bucket_start\toverall\tcontrol\trights")?;
        for (d, c) in &self.entries {
            writeln!(out, "{d}\t{}\t{}\t{}", c.overall, c.control, c.rights)?;
        }
        Ok(())
    }
}

/// Counts every stored tweet into its bucket. The series covers the
/// collection window, widened if any tweet falls outside it.
pub fn aggregate_counts(
    store: &CorpusStore,
    labels: &CorpusLabels,
    granularity: Granularity,
    window: &CollectionWindow,
) -> TimeSeries {
    let (mut first, mut last) = (window.first_day(), window.last_day());
    if let (Some((&lo, _)), Some((&hi, _))) = (store.day_index().first_key_value(), store.day_index().last_key_value()) {
        first = first.min(lo);
        last = last.max(hi);
    }
    let mut series = TimeSeries::empty(granularity, first, last);
    for t in store.iter() {
        series.add(t.date(), labels.get(t.id));
    }
    series
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spike {
    pub bucket: NaiveDate,
    pub stance: StanceLabel,
    pub count: u64,
    pub mean: f64,
    pub stddev: f64,
    pub z: f64,
}

/// Flags bucket `b` for a stance when its count exceeds
/// `mean + z_threshold·sd` of the `trailing_window` buckets before it (sd is
/// the population deviation floored at 1) and it is a local maximum: strictly
/// above its predecessor and no lower than its successor, so the earlier of
/// two equal neighbours wins.
pub fn detect_spikes(series: &TimeSeries, trailing_window: usize, z_threshold: f64) -> Result<Vec<Spike>> {
    if trailing_window == 0 {
        return Err(Error::argument("trailing window must be at least 1"));
    }
    if series.len() < trailing_window + 1 {
        return Err(Error::argument(format!(
            "series has {} buckets; spike detection needs at least {}",
            series.len(),
            trailing_window + 1
        )));
    }
    let mut spikes = Vec::new();
    for stance in [StanceLabel::Control, StanceLabel::Rights] {
        let counts: Vec<u64> = series.entries.iter().map(|(_, c)| c.get(stance)).collect();
        spikes.extend(
            spike_indices(&counts, trailing_window, z_threshold)
                .into_iter()
                .map(|(b, mean, sd, z)| Spike {
                    bucket: series.entries[b].0,
                    stance,
                    count: counts[b],
                    mean,
                    stddev: sd,
                    z,
                }),
        );
    }
    spikes.sort_by(|a, b| a.bucket.cmp(&b.bucket).then(a.stance.as_str().cmp(b.stance.as_str())));
    Ok(spikes)
}

/// `(index, mean, stddev, z)` for each flagged position of a count sequence.
pub fn spike_indices(counts: &[u64], trailing_window: usize, z_threshold: f64) -> Vec<(usize, f64, f64, f64)> {
    let mut out = Vec::new();
    for b in trailing_window..counts.len() {
        let prev = &counts[b - trailing_window..b];
        let mean = prev.iter().sum::<u64>() as f64 / trailing_window as f64;
        let var = prev.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / trailing_window as f64;
        let sd = var.sqrt().max(1.0);
        let c = counts[b] as f64;
        let z = (c - mean) / sd;
        let local_max = counts[b] > counts[b - 1] && counts.get(b + 1).is_none_or(|&n| counts[b] >= n);
        if c > mean + z_threshold * sd && local_max {
            out.push((b, mean, sd, z));
        }
    }
    out
}

/// `bucket_start<TAB>stance<TAB>count<TAB>mean<TAB>stddev<TAB>z`.
pub fn write_spikes_tsv<W: Write>(spikes: &[Spike], mut out: W) -> Result<()> {
    writeln!(out, "bucket_start\tstance\tcount\tmean\tstddev\tz")?;
    for s in spikes {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            s.bucket, s.stance, s.count, s.mean, s.stddev, s.z
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateShare {
    pub control_share: f64,
    pub n_control: u64,
    pub n_rights: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StateShares {
    pub shares: BTreeMap<StateCode, StateShare>,
    /// States under the support threshold, with their Control and Rights counts.
    pub excluded: BTreeMap<StateCode, (u64, u64)>,
    pub min_support: u64,
}

impl StateShares {
    pub fn get(&self, state: StateCode) -> Option<&StateShare> {
        self.shares.get(&state)
    }

    /// `state<TAB>control_share<TAB>n_control<TAB>n_rights`.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "state\tcontrol_share\tn_control\tn_rights")?;
        for (s, v) in &self.shares {
            writeln!(out, "{s}\t{}\t{}\t{}", v.control_share, v.n_control, v.n_rights)?;
        }
        Ok(())
    }

    /// `state<TAB>n_control<TAB>n_rights` for every state below the threshold.
    pub fn write_excluded_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "state\tn_control\tn_rights")?;
        for (s, (c, r)) in &self.excluded {
            writeln!(out, "{s}\t{c}\t{r}")?;
        }
        Ok(())
    }
}

/// Control share among labelled, geocoded tweets per state. Only tweets for
/// which `keep(id)` holds are counted.
pub fn state_stance_proportion_where<F>(
    labels: &CorpusLabels,
    geo: &GeoAssignments,
    min_support: u64,
    mut keep: F,
) -> StateShares
where
    F: FnMut(u64) -> bool,
{
    let mut tally: BTreeMap<StateCode, (u64, u64)> = StateCode::all().map(|s| (s, (0, 0))).collect();
    for (&id, &label) in &labels.labels {
        let Some(state) = geo.get(id) else { continue };
        if !keep(id) {
            continue;
        }
        let e = tally.entry(state).or_default();
        match label {
            StanceLabel::Control => e.0 += 1,
            StanceLabel::Rights => e.1 += 1,
            StanceLabel::Unlabeled => {}
        }
    }
    let mut out = StateShares {
        min_support,
        ..StateShares::default()
    };
    for (state, (c, r)) in tally {
        let n = c + r;
        if n == 0 || n < min_support {
            out.excluded.insert(state, (c, r));
        } else {
            out.shares.insert(
                state,
                StateShare {
                    control_share: c as f64 / n as f64,
                    n_control: c,
                    n_rights: r,
                },
            );
        }
    }
    out
}

pub fn state_stance_proportion(labels: &CorpusLabels, geo: &GeoAssignments, min_support: u64) -> StateShares {
    state_stance_proportion_where(labels, geo, min_support, |_| true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// Each document weighted by its token count.
    #[default]
    Tokens,
    /// Each document weighted equally.
    Uniform,
}

impl FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tokens" => Ok(Weighting::Tokens),
            "uniform" => Ok(Weighting::Uniform),
            _ => Err(Error::argument(format!("unknown weighting {s:?} (tokens|uniform)"))),
        }
    }
}

/// Weighted mean of document topic vectors, given `(token_count, theta)`
/// pairs for the documents of one stance.
pub fn stance_topic_distribution<'a, I>(docs: I, weighting: Weighting) -> Result<Vec<f64>>
where
    I: IntoIterator<Item = (usize, &'a [f64])>,
{
    let mut acc: Vec<f64> = Vec::new();
    let mut total = 0.0;
    let mut seen = 0usize;
    for (n, theta) in docs {
        if acc.is_empty() {
            acc = vec![0.0; theta.len()];
        } else if acc.len() != theta.len() {
            return Err(Error::argument("topic vectors differ in length"));
        }
        seen += 1;
        let w = match weighting {
            Weighting::Tokens => n as f64,
            Weighting::Uniform => 1.0,
        };
        if w == 0.0 {
            continue;
        }
        for (a, t) in acc.iter_mut().zip(theta) {
            *a += w * t;
        }
        total += w;
    }
    if seen == 0 {
        return Err(Error::argument("no documents for this stance"));
    }
    if total == 0.0 {
        return Err(Error::argument("documents for this stance carry no tokens"));
    }
    Ok(acc.into_iter().map(|a| a / total).collect())
}

/// Selected topics with proportions renormalised over the selection.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TopicProfile {
    pub topic_ids: Vec<usize>,
    pub proportions: Vec<f64>,
}

impl TopicProfile {
    pub fn is_empty(&self) -> bool {
        self.proportions.is_empty()
    }

    /// Projects `dist` onto `topic_ids` and renormalises. An all-zero
    /// projection yields an empty profile.
    pub fn project(dist: &[f64], topic_ids: &[usize]) -> Result<Self> {
        if let Some(&bad) = topic_ids.iter().find(|&&t| t >= dist.len()) {
            return Err(Error::argument(format!("topic {bad} out of range for {} topics", dist.len())));
        }
        let sum: f64 = topic_ids.iter().map(|&t| dist[t]).sum();
        let proportions = if sum > 0.0 {
            topic_ids.iter().map(|&t| dist[t] / sum).collect()
        } else {
            Vec::new()
        };
        Ok(TopicProfile {
            topic_ids: topic_ids.to_vec(),
            proportions,
        })
    }
}

/// The `n` most probable topics (ties to the lower index), renormalised.
pub fn top_topics(dist: &[f64], n: usize) -> Result<TopicProfile> {
    if n > dist.len() {
        return Err(Error::argument(format!("requested {n} topics from {}", dist.len())));
    }
    let mut order: Vec<usize> = (0..dist.len()).collect();
    order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
    order.truncate(n);
    TopicProfile::project(dist, &order)
}

/// A named date and the seven days centred on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventWindow {
    pub name: String,
    pub date: NaiveDate,
}

impl EventWindow {
    pub fn new(name: impl Into<String>, date: NaiveDate) -> Self {
        EventWindow { name: name.into(), date }
    }

    pub fn first_day(&self) -> NaiveDate {
        self.date - Days::new(EVENT_HALF_WIDTH)
    }

    pub fn last_day(&self) -> NaiveDate {
        self.date + Days::new(EVENT_HALF_WIDTH)
    }

    pub fn contains(&self, day: NaiveDate) -> bool {
        (self.first_day()..=self.last_day()).contains(&day)
    }
}

/// Reads `date<TAB>name` lines; blank lines and `#` comments are skipped.
pub fn read_events<R: BufRead>(reader: R, origin: &str) -> Result<Vec<EventWindow>> {
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (date, name) = trimmed
            .split_once('\t')
            .ok_or_else(|| Error::parse(origin, i + 1, "expected `date<TAB>name`"))?;
        let date = NaiveDate::parse_from_str(date.trim(), "%Y-%m-%d")
            .map_err(|e| Error::parse(origin, i + 1, format!("bad date {date:?}: {e}")))?;
        let name = name.trim();
        if name.is_empty() {
            return Err(Error::parse(origin, i + 1, "event name is empty"));
        }
        events.push(EventWindow::new(name, date));
    }
    Ok(events)
}

/// Topic profile of one stance's documents inside an event window, over a
/// fixed topic selection. Documents are `(date, token_count, theta)`. With no
/// in-window documents the profile is empty and a warning is returned.
pub fn event_topic_profile<'a, I>(
    event: &EventWindow,
    topic_ids: &[usize],
    docs: I,
    weighting: Weighting,
) -> Result<(TopicProfile, Option<String>)>
where
    I: IntoIterator<Item = (NaiveDate, usize, &'a [f64])>,
{
    let inside = docs
        .into_iter()
        .filter(|(d, _, _)| event.contains(*d))
        .map(|(_, n, t)| (n, t));
    match stance_topic_distribution(inside, weighting) {
        Ok(dist) => {
            let profile = TopicProfile::project(&dist, topic_ids)?;
            let warning = profile
                .is_empty()
                .then(|| format!("event {:?}: selected topics carry no mass", event.name));
            Ok((profile, warning))
        }
        Err(_) => Ok((
            TopicProfile {
                topic_ids: topic_ids.to_vec(),
                proportions: Vec::new(),
            },
            Some(format!("event {:?}: no documents in window", event.name)),
        )),
    }
}

/// Row of the event profile table.
#[derive(Debug, Clone, PartialEq)]
pub struct EventProfileRow {
    pub event: String,
    pub stance: StanceLabel,
    pub topic: usize,
    pub share: f64,
}

/// `event<TAB>stance<TAB>topic<TAB>share`.
pub fn write_event_profiles_tsv<W: Write>(rows: &[EventProfileRow], mut out: W) -> Result<()> {
    writeln!(out, "event\tstance\ttopic\tshare")?;
    for r in rows {
        writeln!(out, "{}\t{}\t{}\t{}", r.event, r.stance, r.topic, r.share)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Tweet;
    use crate::geo::Gazetteer;
    use crate::stance::{label_corpus, HashtagLexicon};
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    fn day(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn tweet(id: u64, date: &str, text: &str) -> Tweet {
        let d = day(date);
        let ts = Utc.from_utc_datetime(&d.and_hms_opt(12, 0, 0).unwrap());
        Tweet::new(id, ts, text.to_owned(), None)
    }

    #[test]
    fn empty_store_gives_zero_series() {
        let store = CorpusStore::default();
        let labels = label_corpus(&store, &HashtagLexicon::default());
        let w = CollectionWindow::default();
        let s = aggregate_counts(&store, &labels, Granularity::Week, &w);
        assert!(s.len() > 50);
        assert_eq!(s.totals(), BucketCounts::default());
        assert_eq!(s.entries()[0].0.weekday(), chrono::Weekday::Mon);
        let d = aggregate_counts(&store, &labels, Granularity::Day, &w);
        assert_eq!(d.len(), 381);
    }

    #[test]
    fn monday_week_bucket() {
        let mut store = CorpusStore::default();
        for i in 0..3 {
            store.append(tweet(i, "2013-04-17", "#gunsense now"));
        }
        store.append(tweet(9, "2013-04-18", "#gunrights forever"));
        store.append(tweet(10, "2013-04-21", "no tags"));
        let labels = label_corpus(&store, &HashtagLexicon::default());
        let s = aggregate_counts(&store, &labels, Granularity::Week, &CollectionWindow::default());
        let (_, c) = s.entries().iter().find(|(d, _)| *d == day("2013-04-15")).unwrap();
        assert_eq!((c.control, c.rights, c.overall), (3, 1, 5));
        assert_eq!(s.totals().control, labels.summary.control as u64);
        assert_eq!(s.totals().rights, labels.summary.rights as u64);
    }

    #[test]
    fn series_tsv() {
        let s = TimeSeries::from_counts(
            Granularity::Day,
            day("2013-01-01"),
            vec![BucketCounts { overall: 3, control: 1, rights: 2 }],
        );
        let mut buf = Vec::new();
        s.write_tsv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "bucket_start\toverall\tcontrol\trights\n2013-01-01\t3\t1\t2\n"
        );
    }

    #[test]
    fn constant_series_has_no_spikes() {
        assert!(spike_indices(&[10; 20], 8, 2.0).is_empty());
    }

    #[test]
    fn single_spike_with_floored_deviation() {
        let counts = [10, 10, 10, 10, 10, 10, 10, 10, 100, 10];
        let s = spike_indices(&counts, 8, 2.0);
        assert_eq!(s.len(), 1);
        let (b, mean, sd, z) = s[0];
        assert_eq!((b, mean, sd), (8, 10.0, 1.0));
        assert_eq!(z, 90.0);
    }

    #[test]
    fn equal_adjacent_maxima_flag_the_first() {
        let counts = [10, 10, 10, 10, 10, 10, 10, 10, 100, 100, 10];
        let s = spike_indices(&counts, 8, 2.0);
        assert_eq!(s.iter().map(|x| x.0).collect::<Vec<_>>(), vec![8]);
    }

    #[test]
    fn spike_detection_needs_enough_buckets() {
        let s = TimeSeries::from_counts(Granularity::Week, day("2013-01-07"), vec![BucketCounts::default(); 8]);
        assert!(detect_spikes(&s, 8, 2.0).is_err());
    }

    #[test]
    fn spikes_are_reported_per_stance() {
        let mut counts = vec![BucketCounts { overall: 20, control: 10, rights: 10 }; 12];
        counts[9].control = 60;
        counts[9].overall = 70;
        counts[10].rights = 50;
        counts[10].overall = 60;
        let s = TimeSeries::from_counts(Granularity::Week, day("2013-01-07"), counts);
        let spikes = detect_spikes(&s, 8, 2.0).unwrap();
        let got: Vec<_> = spikes.iter().map(|s| (s.bucket, s.stance)).collect();
        assert_eq!(
            got,
            vec![
                (day("2013-01-07") + Days::new(63), StanceLabel::Control),
                (day("2013-01-07") + Days::new(70), StanceLabel::Rights),
            ]
        );
    }

    fn geo_fixture() -> (CorpusLabels, GeoAssignments) {
        // 200 tweets over four states with known tallies.
        let plan = [("Texas", 40, 20), ("Ohio", 15, 45), ("Iowa", 10, 10), ("Maine", 30, 0)];
        let gaz = Gazetteer::builtin();
        let mut store = CorpusStore::default();
        let mut id = 0;
        for (state, c, r) in plan {
            for i in 0..(c + r) {
                let text = if i < c { "#gunsense" } else { "#gunrights" };
                let ts = Utc.with_ymd_and_hms(2013, 3, 1, 0, 0, 0).unwrap();
                store.append(Tweet::new(id, ts, text, Some(state.to_owned())));
                id += 1;
            }
        }
        let labels = label_corpus(&store, &HashtagLexicon::default());
        let geo = crate::geo::geocode_corpus(&store, &gaz);
        (labels, geo)
    }

    #[test]
    fn state_shares_match_hand_tally() {
        let (labels, geo) = geo_fixture();
        let s = state_stance_proportion(&labels, &geo, 25);
        let tx: StateCode = "TX".parse().unwrap();
        let oh: StateCode = "OH".parse().unwrap();
        let me: StateCode = "ME".parse().unwrap();
        let ia: StateCode = "IA".parse().unwrap();
        assert_eq!(s.get(tx).unwrap().control_share, 40.0 / 60.0);
        assert_eq!(s.get(oh).unwrap().control_share, 15.0 / 60.0);
        assert_eq!(s.get(me).unwrap().control_share, 1.0);
        assert!(s.get(ia).is_none());
        assert_eq!(s.excluded[&ia], (10, 10));
        assert_eq!(s.shares.len(), 3);
        assert_eq!(s.excluded.len(), 48);
    }

    #[test]
    fn small_state_share() {
        let (labels, geo) = geo_fixture();
        let s = state_stance_proportion(&labels, &geo, 1);
        assert_eq!(s.get("IA".parse().unwrap()).unwrap().control_share, 0.5);
        assert!(s.get("CA".parse().unwrap()).is_none());
    }

    #[test]
    fn stance_distribution_weights_by_tokens() {
        let a = [1.0, 0.0];
        let b = [0.0, 1.0];
        let d = stance_topic_distribution([(1, &a[..]), (3, &b[..])], Weighting::Tokens).unwrap();
        assert_eq!(d, vec![0.25, 0.75]);
        let d = stance_topic_distribution([(1, &a[..]), (3, &b[..])], Weighting::Uniform).unwrap();
        assert_eq!(d, vec![0.5, 0.5]);
        let d = stance_topic_distribution([(7, &[0.2, 0.8][..])], Weighting::Tokens).unwrap();
        assert_eq!(d, vec![0.2, 0.8]);
        assert!(stance_topic_distribution(std::iter::empty(), Weighting::Tokens).is_err());
    }

    #[test]
    fn top_topics_renormalise() {
        let p = top_topics(&[0.5, 0.3, 0.2], 2).unwrap();
        assert_eq!(p.topic_ids, vec![0, 1]);
        assert!((p.proportions[0] - 0.625).abs() < 1e-15);
        assert!((p.proportions[1] - 0.375).abs() < 1e-15);
        let full = top_topics(&[0.2, 0.5, 0.3], 3).unwrap();
        assert_eq!(full.topic_ids, vec![1, 2, 0]);
        assert!(top_topics(&[1.0], 2).is_err());
        let tie = top_topics(&[0.25, 0.25, 0.5], 2).unwrap();
        assert_eq!(tie.topic_ids, vec![2, 0]);
    }

    #[test]
    fn event_window_is_seven_days() {
        let e = EventWindow::new("x", day("2013-04-17"));
        let n = (0..30)
            .map(|i| day("2013-04-01") + Days::new(i))
            .filter(|d| e.contains(*d))
            .count();
        assert_eq!(n, 7);
        assert!(e.contains(day("2013-04-14")) && e.contains(day("2013-04-20")));
    }

    #[test]
    fn event_profiles() {
        let thetas = [[0.6, 0.3, 0.1], [0.1, 0.2, 0.7]];
        let docs = [
            (day("2013-04-16"), 10usize, &thetas[0][..]),
            (day("2013-06-01"), 10, &thetas[1][..]),
        ];
        let ids = [0, 1];
        let e = EventWindow::new("vote", day("2013-04-17"));
        let (p, w) = event_topic_profile(&e, &ids, docs, Weighting::Tokens).unwrap();
        assert!(w.is_none());
        assert!((p.proportions[0] - 2.0 / 3.0).abs() < 1e-12);
        let far = EventWindow::new("none", day("2012-01-01"));
        let (p, w) = event_topic_profile(&far, &ids, docs, Weighting::Tokens).unwrap();
        assert!(p.is_empty() && w.is_some());
    }

    #[test]
    fn events_file() {
        let src = "# events\n2013-04-17\tSenate vote\n\n2013-09-16\tNavy Yard\n";
        let ev = read_events(src.as_bytes(), "events").unwrap();
        assert_eq!(ev.len(), 2);
        assert_eq!(ev[1].name, "Navy Yard");
        let err = read_events("2013-04-17 nope\n".as_bytes(), "events").unwrap_err();
        assert!(err.to_string().contains("events:1"), "{err}");
    }

    proptest! {
        #[test]
        fn profiles_sum_to_one(dist in prop::collection::vec(0.001f64..1.0, 1..30), n in 1usize..30) {
            let n = n.min(dist.len());
            let p = top_topics(&dist, n).unwrap();
            prop_assert!((p.proportions.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.proportions.iter().all(|&x| x >= 0.0));
        }

        #[test]
        fn trailing_zeros_do_not_change_spikes(
            counts in prop::collection::vec(0u64..50, 9..40),
            extra in 1usize..10,
        ) {
            let base = spike_indices(&counts, 8, 2.0);
            let mut longer = counts.clone();
            longer.extend(std::iter::repeat_n(0, extra));
            let ext = spike_indices(&longer, 8, 2.0);
            prop_assert_eq!(base, ext);
        }

        #[test]
        fn weekly_totals_are_conserved(days in prop::collection::vec((0u64..380, 0u8..3), 0..200)) {
            let mut store = CorpusStore::default();
            for (i, (offset, tag)) in days.iter().enumerate() {
                let d = day("2012-12-16") + Days::new(*offset);
                let text = ["#gunsense", "#gunrights", "plain"][*tag as usize];
                store.append(tweet(i as u64, &d.to_string(), text));
            }
            let labels = label_corpus(&store, &HashtagLexicon::default());
            for g in [Granularity::Day, Granularity::Week] {
                let s = aggregate_counts(&store, &labels, g, &CollectionWindow::default());
                let t = s.totals();
                prop_assert_eq!(t.control, labels.summary.control as u64);
                prop_assert_eq!(t.rights, labels.summary.rights as u64);
                prop_assert_eq!(t.overall, store.len() as u64);
            }
        }
    }
}

//! Hashtag-majority stance labeling.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use crate::corpus::{CorpusStore, Tweet};
use crate::error::{Error, Result};

pub const DEFAULT_CONTROL_TAGS: [&str; 11] = [
    "gunsense",
    "gunsensepatriot",
    "votegunsense",
    "guncontrolnow",
    "momsdemandaction",
    "momsdemand",
    "demandaplan",
    "nowaynra",
    "gunskillpeople",
    "gunviolence",
    "endgunviolence",
];

pub const DEFAULT_RIGHTS_TAGS: [&str; 11] = [
    "gunrights",
    "protect2a",
    "molonlabe",
    "molonlab",
    "noguncontrol",
    "progun",
    "nogunregistry",
    "votegunrights",
    "firearmrights",
    "gungrab",
    "gunfriendly",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StanceLabel {
    Control,
    Rights,
    Unlabeled,
}

impl StanceLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            StanceLabel::Control => "Control",
            StanceLabel::Rights => "Rights",
            StanceLabel::Unlabeled => "Unlabeled",
        }
    }

    pub fn is_labeled(self) -> bool {
        self != StanceLabel::Unlabeled
    }
}

impl fmt::Display for StanceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StanceLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "control" => Ok(StanceLabel::Control),
            "rights" => Ok(StanceLabel::Rights),
            "unlabeled" => Ok(StanceLabel::Unlabeled),
            _ => Err(Error::argument(format!("unknown stance label {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashtagLexicon {
    control: HashSet<String>,
    rights: HashSet<String>,
}

fn normalize_tag(tag: &str) -> String {
    tag.trim().trim_start_matches('#').to_lowercase()
}

impl HashtagLexicon {
    pub fn new<C, R, S, T>(control: C, rights: R) -> Result<Self>
    where
        C: IntoIterator<Item = S>,
        R: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let control: HashSet<String> = control
            .into_iter()
            .map(|t| normalize_tag(t.as_ref()))
            .filter(|t| !t.is_empty())
            .collect();
        let rights: HashSet<String> = rights
            .into_iter()
            .map(|t| normalize_tag(t.as_ref()))
            .filter(|t| !t.is_empty())
            .collect();
        if let Some(both) = control.intersection(&rights).next() {
            return Err(Error::argument(format!(
                "tag #{both} appears in both control and rights lists"
            )));
        }
        Ok(HashtagLexicon { control, rights })
    }

    pub fn control_tags(&self) -> &HashSet<String> {
        &self.control
    }

    pub fn rights_tags(&self) -> &HashSet<String> {
        &self.rights
    }

    /// Parses a `[control]` / `[rights]` sectioned tag list.
    pub fn parse<R: BufRead>(reader: R, origin: &str) -> Result<Self> {
        let mut control = Vec::new();
        let mut rights = Vec::new();
        let mut section: Option<&mut Vec<String>> = None;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with("//") || line.starts_with(';') {
                continue;
            }
            match line.to_ascii_lowercase().as_str() {
                "[control]" => section = Some(&mut control),
                "[rights]" => section = Some(&mut rights),
                s if s.starts_with('[') => {
                    return Err(Error::parse(origin, lineno + 1, format!("unknown section {line}")))
                }
                _ => match section.as_deref_mut() {
                    Some(tags) => tags.push(line.to_owned()),
                    None => {
                        return Err(Error::parse(
                            origin,
                            lineno + 1,
                            "tag outside of a [control] or [rights] section",
                        ))
                    }
                },
            }
        }
        HashtagLexicon::new(control, rights)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(Error::at(path))?;
        Self::parse(bytes.as_slice(), &path.display().to_string())
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        let mut control: Vec<&String> = self.control.iter().collect();
        let mut rights: Vec<&String> = self.rights.iter().collect();
        control.sort();
        rights.sort();
        writeln!(out, "[control]")?;
        for t in control {
            writeln!(out, "#{t}")?;
        }
        writeln!(out, "\n[rights]")?;
        for t in rights {
            writeln!(out, "#{t}")?;
        }
        Ok(())
    }

    /// Strict majority of lexicon hits, counted with multiplicity; ties and
    /// no hits are unlabeled.
    pub fn label_tags<S: AsRef<str>>(&self, hashtags: &[S]) -> StanceLabel {
        let (mut c, mut r) = (0usize, 0usize);
        for tag in hashtags {
            let tag = tag.as_ref();
            if self.control.contains(tag) {
                c += 1;
            } else if self.rights.contains(tag) {
                r += 1;
            }
        }
        match c.cmp(&r) {
            std::cmp::Ordering::Greater => StanceLabel::Control,
            std::cmp::Ordering::Less => StanceLabel::Rights,
            std::cmp::Ordering::Equal => StanceLabel::Unlabeled,
        }
    }
}

impl Default for HashtagLexicon {
    fn default() -> Self {
        HashtagLexicon::new(DEFAULT_CONTROL_TAGS, DEFAULT_RIGHTS_TAGS)
            .expect("default lexicons are disjoint")
    }
}

pub fn label(tweet: &Tweet, lexicon: &HashtagLexicon) -> StanceLabel {
    lexicon.label_tags(&tweet.hashtags)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelSummary {
    pub control: usize,
    pub rights: usize,
    pub unlabeled: usize,
}

impl LabelSummary {
    pub fn total(&self) -> usize {
        self.control + self.rights + self.unlabeled
    }

    pub fn labeled_fraction(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => (self.control + self.rights) as f64 / n as f64,
        }
    }

    fn add(&mut self, l: StanceLabel) {
        match l {
            StanceLabel::Control => self.control += 1,
            StanceLabel::Rights => self.rights += 1,
            StanceLabel::Unlabeled => self.unlabeled += 1,
        }
    }
}

/// Per-tweet labels keyed by id, plus totals.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusLabels {
    pub labels: BTreeMap<u64, StanceLabel>,
    pub summary: LabelSummary,
}

impl CorpusLabels {
    pub fn get(&self, id: u64) -> StanceLabel {
        self.labels.get(&id).copied().unwrap_or(StanceLabel::Unlabeled)
    }

    /// `tweet_id<TAB>label` in store order.
    pub fn write_tsv<'a, W: Write>(
        &self,
        mut out: W,
        order: impl IntoIterator<Item = &'a Tweet>,
    ) -> Result<()> {
        writeln!(out, "tweet_id\tlabel")?;
        for t in order {
            writeln!(out, "{}\t{}", t.id, self.get(t.id))?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(reader: R, origin: &str) -> Result<Self> {
        let mut out = CorpusLabels::default();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() || line.starts_with('#') || line == "tweet_id\tlabel" {
                continue;
            }
            let (id, lab) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(origin, lineno + 1, "expected tweet_id<TAB>label"))?;
            let id: u64 = id
                .parse()
                .map_err(|_| Error::parse(origin, lineno + 1, "bad tweet id"))?;
            let lab: StanceLabel = lab
                .parse()
                .map_err(|e: Error| Error::parse(origin, lineno + 1, e.to_string()))?;
            out.summary.add(lab);
            out.labels.insert(id, lab);
        }
        Ok(out)
    }
}

pub fn label_corpus(store: &CorpusStore, lexicon: &HashtagLexicon) -> CorpusLabels {
    let mut out = CorpusLabels::default();
    for t in store {
        let l = label(t, lexicon);
        out.summary.add(l);
        out.labels.insert(t.id, l);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    fn tags(t: &[&str]) -> Vec<String> {
        t.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn default_lexicon_shape() {
        let lex = HashtagLexicon::default();
        assert_eq!(lex.control_tags().len(), 11);
        assert_eq!(lex.rights_tags().len(), 11);
        assert!(lex.control_tags().is_disjoint(lex.rights_tags()));
    }

    #[test]
    fn majority_rule() {
        let lex = HashtagLexicon::default();
        assert_eq!(lex.label_tags(&tags(&["guncontrolnow"])), StanceLabel::Control);
        assert_eq!(lex.label_tags(&tags(&["gunrights", "demandaplan"])), StanceLabel::Unlabeled);
        assert_eq!(
            lex.label_tags(&tags(&["gunrights", "protect2a", "demandaplan"])),
            StanceLabel::Rights
        );
        assert_eq!(
            lex.label_tags(&tags(&["molonlabe", "molonlabe", "guncontrolnow"])),
            StanceLabel::Rights
        );
        assert_eq!(lex.label_tags::<String>(&[]), StanceLabel::Unlabeled);
        assert_eq!(lex.label_tags(&tags(&["molonla"])), StanceLabel::Unlabeled);
    }

    #[test]
    fn lexicon_file_round_trip() {
        let lex = HashtagLexicon::default();
        let mut buf = Vec::new();
        lex.write(&mut buf).unwrap();
        assert_eq!(HashtagLexicon::parse(buf.as_slice(), "mem").unwrap(), lex);
    }

    #[test]
    fn lexicon_file_errors() {
        let err = HashtagLexicon::parse("#x\n".as_bytes(), "lex").unwrap_err();
        assert!(err.to_string().starts_with("lex:1:"));
        assert!(HashtagLexicon::parse("[control]\n#a\n[rights]\n#A\n".as_bytes(), "lex").is_err());
        assert!(HashtagLexicon::parse("[stance]\n".as_bytes(), "lex").is_err());
    }

    #[test]
    fn corpus_counts() {
        let lex = HashtagLexicon::default();
        assert_eq!(label_corpus(&CorpusStore::new(), &lex).summary, LabelSummary::default());

        let mut store = CorpusStore::new();
        let at = Utc.with_ymd_and_hms(2013, 2, 1, 0, 0, 0).unwrap();
        for i in 0..1000u64 {
            let text = match i % 10 {
                0..=5 => "guns #GunSense",
                6..=8 => "guns #protect2a",
                _ => "guns",
            };
            store.append(Tweet::new(i, at, text, None));
        }
        let labels = label_corpus(&store, &lex);
        assert_eq!(
            labels.summary,
            LabelSummary {
                control: 600,
                rights: 300,
                unlabeled: 100
            }
        );
        assert!((labels.summary.labeled_fraction() - 0.9).abs() < 1e-12);

        let mut buf = Vec::new();
        labels.write_tsv(&mut buf, &store).unwrap();
        let back = CorpusLabels::read_tsv(buf.as_slice(), "labels").unwrap();
        assert_eq!(back, labels);
    }

    fn arb_tag() -> impl Strategy<Value = String> {
        prop_oneof![
            proptest::sample::select(DEFAULT_CONTROL_TAGS.to_vec()).prop_map(String::from),
            proptest::sample::select(DEFAULT_RIGHTS_TAGS.to_vec()).prop_map(String::from),
            "[a-z]{3,8}",
        ]
    }

    proptest! {
        #[test]
        fn order_invariant(mut t in proptest::collection::vec(arb_tag(), 0..10), seed in any::<u64>()) {
            let lex = HashtagLexicon::default();
            let before = lex.label_tags(&t);
            let n = t.len().max(1);
            t.rotate_left((seed as usize) % n);
            t.reverse();
            prop_assert_eq!(before, lex.label_tags(&t));
        }

        #[test]
        fn adding_control_keeps_control(t in proptest::collection::vec(arb_tag(), 0..10), extra in proptest::sample::select(DEFAULT_CONTROL_TAGS.to_vec())) {
            let lex = HashtagLexicon::default();
            if lex.label_tags(&t) == StanceLabel::Control {
                let mut more = t.clone();
                more.push(extra.to_owned());
                prop_assert_eq!(lex.label_tags(&more), StanceLabel::Control);
            }
        }

        #[test]
        fn non_hashtag_text_is_ignored(words in "[a-z ]{0,30}") {
            let lex = HashtagLexicon::default();
            let at = Utc.with_ymd_and_hms(2013, 2, 1, 0, 0, 0).unwrap();
            let a = Tweet::new(1, at, format!("{words} #gunsense"), None);
            let b = Tweet::new(1, at, "#gunsense", None);
            prop_assert_eq!(label(&a, &lex), label(&b, &lex));
        }
    }
}

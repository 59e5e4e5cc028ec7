//! Tokenization, stopword filtering and vocabulary construction.
//!
//! Tokens are maximal runs of Unicode alphanumeric characters taken from the
//! lowercased text. Lowercasing happens before splitting so that case mappings
//! which expand into combining marks (e.g. `İ`) never leak a non-alphanumeric
//! character into a token.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Default cap on vocabulary size.
pub const DEFAULT_MAX_TYPES: usize = 40_000;

const ENGLISH_STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// Splits `text` into lowercase alphanumeric runs without any filtering.
pub fn raw_tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenSequence(pub Vec<String>);

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl From<Vec<String>> for TokenSequence {
    fn from(tokens: Vec<String>) -> Self {
        TokenSequence(tokens)
    }
}

impl<'a> From<&[&'a str]> for TokenSequence {
    fn from(tokens: &[&'a str]) -> Self {
        TokenSequence(tokens.iter().map(|s| (*s).to_owned()).collect())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopwordList {
    terms: HashSet<String>,
}

impl StopwordList {
    pub fn new<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        StopwordList {
            terms: terms
                .into_iter()
                .map(|t| t.as_ref().trim().to_lowercase())
                .filter(|t| !t.is_empty())
                .collect(),
        }
    }

    pub fn empty() -> Self {
        StopwordList::default()
    }

    /// English function words plus platform noise (`rt`, `via`, `amp`,
    /// URL fragments, the anonymised mention placeholder `user`).
    pub fn default_english() -> Self {
        Self::parse(ENGLISH_STOPWORDS.as_bytes()).expect("bundled stoplist is valid UTF-8")
    }

    /// One term per line; blank lines and `#` comments are ignored.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut terms = Vec::new();
        for line in reader.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            terms.push(line.to_owned());
        }
        Ok(StopwordList::new(terms))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(Error::at(path))?;
        Self::parse(bytes.as_slice())
    }

    pub fn contains(&self, token: &str) -> bool {
        self.terms.contains(token)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

pub fn tokenize(text: &str, stopwords: &StopwordList) -> TokenSequence {
    let mut tokens = raw_tokens(text);
    tokens.retain(|t| !stopwords.contains(t));
    TokenSequence(tokens)
}

/// Dense term ids ordered by descending corpus frequency, ties broken
/// lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    term_to_id: HashMap<String, u32>,
    id_to_term: Vec<String>,
    frequencies: Vec<u64>,
}

impl Vocabulary {
    pub fn build<'a, I>(docs: I, max_types: usize) -> Result<Self>
    where
        I: IntoIterator<Item = &'a TokenSequence>,
    {
        if max_types < 1 {
            return Err(Error::argument("max_types must be at least 1"));
        }
        let mut counts: HashMap<&str, u64> = HashMap::new();
        let mut n_docs = 0usize;
        for doc in docs {
            n_docs += 1;
            for tok in doc.iter() {
                *counts.entry(tok).or_insert(0) += 1;
            }
        }
        if n_docs == 0 {
            return Err(Error::argument("cannot build a vocabulary from zero documents"));
        }
        let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
        ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(max_types);
        Ok(Self::from_ranked(
            ranked.into_iter().map(|(t, c)| (t.to_owned(), c)).collect(),
        ))
    }

    fn from_ranked(entries: Vec<(String, u64)>) -> Self {
        let mut term_to_id = HashMap::with_capacity(entries.len());
        let mut id_to_term = Vec::with_capacity(entries.len());
        let mut frequencies = Vec::with_capacity(entries.len());
        for (id, (term, freq)) in entries.into_iter().enumerate() {
            term_to_id.insert(term.clone(), id as u32);
            id_to_term.push(term);
            frequencies.push(freq);
        }
        Vocabulary {
            term_to_id,
            id_to_term,
            frequencies,
        }
    }

    pub fn len(&self) -> usize {
        self.id_to_term.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_term.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.term_to_id.get(term).copied()
    }

    pub fn term(&self, id: u32) -> Option<&str> {
        self.id_to_term.get(id as usize).map(String::as_str)
    }

    pub fn frequency(&self, id: u32) -> Option<u64> {
        self.frequencies.get(id as usize).copied()
    }

    pub fn terms(&self) -> &[String] {
        &self.id_to_term
    }

    /// Drops out-of-vocabulary tokens, preserving order.
    pub fn encode(&self, doc: &TokenSequence) -> Vec<u32> {
        doc.iter().filter_map(|t| self.id(t)).collect()
    }

    pub fn decode(&self, ids: &[u32]) -> TokenSequence {
        TokenSequence(
            ids.iter()
                .filter_map(|&id| self.term(id).map(str::to_owned))
                .collect(),
        )
    }

    /// Stable fingerprint of the id→term mapping, used to check that a model
    /// file and a vocabulary file belong together.
    pub fn fingerprint(&self) -> u64 {
        let mut hasher = Sha256::new();
        for term in &self.id_to_term {
            hasher.update(term.as_bytes());
            hasher.update([0u8]);
        }
        let digest = hasher.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("sha256 is 32 bytes"))
    }

    /// `id<TAB>term<TAB>frequency`, one line per type.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "id\tterm\tfrequency")?;
        for (id, (term, freq)) in self.id_to_term.iter().zip(&self.frequencies).enumerate() {
            writeln!(out, "{id}\t{term}\t{freq}")?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(reader: R, origin: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() || line.starts_with('#') || line == "id\tterm\tfrequency" {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(origin, lineno + 1, "expected id<TAB>term<TAB>frequency"));
            }
            let id: usize = fields[0]
                .parse()
                .map_err(|_| Error::parse(origin, lineno + 1, "bad id"))?;
            if id != entries.len() {
                return Err(Error::parse(origin, lineno + 1, "ids must be dense and ordered"));
            }
            let freq: u64 = fields[2]
                .parse()
                .map_err(|_| Error::parse(origin, lineno + 1, "bad frequency"))?;
            entries.push((fields[1].to_owned(), freq));
        }
        Ok(Self::from_ranked(entries))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(Error::at(path))?;
        Self::read_tsv(bytes.as_slice(), &path.display().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(tokens: &[&str]) -> TokenSequence {
        TokenSequence::from(tokens)
    }

    #[test]
    fn splits_and_drops_stopwords() {
        let stop = StopwordList::new(["now"]);
        assert_eq!(tokenize("Gun-control NOW!!", &stop), seq(&["gun", "control"]));
        assert!(tokenize("", &stop).is_empty());
    }

    #[test]
    fn default_stoplist_handles_retweet_boilerplate() {
        let stop = StopwordList::default_english();
        for t in ["rt", "user", "http", "https", "t", "co", "via", "amp", "the"] {
            assert!(stop.contains(t), "{t} should be stoplisted");
        }
        assert_eq!(
            tokenize("RT @user: 2nd amendment http://t.co/x", &stop),
            seq(&["2nd", "amendment", "x"])
        );
    }

    #[test]
    fn stoplist_file_ignores_comments() {
        let stop = StopwordList::parse("# header\nfoo\n\n  Bar \n#baz\n".as_bytes()).unwrap();
        assert!(stop.contains("foo"));
        assert!(stop.contains("bar"));
        assert!(!stop.contains("baz"));
        assert_eq!(stop.len(), 2);
    }

    #[test]
    fn non_ascii_words_survive() {
        let toks = tokenize("Übermäßig größer, 東京!", &StopwordList::empty());
        assert_eq!(toks, seq(&["übermäßig", "größer", "東京"]));
    }

    #[test]
    fn vocabulary_top_one() {
        let v = Vocabulary::build([&seq(&["a", "b", "a"])], 1).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.id("a"), Some(0));
        assert_eq!(v.frequency(0), Some(2));
    }

    #[test]
    fn vocabulary_tie_keeps_lexicographically_smaller() {
        let v = Vocabulary::build([&seq(&["zeta", "alpha"])], 1).unwrap();
        assert_eq!(v.terms(), ["alpha".to_owned()]);
    }

    #[test]
    fn vocabulary_rejects_bad_arguments() {
        assert!(Vocabulary::build([&seq(&["a"])], 0).is_err());
        assert!(Vocabulary::build(std::iter::empty(), 5).is_err());
    }

    #[test]
    fn zipf_cap_retains_highest_counts() {
        // 50,000 types; type i occurs floor(1e6 / (i+1)) + 1 times.
        let n_types = 50_000usize;
        let counts: Vec<u64> = (0..n_types).map(|i| 1_000_000 / (i as u64 + 1) + 1).collect();
        let names: Vec<String> = (0..n_types).map(|i| format!("w{i:05}")).collect();
        // Build per-type documents to keep memory bounded.
        let docs: Vec<TokenSequence> = names
            .iter()
            .zip(&counts)
            .map(|(n, &c)| TokenSequence(vec![n.clone(); c.min(64) as usize]))
            .collect();
        let clipped: Vec<u64> = counts.iter().map(|&c| c.min(64)).collect();
        let v = Vocabulary::build(&docs, 40_000).unwrap();
        assert_eq!(v.len(), 40_000);

        // Sort oracle over (count desc, name asc).
        let mut oracle: Vec<(u64, &str)> = clipped
            .iter()
            .zip(&names)
            .map(|(&c, n)| (c, n.as_str()))
            .collect();
        oracle.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(b.1)));
        let expected: HashSet<&str> = oracle[..40_000].iter().map(|e| e.1).collect();
        let got: HashSet<&str> = v.terms().iter().map(String::as_str).collect();
        assert_eq!(got, expected);
        for (id, (c, n)) in oracle[..40_000].iter().enumerate() {
            assert_eq!(v.term(id as u32), Some(*n));
            assert_eq!(v.frequency(id as u32), Some(*c));
        }
    }

    #[test]
    fn encode_drops_oov() {
        let v = Vocabulary::build([&seq(&["gun"])], 10).unwrap();
        assert_eq!(v.encode(&seq(&["gun", "zzz_unknown"])), vec![0]);
        assert!(v.encode(&seq(&[])).is_empty());
    }

    #[test]
    fn vocabulary_tsv_round_trip() {
        let v = Vocabulary::build([&seq(&["b", "a", "b", "c"])], 10).unwrap();
        let mut buf = Vec::new();
        v.write_tsv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "id\tterm\tfrequency\n0\tb\t2\n1\ta\t1\n2\tc\t1\n");
        let back = Vocabulary::read_tsv(buf.as_slice(), "mem").unwrap();
        assert_eq!(back, v);
        assert_eq!(back.fingerprint(), v.fingerprint());
    }

    #[test]
    fn vocabulary_tsv_reports_line() {
        let err = Vocabulary::read_tsv("0\ta\t1\n1\tb\n".as_bytes(), "v.tsv").unwrap_err();
        assert!(err.to_string().starts_with("v.tsv:2:"), "{err}");
    }

    proptest! {
        #[test]
        fn tokens_are_alphanumeric(text in "\\PC{0,64}") {
            for tok in tokenize(&text, &StopwordList::empty()).iter() {
                prop_assert!(!tok.is_empty());
                prop_assert!(tok.chars().all(char::is_alphanumeric), "{:?}", tok);
            }
        }

        #[test]
        fn vocabulary_is_ranked(words in proptest::collection::vec("[a-e]{1,2}", 1..60), cap in 1usize..10) {
            let doc = TokenSequence(words);
            let v = Vocabulary::build([&doc], cap).unwrap();
            prop_assert!(v.len() <= cap);
            for i in 1..v.len() as u32 {
                let (fa, fb) = (v.frequency(i - 1).unwrap(), v.frequency(i).unwrap());
                prop_assert!(fa > fb || (fa == fb && v.term(i - 1) < v.term(i)));
            }
        }

        #[test]
        fn decode_inverts_encode(words in proptest::collection::vec("[a-h]", 0..40)) {
            let doc = TokenSequence(words);
            let v = Vocabulary::build([&doc, &TokenSequence(vec!["a".into()])], 4).unwrap();
            let kept: Vec<String> = doc.0.iter().filter(|t| v.id(t).is_some()).cloned().collect();
            prop_assert_eq!(v.decode(&v.encode(&doc)).0, kept);
        }
    }
}

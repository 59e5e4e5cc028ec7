//! Precision-first resolution of free-text profile locations to US states.
//!
//! Matching walks the location left to right and takes the longest alias
//! starting at each token. Ambiguous aliases consume their tokens but do not
//! vote. A state is returned only when every vote agrees.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use crate::corpus::CorpusStore;
use crate::error::{Error, Result};

const BUILTIN_GAZETTEER: &str = include_str!("../data/gazetteer.tsv");
const BUILTIN_AMBIGUOUS: &str = include_str!("../data/ambiguous.txt");

/// Bare uppercase tokens that are also common English words.
const BARE_EXCLUDED: [&str; 4] = ["in", "me", "or", "hi"];

const STATES: [(&str, &str); 51] = [
    ("AL", "Alabama"),
    ("AK", "Alaska"),
    ("AZ", "Arizona"),
    ("AR", "Arkansas"),
    ("CA", "California"),
    ("CO", "Colorado"),
    ("CT", "Connecticut"),
    ("DE", "Delaware"),
    ("DC", "District of Columbia"),
    ("FL", "Florida"),
    ("GA", "Georgia"),
    ("HI", "Hawaii"),
    ("ID", "Idaho"),
    ("IL", "Illinois"),
    ("IN", "Indiana"),
    ("IA", "Iowa"),
    ("KS", "Kansas"),
    ("KY", "Kentucky"),
    ("LA", "Louisiana"),
    ("ME", "Maine"),
    ("MD", "Maryland"),
    ("MA", "Massachusetts"),
    ("MI", "Michigan"),
    ("MN", "Minnesota"),
    ("MS", "Mississippi"),
    ("MO", "Missouri"),
    ("MT", "Montana"),
    ("NE", "Nebraska"),
    ("NV", "Nevada"),
    ("NH", "New Hampshire"),
    ("NJ", "New Jersey"),
    ("NM", "New Mexico"),
    ("NY", "New York"),
    ("NC", "North Carolina"),
    ("ND", "North Dakota"),
    ("OH", "Ohio"),
    ("OK", "Oklahoma"),
    ("OR", "Oregon"),
    ("PA", "Pennsylvania"),
    ("RI", "Rhode Island"),
    ("SC", "South Carolina"),
    ("SD", "South Dakota"),
    ("TN", "Tennessee"),
    ("TX", "Texas"),
    ("UT", "Utah"),
    ("VT", "Vermont"),
    ("VA", "Virginia"),
    ("WA", "Washington"),
    ("WV", "West Virginia"),
    ("WI", "Wisconsin"),
    ("WY", "Wyoming"),
];

/// USPS code of one of the 50 states or DC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateCode(u8);

impl StateCode {
    pub fn all() -> impl Iterator<Item = StateCode> {
        (0..STATES.len() as u8).map(StateCode)
    }

    pub fn code(self) -> &'static str {
        STATES[self.0 as usize].0
    }

    pub fn name(self) -> &'static str {
        STATES[self.0 as usize].1
    }

    /// Accepts a two-letter code or a full state name, case-insensitively.
    pub fn from_name_or_code(s: &str) -> Option<StateCode> {
        let s = s.trim();
        STATES
            .iter()
            .position(|(c, n)| c.eq_ignore_ascii_case(s) || n.eq_ignore_ascii_case(s))
            .map(|i| StateCode(i as u8))
    }
}

impl fmt::Display for StateCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for StateCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        STATES
            .iter()
            .position(|(c, _)| c.eq_ignore_ascii_case(s.trim()))
            .map(|i| StateCode(i as u8))
            .ok_or_else(|| Error::argument(format!("unknown state code {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AliasKind {
    State,
    Abbrev,
    City,
}

impl FromStr for AliasKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "state" => Ok(AliasKind::State),
            "abbrev" => Ok(AliasKind::Abbrev),
            "city" => Ok(AliasKind::City),
            _ => Err(Error::argument(format!("unknown alias kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Gazetteer {
    alias_to_state: HashMap<String, (StateCode, AliasKind)>,
    ambiguous: HashSet<String>,
    max_words: usize,
}

struct LocToken {
    norm: String,
    after_comma: bool,
    upper: bool,
}

fn location_tokens(raw: &str) -> Vec<LocToken> {
    let mut out = Vec::new();
    let mut pending_comma = false;
    let is_word = |c: char| c.is_alphanumeric() || c == '.' || c == '\'';
    let mut rest = raw;
    while !rest.is_empty() {
        let start = match rest.find(is_word) {
            Some(s) => s,
            None => break,
        };
        if rest[..start].contains(',') {
            pending_comma = true;
        }
        rest = &rest[start..];
        let end = rest.find(|c: char| !is_word(c)).unwrap_or(rest.len());
        let word = &rest[..end];
        rest = &rest[end..];
        let norm: String = word
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        if norm.is_empty() {
            continue;
        }
        let upper = word.chars().any(char::is_alphabetic)
            && word.chars().filter(|c| c.is_alphabetic()).all(char::is_uppercase);
        out.push(LocToken {
            norm,
            after_comma: pending_comma,
            upper,
        });
        pending_comma = false;
    }
    out
}

impl Gazetteer {
    /// Builds from `alias<TAB>state<TAB>kind` rows and an extra list of
    /// aliases to withhold. Aliases listed under more than one state are
    /// withheld automatically.
    pub fn from_tables<R1: BufRead, R2: BufRead>(
        table: R1,
        table_origin: &str,
        ambiguity: R2,
    ) -> Result<Self> {
        let mut seen: HashMap<String, (StateCode, AliasKind)> = HashMap::new();
        let mut ambiguous: HashSet<String> = HashSet::new();
        for (lineno, line) in table.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(
                    table_origin,
                    lineno + 1,
                    "expected alias<TAB>state_code<TAB>kind",
                ));
            }
            let alias = normalize_alias(fields[0]);
            let state: StateCode = fields[1]
                .parse()
                .map_err(|e: Error| Error::parse(table_origin, lineno + 1, e.to_string()))?;
            let kind: AliasKind = fields[2]
                .trim()
                .parse()
                .map_err(|e: Error| Error::parse(table_origin, lineno + 1, e.to_string()))?;
            if alias.is_empty() {
                return Err(Error::parse(table_origin, lineno + 1, "empty alias"));
            }
            match seen.get(&alias) {
                Some((s, _)) if *s != state => {
                    ambiguous.insert(alias.clone());
                }
                _ => {
                    seen.insert(alias, (state, kind));
                }
            }
        }
        for line in ambiguity.lines() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            ambiguous.insert(normalize_alias(&line));
        }
        seen.retain(|a, _| !ambiguous.contains(a));
        let max_words = seen
            .keys()
            .chain(ambiguous.iter())
            .map(|a| a.split(' ').count())
            .max()
            .unwrap_or(1);
        Ok(Gazetteer {
            alias_to_state: seen,
            ambiguous,
            max_words,
        })
    }

    pub fn builtin() -> Self {
        Self::from_tables(
            BUILTIN_GAZETTEER.as_bytes(),
            "builtin gazetteer",
            BUILTIN_AMBIGUOUS.as_bytes(),
        )
        .expect("bundled gazetteer parses")
    }

    pub fn load(table: &Path, ambiguity: Option<&Path>) -> Result<Self> {
        let t = fs::read(table).map_err(Error::at(table))?;
        let a = match ambiguity {
            Some(p) => fs::read(p).map_err(Error::at(p))?,
            None => Vec::new(),
        };
        Self::from_tables(t.as_slice(), &table.display().to_string(), a.as_slice())
    }

    pub fn lookup(&self, alias: &str) -> Option<StateCode> {
        self.alias_to_state.get(alias).map(|(s, _)| *s)
    }

    pub fn is_ambiguous(&self, alias: &str) -> bool {
        self.ambiguous.contains(alias)
    }

    pub fn aliases(&self) -> impl Iterator<Item = &str> {
        self.alias_to_state.keys().map(String::as_str)
    }

    pub fn ambiguous_aliases(&self) -> impl Iterator<Item = &str> {
        self.ambiguous.iter().map(String::as_str)
    }

    pub fn resolve(&self, location: &str) -> Option<StateCode> {
        let tokens = location_tokens(location);
        let mut votes: Option<StateCode> = None;
        let mut i = 0;
        while i < tokens.len() {
            let mut advanced = false;
            for n in (1..=self.max_words.min(tokens.len() - i)).rev() {
                let phrase = tokens[i..i + n]
                    .iter()
                    .map(|t| t.norm.as_str())
                    .collect::<Vec<_>>()
                    .join(" ");
                if self.ambiguous.contains(&phrase) {
                    i += n;
                    advanced = true;
                    break;
                }
                if let Some(&(state, kind)) = self.alias_to_state.get(&phrase) {
                    if kind == AliasKind::Abbrev && !abbrev_qualifies(&tokens[i]) {
                        continue;
                    }
                    match votes {
                        Some(prev) if prev != state => return None,
                        _ => votes = Some(state),
                    }
                    i += n;
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                i += 1;
            }
        }
        votes
    }
}

fn abbrev_qualifies(tok: &LocToken) -> bool {
    tok.after_comma || (tok.upper && !BARE_EXCLUDED.contains(&tok.norm.as_str()))
}

fn normalize_alias(s: &str) -> String {
    location_tokens(s)
        .into_iter()
        .map(|t| t.norm)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn resolve_state(profile_location: Option<&str>, gaz: &Gazetteer) -> Option<StateCode> {
    profile_location.and_then(|l| gaz.resolve(l))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GeoAssignments {
    pub states: BTreeMap<u64, Option<StateCode>>,
    pub resolved: usize,
    pub total: usize,
}

impl GeoAssignments {
    pub fn coverage(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.resolved as f64 / self.total as f64
        }
    }

    pub fn get(&self, id: u64) -> Option<StateCode> {
        self.states.get(&id).copied().flatten()
    }

    /// `tweet_id<TAB>state`; the state column is empty when unresolved.
    pub fn write_tsv<W: Write>(&self, mut out: W, store: &CorpusStore) -> Result<()> {
        writeln!(out, "tweet_id\tstate")?;
        for t in store {
            match self.get(t.id) {
                Some(s) => writeln!(out, "{}\t{}", t.id, s)?,
                None => writeln!(out, "{}\t", t.id)?,
            }
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(reader: R, origin: &str) -> Result<Self> {
        let mut out = GeoAssignments::default();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() || line.starts_with('#') || line == "tweet_id\tstate" {
                continue;
            }
            let (id, state) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(origin, lineno + 1, "expected tweet_id<TAB>state"))?;
            let id: u64 = id
                .parse()
                .map_err(|_| Error::parse(origin, lineno + 1, "bad tweet id"))?;
            let state = if state.is_empty() {
                None
            } else {
                Some(
                    state
                        .parse::<StateCode>()
                        .map_err(|e| Error::parse(origin, lineno + 1, e.to_string()))?,
                )
            };
            out.total += 1;
            out.resolved += state.is_some() as usize;
            out.states.insert(id, state);
        }
        Ok(out)
    }
}

pub fn geocode_corpus(store: &CorpusStore, gaz: &Gazetteer) -> GeoAssignments {
    let mut out = GeoAssignments::default();
    for t in store {
        let s = resolve_state(t.profile_location.as_deref(), gaz);
        out.total += 1;
        out.resolved += s.is_some() as usize;
        out.states.insert(t.id, s);
    }
    out
}

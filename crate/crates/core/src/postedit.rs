//! Pre- and post-processing around translation: removal and restoration of
//! declarative sentence-final markers, and dictionary substitution of source
//! words the system passed through untranslated.

use std::collections::BTreeSet;
use std::fmt;

use crate::corpus_io::BilingualDictionary;
use crate::error::{Error, Result};

pub const DEFAULT_EOS_MARKERS: &[&str] = &["."];
pub const DANDA: &str = "\u{0964}";

/// Markers that are never stripped, whatever the configuration says.
const PROTECTED: &[&str] = &["?", "!"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EosRecord {
    pub sentence_index: usize,
    pub removed_marker: String,
}

impl EosRecord {
    /// `index<TAB>marker`.
    pub fn to_line(&self) -> String {
        format!("{}\t{}", self.sentence_index, self.removed_marker)
    }

    pub fn parse(line: &str) -> Result<Self> {
        let (i, m) = line
            .split_once('\t')
            .ok_or_else(|| Error::invalid(format!("expected index<TAB>marker, got {:?}", line)))?;
        let sentence_index = i
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad sentence index {:?}", i)))?;
        if m.is_empty() {
            return Err(Error::invalid("empty marker"));
        }
        Ok(EosRecord {
            sentence_index,
            removed_marker: m.to_owned(),
        })
    }
}

/// The set of declarative end-of-sentence markers to strip.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EosMarkers(BTreeSet<String>);

impl Default for EosMarkers {
    fn default() -> Self {
        EosMarkers(DEFAULT_EOS_MARKERS.iter().map(|s| s.to_string()).collect())
    }
}

impl EosMarkers {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(markers: I) -> Result<Self> {
        let set: BTreeSet<String> = markers.into_iter().map(Into::into).collect();
        if let Some(bad) = set.iter().find(|m| PROTECTED.contains(&m.as_str())) {
            return Err(Error::invalid(format!("{:?} is not a declarative marker", bad)));
        }
        if set.iter().any(|m| m.is_empty() || m.chars().any(char::is_whitespace)) {
            return Err(Error::invalid("markers must be single non-empty tokens"));
        }
        Ok(EosMarkers(set))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token) && !PROTECTED.contains(&token)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

/// Removes a final declarative marker. Sentences consisting of nothing but
/// the marker are left alone.
pub fn strip_eos(index: usize, tokens: &[String], markers: &EosMarkers) -> (Vec<String>, Option<EosRecord>) {
    match tokens.split_last() {
        Some((last, rest)) if !rest.is_empty() && markers.contains(last) => (
            rest.to_vec(),
            Some(EosRecord {
                sentence_index: index,
                removed_marker: last.clone(),
            }),
        ),
        _ => (tokens.to_vec(), None),
    }
}

pub fn restore_eos(tokens: &[String], record: Option<&EosRecord>) -> Vec<String> {
    let mut out = tokens.to_vec();
    if let Some(r) = record {
        out.push(r.removed_marker.clone());
    }
    out
}

/// Positions holding a source word absent from the target vocabulary.
pub fn detect_oov(output: &[String], target_vocab: &BTreeSet<String>, source_vocab: &BTreeSet<String>) -> Vec<usize> {
    output
        .iter()
        .enumerate()
        .filter(|(_, t)| !target_vocab.contains(*t) && source_vocab.contains(*t))
        .map(|(i, _)| i)
        .collect()
}

/// Candidate dictionary roots for a surface token, tried in order.
pub trait Lemmatizer {
    fn roots(&self, token: &str) -> Vec<String>;
}

/// Target-side rendering of a word the dictionary does not cover.
pub trait Transliterator {
    fn transliterate(&self, token: &str) -> Option<String>;
}

/// The token itself, then a few English inflection strippings.
#[derive(Clone, Copy, Debug, Default)]
pub struct SuffixLemmatizer;

impl Lemmatizer for SuffixLemmatizer {
    fn roots(&self, token: &str) -> Vec<String> {
        let mut out = vec![token.to_owned()];
        let lower = token.to_lowercase();
        let mut push = |s: String| {
            if s.chars().count() >= 2 && !out.contains(&s) {
                out.push(s);
            }
        };
        if let Some(stem) = lower.strip_suffix("ies") {
            push(format!("{}y", stem));
        }
        if let Some(stem) = lower.strip_suffix("es") {
            push(stem.to_owned());
        }
        if let Some(stem) = lower.strip_suffix('s') {
            if !stem.ends_with('s') {
                push(stem.to_owned());
            }
        }
        for suffix in ["ing", "ed"] {
            if let Some(stem) = lower.strip_suffix(suffix) {
                push(stem.to_owned());
                push(format!("{}e", stem));
                let mut chars = stem.chars().rev();
                if let (Some(a), Some(b)) = (chars.next(), chars.next()) {
                    if a == b {
                        push(stem[..stem.len() - a.len_utf8()].to_owned());
                    }
                }
            }
        }
        out
    }
}

/// Leaves every token untouched; plug in a real model for named entities.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoTransliteration;

impl Transliterator for NoTransliteration {
    fn transliterate(&self, _token: &str) -> Option<String> {
        None
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OovAction {
    Replaced(String),
    Transliterated(String),
    Kept,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OovEntry {
    pub position: usize,
    pub source_token: String,
    pub action: OovAction,
}

impl fmt::Display for OovEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.action {
            OovAction::Replaced(t) => write!(f, "{}\t{}\treplaced\t{}", self.position, self.source_token, t),
            OovAction::Transliterated(t) => {
                write!(f, "{}\t{}\ttransliterated\t{}", self.position, self.source_token, t)
            }
            OovAction::Kept => write!(f, "{}\t{}\tkept", self.position, self.source_token),
        }
    }
}

/// Actions taken on one sentence, by increasing position.
pub type OovReport = Vec<OovEntry>;

/// Replaces each flagged token by the preferred dictionary translation of
/// its first root found in the dictionary, falling back to transliteration
/// and otherwise keeping the token.
pub fn substitute_oov(
    output: &[String],
    positions: &[usize],
    dictionary: &BilingualDictionary,
    lemmatizer: &dyn Lemmatizer,
    transliterator: &dyn Transliterator,
) -> Result<(Vec<String>, OovReport)> {
    let mut sorted = positions.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if let Some(&p) = sorted.iter().find(|&&p| p >= output.len()) {
        return Err(Error::invalid(format!("position {} outside sentence of {}", p, output.len())));
    }

    let mut out = output.to_vec();
    let mut report = Vec::with_capacity(sorted.len());
    for p in sorted {
        let token = &output[p];
        let hit = lemmatizer
            .roots(token)
            .iter()
            .find_map(|root| dictionary.lookup(root).and_then(|t| t.first().cloned()));
        let action = match hit {
            Some(t) => OovAction::Replaced(t),
            None => match transliterator.transliterate(token) {
                Some(t) => OovAction::Transliterated(t),
                None => OovAction::Kept,
            },
        };
        match &action {
            OovAction::Replaced(t) | OovAction::Transliterated(t) => out[p] = t.clone(),
            OovAction::Kept => {}
        }
        report.push(OovEntry {
            position: p,
            source_token: token.clone(),
            action,
        });
    }
    Ok((out, report))
}

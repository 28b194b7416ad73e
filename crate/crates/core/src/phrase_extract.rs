//! Alignment-consistent phrase pairs, relative-frequency phrase tables and
//! lexicalized (mono/swap/discontinuous) orientation statistics.

use std::collections::BTreeMap;
use std::fmt;

use crate::corpus_io::{AlignmentSet, SentencePair};
use crate::error::{Error, Result};
use crate::parallel::ordered_map;

/// Inclusive token range `start..=end`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        assert!(start <= end, "empty span {}..{}", start, end);
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i <= self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhrasePair {
    pub src_span: Span,
    pub tgt_span: Span,
    pub src_tokens: Vec<String>,
    pub tgt_tokens: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExtractConfig {
    pub max_phrase_len: usize,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig { max_phrase_len: 7 }
    }
}

impl ExtractConfig {
    pub fn new(max_phrase_len: usize) -> Result<Self> {
        if max_phrase_len == 0 {
            return Err(Error::invalid("max_phrase_len must be at least 1"));
        }
        Ok(ExtractConfig { max_phrase_len })
    }
}

/// All consistent span rectangles of at most `max_len` tokens per side,
/// sorted by `(s1, s2, t1, t2)`.
///
/// A rectangle is consistent when it contains at least one link and no link
/// connects a word inside one span to a word outside the other. Unaligned
/// target words at the rectangle's edges may therefore be included.
pub fn extract_spans(alignment: &AlignmentSet, max_len: usize) -> Vec<(Span, Span)> {
    let (n, m) = (alignment.src_len(), alignment.tgt_len());
    let mut by_src = vec![Vec::new(); n];
    let mut by_tgt = vec![Vec::new(); m];
    for (s, t) in alignment.iter() {
        by_src[s].push(t);
        by_tgt[t].push(s);
    }

    let mut out = Vec::new();
    for s1 in 0..n {
        let mut tmin = usize::MAX;
        let mut tmax = 0;
        for s2 in s1..n.min(s1 + max_len) {
            for &t in &by_src[s2] {
                tmin = tmin.min(t);
                tmax = tmax.max(t);
            }
            if tmin == usize::MAX || tmax - tmin + 1 > max_len {
                continue;
            }
            let closed = (tmin..=tmax).all(|t| by_tgt[t].iter().all(|&s| s1 <= s && s <= s2));
            if !closed {
                continue;
            }
            let mut t1 = tmin;
            loop {
                let mut t2 = tmax;
                while t2 - t1 < max_len {
                    out.push((Span::new(s1, s2), Span::new(t1, t2)));
                    t2 += 1;
                    if t2 >= m || !by_tgt[t2].is_empty() {
                        break;
                    }
                }
                if t1 == 0 || !by_tgt[t1 - 1].is_empty() || tmax - (t1 - 1) >= max_len {
                    break;
                }
                t1 -= 1;
            }
        }
    }
    out.sort_unstable();
    out
}

pub fn extract_phrase_pairs(pair: &SentencePair, cfg: &ExtractConfig) -> Vec<PhrasePair> {
    let src = pair.source.tokens();
    let tgt = pair.target.tokens();
    extract_spans(&pair.alignment, cfg.max_phrase_len)
        .into_iter()
        .map(|(s, t)| PhrasePair {
            src_span: s,
            tgt_span: t,
            src_tokens: src[s.start..=s.end].to_vec(),
            tgt_tokens: tgt[t.start..=t.end].to_vec(),
        })
        .collect()
}

/// Jump width between consecutively translated source phrases; 0 when the
/// current phrase starts right after the previous one ends.
pub fn distortion(prev_src_end: usize, cur_src_start: usize) -> usize {
    (cur_src_start as i64 - (prev_src_end as i64 + 1)).unsigned_abs() as usize
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orientation {
    Mono,
    Swap,
    Discontinuous,
}

impl Orientation {
    fn index(self) -> usize {
        self as usize
    }
}

/// Orientation of a phrase with respect to the previous and the next
/// phrase in target order.
///
/// Previous: mono if a link sits at the top-left corner
/// `(src_start-1, tgt_start-1)`, swap if at `(src_end+1, tgt_start-1)`.
/// Next: mono at `(src_end+1, tgt_end+1)`, swap at `(src_start-1, tgt_end+1)`.
/// A phrase starting the target sentence is mono with respect to the
/// previous one, a phrase ending it mono with respect to the next one.
pub fn phrase_orientation(alignment: &AlignmentSet, src: Span, tgt: Span) -> (Orientation, Orientation) {
    let at = |s: Option<usize>, t: Option<usize>| match (s, t) {
        (Some(s), Some(t)) => alignment.contains(s, t),
        _ => false,
    };
    let before_src = src.start.checked_sub(1);
    let after_src = Some(src.end + 1);
    let before_tgt = tgt.start.checked_sub(1);
    let after_tgt = Some(tgt.end + 1);

    let prev = if tgt.start == 0 || at(before_src, before_tgt) {
        Orientation::Mono
    } else if at(after_src, before_tgt) {
        Orientation::Swap
    } else {
        Orientation::Discontinuous
    };
    let next = if tgt.end + 1 == alignment.tgt_len() || at(after_src, after_tgt) {
        Orientation::Mono
    } else if at(before_src, after_tgt) {
        Orientation::Swap
    } else {
        Orientation::Discontinuous
    };
    (prev, next)
}

/// Mono/swap/discontinuous counts in both directions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OrientationCounts {
    pub with_prev: [u64; 3],
    pub with_next: [u64; 3],
}

impl OrientationCounts {
    pub fn record(&mut self, prev: Orientation, next: Orientation) {
        self.with_prev[prev.index()] += 1;
        self.with_next[next.index()] += 1;
    }

    pub fn merge(&mut self, other: &OrientationCounts) {
        for k in 0..3 {
            self.with_prev[k] += other.with_prev[k];
            self.with_next[k] += other.with_next[k];
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhraseEntry {
    pub count: u64,
    pub p_tgt_given_src: f64,
    pub p_src_given_tgt: f64,
    pub orientation: OrientationCounts,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhraseTable {
    pub entries: BTreeMap<(Vec<String>, Vec<String>), PhraseEntry>,
}

impl PhraseTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, src: &[&str], tgt: &[&str]) -> Option<&PhraseEntry> {
        let key = (
            src.iter().map(|s| s.to_string()).collect(),
            tgt.iter().map(|s| s.to_string()).collect(),
        );
        self.entries.get(&key)
    }

    /// One line per entry,
    /// `src ||| tgt ||| p(t|s) p(s|t) ||| mp sp dp mn sn dn ||| count`,
    /// sorted lexicographically.
    pub fn to_lines(&self) -> Vec<String> {
        let mut lines: Vec<String> = self
            .entries
            .iter()
            .map(|((src, tgt), e)| {
                let o = &e.orientation;
                format!(
                    "{} ||| {} ||| {} {} ||| {} {} {} {} {} {} ||| {}",
                    src.join(" "),
                    tgt.join(" "),
                    e.p_tgt_given_src,
                    e.p_src_given_tgt,
                    o.with_prev[0],
                    o.with_prev[1],
                    o.with_prev[2],
                    o.with_next[0],
                    o.with_next[1],
                    o.with_next[2],
                    e.count
                )
            })
            .collect();
        lines.sort();
        lines
    }
}

type Counts = BTreeMap<(Vec<String>, Vec<String>), (u64, OrientationCounts)>;

fn count_pair(pair: &SentencePair, cfg: &ExtractConfig) -> Counts {
    let mut counts = Counts::new();
    for p in extract_phrase_pairs(pair, cfg) {
        let (prev, next) = phrase_orientation(&pair.alignment, p.src_span, p.tgt_span);
        let slot = counts.entry((p.src_tokens, p.tgt_tokens)).or_default();
        slot.0 += 1;
        slot.1.record(prev, next);
    }
    counts
}

/// Relative-frequency phrase table over a corpus.
pub fn estimate_phrase_table(pairs: &[SentencePair], cfg: &ExtractConfig, workers: usize) -> PhraseTable {
    let mut counts = Counts::new();
    for local in ordered_map(pairs, workers, |p| count_pair(p, cfg)) {
        for (key, (c, o)) in local {
            let slot = counts.entry(key).or_default();
            slot.0 += c;
            slot.1.merge(&o);
        }
    }

    let mut src_totals: BTreeMap<&[String], u64> = BTreeMap::new();
    let mut tgt_totals: BTreeMap<&[String], u64> = BTreeMap::new();
    for ((s, t), (c, _)) in &counts {
        *src_totals.entry(s).or_default() += c;
        *tgt_totals.entry(t).or_default() += c;
    }

    let entries = counts
        .iter()
        .map(|((s, t), (c, o))| {
            let entry = PhraseEntry {
                count: *c,
                p_tgt_given_src: *c as f64 / src_totals[s.as_slice()] as f64,
                p_src_given_tgt: *c as f64 / tgt_totals[t.as_slice()] as f64,
                orientation: *o,
            };
            ((s.clone(), t.clone()), entry)
        })
        .collect();
    PhraseTable { entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus_io::Sentence;

    fn set(n: usize, m: usize, pts: &[(usize, usize)]) -> AlignmentSet {
        AlignmentSet::new(n, m, pts.iter().copied()).unwrap()
    }

    fn spans(list: &[(usize, usize, usize, usize)]) -> Vec<(Span, Span)> {
        list.iter()
            .map(|&(a, b, c, d)| (Span::new(a, b), Span::new(c, d)))
            .collect()
    }

    fn pair(src: &str, tgt: &str, pts: &[(usize, usize)]) -> SentencePair {
        let s = Sentence::parse(src).unwrap();
        let t = Sentence::parse(tgt).unwrap();
        let a = set(s.len(), t.len(), pts);
        SentencePair::new(s, None, t, None, a, None).unwrap()
    }

    #[test]
    fn diagonal_two_by_two() {
        let got = extract_spans(&set(2, 2, &[(0, 0), (1, 1)]), 2);
        assert_eq!(got, spans(&[(0, 0, 0, 0), (0, 1, 0, 1), (1, 1, 1, 1)]));
    }

    #[test]
    fn crossing_three_by_three() {
        let got = extract_spans(&set(3, 3, &[(0, 0), (1, 2), (2, 1)]), 3);
        assert_eq!(
            got,
            spans(&[(0, 0, 0, 0), (0, 2, 0, 2), (1, 1, 2, 2), (1, 2, 1, 2), (2, 2, 1, 1)])
        );
    }

    #[test]
    fn empty_alignment_gives_nothing() {
        assert!(extract_spans(&set(3, 2, &[]), 3).is_empty());
    }

    #[test]
    fn unaligned_target_edges_extend() {
        // target word 1 unaligned
        let got = extract_spans(&set(2, 3, &[(0, 0), (1, 2)]), 3);
        assert_eq!(
            got,
            spans(&[(0, 0, 0, 0), (0, 0, 0, 1), (0, 1, 0, 2), (1, 1, 1, 2), (1, 1, 2, 2)])
        );
        // max length caps the extension
        let got = extract_spans(&set(2, 3, &[(0, 0), (1, 2)]), 1);
        assert_eq!(got, spans(&[(0, 0, 0, 0), (1, 1, 2, 2)]));
    }

    #[test]
    fn distortion_convention() {
        assert_eq!(distortion(1, 2), 0);
        assert_eq!(distortion(1, 5), 3);
        assert_eq!(distortion(4, 0), 5);
    }

    #[test]
    fn orientation_examples() {
        use Orientation::*;
        let a = set(2, 2, &[(0, 0), (1, 1)]);
        assert_eq!(phrase_orientation(&a, Span::new(1, 1), Span::new(1, 1)), (Mono, Mono));
        let a = set(2, 2, &[(0, 1), (1, 0)]);
        assert_eq!(phrase_orientation(&a, Span::new(0, 0), Span::new(1, 1)), (Swap, Mono));
        assert_eq!(phrase_orientation(&a, Span::new(1, 1), Span::new(0, 0)), (Mono, Swap));
        let a = set(3, 3, &[(0, 0), (1, 1), (2, 2)]);
        assert_eq!(phrase_orientation(&a, Span::new(0, 2), Span::new(0, 2)), (Mono, Mono));
        let a = set(4, 4, &[(0, 1), (1, 3), (2, 0), (3, 2)]);
        assert_eq!(
            phrase_orientation(&a, Span::new(0, 0), Span::new(1, 1)),
            (Discontinuous, Discontinuous)
        );
    }

    #[test]
    fn table_relative_frequencies() {
        let pairs = vec![
            pair("a", "x", &[(0, 0)]),
            pair("a", "x", &[(0, 0)]),
            pair("a", "x", &[(0, 0)]),
            pair("a", "y", &[(0, 0)]),
        ];
        let table = estimate_phrase_table(&pairs, &ExtractConfig::default(), 1);
        let ax = table.get(&["a"], &["x"]).unwrap();
        assert_eq!(ax.count, 3);
        assert_eq!(ax.p_tgt_given_src, 0.75);
        assert_eq!(ax.p_src_given_tgt, 1.0);
        assert_eq!(table.get(&["a"], &["y"]).unwrap().p_tgt_given_src, 0.25);
        assert!(estimate_phrase_table(&[], &ExtractConfig::default(), 1).is_empty());

        let single = estimate_phrase_table(&pairs[..1], &ExtractConfig::default(), 1);
        let e = single.get(&["a"], &["x"]).unwrap();
        assert_eq!((e.p_tgt_given_src, e.p_src_given_tgt), (1.0, 1.0));
        assert_eq!(e.orientation.with_prev, [1, 0, 0]);
    }

    #[test]
    fn table_lines_format() {
        let table = estimate_phrase_table(&[pair("a b", "y x", &[(0, 1), (1, 0)])], &ExtractConfig::default(), 1);
        assert_eq!(
            table.to_lines(),
            vec![
                "a b ||| y x ||| 1 1 ||| 1 0 0 1 0 0 ||| 1",
                "a ||| x ||| 1 1 ||| 0 1 0 1 0 0 ||| 1",
                "b ||| y ||| 1 1 ||| 1 0 0 0 1 0 ||| 1",
            ]
        );
    }

    #[test]
    fn zero_max_len_rejected() {
        assert!(ExtractConfig::new(0).is_err());
    }
}

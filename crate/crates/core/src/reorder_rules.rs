//! Head-local source reordering rules learned from dependency parses.
//!
//! A rule rewrites the local configuration of one head and its dependents.
//! Elements are written `POS&` for the head token and `POS~k` for the k-th
//! dependent subtree counted left to right, joined by `_`:
//!
//! ```text
//! IN~1_NN&_VB~2 ==> NN&_IN~1_VB~2
//! ```
//!
//! Learning projects every local unit (a dependent subtree, or the head token
//! alone) onto the target side through the word alignment, reads the target
//! order of the units off the projection, and counts how often each source
//! configuration is realised in each target order. Application walks the
//! tree from the root and permutes the units of each head whose configuration
//! has a sufficiently probable non-identity rule.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::corpus_io::{AlignmentSet, DepTree, Sentence, SentencePair, TaggedSentence};
use crate::error::{Error, Result};
use crate::parallel::ordered_map;

pub const DEFAULT_MIN_COUNT: u64 = 2;
pub const DEFAULT_MIN_PROB: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementKind {
    Head,
    /// 1-based slot among the dependent subtrees of the source side.
    Subtree(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RuleElement {
    pub pos: String,
    pub kind: ElementKind,
}

impl RuleElement {
    pub fn head(pos: &str) -> Self {
        RuleElement {
            pos: pos.to_owned(),
            kind: ElementKind::Head,
        }
    }

    pub fn subtree(pos: &str, slot: usize) -> Self {
        RuleElement {
            pos: pos.to_owned(),
            kind: ElementKind::Subtree(slot),
        }
    }
}

impl fmt::Display for RuleElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ElementKind::Head => write!(f, "{}&", self.pos),
            ElementKind::Subtree(k) => write!(f, "{}~{}", self.pos, k),
        }
    }
}

fn parse_element(piece: &str) -> Option<RuleElement> {
    if let Some(pos) = piece.strip_suffix('&') {
        return (!pos.is_empty()).then(|| RuleElement::head(pos));
    }
    let (pos, slot) = piece.rsplit_once('~')?;
    let slot: usize = slot.parse().ok()?;
    (!pos.is_empty() && slot >= 1).then(|| RuleElement::subtree(pos, slot))
}

fn is_element(piece: &str) -> bool {
    parse_element(piece).is_some()
}

/// Parses an `_`-joined element sequence. Tags may themselves contain `_`:
/// pieces are glued back together until they end in a head or slot marker.
pub fn parse_pattern(text: &str) -> Result<Vec<RuleElement>> {
    let mut out = Vec::new();
    let mut pending = String::new();
    for piece in text.split('_') {
        if !pending.is_empty() {
            pending.push('_');
        }
        pending.push_str(piece);
        if is_element(&pending) {
            out.push(parse_element(&pending).unwrap());
            pending.clear();
        }
    }
    if !pending.is_empty() || out.is_empty() {
        return Err(Error::invalid(format!("malformed rule pattern {:?}", text)));
    }
    Ok(out)
}

pub fn pattern_key(elements: &[RuleElement]) -> String {
    elements
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("_")
}

/// A source configuration and the target order of its elements.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReorderRule {
    lhs: Vec<RuleElement>,
    rhs: Vec<RuleElement>,
}

impl ReorderRule {
    pub fn new(lhs: Vec<RuleElement>, rhs: Vec<RuleElement>) -> Result<Self> {
        let heads = |side: &[RuleElement]| side.iter().filter(|e| e.kind == ElementKind::Head).count();
        if heads(&lhs) != 1 || heads(&rhs) != 1 {
            return Err(Error::invalid("a rule side needs exactly one head"));
        }
        let slots: Vec<usize> = lhs
            .iter()
            .filter_map(|e| match e.kind {
                ElementKind::Subtree(k) => Some(k),
                ElementKind::Head => None,
            })
            .collect();
        if slots.iter().enumerate().any(|(i, &k)| k != i + 1) {
            return Err(Error::invalid(format!(
                "source subtree slots must read 1..m left to right: {}",
                pattern_key(&lhs)
            )));
        }
        let mut a = lhs.clone();
        let mut b = rhs.clone();
        a.sort();
        b.sort();
        if a != b {
            return Err(Error::invalid(format!(
                "{} is not a permutation of {}",
                pattern_key(&rhs),
                pattern_key(&lhs)
            )));
        }
        Ok(ReorderRule { lhs, rhs })
    }

    /// Builds the rule that puts `lhs` into the order given by `order`
    /// (`order[i]` = index into `lhs` of the i-th target element).
    pub fn from_order(lhs: Vec<RuleElement>, order: &[usize]) -> Result<Self> {
        if order.len() != lhs.len() {
            return Err(Error::invalid("order length differs from pattern length"));
        }
        let rhs = order
            .iter()
            .map(|&i| lhs.get(i).cloned().ok_or_else(|| Error::invalid("order index out of range")))
            .collect::<Result<Vec<_>>>()?;
        ReorderRule::new(lhs, rhs)
    }

    pub fn lhs(&self) -> &[RuleElement] {
        &self.lhs
    }

    pub fn rhs(&self) -> &[RuleElement] {
        &self.rhs
    }

    pub fn lhs_key(&self) -> String {
        pattern_key(&self.lhs)
    }

    pub fn rhs_key(&self) -> String {
        pattern_key(&self.rhs)
    }

    /// For each target position, the index of the source element placed there.
    pub fn order(&self) -> Vec<usize> {
        self.rhs
            .iter()
            .map(|e| self.lhs.iter().position(|l| l == e).expect("validated permutation"))
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        self.lhs == self.rhs
    }
}

impl fmt::Display for ReorderRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ==> {}", self.lhs_key(), self.rhs_key())
    }
}

impl FromStr for ReorderRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (lhs, rhs) = s
            .split_once("==>")
            .ok_or_else(|| Error::invalid(format!("missing ==> in rule {:?}", s)))?;
        ReorderRule::new(parse_pattern(lhs.trim())?, parse_pattern(rhs.trim())?)
    }
}

/// A bijection on `0..n`: `mapping[i]` is the source index placed at output
/// position `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            mapping: (0..n).collect(),
        }
    }

    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; mapping.len()];
        for &i in &mapping {
            if i >= mapping.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::invalid(format!("not a permutation: {:?}", mapping)));
            }
        }
        Ok(Permutation { mapping })
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.mapping.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// `inverse()[s]` is the output position of source index `s`.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.mapping.len()];
        for (out, &src) in self.mapping.iter().enumerate() {
            inv[src] = out;
        }
        inv
    }

    pub fn apply<T: Clone>(&self, items: &[T]) -> Vec<T> {
        assert_eq!(items.len(), self.mapping.len());
        self.mapping.iter().map(|&i| items[i].clone()).collect()
    }

    pub fn to_line(&self) -> String {
        self.mapping
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// A dependent subtree or the head token, inside one head's configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalUnit {
    /// The dependent's own position, or the head's.
    pub anchor: usize,
    pub is_head: bool,
    /// Every token of the unit, ascending.
    pub tokens: Vec<usize>,
}

impl LocalUnit {
    /// Median source position, the lower middle for an even count. Units
    /// are ordered by it, which is the anchor order unless arcs cross.
    pub fn source_rank(&self) -> usize {
        self.tokens[(self.tokens.len() - 1) / 2]
    }
}

/// The units of `head`'s configuration in source order. Empty when the head
/// has no dependents.
pub fn local_units(tree: &DepTree, head: usize) -> Vec<LocalUnit> {
    let children = tree.children(head);
    if children.is_empty() {
        return Vec::new();
    }
    let mut units: Vec<LocalUnit> = children
        .iter()
        .map(|&c| LocalUnit {
            anchor: c,
            is_head: false,
            tokens: tree.subtree(c),
        })
        .collect();
    units.push(LocalUnit {
        anchor: head,
        is_head: true,
        tokens: vec![head],
    });
    units.sort_by_key(LocalUnit::source_rank);
    units
}

/// Rule elements for units in source order, numbering subtree slots 1..m.
pub fn unit_pattern(units: &[LocalUnit], pos: &[String]) -> Vec<RuleElement> {
    let mut slot = 0;
    units
        .iter()
        .map(|u| {
            if u.is_head {
                RuleElement::head(&pos[u.anchor])
            } else {
                slot += 1;
                RuleElement::subtree(&pos[u.anchor], slot)
            }
        })
        .collect()
}

/// Median of the target positions linked to `tokens`; the lower middle for
/// an even number of links. `None` when nothing is linked.
fn projected_rank(tokens: &[usize], targets_of: &[Vec<usize>]) -> Option<usize> {
    let mut linked: Vec<usize> = tokens
        .iter()
        .flat_map(|&s| targets_of[s].iter().copied())
        .collect();
    if linked.is_empty() {
        return None;
    }
    linked.sort_unstable();
    Some(linked[(linked.len() - 1) / 2])
}

fn targets_by_source(alignment: &AlignmentSet) -> Vec<Vec<usize>> {
    let mut targets = vec![Vec::new(); alignment.src_len()];
    for (s, t) in alignment.iter() {
        targets[s].push(t);
    }
    targets
}

/// Units of `head` in projected target order, each with its rank.
///
/// Unaligned units rank last and, like units with equal rank, keep their
/// source order.
pub fn project_subtree_positions(
    tree: &DepTree,
    head: usize,
    alignment: &AlignmentSet,
) -> Vec<(LocalUnit, Option<usize>)> {
    let targets = targets_by_source(alignment);
    project_with(tree, head, &targets)
}

fn project_with(tree: &DepTree, head: usize, targets: &[Vec<usize>]) -> Vec<(LocalUnit, Option<usize>)> {
    let mut ranked: Vec<(LocalUnit, Option<usize>)> = local_units(tree, head)
        .into_iter()
        .map(|u| {
            let r = projected_rank(&u.tokens, targets);
            (u, r)
        })
        .collect();
    ranked.sort_by_key(|(_, r)| r.unwrap_or(usize::MAX));
    ranked
}

fn rules_for_pair(index: usize, pair: &SentencePair) -> Result<Vec<ReorderRule>> {
    let tree = pair
        .source_tree
        .as_ref()
        .ok_or_else(|| Error::invalid(format!("sentence {} has no dependency tree", index + 1)))?;
    let tagged = pair
        .source_tagged()
        .ok_or_else(|| Error::invalid(format!("sentence {} has no POS tags", index + 1)))?;
    let targets = targets_by_source(&pair.alignment);

    let mut rules = Vec::new();
    for head in 0..tree.len() {
        let projected = project_with(tree, head, &targets);
        if projected.is_empty() {
            continue;
        }
        let mut units: Vec<LocalUnit> = projected.iter().map(|(u, _)| u.clone()).collect();
        units.sort_by_key(LocalUnit::source_rank);
        let lhs = unit_pattern(&units, tagged.pos());
        let order: Vec<usize> = projected
            .iter()
            .map(|(u, _)| units.iter().position(|v| v.anchor == u.anchor).unwrap())
            .collect();
        rules.push(ReorderRule::from_order(lhs, &order)?);
    }
    Ok(rules)
}

/// One rule instance per head with at least one dependent, identity
/// instances included.
pub fn extract_rules(pairs: &[SentencePair], workers: usize) -> Result<Vec<ReorderRule>> {
    let indexed: Vec<(usize, &SentencePair)> = pairs.iter().enumerate().collect();
    let per_pair = ordered_map(&indexed, workers, |(i, p)| rules_for_pair(*i, p));
    let mut out = Vec::new();
    for rules in per_pair {
        out.extend(rules?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredRule {
    pub rule: ReorderRule,
    pub count: u64,
    pub probability: f64,
}

/// Scored rules grouped by source pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleTable {
    rules: BTreeMap<String, Vec<ScoredRule>>,
    pub min_count: u64,
    pub min_prob: f64,
}

fn rank_order(a: &ScoredRule, b: &ScoredRule) -> std::cmp::Ordering {
    b.probability
        .total_cmp(&a.probability)
        .then(b.count.cmp(&a.count))
        .then_with(|| a.rule.rhs_key().cmp(&b.rule.rhs_key()))
}

impl RuleTable {
    pub fn empty(min_count: u64, min_prob: f64) -> Self {
        RuleTable {
            rules: BTreeMap::new(),
            min_count,
            min_prob,
        }
    }

    /// Builds a table from already scored rules, e.g. read back from a file.
    pub fn from_scored(scored: Vec<ScoredRule>, min_count: u64, min_prob: f64) -> Self {
        let mut table = RuleTable::empty(min_count, min_prob);
        for s in scored {
            table.rules.entry(s.rule.lhs_key()).or_default().push(s);
        }
        for options in table.rules.values_mut() {
            options.sort_by(rank_order);
        }
        table
    }

    pub fn len(&self) -> usize {
        self.rules.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Options for a source pattern, best first.
    pub fn options(&self, lhs_key: &str) -> &[ScoredRule] {
        self.rules.get(lhs_key).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Highest probability, then highest count, then smallest rhs string.
    pub fn best(&self, lhs_key: &str) -> Option<&ScoredRule> {
        self.options(lhs_key).first()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ScoredRule> {
        self.rules.values().flatten()
    }

    /// `LHS ==> RHS<TAB>count<TAB>probability` per rule, grouped by pattern.
    pub fn to_lines(&self) -> Vec<String> {
        self.iter()
            .map(|s| format!("{}\t{}\t{}", s.rule, s.count, s.probability))
            .collect()
    }

    pub fn parse(file: &str, text: &str, min_count: u64, min_prob: f64) -> Result<Self> {
        let mut scored = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let bad = |msg: String| Error::parse(file, i + 1, msg);
            if fields.len() != 3 {
                return Err(bad("expected RULE<TAB>count<TAB>probability".into()));
            }
            let rule: ReorderRule = fields[0].parse().map_err(|e: Error| bad(e.to_string()))?;
            let count = fields[1]
                .parse()
                .map_err(|_| bad(format!("bad count {:?}", fields[1])))?;
            let probability: f64 = fields[2]
                .parse()
                .map_err(|_| bad(format!("bad probability {:?}", fields[2])))?;
            if !(0.0..=1.0).contains(&probability) {
                return Err(bad(format!("probability {} outside [0,1]", probability)));
            }
            scored.push(ScoredRule {
                rule,
                count,
                probability,
            });
        }
        Ok(RuleTable::from_scored(scored, min_count, min_prob))
    }
}

/// Relative-frequency scoring per source pattern. Rules seen fewer than
/// `min_count` times are dropped after normalisation, so the surviving
/// probabilities are unchanged.
pub fn score_rules(instances: &[ReorderRule], min_count: u64, min_prob: f64) -> RuleTable {
    let mut counts: BTreeMap<String, BTreeMap<&ReorderRule, u64>> = BTreeMap::new();
    for r in instances {
        *counts.entry(r.lhs_key()).or_default().entry(r).or_default() += 1;
    }
    let mut scored = Vec::new();
    for per_rhs in counts.values() {
        let total: u64 = per_rhs.values().sum();
        for (rule, &count) in per_rhs {
            if count >= min_count {
                scored.push(ScoredRule {
                    rule: (*rule).clone(),
                    count,
                    probability: count as f64 / total as f64,
                });
            }
        }
    }
    RuleTable::from_scored(scored, min_count, min_prob)
}

/// Reorders a sentence top-down along its parse.
///
/// At every head with dependents the local pattern is looked up; if its best
/// rule reaches `table.min_prob` and is not the identity, the tokens of the
/// head's subtree are rearranged unit by unit in the rule's order, filling
/// the positions that subtree occupies. Descendants are visited afterwards
/// and rearrange within their own subtrees, so the result is a composition
/// of bijections.
pub fn apply_rules(sentence: &TaggedSentence, tree: &DepTree, table: &RuleTable) -> Result<(Sentence, Permutation)> {
    if tree.len() != sentence.len() {
        return Err(Error::invalid(format!(
            "tree has {} nodes for {} tokens",
            tree.len(),
            sentence.len()
        )));
    }
    let n = sentence.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut pos_of: Vec<usize> = (0..n).collect();

    let mut stack = vec![tree.root()];
    while let Some(head) = stack.pop() {
        stack.extend(tree.children(head).iter().rev().copied());
        let units = local_units(tree, head);
        if units.is_empty() {
            continue;
        }
        let key = pattern_key(&unit_pattern(&units, sentence.pos()));
        let rule = match table.best(&key) {
            Some(best) if best.probability >= table.min_prob && !best.rule.is_identity() => &best.rule,
            _ => continue,
        };

        let mut slots: Vec<usize> = units
            .iter()
            .flat_map(|u| u.tokens.iter().map(|&t| pos_of[t]))
            .collect();
        slots.sort_unstable();
        let mut sequence = Vec::with_capacity(slots.len());
        for i in rule.order() {
            let mut tokens = units[i].tokens.clone();
            tokens.sort_by_key(|&t| pos_of[t]);
            sequence.extend(tokens);
        }
        for (&slot, &tok) in slots.iter().zip(&sequence) {
            order[slot] = tok;
            pos_of[tok] = slot;
        }
    }

    let perm = Permutation::new(order)?;
    let tokens = perm.apply(sentence.tokens());
    Ok((Sentence::new(tokens)?, perm))
}

/// Fraction of link pairs `(s1,t1), (s2,t2)` with `s1 < s2` whose target
/// positions are inverted (normalised Kendall tau distance). 0 when there
/// are no such pairs.
pub fn crossing_score(alignment: &AlignmentSet) -> f64 {
    let pts: Vec<(usize, usize)> = alignment.iter().collect();
    let mut pairs = 0u64;
    let mut crossed = 0u64;
    for (i, &(s1, t1)) in pts.iter().enumerate() {
        for &(s2, t2) in &pts[i + 1..] {
            if s1 < s2 {
                pairs += 1;
                if t1 > t2 {
                    crossed += 1;
                }
            }
        }
    }
    if pairs == 0 {
        0.0
    } else {
        crossed as f64 / pairs as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    fn tagged(words: &str, tags: &str) -> TaggedSentence {
        TaggedSentence::new(Sentence::parse(words).unwrap(), toks(tags)).unwrap()
    }

    fn tree(words: &str, tags: &str, heads: &[usize]) -> DepTree {
        DepTree::from_heads(&toks(words), &toks(tags), heads).unwrap()
    }

    fn in_nn_vb_pair() -> SentencePair {
        let t = tree("in X Y", "IN NN VB", &[2, 0, 2]);
        let src = Sentence::parse("in X Y").unwrap();
        let tgt = Sentence::parse("x' in' y'").unwrap();
        let a = AlignmentSet::new(3, 3, [(0, 1), (1, 0), (2, 2)]).unwrap();
        SentencePair::new(src, Some(toks("IN NN VB")), tgt, None, a, Some(t)).unwrap()
    }

    #[test]
    fn rule_text_round_trip() {
        let r: ReorderRule = "IN~1_NN&_VB~2 ==> NN&_IN~1_VB~2".parse().unwrap();
        assert_eq!(r.order(), vec![1, 0, 2]);
        assert_eq!(r.to_string(), "IN~1_NN&_VB~2 ==> NN&_IN~1_VB~2");
        assert!(!r.is_identity());
        let r: ReorderRule = "NN_P~1_NN& ==> NN&_NN_P~1".parse().unwrap();
        assert_eq!(r.lhs()[0].pos, "NN_P");
    }

    #[test]
    fn malformed_rules_rejected() {
        assert!("IN~1_NN& ==> NN&".parse::<ReorderRule>().is_err());
        assert!("IN~2_NN& ==> NN&_IN~2".parse::<ReorderRule>().is_err());
        assert!("IN~1_VB~1 ==> VB~1_IN~1".parse::<ReorderRule>().is_err());
        assert!("IN~1_NN& NN&_IN~1".parse::<ReorderRule>().is_err());
        assert!("IN~1_NN& ==> NN&_JJ~1".parse::<ReorderRule>().is_err());
    }

    #[test]
    fn projection_orders_by_median() {
        let pair = in_nn_vb_pair();
        let projected = project_subtree_positions(pair.source_tree.as_ref().unwrap(), 1, &pair.alignment);
        let anchors: Vec<(usize, bool, Option<usize>)> =
            projected.iter().map(|(u, r)| (u.anchor, u.is_head, *r)).collect();
        assert_eq!(anchors, vec![(1, true, Some(0)), (0, false, Some(1)), (2, false, Some(2))]);
    }

    #[test]
    fn projection_keeps_source_order_when_unaligned_or_monotone() {
        let t = tree("a b c", "X Y Z", &[2, 0, 2]);
        let empty = AlignmentSet::empty(3, 3);
        let got: Vec<usize> = project_subtree_positions(&t, 1, &empty).iter().map(|(u, _)| u.anchor).collect();
        assert_eq!(got, vec![0, 1, 2]);
        let ident = AlignmentSet::new(3, 3, [(0, 0), (1, 1), (2, 2)]).unwrap();
        let got: Vec<usize> = project_subtree_positions(&t, 1, &ident).iter().map(|(u, _)| u.anchor).collect();
        assert_eq!(got, vec![0, 1, 2]);
    }

    #[test]
    fn median_uses_lower_middle() {
        // unit {0} linked to targets 3 and 1 -> sorted [1,3], lower middle 1
        let targets = vec![vec![3, 1], vec![2], vec![]];
        assert_eq!(projected_rank(&[0], &targets), Some(1));
        assert_eq!(projected_rank(&[0, 1], &targets), Some(2));
        assert_eq!(projected_rank(&[2], &targets), None);
    }

    #[test]
    fn extracts_the_prepositional_rule() {
        let rules = extract_rules(&[in_nn_vb_pair()], 1).unwrap();
        assert_eq!(rules.len(), 1);
        assert_eq!(rules[0].to_string(), "IN~1_NN&_VB~2 ==> NN&_IN~1_VB~2");
    }

    #[test]
    fn identity_alignment_gives_identity_instances() {
        let t = tree("a b c d", "DT NN VB NN", &[2, 3, 0, 3]);
        let src = Sentence::parse("a b c d").unwrap();
        let a = AlignmentSet::new(4, 4, (0..4).map(|i| (i, i))).unwrap();
        let pair = SentencePair::new(src.clone(), None, src, None, a, Some(t)).unwrap();
        let rules = extract_rules(&[pair], 1).unwrap();
        let text: Vec<String> = rules.iter().map(ToString::to_string).collect();
        assert_eq!(text, vec!["DT~1_NN& ==> DT~1_NN&", "NN~1_VB&_NN~2 ==> NN~1_VB&_NN~2"]);
        assert!(rules.iter().all(ReorderRule::is_identity));
    }

    #[test]
    fn missing_tree_is_an_error() {
        let mut pair = in_nn_vb_pair();
        pair.source_tree = None;
        let err = extract_rules(&[pair.clone(), pair], 1).unwrap_err().to_string();
        assert!(err.contains("sentence 1"), "{err}");
    }

    #[test]
    fn scoring_relative_frequency() {
        let a: ReorderRule = "IN~1_NN& ==> NN&_IN~1".parse().unwrap();
        let b: ReorderRule = "IN~1_NN& ==> IN~1_NN&".parse().unwrap();
        let table = score_rules(&[a.clone(), a.clone(), a.clone(), b.clone()], 1, 0.5);
        let opts = table.options("IN~1_NN&");
        assert_eq!(opts.len(), 2);
        assert_eq!((opts[0].rule.clone(), opts[0].count, opts[0].probability), (a.clone(), 3, 0.75));
        assert_eq!((opts[1].count, opts[1].probability), (1, 0.25));

        let pruned = score_rules(&[a.clone(), a.clone(), a.clone(), b], 2, 0.5);
        assert_eq!(pruned.options("IN~1_NN&").len(), 1);
        assert_eq!(pruned.best("IN~1_NN&").unwrap().probability, 0.75);

        let table = score_rules(&[a.clone(), a.clone(), a.clone(), a], 1, 0.5);
        assert_eq!(table.best("IN~1_NN&").unwrap().probability, 1.0);
    }

    #[test]
    fn best_breaks_ties_by_count_then_rhs() {
        let mk = |s: &str, count, probability| ScoredRule {
            rule: s.parse().unwrap(),
            count,
            probability,
        };
        let table = RuleTable::from_scored(
            vec![
                mk("A~1_B&_C~2 ==> C~2_B&_A~1", 5, 0.4),
                mk("A~1_B&_C~2 ==> B&_A~1_C~2", 5, 0.4),
                mk("A~1_B&_C~2 ==> B&_C~2_A~1", 3, 0.4),
            ],
            1,
            0.3,
        );
        assert_eq!(table.best("A~1_B&_C~2").unwrap().rule.rhs_key(), "B&_A~1_C~2");
    }

    #[test]
    fn applies_the_prepositional_rule() {
        let table = RuleTable::from_scored(
            vec![ScoredRule {
                rule: "IN~1_NN&_VB~2 ==> NN&_IN~1_VB~2".parse().unwrap(),
                count: 17,
                probability: 1.0,
            }],
            2,
            0.5,
        );
        let s = tagged("in X Y", "IN NN VB");
        let t = tree("in X Y", "IN NN VB", &[2, 0, 2]);
        let (out, perm) = apply_rules(&s, &t, &table).unwrap();
        assert_eq!(out.to_string(), "X in Y");
        assert_eq!(perm.mapping(), &[1, 0, 2]);

        let (out, perm) = apply_rules(&s, &t, &RuleTable::empty(2, 0.5)).unwrap();
        assert_eq!(out.to_string(), "in X Y");
        assert!(perm.is_identity());

        let weak = RuleTable::from_scored(
            vec![ScoredRule {
                rule: "IN~1_NN&_VB~2 ==> NN&_IN~1_VB~2".parse().unwrap(),
                count: 3,
                probability: 0.4,
            }],
            2,
            0.5,
        );
        assert!(apply_rules(&s, &t, &weak).unwrap().1.is_identity());
    }

    #[test]
    fn nested_application_moves_whole_subtrees() {
        // saw(root) <- man, saw -> book <- the ; SVO -> SOV, DT NN kept
        let s = tagged("man saw the book", "NN VB DT NN");
        let t = tree("man saw the book", "NN VB DT NN", &[2, 0, 4, 2]);
        let table = RuleTable::from_scored(
            vec![ScoredRule {
                rule: "NN~1_VB&_NN~2 ==> NN~1_NN~2_VB&".parse().unwrap(),
                count: 4,
                probability: 1.0,
            }],
            2,
            0.5,
        );
        let (out, perm) = apply_rules(&s, &t, &table).unwrap();
        assert_eq!(out.to_string(), "man the book saw");
        assert_eq!(perm.mapping(), &[0, 2, 3, 1]);
    }

    #[test]
    fn tree_length_mismatch() {
        let s = tagged("a b", "X Y");
        let t = tree("a b c", "X Y Z", &[0, 1, 1]);
        assert!(apply_rules(&s, &t, &RuleTable::empty(1, 0.5)).is_err());
    }

    #[test]
    fn crossing_examples() {
        let a = |pts: &[(usize, usize)]| AlignmentSet::new(3, 3, pts.iter().copied()).unwrap();
        assert_eq!(crossing_score(&a(&[(0, 0), (1, 1), (2, 2)])), 0.0);
        assert_eq!(crossing_score(&a(&[(0, 2), (1, 1), (2, 0)])), 1.0);
        assert!((crossing_score(&a(&[(0, 0), (1, 2), (2, 1)])) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(crossing_score(&a(&[])), 0.0);
    }

    #[test]
    fn table_file_round_trip() {
        let a: ReorderRule = "IN~1_NN&_VB~2 ==> NN&_IN~1_VB~2".parse().unwrap();
        let b: ReorderRule = "IN~1_NN&_VB~2 ==> IN~1_NN&_VB~2".parse().unwrap();
        let table = score_rules(&[a.clone(), a.clone(), a.clone(), b], 1, 0.5);
        let text = table.to_lines().join("\n");
        assert_eq!(
            text,
            "IN~1_NN&_VB~2 ==> NN&_IN~1_VB~2\t3\t0.75\nIN~1_NN&_VB~2 ==> IN~1_NN&_VB~2\t1\t0.25"
        );
        let back = RuleTable::parse("r", &text, 1, 0.5).unwrap();
        assert_eq!(back, table);
        assert!(RuleTable::parse("r", "IN~1_NN& ==> NN&_IN~1\tx\t0.5", 1, 0.5).is_err());
    }
}

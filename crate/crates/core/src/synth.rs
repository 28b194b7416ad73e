//! Synthetic parallel corpora from a toy grammar with known reordering.
//!
//! Source sentences are SVO clauses whose noun phrases may carry
//! prepositional phrases and reduced relative verbs. Target sentences
//! realise the same dependency tree with a fixed set of hidden head-local
//! permutations ([`HIDDEN_RULES`]) and translate every word through a small
//! lexicon, so the word alignment is a bijection.

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crate::reorder_rules::{pattern_key, ReorderRule, RuleElement};

/// The permutations applied on the target side; every other configuration
/// keeps source order.
pub const HIDDEN_RULES: [&str; 3] = [
    "IN~1_NN&_VB~2 ==> NN&_IN~1_VB~2",
    "NN~1_VB&_NN~2 ==> NN~1_NN~2_VB&",
    "IN&_NN~1 ==> NN~1_IN&",
];

/// Root configuration of a clause carrying a final punctuation token.
const CLAUSE_WITH_MARKER: &str = "NN~1_VB&_NN~2_.~3 ==> NN~1_NN~2_VB&_.~3";

const NOUNS: &[(&str, &str)] = &[
    ("house", "ghar"),
    ("man", "aadmii"),
    ("book", "kitaab"),
    ("river", "nadii"),
    ("city", "shahar"),
    ("tree", "ped"),
    ("boy", "ladkaa"),
    ("girl", "ladkii"),
    ("road", "sadak"),
    ("school", "vidyaalay"),
    ("letter", "patr"),
    ("market", "baazaar"),
];
const VERBS: &[(&str, &str)] = &[
    ("saw", "dekhaa"),
    ("wrote", "likhaa"),
    ("found", "paayaa"),
    ("built", "banaayaa"),
    ("read", "padhaa"),
    ("left", "chhodaa"),
];
const REL_VERBS: &[(&str, &str)] = &[
    ("burned", "jalaa"),
    ("fell", "giraa"),
    ("stood", "khadaa"),
    ("broke", "tootaa"),
];
const PREPS: &[(&str, &str)] = &[("in", "meM"), ("on", "par"), ("near", "paas"), ("from", "se")];
const DETS: &[(&str, &str)] = &[("the", "vah"), ("a", "ek"), ("this", "yah")];
const ADJS: &[(&str, &str)] = &[("big", "badaa"), ("old", "puraanaa"), ("new", "nayaa"), ("small", "chhotaa")];

/// Every source word with its target translation.
pub fn lexicon() -> Vec<(&'static str, &'static str)> {
    [NOUNS, VERBS, REL_VERBS, PREPS, DETS, ADJS]
        .iter()
        .flat_map(|l| l.iter().copied())
        .collect()
}

#[derive(Clone, Copy, Debug)]
pub struct SynthConfig {
    pub sentences: usize,
    pub seed: u64,
    /// Close clauses with `.` (target `।`) or, one time in five, `?`.
    pub with_markers: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyntheticPair {
    pub source: Vec<String>,
    pub source_pos: Vec<String>,
    /// 1-based heads, 0 for the root.
    pub heads: Vec<usize>,
    pub target: Vec<String>,
    /// `(source, target)` links of the bijection.
    pub alignment: Vec<(usize, usize)>,
    /// Source tokens in target order.
    pub reordered_source: Vec<String>,
}

struct Node {
    word: (&'static str, &'static str),
    pos: &'static str,
    left: Vec<Node>,
    right: Vec<Node>,
}

impl Node {
    fn leaf(word: (&'static str, &'static str), pos: &'static str) -> Self {
        Node {
            word,
            pos,
            left: Vec::new(),
            right: Vec::new(),
        }
    }
}

struct Generator {
    rng: StdRng,
    orders: BTreeMap<String, Vec<usize>>,
}

impl Generator {
    fn pick(&mut self, list: &'static [(&'static str, &'static str)]) -> (&'static str, &'static str) {
        *list.choose(&mut self.rng).unwrap()
    }

    fn noun_phrase(&mut self, depth: usize) -> Node {
        let kinds = if depth == 0 { 4 } else { 3 };
        let mut head = Node::leaf(self.pick(NOUNS), "NN");
        match self.rng.gen_range(0..kinds) {
            0 => {}
            1 => head.left.push(Node::leaf(self.pick(DETS), "DT")),
            2 => {
                head.left.push(Node::leaf(self.pick(DETS), "DT"));
                head.left.push(Node::leaf(self.pick(ADJS), "JJ"));
            }
            _ => {
                let mut prep = Node::leaf(self.pick(PREPS), "IN");
                prep.right.push(self.noun_phrase(depth + 1));
                head.left.push(prep);
                head.right.push(Node::leaf(self.pick(REL_VERBS), "VB"));
            }
        }
        head
    }

    fn clause(&mut self, with_markers: bool) -> Node {
        let mut verb = Node::leaf(self.pick(VERBS), "VB");
        verb.left.push(self.noun_phrase(0));
        verb.right.push(self.noun_phrase(0));
        if with_markers {
            let marker = if self.rng.gen_bool(0.2) {
                ("?", "?")
            } else {
                (".", "\u{0964}")
            };
            verb.right.push(Node::leaf(marker, "."));
        }
        verb
    }
}

fn pattern(node: &Node) -> String {
    let mut elements = Vec::new();
    let mut slot = 0;
    for d in &node.left {
        slot += 1;
        elements.push(RuleElement::subtree(d.pos, slot));
    }
    elements.push(RuleElement::head(node.pos));
    for d in &node.right {
        slot += 1;
        elements.push(RuleElement::subtree(d.pos, slot));
    }
    pattern_key(&elements)
}

/// Appends the subtree's nodes in source order with their 1-based heads
/// (0 until the parent fills it in) and returns the node's index.
fn linearize_source<'a>(node: &'a Node, out: &mut Vec<(usize, &'a Node)>) -> usize {
    let mut deps: Vec<usize> = node.left.iter().map(|d| linearize_source(d, out)).collect();
    let me = out.len();
    out.push((0, node));
    deps.extend(node.right.iter().map(|d| linearize_source(d, out)));
    for d in deps {
        out[d].0 = me + 1;
    }
    me
}

/// Source indices of the subtree in target order.
fn target_order(node: &Node, first: usize, orders: &BTreeMap<String, Vec<usize>>, out: &mut Vec<usize>) -> usize {
    // sizes first so each unit knows its source offset
    let mut offset = first;
    let mut units: Vec<(usize, Option<&Node>)> = Vec::new();
    for d in &node.left {
        units.push((offset, Some(d)));
        offset += size(d);
    }
    units.push((offset, None));
    offset += 1;
    for d in &node.right {
        units.push((offset, Some(d)));
        offset += size(d);
    }
    let identity: Vec<usize> = (0..units.len()).collect();
    let order = orders.get(&pattern(node)).unwrap_or(&identity);
    for &u in order {
        match units[u] {
            (start, None) => out.push(start),
            (start, Some(d)) => {
                target_order(d, start, orders, out);
            }
        }
    }
    offset
}

fn size(node: &Node) -> usize {
    1 + node.left.iter().chain(&node.right).map(size).sum::<usize>()
}

pub fn generate(cfg: &SynthConfig) -> Vec<SyntheticPair> {
    let mut orders = BTreeMap::new();
    for text in HIDDEN_RULES.iter().chain(std::iter::once(&CLAUSE_WITH_MARKER)) {
        let rule: ReorderRule = text.parse().expect("built-in rule");
        orders.insert(rule.lhs_key(), rule.order());
    }
    let mut g = Generator {
        rng: StdRng::seed_from_u64(cfg.seed),
        orders,
    };

    (0..cfg.sentences)
        .map(|_| {
            let root = g.clause(cfg.with_markers);
            let mut flat = Vec::new();
            linearize_source(&root, &mut flat);
            let mut order = Vec::new();
            target_order(&root, 0, &g.orders, &mut order);

            let source: Vec<String> = flat.iter().map(|(_, n)| n.word.0.to_owned()).collect();
            let target: Vec<String> = order.iter().map(|&s| flat[s].1.word.1.to_owned()).collect();
            let mut alignment: Vec<(usize, usize)> = order.iter().enumerate().map(|(t, &s)| (s, t)).collect();
            alignment.sort_unstable();
            SyntheticPair {
                reordered_source: order.iter().map(|&s| source[s].clone()).collect(),
                source,
                source_pos: flat.iter().map(|(_, n)| n.pos.to_owned()).collect(),
                heads: flat.iter().map(|(h, _)| *h).collect(),
                target,
                alignment,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus_io::DepTree;

    #[test]
    fn generated_trees_are_valid_and_aligned() {
        let pairs = generate(&SynthConfig {
            sentences: 200,
            seed: 7,
            with_markers: true,
        });
        for p in &pairs {
            let tree = DepTree::from_heads(&p.source, &p.source_pos, &p.heads).unwrap();
            assert_eq!(tree.len(), p.source.len());
            assert_eq!(p.target.len(), p.source.len());
            assert_eq!(p.alignment.len(), p.source.len());
            let mut seen_t: Vec<usize> = p.alignment.iter().map(|a| a.1).collect();
            seen_t.sort_unstable();
            assert_eq!(seen_t, (0..p.source.len()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let cfg = SynthConfig {
            sentences: 20,
            seed: 3,
            with_markers: false,
        };
        assert_eq!(generate(&cfg), generate(&cfg));
    }

    #[test]
    fn svo_becomes_sov() {
        let pairs = generate(&SynthConfig {
            sentences: 50,
            seed: 11,
            with_markers: false,
        });
        for p in pairs {
            let verb = p.source_pos.iter().zip(&p.heads).position(|(_, &h)| h == 0).unwrap();
            assert_eq!(p.reordered_source.last(), Some(&p.source[verb]));
        }
    }
}

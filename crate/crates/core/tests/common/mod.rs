//! Random input generators and brute-force oracles shared by the
//! integration tests.

#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

use preorder::corpus_io::{AlignmentSet, DepNode, DepTree};
use preorder::phrase_extract::Span;
use preorder::reorder_rules::{local_units, pattern_key, unit_pattern, ReorderRule, RuleTable, ScoredRule};

pub const TAGS: &[&str] = &["NN", "VB", "IN", "DT", "JJ"];

pub fn toy_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/toy")
}

pub fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_owned).collect()
}

/// Each cell is linked with probability `density`.
pub fn random_alignment(rng: &mut StdRng, src_len: usize, tgt_len: usize, density: f64) -> AlignmentSet {
    let mut points = Vec::new();
    for s in 0..src_len {
        for t in 0..tgt_len {
            if rng.gen_bool(density) {
                points.push((s, t));
            }
        }
    }
    AlignmentSet::new(src_len, tgt_len, points).unwrap()
}

/// Random rooted tree over `n` nodes; each node after the first in a random
/// order attaches to an earlier one, so crossing arcs occur freely.
pub fn random_tree(rng: &mut StdRng, n: usize) -> DepTree {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut heads = vec![0usize; n];
    for k in 1..n {
        let parent = order[rng.gen_range(0..k)];
        heads[order[k]] = parent + 1;
    }
    let nodes = (0..n)
        .map(|i| DepNode {
            form: format!("w{}", i % 4),
            pos: TAGS[rng.gen_range(0..TAGS.len())].to_owned(),
            head: heads[i],
            label: "dep".to_owned(),
        })
        .collect();
    DepTree::new(nodes).unwrap()
}

/// Rules for many of the tree's own local configurations plus a few
/// unrelated ones, with random orders and scores.
pub fn random_table(rng: &mut StdRng, tree: &DepTree) -> RuleTable {
    let pos = tree.pos_tags();
    let mut scored = Vec::new();
    for head in 0..tree.len() {
        let units = local_units(tree, head);
        if units.is_empty() || rng.gen_bool(0.2) {
            continue;
        }
        let lhs = unit_pattern(&units, &pos);
        for _ in 0..rng.gen_range(1..=2) {
            let mut order: Vec<usize> = (0..lhs.len()).collect();
            order.shuffle(rng);
            scored.push(ScoredRule {
                rule: ReorderRule::from_order(lhs.clone(), &order).unwrap(),
                count: rng.gen_range(1..10),
                probability: rng.gen_range(0.0..=1.0),
            });
        }
    }
    scored.push(ScoredRule {
        rule: "IN~1_NN&_VB~2 ==> NN&_IN~1_VB~2".parse().unwrap(),
        count: 3,
        probability: 0.9,
    });
    RuleTable::from_scored(scored, 1, rng.gen_range(0.0..=1.0))
}

/// Every rectangle of spans no longer than `max_len` that contains a link
/// and that no link leaves, sorted.
pub fn brute_force_phrases(a: &AlignmentSet, max_len: usize) -> Vec<(Span, Span)> {
    let pts: Vec<(usize, usize)> = a.iter().collect();
    let mut out = Vec::new();
    for s1 in 0..a.src_len() {
        for s2 in s1..a.src_len() {
            for t1 in 0..a.tgt_len() {
                for t2 in t1..a.tgt_len() {
                    if s2 - s1 + 1 > max_len || t2 - t1 + 1 > max_len {
                        continue;
                    }
                    let in_s = |s: usize| s1 <= s && s <= s2;
                    let in_t = |t: usize| t1 <= t && t <= t2;
                    let inside = pts.iter().any(|&(s, t)| in_s(s) && in_t(t));
                    let leaks = pts.iter().any(|&(s, t)| in_s(s) != in_t(t));
                    if inside && !leaks {
                        out.push((Span::new(s1, s2), Span::new(t1, t2)));
                    }
                }
            }
        }
    }
    out
}

fn ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for i in 0..=tokens.len() - n {
            *m.entry(&tokens[i..i + n]).or_insert(0) += 1;
        }
    }
    m
}

/// Add-one smoothed sentence BLEU (orders 2 to 4 smoothed), written out
/// directly from the definition.
pub fn oracle_sentence_bleu(hyp: &[String], reference: &[String]) -> f64 {
    if hyp.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=4 {
        let h = ngrams(hyp, n);
        let r = ngrams(reference, n);
        let mut matched = 0usize;
        for (g, c) in &h {
            matched += (*c).min(*r.get(g).unwrap_or(&0));
        }
        let total = hyp.len().saturating_sub(n - 1);
        let p = if n == 1 {
            matched as f64 / total as f64
        } else {
            (matched + 1) as f64 / (total + 1) as f64
        };
        if p == 0.0 {
            return 0.0;
        }
        log_sum += p.ln() / 4.0;
    }
    let bp = if hyp.len() >= reference.len() {
        1.0
    } else {
        (1.0 - reference.len() as f64 / hyp.len() as f64).exp()
    };
    bp * log_sum.exp()
}

/// Expected-loss minimiser with a plain, unshifted softmax.
pub fn oracle_mbr(hyps: &[Vec<String>], scores: &[f64], alpha: f64) -> usize {
    let w: Vec<f64> = scores.iter().map(|s| (alpha * s).exp()).collect();
    let z: f64 = w.iter().sum();
    let mut best = 0;
    let mut best_loss = f64::INFINITY;
    for (i, h) in hyps.iter().enumerate() {
        let mut loss = 0.0;
        for (j, e) in hyps.iter().enumerate() {
            let l = if h == e { 0.0 } else { 1.0 - oracle_sentence_bleu(h, e) };
            loss += w[j] / z * l;
        }
        if loss < best_loss - 1e-12 {
            best = i;
            best_loss = loss;
        }
    }
    best
}

pub fn pattern_of(rule: &str) -> String {
    let r: ReorderRule = rule.parse().unwrap();
    pattern_key(r.lhs())
}

//! Order-n back-off language model with maximum-likelihood or interpolated
//! Witten-Bell estimates, stored and queried in ARPA form (log10).
//!
//! Sentences are padded with `order - 1` start symbols and one end symbol.
//! Witten-Bell interpolates each order with the next lower one,
//!
//! ```text
//! P(w | h) = (c(h, w) + T(h) * P(w | h')) / (c(h) + T(h))
//! ```
//!
//! where `T(h)` is the number of distinct words seen after `h` and `h'`
//! drops the oldest word of `h`; the recursion bottoms out in a uniform
//! distribution over the vocabulary (end symbol and `<unk>` included, start
//! symbol excluded). The interpolated model is stored exactly in back-off
//! form: seen n-grams carry their interpolated probability and every seen
//! context the weight `T(h) / (c(h) + T(h))`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{Error, Result};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

/// Log probability written for n-grams that only serve as contexts.
const NO_PROB: f64 = -99.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Smoothing {
    Mle,
    #[default]
    WittenBell,
}

impl FromStr for Smoothing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mle" => Ok(Smoothing::Mle),
            "wb" | "witten-bell" => Ok(Smoothing::WittenBell),
            _ => Err(Error::invalid(format!("unknown smoothing {:?}", s))),
        }
    }
}

impl fmt::Display for Smoothing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Smoothing::Mle => "mle",
            Smoothing::WittenBell => "witten-bell",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Entry {
    log10_prob: Option<f64>,
    log10_backoff: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NGramLM {
    order: usize,
    smoothing: Smoothing,
    vocab: BTreeSet<String>,
    /// `tables[k]` holds the (k+1)-grams.
    tables: Vec<BTreeMap<Vec<String>, Entry>>,
}

/// Continuation counts per context; `counts[k]` has contexts of length k.
type Counts = Vec<BTreeMap<Vec<String>, BTreeMap<String, u64>>>;

fn pad(order: usize, tokens: &[String]) -> Vec<String> {
    let mut padded = vec![BOS.to_owned(); order - 1];
    padded.extend(tokens.iter().cloned());
    padded.push(EOS.to_owned());
    padded
}

struct WittenBell<'a> {
    counts: &'a Counts,
    uniform: f64,
}

impl WittenBell<'_> {
    fn prob(&self, context: &[String], word: &str) -> f64 {
        let lower = match context.split_first() {
            None => self.uniform,
            Some((_, shorter)) => self.prob(shorter, word),
        };
        match self.counts[context.len()].get(context) {
            None => lower,
            Some(next) => {
                let c = next.get(word).copied().unwrap_or(0) as f64;
                let total: u64 = next.values().sum();
                let types = next.len() as f64;
                (c + types * lower) / (total as f64 + types)
            }
        }
    }
}

/// Trains a model on tokenized sentences.
pub fn train_lm<S: AsRef<[String]>>(corpus: &[S], order: usize, smoothing: Smoothing) -> Result<NGramLM> {
    if order < 1 {
        return Err(Error::invalid("language model order must be at least 1"));
    }
    if corpus.is_empty() {
        return Err(Error::invalid("cannot train a language model on an empty corpus"));
    }

    let mut counts: Counts = vec![BTreeMap::new(); order];
    let mut vocab: BTreeSet<String> = [BOS, EOS, UNK].iter().map(|s| s.to_string()).collect();
    for sentence in corpus {
        let padded = pad(order, sentence.as_ref());
        for i in order - 1..padded.len() {
            let word = &padded[i];
            vocab.insert(word.clone());
            for k in 0..order {
                *counts[k]
                    .entry(padded[i - k..i].to_vec())
                    .or_default()
                    .entry(word.clone())
                    .or_default() += 1;
            }
        }
    }

    let mut tables: Vec<BTreeMap<Vec<String>, Entry>> = vec![BTreeMap::new(); order];
    match smoothing {
        Smoothing::Mle => {
            for (k, per_context) in counts.iter().enumerate() {
                for (context, next) in per_context {
                    let total: u64 = next.values().sum();
                    for (word, &c) in next {
                        let mut gram = context.clone();
                        gram.push(word.clone());
                        tables[k].entry(gram).or_default().log10_prob =
                            Some((c as f64 / total as f64).log10());
                    }
                }
            }
        }
        Smoothing::WittenBell => {
            let wb = WittenBell {
                counts: &counts,
                uniform: 1.0 / (vocab.len() - 1) as f64,
            };
            for (k, per_context) in counts.iter().enumerate() {
                for (context, next) in per_context {
                    for word in next.keys() {
                        let mut gram = context.clone();
                        gram.push(word.clone());
                        tables[k].entry(gram).or_default().log10_prob = Some(wb.prob(context, word).log10());
                    }
                    if !context.is_empty() {
                        let total: u64 = next.values().sum();
                        let types = next.len() as f64;
                        let weight = types / (total as f64 + types);
                        tables[context.len() - 1]
                            .entry(context.clone())
                            .or_default()
                            .log10_backoff = Some(weight.log10());
                    }
                }
            }
            for word in vocab.iter().filter(|w| *w != BOS) {
                let gram = vec![word.clone()];
                if !tables[0].contains_key(&gram) {
                    tables[0].entry(gram).or_default().log10_prob = Some(wb.prob(&[], word).log10());
                }
            }
        }
    }

    Ok(NGramLM {
        order,
        smoothing,
        vocab,
        tables,
    })
}

impl NGramLM {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing(&self) -> Smoothing {
        self.smoothing
    }

    pub fn vocab(&self) -> &BTreeSet<String> {
        &self.vocab
    }

    /// Words that can be predicted: the vocabulary minus the start symbol.
    pub fn predictable(&self) -> impl Iterator<Item = &str> {
        self.vocab.iter().map(String::as_str).filter(|w| *w != BOS)
    }

    fn normalize<'a>(&'a self, token: &'a str) -> &'a str {
        if self.vocab.contains(token) {
            token
        } else {
            UNK
        }
    }

    /// Contexts (of every length below the order) with observed continuations.
    pub fn contexts(&self) -> Vec<Vec<String>> {
        let mut out: BTreeSet<Vec<String>> = BTreeSet::new();
        for table in &self.tables {
            for gram in table.keys() {
                if table[gram].log10_prob.is_some() {
                    out.insert(gram[..gram.len() - 1].to_vec());
                }
            }
        }
        out.into_iter().collect()
    }

    /// log10 P(word | context). Only the last `order - 1` context tokens
    /// are used; unknown tokens are read as `<unk>`. Unseen events under MLE
    /// give negative infinity.
    pub fn log10_prob<S: AsRef<str>>(&self, context: &[S], word: &str) -> f64 {
        let keep = context.len().min(self.order - 1);
        let mut gram: Vec<String> = context[context.len() - keep..]
            .iter()
            .map(|t| self.normalize(t.as_ref()).to_owned())
            .collect();
        gram.push(self.normalize(word).to_owned());

        match self.smoothing {
            Smoothing::Mle => {
                if keep < self.order - 1 {
                    return f64::NEG_INFINITY;
                }
                self.tables[gram.len() - 1]
                    .get(&gram)
                    .and_then(|e| e.log10_prob)
                    .unwrap_or(f64::NEG_INFINITY)
            }
            Smoothing::WittenBell => self.backoff_prob(&gram),
        }
    }

    fn backoff_prob(&self, gram: &[String]) -> f64 {
        if let Some(p) = self.tables[gram.len() - 1].get(gram).and_then(|e| e.log10_prob) {
            return p;
        }
        if gram.len() == 1 {
            return f64::NEG_INFINITY;
        }
        let context = &gram[..gram.len() - 1];
        let weight = self.tables[context.len() - 1]
            .get(context)
            .and_then(|e| e.log10_backoff)
            .unwrap_or(0.0);
        weight + self.backoff_prob(&gram[1..])
    }

    /// Total log10 probability of a sentence, end symbol included.
    pub fn sequence_logprob<S: AsRef<str>>(&self, tokens: &[S]) -> f64 {
        let owned: Vec<String> = tokens.iter().map(|t| t.as_ref().to_owned()).collect();
        let padded = pad(self.order, &owned);
        (self.order - 1..padded.len())
            .map(|i| self.log10_prob(&padded[i + 1 - self.order..i], &padded[i]))
            .sum()
    }

    /// `10^(-total log10 prob / predicted tokens)`, end symbols counted.
    /// Infinite if any sentence has zero probability.
    pub fn perplexity<S: AsRef<[String]>>(&self, corpus: &[S]) -> f64 {
        let mut total = 0.0;
        let mut predicted = 0usize;
        for sentence in corpus {
            let tokens = sentence.as_ref();
            total += self.sequence_logprob(tokens);
            predicted += tokens.len() + 1;
        }
        if predicted == 0 {
            return f64::NAN;
        }
        if total == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        10f64.powf(-total / predicted as f64)
    }

    /// ARPA text. A leading comment records order and smoothing.
    pub fn to_arpa(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# order={} smoothing={}", self.order, self.smoothing).unwrap();
        out.push_str("\n\\data\\\n");
        for (k, table) in self.tables.iter().enumerate() {
            writeln!(out, "ngram {}={}", k + 1, table.len()).unwrap();
        }
        for (k, table) in self.tables.iter().enumerate() {
            writeln!(out, "\n\\{}-grams:", k + 1).unwrap();
            for (gram, e) in table {
                let p = e.log10_prob.unwrap_or(NO_PROB);
                match e.log10_backoff {
                    Some(b) => writeln!(out, "{}\t{}\t{}", p, gram.join(" "), b).unwrap(),
                    None => writeln!(out, "{}\t{}", p, gram.join(" ")).unwrap(),
                }
            }
        }
        out.push_str("\n\\end\\\n");
        out
    }

    pub fn from_arpa(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::parse("<arpa>", line, msg.to_owned());
        let mut smoothing = Smoothing::WittenBell;
        let mut declared: Vec<usize> = Vec::new();
        let mut tables: Vec<BTreeMap<Vec<String>, Entry>> = Vec::new();
        let mut section: Option<usize> = None;
        let mut in_data = false;
        let mut ended = false;

        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                for field in comment.split_whitespace() {
                    if let Some(v) = field.strip_prefix("smoothing=") {
                        smoothing = v.parse()?;
                    }
                }
                continue;
            }
            if line == "\\data\\" {
                in_data = true;
                continue;
            }
            if line == "\\end\\" {
                ended = true;
                break;
            }
            if let Some(n) = line.strip_prefix('\\').and_then(|l| l.strip_suffix("-grams:")) {
                let n: usize = n.parse().map_err(|_| bad(lineno, "bad section header"))?;
                if n == 0 || n > declared.len() {
                    return Err(bad(lineno, "section for undeclared order"));
                }
                section = Some(n);
                in_data = false;
                continue;
            }
            if in_data {
                let (n, c) = line
                    .strip_prefix("ngram ")
                    .and_then(|l| l.split_once('='))
                    .ok_or_else(|| bad(lineno, "expected ngram N=COUNT"))?;
                let n: usize = n.trim().parse().map_err(|_| bad(lineno, "bad order"))?;
                let c: usize = c.trim().parse().map_err(|_| bad(lineno, "bad count"))?;
                if n != declared.len() + 1 {
                    return Err(bad(lineno, "ngram counts out of order"));
                }
                declared.push(c);
                tables.push(BTreeMap::new());
                continue;
            }
            let n = section.ok_or_else(|| bad(lineno, "entry outside a section"))?;
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() < 2 || fields.len() > 3 {
                return Err(bad(lineno, "expected log10prob<TAB>ngram[<TAB>backoff]"));
            }
            let p: f64 = fields[0].parse().map_err(|_| bad(lineno, "bad probability"))?;
            let gram: Vec<String> = fields[1].split(' ').map(str::to_owned).collect();
            if gram.len() != n {
                return Err(bad(lineno, "n-gram length does not match section"));
            }
            let backoff = match fields.get(2) {
                Some(b) => Some(b.parse::<f64>().map_err(|_| bad(lineno, "bad back-off weight"))?),
                None => None,
            };
            tables[n - 1].insert(
                gram,
                Entry {
                    log10_prob: (p > NO_PROB).then_some(p),
                    log10_backoff: backoff,
                },
            );
        }
        if !ended {
            return Err(bad(text.lines().count(), "missing \\end\\"));
        }
        if tables.is_empty() {
            return Err(bad(1, "no n-gram sections"));
        }
        for (k, (table, &c)) in tables.iter().zip(&declared).enumerate() {
            if table.len() != c {
                return Err(Error::invalid(format!(
                    "{}-gram section has {} entries, header says {}",
                    k + 1,
                    table.len(),
                    c
                )));
            }
        }
        let mut vocab: BTreeSet<String> = tables[0].keys().map(|g| g[0].clone()).collect();
        for s in [BOS, EOS, UNK] {
            vocab.insert(s.to_owned());
        }
        Ok(NGramLM {
            order: tables.len(),
            smoothing,
            vocab,
            tables,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(lines: &[&str]) -> Vec<Vec<String>> {
        lines
            .iter()
            .map(|l| l.split_whitespace().map(str::to_owned).collect())
            .collect()
    }

    fn p(lm: &NGramLM, ctx: &[&str], w: &str) -> f64 {
        10f64.powf(lm.log10_prob(ctx, w))
    }

    #[test]
    fn unigram_mle() {
        let lm = train_lm(&corpus(&["a a b"]), 1, Smoothing::Mle).unwrap();
        let none: [&str; 0] = [];
        assert!((p(&lm, &none, "a") - 0.5).abs() < 1e-12);
        assert!((p(&lm, &none, "b") - 0.25).abs() < 1e-12);
        assert!((p(&lm, &none, EOS) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn bigram_mle_unique_continuation() {
        let lm = train_lm(&corpus(&["a b"]), 2, Smoothing::Mle).unwrap();
        assert!((p(&lm, &["a"], "b") - 1.0).abs() < 1e-12);
        assert_eq!(lm.sequence_logprob(&["a", "b"]), 0.0);
        assert_eq!(lm.perplexity(&corpus(&["a b"])), 1.0);
    }

    #[test]
    fn unigram_witten_bell() {
        let lm = train_lm(&corpus(&["a a b"]), 1, Smoothing::WittenBell).unwrap();
        let none: [&str; 0] = [];
        assert!((p(&lm, &none, "a") - 2.75 / 7.0).abs() < 1e-12);
        assert!((p(&lm, &none, UNK) - 0.75 / 7.0).abs() < 1e-12);
        assert!((p(&lm, &none, "zzz") - 0.75 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn mle_oov_is_negative_infinity() {
        let lm = train_lm(&corpus(&["a b"]), 2, Smoothing::Mle).unwrap();
        assert_eq!(lm.sequence_logprob(&["a", "q"]), f64::NEG_INFINITY);
        assert_eq!(lm.perplexity(&corpus(&["a q"])), f64::INFINITY);
    }

    #[test]
    fn empty_query_is_just_termination() {
        let lm = train_lm(&corpus(&["a b", "c"]), 3, Smoothing::WittenBell).unwrap();
        let empty: [&str; 0] = [];
        assert_eq!(lm.sequence_logprob(&empty), lm.log10_prob(&[BOS, BOS], EOS));
    }

    #[test]
    fn uniform_model_perplexity_is_vocab_size() {
        let lm = train_lm(&corpus(&["a b c"]), 1, Smoothing::Mle).unwrap();
        assert!((lm.perplexity(&corpus(&["a b c"])) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn training_errors() {
        assert!(train_lm(&corpus(&["a"]), 0, Smoothing::Mle).is_err());
        assert!(train_lm::<Vec<String>>(&[], 2, Smoothing::Mle).is_err());
    }

    #[test]
    fn arpa_round_trip_preserves_queries() {
        let data = corpus(&["the cat sat", "the dog sat down", "a cat ran"]);
        for smoothing in [Smoothing::Mle, Smoothing::WittenBell] {
            let lm = train_lm(&data, 3, smoothing).unwrap();
            let text = lm.to_arpa();
            assert!(text.contains("\\data\\") && text.ends_with("\\end\\\n"));
            let back = NGramLM::from_arpa(&text).unwrap();
            assert_eq!(back.to_arpa(), text);
            for q in [vec!["the", "cat", "ran"], vec!["zebra"], vec!["a", "dog", "sat"]] {
                assert_eq!(back.sequence_logprob(&q), lm.sequence_logprob(&q));
            }
        }
    }

    #[test]
    fn arpa_rejects_garbage() {
        assert!(NGramLM::from_arpa("hello").is_err());
        assert!(NGramLM::from_arpa("\\data\\\nngram 1=2\n\n\\1-grams:\n-1\ta\n\\end\\\n").is_err());
    }
}

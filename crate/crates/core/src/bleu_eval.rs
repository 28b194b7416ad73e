//! Single-reference BLEU: corpus level, and an add-one smoothed sentence
//! level variant for use as a loss.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct BleuReport {
    /// Clipped matches and totals per order, 1-based order at index 0.
    pub matches: Vec<u64>,
    pub totals: Vec<u64>,
    pub precisions: Vec<f64>,
    pub brevity_penalty: f64,
    pub score: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
}

impl fmt::Display for BleuReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ps: Vec<String> = self.precisions.iter().map(|p| format!("{:.1}", p * 100.0)).collect();
        let ratio = if self.ref_len == 0 {
            0.0
        } else {
            self.hyp_len as f64 / self.ref_len as f64
        };
        write!(
            f,
            "BLEU = {:.2} ({}, BP={:.3}, ratio={:.3}, hyp_len={}, ref_len={})",
            self.score * 100.0,
            ps.join("/"),
            self.brevity_penalty,
            ratio,
            self.hyp_len,
            self.ref_len
        )
    }
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, u64> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w.iter().map(AsRef::as_ref).collect()).or_default() += 1;
        }
    }
    counts
}

/// Matches of one segment's n-grams, each clipped to its reference count,
/// and the number of hypothesis n-grams.
pub fn segment_ngram_stats<S: AsRef<str>, R: AsRef<str>>(hyp: &[S], reference: &[R], n: usize) -> (u64, u64) {
    let h = ngram_counts(hyp, n);
    let r = ngram_counts(reference, n);
    let matched = h
        .iter()
        .map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0)))
        .sum();
    let total = hyp.len().saturating_sub(n - 1) as u64;
    (matched, total)
}

fn check_lengths(h: usize, r: usize) -> Result<()> {
    if h != r {
        return Err(Error::invalid(format!(
            "{} hypotheses for {} references",
            h, r
        )));
    }
    Ok(())
}

/// Corpus-wide clipped n-gram matches and totals.
pub fn modified_precision<H, R>(hypotheses: &[H], references: &[R], n: usize) -> Result<(u64, u64)>
where
    H: AsRef<[String]>,
    R: AsRef<[String]>,
{
    check_lengths(hypotheses.len(), references.len())?;
    if n == 0 {
        return Err(Error::invalid("n-gram order must be at least 1"));
    }
    Ok(hypotheses
        .iter()
        .zip(references)
        .map(|(h, r)| segment_ngram_stats(h.as_ref(), r.as_ref(), n))
        .fold((0, 0), |(m, t), (a, b)| (m + a, t + b)))
}

/// `min(1, exp(1 - ref_len / hyp_len))`; 0 for an empty hypothesis side.
pub fn brevity_penalty(hyp_len: usize, ref_len: usize) -> f64 {
    if hyp_len == 0 {
        return 0.0;
    }
    if hyp_len >= ref_len {
        return 1.0;
    }
    (1.0 - ref_len as f64 / hyp_len as f64).exp()
}

fn geometric_mean(precisions: &[f64]) -> f64 {
    if precisions.iter().any(|&p| p <= 0.0) {
        return 0.0;
    }
    let w = 1.0 / precisions.len() as f64;
    precisions.iter().map(|p| w * p.ln()).sum::<f64>().exp()
}

pub fn corpus_bleu<H, R>(hypotheses: &[H], references: &[R], max_n: usize) -> Result<BleuReport>
where
    H: AsRef<[String]>,
    R: AsRef<[String]>,
{
    check_lengths(hypotheses.len(), references.len())?;
    if hypotheses.is_empty() {
        return Err(Error::invalid("BLEU needs at least one segment"));
    }
    if max_n == 0 {
        return Err(Error::invalid("max_n must be at least 1"));
    }
    let mut matches = Vec::with_capacity(max_n);
    let mut totals = Vec::with_capacity(max_n);
    for n in 1..=max_n {
        let (m, t) = modified_precision(hypotheses, references, n)?;
        matches.push(m);
        totals.push(t);
    }
    let precisions: Vec<f64> = matches
        .iter()
        .zip(&totals)
        .map(|(&m, &t)| if t == 0 { 0.0 } else { m as f64 / t as f64 })
        .collect();
    let hyp_len = hypotheses.iter().map(|h| h.as_ref().len()).sum();
    let ref_len = references.iter().map(|r| r.as_ref().len()).sum();
    let bp = brevity_penalty(hyp_len, ref_len);
    Ok(BleuReport {
        score: bp * geometric_mean(&precisions),
        matches,
        totals,
        precisions,
        brevity_penalty: bp,
        hyp_len,
        ref_len,
    })
}

/// Sentence BLEU with add-one smoothing of numerator and denominator for
/// orders 2 and up; unigram precision is left unsmoothed.
pub fn sentence_bleu_smoothed<S: AsRef<str>, R: AsRef<str>>(hyp: &[S], reference: &[R], max_n: usize) -> f64 {
    if hyp.is_empty() || reference.is_empty() || max_n == 0 {
        return 0.0;
    }
    let precisions: Vec<f64> = (1..=max_n)
        .map(|n| {
            let (m, t) = segment_ngram_stats(hyp, reference, n);
            if n == 1 {
                m as f64 / t as f64
            } else {
                (m + 1) as f64 / (t + 1) as f64
            }
        })
        .collect();
    brevity_penalty(hyp.len(), reference.len()) * geometric_mean(&precisions)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn clipping() {
        let (m, t) = modified_precision(&[seg("the the the")], &[seg("the cat")], 1).unwrap();
        assert_eq!((m, t), (1, 3));
        let (m, t) = modified_precision(&[seg("a b c")], &[seg("a b c")], 1).unwrap();
        assert_eq!((m, t), (3, 3));
        let (m, t) = modified_precision(&[seg("a b")], &[seg("a b")], 3).unwrap();
        assert_eq!((m, t), (0, 0));
        assert!(modified_precision(&[seg("a")], &[seg("a"), seg("b")], 1).is_err());
    }

    #[test]
    fn worked_example() {
        let r = corpus_bleu(&[seg("the cat sat on mat")], &[seg("the cat sat on the mat")], 4).unwrap();
        assert_eq!(r.matches, vec![5, 3, 2, 1]);
        assert_eq!(r.totals, vec![5, 4, 3, 2]);
        assert!((r.brevity_penalty - (-0.2f64).exp()).abs() < 1e-15);
        // 0.25^(1/4) * e^-0.2
        assert!((r.score - 0.578_930_067_467_4).abs() < 1e-12, "{}", r.score);
    }

    #[test]
    fn identity_and_disjoint() {
        let x = vec![seg("a b c d e"), seg("f g")];
        assert_eq!(corpus_bleu(&x, &x, 4).unwrap().score, 1.0);
        let r = corpus_bleu(&[seg("a b c d")], &[seg("w x y z")], 4).unwrap();
        assert_eq!(r.score, 0.0);
        assert_eq!(r.precisions[0], 0.0);
        assert!(corpus_bleu::<Vec<String>, Vec<String>>(&[], &[], 4).is_err());
    }

    #[test]
    fn zero_precision_still_reported() {
        let r = corpus_bleu(&[seg("a b x c")], &[seg("a b y c")], 4).unwrap();
        assert_eq!(r.score, 0.0);
        assert_eq!(r.precisions[0], 0.75);
        assert_eq!(r.precisions[1], 1.0 / 3.0);
    }

    #[test]
    fn report_line() {
        let x = vec![seg("a b c d")];
        let line = corpus_bleu(&x, &x, 4).unwrap().to_string();
        assert_eq!(line, "BLEU = 100.00 (100.0/100.0/100.0/100.0, BP=1.000, ratio=1.000, hyp_len=4, ref_len=4)");
    }

    #[test]
    fn smoothed_sentence_examples() {
        // p1 = 1/2, p2 = 1/2, p3 = p4 = (0+1)/(0+1)
        let v = sentence_bleu_smoothed(&seg("a b"), &seg("a c"), 4);
        assert!((v - 0.25f64.powf(0.25)).abs() < 1e-12);
        assert_eq!(sentence_bleu_smoothed(&seg("a b"), &seg("c d"), 4), 0.0);
        assert_eq!(sentence_bleu_smoothed(&seg("x y z w"), &seg("x y z w"), 4), 1.0);
    }

    #[test]
    fn brevity() {
        assert_eq!(brevity_penalty(5, 5), 1.0);
        assert_eq!(brevity_penalty(7, 5), 1.0);
        assert_eq!(brevity_penalty(0, 5), 0.0);
        assert!(brevity_penalty(4, 5) < 1.0);
    }
}

//! Minimum Bayes-risk selection from an n-best list, with
//! `1 - smoothed sentence BLEU` as the loss.

use crate::bleu_eval::sentence_bleu_smoothed;
use crate::error::{Error, Result};

/// Expected losses closer than this count as ties.
pub const TIE_EPSILON: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct NBestEntry {
    pub hypothesis: Vec<String>,
    pub model_score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NBestList {
    pub segment_id: usize,
    pub entries: Vec<NBestEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Posterior {
    pub weights: Vec<f64>,
    pub scale_alpha: f64,
}

/// Softmax of `alpha * scores`, shifted by the maximum.
pub fn posterior_from_scores(scores: &[f64], alpha: f64) -> Result<Posterior> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::invalid(format!("alpha must be positive, got {}", alpha)));
    }
    if scores.is_empty() {
        return Err(Error::invalid("posterior over an empty list"));
    }
    let scaled: Vec<f64> = scores.iter().map(|s| alpha * s).collect();
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scaled.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    Ok(Posterior {
        weights: exps.iter().map(|e| e / z).collect(),
        scale_alpha: alpha,
    })
}

/// `1 - sentence BLEU(hyp | evidence)`, exactly 0 for identical strings.
pub fn mbr_loss(hyp: &[String], evidence: &[String]) -> f64 {
    if hyp == evidence {
        return 0.0;
    }
    1.0 - sentence_bleu_smoothed(hyp, evidence, 4)
}

/// Index of the lowest-index entry within `TIE_EPSILON` of the minimum.
pub fn argmin_first(values: &[f64]) -> usize {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    values.iter().position(|&v| v - min <= TIE_EPSILON).unwrap_or(0)
}

/// Selected index and every entry's expected loss.
pub fn mbr_select(nbest: &NBestList, alpha: f64) -> Result<(usize, Vec<f64>)> {
    if nbest.entries.is_empty() {
        return Err(Error::invalid(format!("segment {} has no hypotheses", nbest.segment_id)));
    }
    let scores: Vec<f64> = nbest.entries.iter().map(|e| e.model_score).collect();
    let posterior = posterior_from_scores(&scores, alpha)?;
    let expected: Vec<f64> = nbest
        .entries
        .iter()
        .map(|h| {
            nbest
                .entries
                .iter()
                .zip(&posterior.weights)
                .map(|(e, w)| w * mbr_loss(&h.hypothesis, &e.hypothesis))
                .sum()
        })
        .collect();
    Ok((argmin_first(&expected), expected))
}

/// Parses `segment_id ||| hypothesis tokens ||| model_score` lines; entries
/// of a segment must be contiguous.
pub fn parse_nbest(file: &str, text: &str) -> Result<Vec<NBestList>> {
    let mut lists: Vec<NBestList> = Vec::new();
    let mut finished = std::collections::BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| Error::parse(file, i + 1, msg);
        let fields: Vec<&str> = line.split("|||").map(str::trim).collect();
        if fields.len() != 3 {
            return Err(bad("expected segment_id ||| hypothesis ||| score".into()));
        }
        let segment_id: usize = fields[0]
            .parse()
            .map_err(|_| bad(format!("bad segment id {:?}", fields[0])))?;
        let model_score: f64 = fields[2]
            .parse()
            .map_err(|_| bad(format!("bad score {:?}", fields[2])))?;
        if !model_score.is_finite() {
            return Err(bad("score must be finite".into()));
        }
        let entry = NBestEntry {
            hypothesis: fields[1].split_whitespace().map(str::to_owned).collect(),
            model_score,
        };
        match lists.last_mut() {
            Some(l) if l.segment_id == segment_id => l.entries.push(entry),
            prev => {
                if let Some(p) = prev {
                    finished.insert(p.segment_id);
                }
                if finished.contains(&segment_id) {
                    return Err(bad(format!("segment {} is not contiguous", segment_id)));
                }
                lists.push(NBestList {
                    segment_id,
                    entries: vec![entry],
                });
            }
        }
    }
    Ok(lists)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list(hyps: &[(&str, f64)]) -> NBestList {
        NBestList {
            segment_id: 0,
            entries: hyps
                .iter()
                .map(|(h, s)| NBestEntry {
                    hypothesis: h.split_whitespace().map(str::to_owned).collect(),
                    model_score: *s,
                })
                .collect(),
        }
    }

    #[test]
    fn posterior_examples() {
        let p = posterior_from_scores(&[1.0; 4], 1.0).unwrap();
        assert!(p.weights.iter().all(|w| (w - 0.25).abs() < 1e-15));
        assert_eq!(posterior_from_scores(&[-3.0], 1.0).unwrap().weights, vec![1.0]);
        let p = posterior_from_scores(&[0.0, 3f64.ln()], 1.0).unwrap();
        assert!((p.weights[0] - 0.25).abs() < 1e-12 && (p.weights[1] - 0.75).abs() < 1e-12);
        assert!(posterior_from_scores(&[0.0], 0.0).is_err());
        assert!(posterior_from_scores(&[0.0], -1.0).is_err());
        let p = posterior_from_scores(&[-1000.0, -1001.0], 1.0).unwrap();
        assert!((p.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn selection_examples() {
        assert_eq!(mbr_select(&list(&[("a b", -1.0)]), 1.0).unwrap().0, 0);

        let (i, losses) = mbr_select(&list(&[("a b", -1.0), ("a b", -2.0), ("a b", -3.0)]), 1.0).unwrap();
        assert_eq!(i, 0);
        assert!(losses.iter().all(|&l| l == 0.0));

        let (i, losses) = mbr_select(&list(&[("a b c", 0.0), ("a b d", 0.0), ("x y z", 0.0)]), 1.0).unwrap();
        assert_eq!(i, 0);
        // loss(abc, abd) = 1 - (2/3 * 2/3 * 1/2 * 1)^(1/4); loss to xyz = 1
        let near = 1.0 - (2.0f64 / 9.0).powf(0.25);
        assert!((losses[0] - (near + 1.0) / 3.0).abs() < 1e-12);
        assert_eq!(losses[0], losses[1]);
        assert!((losses[2] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn nbest_parsing() {
        let text = "0 ||| a b ||| -1.5\n0 ||| a c ||| -2\n1 ||| x ||| 0\n";
        let lists = parse_nbest("n", text).unwrap();
        assert_eq!(lists.len(), 2);
        assert_eq!(lists[0].entries.len(), 2);
        assert_eq!(lists[1].entries[0].hypothesis, vec!["x".to_string()]);
        assert!(parse_nbest("n", "0 ||| a ||| 1\n1 ||| b ||| 1\n0 ||| c ||| 1\n").is_err());
        assert!(parse_nbest("n", "0 ||| a\n").is_err());
        assert!(parse_nbest("n", "0 ||| a ||| nan\n").is_err());
    }
}

//! Config-driven end-to-end run over one corpus.
//!
//! Stages, in order: symmetrize (only when two directional alignments are
//! given), strip-eos, learn-rules, apply-rules, extract-phrases, train-lm,
//! mbr-rerank (only with an n-best file), score-bleu, oov-substitute,
//! restore-eos. Every intermediate is written to the output directory, and
//! `report.txt` summarises the run without timings so that identical inputs
//! give identical bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use crate::bleu_eval::{corpus_bleu, BleuReport};
use crate::corpus_io::{
    read_alignment_file, read_dependency_file, read_dictionary, read_lines,
    read_sentences, read_tag_lines, read_token_lines, write_alignment_file, write_dependency_file, write_lines,
    AlignmentSet, Sentence, SentencePair, TaggedSentence,
};
use crate::error::{Error, Result};
use crate::mbr_rerank::{mbr_select, parse_nbest};
use crate::ngram_lm::{train_lm, Smoothing};
use crate::parallel::ordered_map;
use crate::phrase_extract::{estimate_phrase_table, ExtractConfig};
use crate::postedit::{
    detect_oov, restore_eos, strip_eos, substitute_oov, EosMarkers, EosRecord, NoTransliteration, OovAction,
    SuffixLemmatizer, DANDA,
};
use crate::reorder_rules::{
    apply_rules, crossing_score, extract_rules, score_rules, DEFAULT_MIN_COUNT, DEFAULT_MIN_PROB,
};
use crate::symmetrize::{grow_diag_final, GrowMode};

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub source: PathBuf,
    pub target: PathBuf,
    /// Symmetrized alignment; alternatively give both directional files.
    pub alignment: Option<PathBuf>,
    pub alignment_a2b: Option<PathBuf>,
    pub alignment_b2a: Option<PathBuf>,
    pub source_dep: PathBuf,
    pub source_pos: Option<PathBuf>,
    /// Source tokens in target order, scored against the reordered source.
    pub reordering_reference: Option<PathBuf>,
    /// System output to post-edit; or an n-best list to pick it from.
    pub hypothesis: Option<PathBuf>,
    pub nbest: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub dictionary: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub max_phrase_len: usize,
    pub lm_order: usize,
    pub smoothing: Smoothing,
    pub min_count: u64,
    pub min_prob: f64,
    pub symmetrization: GrowMode,
    pub eos_markers: Vec<String>,
    pub mbr_alpha: f64,
    pub workers: usize,
    /// Recorded for the experiment log only; -1 means unlimited.
    pub distortion_limit: i64,
}

impl PipelineConfig {
    /// A config with default settings for the given corpus.
    pub fn new(source: PathBuf, target: PathBuf, alignment: PathBuf, source_dep: PathBuf, output_dir: PathBuf) -> Self {
        PipelineConfig {
            source,
            target,
            alignment: Some(alignment),
            alignment_a2b: None,
            alignment_b2a: None,
            source_dep,
            source_pos: None,
            reordering_reference: None,
            hypothesis: None,
            nbest: None,
            reference: None,
            dictionary: None,
            output_dir,
            max_phrase_len: 7,
            lm_order: 5,
            smoothing: Smoothing::WittenBell,
            min_count: DEFAULT_MIN_COUNT,
            min_prob: DEFAULT_MIN_PROB,
            symmetrization: GrowMode::GrowDiagFinal,
            eos_markers: vec![".".to_owned(), DANDA.to_owned()],
            mbr_alpha: 1.0,
            workers: 1,
            distortion_limit: 6,
        }
    }

    /// Parses `key = value` lines. Blank lines and lines starting with `#`
    /// are skipped; relative paths are taken from `base_dir`.
    pub fn parse(file: &str, text: &str, base_dir: &Path) -> Result<Self> {
        let mut values: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(file, i + 1, "expected key = value"))?;
            let key = k.trim().to_owned();
            if values.insert(key.clone(), (i + 1, v.trim().to_owned())).is_some() {
                return Err(Error::parse(file, i + 1, format!("duplicate key {:?}", key)));
            }
        }

        let mut take = |key: &str| values.remove(key);
        let path = |v: Option<(usize, String)>| v.map(|(_, p)| base_dir.join(p));
        let required = |key: &str, v: Option<(usize, String)>| {
            path(v).ok_or_else(|| Error::Config(format!("{}: missing required key {:?}", file, key)))
        };
        fn number<T: FromStr>(file: &str, key: &str, v: Option<(usize, String)>, default: T) -> Result<T> {
            match v {
                None => Ok(default),
                Some((line, s)) => s
                    .parse()
                    .map_err(|_| Error::parse(file, line, format!("bad value {:?} for {}", s, key))),
            }
        }

        let mut cfg = PipelineConfig::new(
            required("source", take("source"))?,
            required("target", take("target"))?,
            PathBuf::new(),
            required("source_dep", take("source_dep"))?,
            required("output_dir", take("output_dir"))?,
        );
        cfg.alignment = path(take("alignment"));
        cfg.alignment_a2b = path(take("alignment_a2b"));
        cfg.alignment_b2a = path(take("alignment_b2a"));
        cfg.source_pos = path(take("source_pos"));
        cfg.reordering_reference = path(take("reordering_reference"));
        cfg.hypothesis = path(take("hypothesis"));
        cfg.nbest = path(take("nbest"));
        cfg.reference = path(take("reference"));
        cfg.dictionary = path(take("dictionary"));
        cfg.max_phrase_len = number(file, "max_phrase_len", take("max_phrase_len"), cfg.max_phrase_len)?;
        cfg.lm_order = number(file, "lm_order", take("lm_order"), cfg.lm_order)?;
        cfg.min_count = number(file, "min_count", take("min_count"), cfg.min_count)?;
        cfg.min_prob = number(file, "min_prob", take("min_prob"), cfg.min_prob)?;
        cfg.mbr_alpha = number(file, "mbr_alpha", take("mbr_alpha"), cfg.mbr_alpha)?;
        cfg.workers = number(file, "workers", take("workers"), cfg.workers)?;
        cfg.distortion_limit = number(file, "distortion_limit", take("distortion_limit"), cfg.distortion_limit)?;
        if let Some((line, s)) = take("smoothing") {
            cfg.smoothing = s.parse().map_err(|e: Error| Error::parse(file, line, e.to_string()))?;
        }
        if let Some((line, s)) = take("symmetrization") {
            cfg.symmetrization = s.parse().map_err(|e: Error| Error::parse(file, line, e.to_string()))?;
        }
        if let Some((_, s)) = take("eos_markers") {
            cfg.eos_markers = s.split_whitespace().map(str::to_owned).collect();
        }
        if let Some(key) = values.keys().next() {
            return Err(Error::Config(format!("{}: unknown key {:?}", file, key)));
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        PipelineConfig::parse(&path.display().to_string(), &text, base)
    }

    /// Checks ranges and that every input file exists.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.lm_order < 1 {
            return bad(format!("lm_order must be at least 1, got {}", self.lm_order));
        }
        if self.max_phrase_len < 1 {
            return bad(format!("max_phrase_len must be at least 1, got {}", self.max_phrase_len));
        }
        if self.min_count < 1 {
            return bad(format!("min_count must be at least 1, got {}", self.min_count));
        }
        if !(0.0..=1.0).contains(&self.min_prob) {
            return bad(format!("min_prob must lie in [0,1], got {}", self.min_prob));
        }
        if !self.mbr_alpha.is_finite() || self.mbr_alpha <= 0.0 {
            return bad(format!("mbr_alpha must be positive, got {}", self.mbr_alpha));
        }
        if self.workers < 1 {
            return bad("workers must be at least 1".to_owned());
        }
        if self.distortion_limit < -1 {
            return bad(format!("distortion_limit must be >= 0 or -1, got {}", self.distortion_limit));
        }
        EosMarkers::new(self.eos_markers.iter().cloned())?;
        match (&self.alignment, &self.alignment_a2b, &self.alignment_b2a) {
            (Some(_), None, None) | (None, Some(_), Some(_)) => {}
            _ => return bad("give either alignment or both alignment_a2b and alignment_b2a".to_owned()),
        }
        if self.hypothesis.is_some() && self.nbest.is_some() {
            return bad("hypothesis and nbest are mutually exclusive".to_owned());
        }
        let has_hyp = self.hypothesis.is_some() || self.nbest.is_some();
        if has_hyp && self.dictionary.is_none() {
            return bad("post-editing a hypothesis needs a dictionary".to_owned());
        }
        if self.reference.is_some() && !has_hyp {
            return bad("reference given without hypothesis or nbest".to_owned());
        }
        for p in self.input_paths() {
            if !p.is_file() {
                return bad(format!("input file {} does not exist", p.display()));
            }
        }
        Ok(())
    }

    fn input_paths(&self) -> Vec<&Path> {
        [
            Some(&self.source),
            Some(&self.target),
            self.alignment.as_ref(),
            self.alignment_a2b.as_ref(),
            self.alignment_b2a.as_ref(),
            Some(&self.source_dep),
            self.source_pos.as_ref(),
            self.reordering_reference.as_ref(),
            self.hypothesis.as_ref(),
            self.nbest.as_ref(),
            self.reference.as_ref(),
            self.dictionary.as_ref(),
        ]
        .into_iter()
        .flatten()
        .map(PathBuf::as_path)
        .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageReport {
    pub name: &'static str,
    pub seconds: f64,
    pub summary: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineReport {
    /// In execution order.
    pub stages: Vec<StageReport>,
    pub sentences: usize,
    pub eos_stripped: usize,
    pub rule_instances: usize,
    pub rules_learned: usize,
    pub crossing_before: f64,
    pub crossing_after: f64,
    pub phrases_extracted: usize,
    pub lm_training_perplexity: f64,
    pub reordering_bleu: Option<BleuReport>,
    pub hypothesis_bleu: Option<BleuReport>,
    pub postedit_bleu: Option<BleuReport>,
    pub oovs_detected: usize,
    pub oovs_replaced: usize,
    pub distortion_limit: i64,
}

impl fmt::Display for PipelineReport {
    /// The deterministic summary: everything except timings.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "stages\t{}", self.stages.iter().map(|s| s.name).collect::<Vec<_>>().join(" "))?;
        writeln!(f, "sentences\t{}", self.sentences)?;
        writeln!(f, "eos_stripped\t{}", self.eos_stripped)?;
        writeln!(f, "rule_instances\t{}", self.rule_instances)?;
        writeln!(f, "rules_learned\t{}", self.rules_learned)?;
        writeln!(f, "crossing_before\t{:.6}", self.crossing_before)?;
        writeln!(f, "crossing_after\t{:.6}", self.crossing_after)?;
        writeln!(f, "phrases_extracted\t{}", self.phrases_extracted)?;
        writeln!(f, "lm_training_perplexity\t{:.6}", self.lm_training_perplexity)?;
        for (name, bleu) in [
            ("reordering_bleu", &self.reordering_bleu),
            ("hypothesis_bleu", &self.hypothesis_bleu),
            ("postedit_bleu", &self.postedit_bleu),
        ] {
            if let Some(b) = bleu {
                writeln!(f, "{}\t{}", name, b)?;
            }
        }
        writeln!(f, "oovs_detected\t{}", self.oovs_detected)?;
        writeln!(f, "oovs_replaced\t{}", self.oovs_replaced)?;
        writeln!(f, "distortion_limit\t{}", self.distortion_limit)
    }
}

impl PipelineReport {
    /// Per-stage wall time, for humans.
    pub fn timings(&self) -> String {
        self.stages
            .iter()
            .map(|s| format!("{:<16} {:>9.3}s  {}\n", s.name, s.seconds, s.summary))
            .collect()
    }
}

struct Stages {
    done: Vec<StageReport>,
}

impl Stages {
    fn run<T>(&mut self, name: &'static str, f: impl FnOnce() -> Result<(T, String)>) -> Result<T> {
        let start = Instant::now();
        let (value, summary) = f().map_err(|e| Error::invalid(format!("stage {}: {}", name, e)))?;
        self.done.push(StageReport {
            name,
            seconds: start.elapsed().as_secs_f64(),
            summary,
        });
        Ok(value)
    }
}

fn lines_of(sents: &[Vec<String>]) -> impl Iterator<Item = String> + '_ {
    sents.iter().map(|s| s.join(" "))
}

fn strip_all(sents: &[Vec<String>], markers: &EosMarkers) -> (Vec<Vec<String>>, Vec<EosRecord>) {
    let mut out = Vec::with_capacity(sents.len());
    let mut records = Vec::new();
    for (i, s) in sents.iter().enumerate() {
        let (t, r) = strip_eos(i, s, markers);
        out.push(t);
        records.extend(r);
    }
    (out, records)
}

fn write_records(path: &Path, records: &[EosRecord]) -> Result<()> {
    write_lines(path, records.iter().map(EosRecord::to_line))
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn vocab(sents: &[Vec<String>]) -> BTreeSet<String> {
    sents.iter().flatten().cloned().collect()
}

fn check_parallel(name: &Path, n: usize, expected: usize) -> Result<()> {
    if n != expected {
        return Err(Error::invalid(format!(
            "{} has {} lines, expected {}",
            name.display(),
            n,
            expected
        )));
    }
    Ok(())
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let file = |name: &str| out.join(name);
    let markers = EosMarkers::new(cfg.eos_markers.iter().cloned())?;
    let workers = cfg.workers;
    let mut stages = Stages { done: Vec::new() };

    let sources: Vec<Vec<String>> = read_sentences(&cfg.source)?.into_iter().map(Sentence::into_tokens).collect();
    let targets: Vec<Vec<String>> = read_sentences(&cfg.target)?.into_iter().map(Sentence::into_tokens).collect();
    check_parallel(&cfg.target, targets.len(), sources.len())?;
    let lengths: Vec<(usize, usize)> = sources.iter().zip(&targets).map(|(s, t)| (s.len(), t.len())).collect();
    let trees = read_dependency_file(&cfg.source_dep)?;
    check_parallel(&cfg.source_dep, trees.len(), sources.len())?;
    let source_pos = match &cfg.source_pos {
        Some(p) => {
            let tags = read_tag_lines(p)?;
            check_parallel(p, tags.len(), sources.len())?;
            Some(tags)
        }
        None => None,
    };

    let alignments = match (&cfg.alignment, &cfg.alignment_a2b, &cfg.alignment_b2a) {
        (Some(a), _, _) => read_alignment_file(a, &lengths)?,
        (None, Some(a2b), Some(b2a)) => {
            let a2b = read_alignment_file(a2b, &lengths)?;
            let b2a = read_alignment_file(b2a, &lengths)?;
            stages.run("symmetrize", || {
                let sym = a2b
                    .iter()
                    .zip(&b2a)
                    .map(|(x, y)| grow_diag_final(x, y, cfg.symmetrization))
                    .collect::<Result<Vec<_>>>()?;
                write_alignment_file(&file("alignment.sym"), &sym)?;
                let links: usize = sym.iter().map(AlignmentSet::len).sum();
                Ok((sym, format!("{} links ({})", links, cfg.symmetrization)))
            })?
        }
        _ => unreachable!("checked by validate"),
    };

    // The source marker is cut from the text, its POS tags, its parse and
    // the alignment; the target marker from the text and the alignment.
    let (src, tgt, pairs) = stages.run("strip-eos", || {
        let (src, src_records) = strip_all(&sources, &markers);
        let (tgt, tgt_records) = strip_all(&targets, &markers);
        let mut pairs = Vec::with_capacity(src.len());
        let mut stripped_trees = Vec::with_capacity(src.len());
        for i in 0..src.len() {
            let tree = if src[i].len() < sources[i].len() {
                trees[i].without_last_leaf().ok_or_else(|| Error::Tree {
                    file: cfg.source_dep.display().to_string(),
                    index: i + 1,
                    message: "the removed marker is not a leaf of the parse".to_owned(),
                })?
            } else {
                trees[i].clone()
            };
            let pos = source_pos.as_ref().map(|tags| tags[i][..src[i].len().min(tags[i].len())].to_vec());
            let alignment = alignments[i].truncated(src[i].len(), tgt[i].len());
            let pair = SentencePair::new(
                Sentence::new(src[i].clone())?,
                pos,
                Sentence::new(tgt[i].clone())?,
                None,
                alignment,
                Some(tree.clone()),
            )
            .map_err(|e| Error::invalid(format!("sentence {}: {}", i + 1, e)))?;
            stripped_trees.push(tree);
            pairs.push(pair);
        }
        write_lines(&file("source.stripped"), lines_of(&src))?;
        write_lines(&file("target.stripped"), lines_of(&tgt))?;
        write_records(&file("source.eos"), &src_records)?;
        write_records(&file("target.eos"), &tgt_records)?;
        write_dependency_file(&file("source.stripped.dep"), &stripped_trees)?;
        write_alignment_file(&file("alignment.stripped"), &pairs.iter().map(|p| p.alignment.clone()).collect::<Vec<_>>())?;
        let summary = format!("{} source, {} target markers removed", src_records.len(), tgt_records.len());
        Ok(((src, tgt, pairs), summary))
    })?;
    let eos_stripped = sources.iter().zip(&src).filter(|(a, b)| a.len() != b.len()).count();

    let (instances, table) = stages.run("learn-rules", || {
        let instances = extract_rules(&pairs, workers)?;
        let table = score_rules(&instances, cfg.min_count, cfg.min_prob);
        write_lines(&file("rules.txt"), table.to_lines())?;
        let summary = format!("{} instances, {} rules", instances.len(), table.len());
        Ok(((instances.len(), table), summary))
    })?;

    let reordered_pairs = stages.run("apply-rules", || {
        let applied = ordered_map(&pairs, workers, |p| -> Result<(Sentence, Vec<usize>)> {
            let tagged: TaggedSentence = p
                .source_tagged()
                .ok_or_else(|| Error::invalid("source sentence without POS tags"))?;
            let tree = p.source_tree.as_ref().expect("every pair carries a parse");
            let (sentence, perm) = apply_rules(&tagged, tree, &table)?;
            Ok((sentence, perm.mapping().to_vec()))
        });
        let mut reordered = Vec::with_capacity(pairs.len());
        let mut perm_lines = Vec::with_capacity(pairs.len());
        for (p, r) in pairs.iter().zip(applied) {
            let (sentence, mapping) = r?;
            let mut new_position = vec![0; mapping.len()];
            for (slot, &old) in mapping.iter().enumerate() {
                new_position[old] = slot;
            }
            perm_lines.push(mapping.iter().map(usize::to_string).collect::<Vec<_>>().join(" "));
            reordered.push(SentencePair::new(
                sentence,
                None,
                p.target.clone(),
                None,
                p.alignment.remap_source(&new_position),
                None,
            )?);
        }
        write_lines(&file("source.reordered"), reordered.iter().map(|p| p.source.to_string()))?;
        write_lines(&file("source.perm"), perm_lines)?;
        write_alignment_file(
            &file("alignment.reordered"),
            &reordered.iter().map(|p| p.alignment.clone()).collect::<Vec<_>>(),
        )?;
        let before = mean(pairs.iter().map(|p| crossing_score(&p.alignment)));
        let after = mean(reordered.iter().map(|p| crossing_score(&p.alignment)));
        let summary = format!("crossing {:.4} -> {:.4}", before, after);
        Ok(((reordered, before, after), summary))
    })?;
    let (reordered, crossing_before, crossing_after) = reordered_pairs;

    let phrases_extracted = stages.run("extract-phrases", || {
        let extract = ExtractConfig::new(cfg.max_phrase_len)?;
        let table = estimate_phrase_table(&reordered, &extract, workers);
        write_lines(&file("phrase-table.txt"), table.to_lines())?;
        let n = table.len();
        Ok((n, format!("{} phrase pairs", n)))
    })?;

    let lm_training_perplexity = stages.run("train-lm", || {
        let lm = train_lm(&tgt, cfg.lm_order, cfg.smoothing)?;
        fs::write(file("lm.arpa"), lm.to_arpa()).map_err(|e| Error::io(file("lm.arpa"), e))?;
        let ppl = lm.perplexity(&tgt);
        Ok((ppl, format!("order {} {}, training perplexity {:.4}", cfg.lm_order, cfg.smoothing, ppl)))
    })?;

    let hypotheses: Option<Vec<Vec<String>>> = match (&cfg.hypothesis, &cfg.nbest) {
        (Some(h), _) => {
            let hyps = read_token_lines(h)?;
            check_parallel(h, hyps.len(), sources.len())?;
            Some(hyps)
        }
        (None, Some(n)) => {
            let text = fs::read_to_string(n).map_err(|e| Error::io(n, e))?;
            let lists = parse_nbest(&n.display().to_string(), &text)?;
            Some(stages.run("mbr-rerank", || {
                let mut chosen = Vec::with_capacity(lists.len());
                for list in &lists {
                    let (i, _) = mbr_select(list, cfg.mbr_alpha)?;
                    chosen.push(list.entries[i].hypothesis.clone());
                }
                write_lines(&file("hypothesis.mbr"), lines_of(&chosen))?;
                let summary = format!("{} segments, alpha {}", chosen.len(), cfg.mbr_alpha);
                Ok((chosen, summary))
            })?)
        }
        (None, None) => None,
    };
    if let Some(h) = &hypotheses {
        check_parallel(cfg.nbest.as_ref().or(cfg.hypothesis.as_ref()).unwrap(), h.len(), sources.len())?;
    }
    let references = match &cfg.reference {
        Some(r) => {
            let refs = read_token_lines(r)?;
            check_parallel(r, refs.len(), sources.len())?;
            Some(strip_all(&refs, &markers).0)
        }
        None => None,
    };
    let stripped_hyps = hypotheses.as_ref().map(|h| strip_all(h, &markers));

    let (reordering_bleu, hypothesis_bleu) = stages.run("score-bleu", || {
        let reordering = match &cfg.reordering_reference {
            Some(p) => {
                let refs = read_token_lines(p)?;
                check_parallel(p, refs.len(), sources.len())?;
                let refs = strip_all(&refs, &markers).0;
                let hyps: Vec<&[String]> = reordered.iter().map(|p| p.source.tokens()).collect();
                Some(corpus_bleu(&hyps, &refs, 4)?)
            }
            None => None,
        };
        let hypothesis = match (&stripped_hyps, &references) {
            (Some((h, _)), Some(r)) => Some(corpus_bleu(h, r, 4)?),
            _ => None,
        };
        let mut lines = Vec::new();
        if let Some(b) = &reordering {
            lines.push(format!("reordering\t{}", b));
        }
        if let Some(b) = &hypothesis {
            lines.push(format!("hypothesis\t{}", b));
        }
        write_lines(&file("bleu.txt"), &lines)?;
        let summary = if lines.is_empty() { "nothing to score".to_owned() } else { lines.join("; ") };
        Ok(((reordering, hypothesis), summary))
    })?;

    let mut report = PipelineReport {
        stages: Vec::new(),
        sentences: sources.len(),
        eos_stripped,
        rule_instances: instances,
        rules_learned: table.len(),
        crossing_before,
        crossing_after,
        phrases_extracted,
        lm_training_perplexity,
        reordering_bleu,
        hypothesis_bleu,
        postedit_bleu: None,
        oovs_detected: 0,
        oovs_replaced: 0,
        distortion_limit: cfg.distortion_limit,
    };

    if let Some((hyps, hyp_records)) = &stripped_hyps {
        let dictionary = read_dictionary(cfg.dictionary.as_ref().expect("checked by validate"))?;
        let edited = stages.run("oov-substitute", || {
            let target_vocab = vocab(&tgt);
            let source_vocab = vocab(&src);
            let mut edited = Vec::with_capacity(hyps.len());
            let mut report_lines = Vec::new();
            let (mut detected, mut replaced) = (0, 0);
            for (i, h) in hyps.iter().enumerate() {
                let positions = detect_oov(h, &target_vocab, &source_vocab);
                let (out, actions) = substitute_oov(h, &positions, &dictionary, &SuffixLemmatizer, &NoTransliteration)?;
                detected += actions.len();
                replaced += actions.iter().filter(|a| matches!(a.action, OovAction::Replaced(_))).count();
                report_lines.extend(actions.iter().map(|a| format!("{}\t{}", i, a)));
                edited.push(out);
            }
            write_lines(&file("hypothesis.postedit"), lines_of(&edited))?;
            write_lines(&file("oov-report.txt"), report_lines)?;
            Ok(((edited, detected, replaced), format!("{} unknown words, {} replaced", detected, replaced)))
        })?;
        let (edited, detected, replaced) = edited;
        report.oovs_detected = detected;
        report.oovs_replaced = replaced;
        if let Some(r) = &references {
            report.postedit_bleu = Some(corpus_bleu(&edited, r, 4)?);
        }

        stages.run("restore-eos", || {
            let by_index: BTreeMap<usize, &EosRecord> = hyp_records.iter().map(|r| (r.sentence_index, r)).collect();
            let restored: Vec<Vec<String>> = edited
                .iter()
                .enumerate()
                .map(|(i, s)| restore_eos(s, by_index.get(&i).copied()))
                .collect();
            write_records(&file("hypothesis.eos"), hyp_records)?;
            write_lines(&file("hypothesis.final"), lines_of(&restored))?;
            Ok(((), format!("{} markers restored", hyp_records.len())))
        })?;
    }

    report.stages = stages.done;
    fs::write(file("report.txt"), report.to_string()).map_err(|e| Error::io(file("report.txt"), e))?;
    Ok(report)
}

/// Reads an EOS sidecar.
pub fn read_eos_records(path: &Path) -> Result<Vec<EosRecord>> {
    let name = path.display().to_string();
    read_lines(path)?
        .iter()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| EosRecord::parse(l).map_err(|e| Error::parse(&name, i + 1, e.to_string())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_config() {
        let text = "# toy\nsource = s.txt\ntarget = t.txt\nalignment = a.txt\nsource_dep = s.dep\n\
                    output_dir = out\nlm_order = 3\nsmoothing = mle\ndistortion_limit = -1\neos_markers = . |\n";
        let cfg = PipelineConfig::parse("c", text, Path::new("/data")).unwrap();
        assert_eq!(cfg.source, PathBuf::from("/data/s.txt"));
        assert_eq!(cfg.lm_order, 3);
        assert_eq!(cfg.smoothing, Smoothing::Mle);
        assert_eq!(cfg.distortion_limit, -1);
        assert_eq!(cfg.eos_markers, vec![".", "|"]);
        assert_eq!(cfg.max_phrase_len, 7);
    }

    #[test]
    fn rejects_bad_config() {
        let base = "source = s\ntarget = t\nalignment = a\nsource_dep = d\noutput_dir = o\n";
        assert!(PipelineConfig::parse("c", &format!("{}colour = red\n", base), Path::new(".")).is_err());
        assert!(PipelineConfig::parse("c", &format!("{}lm_order = x\n", base), Path::new(".")).is_err());
        assert!(PipelineConfig::parse("c", &format!("{}lm_order = 2\nlm_order = 3\n", base), Path::new(".")).is_err());
        assert!(PipelineConfig::parse("c", "source = s\n", Path::new(".")).is_err());
    }

    #[test]
    fn zero_order_fails_validation() {
        let mut cfg = PipelineConfig::new("s".into(), "t".into(), "a".into(), "d".into(), "o".into());
        cfg.lm_order = 0;
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("lm_order"), "{}", err);
        cfg.lm_order = 5;
        cfg.distortion_limit = -2;
        assert!(cfg.validate().unwrap_err().to_string().contains("distortion_limit"));
    }
}

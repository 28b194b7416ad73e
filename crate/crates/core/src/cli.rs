//! Command-line front end. Data goes to files or stdout, diagnostics to
//! stderr. Exit status: 0 success, 1 invalid input, 2 usage error.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bleu_eval::corpus_bleu;
use crate::corpus_io::{
    read_alignment_file_unsized, read_dictionary, read_parallel_corpus, read_sentences,
    read_tag_lines, read_token_lines, write_alignment_file, AlignmentSet, CorpusPaths, TaggedSentence,
};
use crate::error::{Error, Result};
use crate::mbr_rerank::{mbr_select, parse_nbest};
use crate::ngram_lm::{train_lm, NGramLM, Smoothing};
use crate::parallel::ordered_map;
use crate::phrase_extract::{estimate_phrase_table, ExtractConfig};
use crate::pipeline::{read_eos_records, run_pipeline, PipelineConfig};
use crate::postedit::{
    detect_oov, restore_eos, strip_eos, substitute_oov, EosMarkers, EosRecord, NoTransliteration, SuffixLemmatizer,
};
use crate::reorder_rules::{apply_rules, extract_rules, score_rules, RuleTable, DEFAULT_MIN_COUNT, DEFAULT_MIN_PROB};
use crate::symmetrize::{grow_diag_final, GrowMode};

#[derive(Parser, Debug)]
#[command(name = "preorder", version, about = "Dependency-based source preordering and SMT corpus tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Merge two directional alignments.
    Symmetrize {
        #[arg(long)]
        a2b: PathBuf,
        /// Reverse-direction alignment, also written source index first.
        #[arg(long)]
        b2a: PathBuf,
        #[arg(long, default_value = "gdf")]
        mode: GrowMode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract phrase pairs and write a relative-frequency phrase table.
    ExtractPhrases {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value_t = 7)]
        max_len: usize,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learn head-local reordering rules from parsed, aligned text.
    LearnRules {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        thresholds: Thresholds,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reorder source sentences with a rule table.
    ApplyRules {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        dep: PathBuf,
        /// POS tags; defaults to the parse's tags.
        #[arg(long)]
        src_pos: Option<PathBuf>,
        #[arg(long)]
        rules: PathBuf,
        #[command(flatten)]
        thresholds: Thresholds,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Permutation per sentence: output slot k holds source token i_k.
        #[arg(long)]
        perm_out: PathBuf,
    },
    /// Train an n-gram language model and write it in ARPA format.
    TrainLm {
        #[arg(long)]
        text: PathBuf,
        #[arg(long, default_value_t = 5)]
        order: usize,
        #[arg(long, default_value = "wb")]
        smoothing: Smoothing,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Perplexity of a text under an ARPA model.
    Ppl {
        #[arg(long)]
        lm: PathBuf,
        #[arg(long)]
        text: PathBuf,
    },
    /// Corpus BLEU of a hypothesis file against one reference.
    ScoreBleu {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long, default_value_t = 4)]
        max_n: usize,
    },
    /// Remove declarative sentence-final markers.
    StripEos {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sidecar of `index<TAB>marker` lines.
        #[arg(long)]
        records: PathBuf,
        /// Markers to strip, repeatable; default ".".
        #[arg(long = "marker")]
        markers: Vec<String>,
    },
    /// Put stripped markers back.
    RestoreEos {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replace passed-through source words via a root dictionary.
    OovSubstitute {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        dict: PathBuf,
        /// Text whose tokens form the source vocabulary.
        #[arg(long)]
        src_vocab: PathBuf,
        /// Text whose tokens form the target vocabulary.
        #[arg(long)]
        tgt_vocab: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
    },
    /// Minimum Bayes-risk selection from an n-best list.
    MbrRerank {
        #[arg(long)]
        nbest: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every stage from a key=value config file.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's worker count.
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Args, Debug)]
struct CorpusArgs {
    #[arg(long)]
    src: PathBuf,
    #[arg(long)]
    tgt: PathBuf,
    #[arg(long)]
    align: PathBuf,
    #[arg(long)]
    src_pos: Option<PathBuf>,
    #[arg(long)]
    dep: Option<PathBuf>,
}

impl CorpusArgs {
    fn paths(&self) -> CorpusPaths {
        CorpusPaths {
            source: self.src.clone(),
            target: self.tgt.clone(),
            alignment: self.align.clone(),
            source_pos: self.src_pos.clone(),
            target_pos: None,
            source_dep: self.dep.clone(),
        }
    }
}

#[derive(Args, Debug)]
struct Thresholds {
    #[arg(long, default_value_t = DEFAULT_MIN_COUNT)]
    min_count: u64,
    #[arg(long, default_value_t = DEFAULT_MIN_PROB)]
    min_prob: f64,
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn run_subcommand<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e);
            1
        }
    }
}

fn emit<I, S>(out: Option<&Path>, lines: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    match out {
        Some(path) => crate::corpus_io::write_lines(path, lines),
        None => {
            let stdout = io::stdout();
            let mut w = io::BufWriter::new(stdout.lock());
            for l in lines {
                writeln!(w, "{}", l.as_ref()).map_err(|e| Error::io("<stdout>", e))?;
            }
            w.flush().map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn read_vocab(path: &Path) -> Result<BTreeSet<String>> {
    Ok(read_token_lines(path)?.into_iter().flatten().collect())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Symmetrize { a2b, b2a, mode, out } => {
            let x = read_alignment_file_unsized(&a2b)?;
            let y = read_alignment_file_unsized(&b2a)?;
            if x.len() != y.len() {
                return Err(Error::LineCount {
                    first: a2b.display().to_string(),
                    first_count: x.len(),
                    second: b2a.display().to_string(),
                    second_count: y.len(),
                });
            }
            let merged = x
                .iter()
                .zip(&y)
                .map(|(p, q)| {
                    let s = p.src_len().max(q.src_len());
                    let t = p.tgt_len().max(q.tgt_len());
                    let widen = |a: &AlignmentSet| AlignmentSet::new(s, t, a.iter());
                    grow_diag_final(&widen(p)?, &widen(q)?, mode)
                })
                .collect::<Result<Vec<_>>>()?;
            match out {
                Some(path) => write_alignment_file(&path, &merged),
                None => emit(None, merged.iter().map(AlignmentSet::to_line)),
            }
        }
        Command::ExtractPhrases {
            corpus,
            max_len,
            workers,
            out,
        } => {
            let cfg = ExtractConfig::new(max_len)?;
            let corpus = read_parallel_corpus(&corpus.paths())?;
            let table = estimate_phrase_table(&corpus.pairs, &cfg, workers);
            emit(out.as_deref(), table.to_lines())
        }
        Command::LearnRules {
            corpus,
            thresholds,
            workers,
            out,
        } => {
            if corpus.dep.is_none() {
                return Err(Error::invalid("learn-rules needs --dep"));
            }
            let corpus = read_parallel_corpus(&corpus.paths())?;
            let instances = extract_rules(&corpus.pairs, workers)?;
            let table = score_rules(&instances, thresholds.min_count, thresholds.min_prob);
            eprintln!("{} rule instances, {} rules kept", instances.len(), table.len());
            emit(out.as_deref(), table.to_lines())
        }
        Command::ApplyRules {
            src,
            dep,
            src_pos,
            rules,
            thresholds,
            workers,
            out,
            perm_out,
        } => {
            let sentences = read_sentences(&src)?;
            let trees = crate::corpus_io::read_dependency_file(&dep)?;
            check_count(&src, sentences.len(), &dep, trees.len())?;
            let tags = match &src_pos {
                Some(p) => {
                    let t = read_tag_lines(p)?;
                    check_count(&src, sentences.len(), p, t.len())?;
                    Some(t)
                }
                None => None,
            };
            let text = fs::read_to_string(&rules).map_err(|e| Error::io(&rules, e))?;
            let table = RuleTable::parse(
                &rules.display().to_string(),
                &text,
                thresholds.min_count,
                thresholds.min_prob,
            )?;
            let items: Vec<usize> = (0..sentences.len()).collect();
            let results = ordered_map(&items, workers, |&i| {
                let pos = match &tags {
                    Some(t) => t[i].clone(),
                    None => trees[i].pos_tags(),
                };
                let tagged = TaggedSentence::new(sentences[i].clone(), pos)
                    .and_then(|t| apply_rules(&t, &trees[i], &table))
                    .map_err(|e| Error::parse(src.display().to_string(), i + 1, e.to_string()))?;
                Ok::<_, Error>(tagged)
            });
            let mut text_lines = Vec::with_capacity(results.len());
            let mut perm_lines = Vec::with_capacity(results.len());
            for r in results {
                let (sentence, perm) = r?;
                text_lines.push(sentence.to_string());
                perm_lines.push(perm.to_line());
            }
            crate::corpus_io::write_lines(&perm_out, perm_lines)?;
            emit(out.as_deref(), text_lines)
        }
        Command::TrainLm {
            text,
            order,
            smoothing,
            out,
        } => {
            let corpus = read_token_lines(&text)?;
            let lm = train_lm(&corpus, order, smoothing)?;
            let arpa = lm.to_arpa();
            match out {
                Some(path) => fs::write(&path, arpa).map_err(|e| Error::io(&path, e)),
                None => emit(None, arpa.lines()),
            }
        }
        Command::Ppl { lm, text } => {
            let model_text = fs::read_to_string(&lm).map_err(|e| Error::io(&lm, e))?;
            let model = NGramLM::from_arpa(&model_text)
                .map_err(|e| Error::invalid(format!("{}: {}", lm.display(), e)))?;
            let corpus = read_token_lines(&text)?;
            if corpus.is_empty() {
                return Err(Error::invalid(format!("{} is empty", text.display())));
            }
            let logprob: f64 = corpus.iter().map(|s| model.sequence_logprob(s)).sum();
            let tokens: usize = corpus.iter().map(|s| s.len() + 1).sum();
            emit(
                None,
                [format!(
                    "sentences={} tokens={} logprob={:.4} ppl={:.4}",
                    corpus.len(),
                    tokens,
                    logprob,
                    model.perplexity(&corpus)
                )],
            )
        }
        Command::ScoreBleu { hyp, reference, max_n } => {
            let h = read_token_lines(&hyp)?;
            let r = read_token_lines(&reference)?;
            check_count(&hyp, h.len(), &reference, r.len())?;
            let report = corpus_bleu(&h, &r, max_n)?;
            emit(None, [report.to_string()])
        }
        Command::StripEos {
            input,
            out,
            records,
            markers,
        } => {
            let markers = if markers.is_empty() {
                EosMarkers::default()
            } else {
                EosMarkers::new(markers)?
            };
            let lines = read_token_lines(&input)?;
            let mut stripped = Vec::with_capacity(lines.len());
            let mut recs = Vec::new();
            for (i, l) in lines.iter().enumerate() {
                let (s, r) = strip_eos(i, l, &markers);
                stripped.push(s.join(" "));
                recs.extend(r);
            }
            crate::corpus_io::write_lines(&records, recs.iter().map(EosRecord::to_line))?;
            emit(out.as_deref(), stripped)
        }
        Command::RestoreEos { input, records, out } => {
            let lines = read_token_lines(&input)?;
            let recs = read_eos_records(&records)?;
            let mut by_index = BTreeMap::new();
            for r in &recs {
                if r.sentence_index >= lines.len() {
                    return Err(Error::invalid(format!(
                        "{}: record for sentence {} but {} has {} lines",
                        records.display(),
                        r.sentence_index,
                        input.display(),
                        lines.len()
                    )));
                }
                by_index.insert(r.sentence_index, r);
            }
            let restored = lines
                .iter()
                .enumerate()
                .map(|(i, l)| restore_eos(l, by_index.get(&i).copied()).join(" "));
            emit(out.as_deref(), restored)
        }
        Command::OovSubstitute {
            input,
            dict,
            src_vocab,
            tgt_vocab,
            out,
            report,
        } => {
            let lines = read_token_lines(&input)?;
            let dictionary = read_dictionary(&dict)?;
            let sv = read_vocab(&src_vocab)?;
            let tv = read_vocab(&tgt_vocab)?;
            let mut edited = Vec::with_capacity(lines.len());
            let mut report_lines = Vec::new();
            for (i, l) in lines.iter().enumerate() {
                let positions = detect_oov(l, &tv, &sv);
                let (o, actions) = substitute_oov(l, &positions, &dictionary, &SuffixLemmatizer, &NoTransliteration)?;
                report_lines.extend(actions.iter().map(|a| format!("{}\t{}", i, a)));
                edited.push(o.join(" "));
            }
            crate::corpus_io::write_lines(&report, report_lines)?;
            emit(out.as_deref(), edited)
        }
        Command::MbrRerank { nbest, alpha, out } => {
            let text = fs::read_to_string(&nbest).map_err(|e| Error::io(&nbest, e))?;
            let lists = parse_nbest(&nbest.display().to_string(), &text)?;
            let mut chosen = Vec::with_capacity(lists.len());
            for list in &lists {
                let (i, _) = mbr_select(list, alpha)?;
                chosen.push(list.entries[i].hypothesis.join(" "));
            }
            emit(out.as_deref(), chosen)
        }
        Command::Pipeline { config, workers } => {
            let mut cfg = PipelineConfig::from_file(&config)?;
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let report = run_pipeline(&cfg)?;
            eprint!("{}", report.timings());
            emit(None, report.to_string().lines())
        }
    }
}

fn check_count(a: &Path, na: usize, b: &Path, nb: usize) -> Result<()> {
    if na != nb {
        return Err(Error::LineCount {
            first: a.display().to_string(),
            first_count: na,
            second: b.display().to_string(),
            second_count: nb,
        });
    }
    Ok(())
}

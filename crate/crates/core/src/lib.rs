//! Source-side syntactic preordering for phrase-based SMT, with the corpus
//! tooling around it: alignment symmetrization, phrase extraction with
//! lexicalized orientation counts, n-gram language modelling, BLEU,
//! end-of-sentence and unknown-word post-editing, and MBR reranking.

pub mod bleu_eval;
pub mod cli;
pub mod corpus_io;
pub mod error;
pub mod mbr_rerank;
pub mod ngram_lm;
pub mod parallel;
pub mod phrase_extract;
pub mod pipeline;
pub mod postedit;
pub mod reorder_rules;
pub mod symmetrize;
pub mod synth;

pub use error::{Error, Result};

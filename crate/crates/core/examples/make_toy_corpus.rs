//! Writes the bundled toy corpus used by the pipeline tests.
//!
//!     cargo run --example make_toy_corpus -- data/toy

use std::fs;
use std::path::PathBuf;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use preorder::synth::{generate, lexicon, SynthConfig};

const SENTENCES: usize = 60;
const SEED: u64 = 2013;

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/toy".to_owned()));
    fs::create_dir_all(&dir).expect("create output directory");
    let pairs = generate(&SynthConfig {
        sentences: SENTENCES,
        seed: SEED,
        with_markers: true,
    });
    let translate: std::collections::BTreeMap<&str, &str> = lexicon().into_iter().collect();

    let mut src = String::new();
    let mut tgt = String::new();
    let mut align = String::new();
    let mut dep = String::new();
    let mut reorder = String::new();
    let mut hyp = String::new();
    let mut rng = StdRng::seed_from_u64(SEED);

    for p in &pairs {
        src += &(p.source.join(" ") + "\n");
        tgt += &(p.target.join(" ") + "\n");
        reorder += &(p.reordered_source.join(" ") + "\n");
        let links: Vec<String> = p.alignment.iter().map(|(s, t)| format!("{}-{}", s, t)).collect();
        align += &(links.join(" ") + "\n");
        for (i, ((form, pos), head)) in p.source.iter().zip(&p.source_pos).zip(&p.heads).enumerate() {
            let label = if *head == 0 { "root" } else { "dep" };
            dep += &format!("{}\t{}\t{}\t{}\t{}\n", i + 1, form, pos, head, label);
        }
        dep += "\n";

        // A plausible system output: the reference with some words left
        // untranslated and, now and then, one word dropped.
        let mut out: Vec<String> = p
            .reordered_source
            .iter()
            .zip(&p.target)
            .map(|(s, t)| {
                if translate.contains_key(s.as_str()) && rng.gen_bool(0.15) {
                    s.clone()
                } else {
                    t.clone()
                }
            })
            .collect();
        if out.len() > 4 && rng.gen_bool(0.3) {
            out.remove(rng.gen_range(0..out.len() - 1));
        }
        hyp += &(out.join(" ") + "\n");
    }

    // Nouns and verbs only: passed-through adjectives and function words
    // stay as they are.
    let mut dict = String::new();
    for (s, t) in lexicon() {
        if pairs.iter().any(|p| {
            p.source
                .iter()
                .zip(&p.source_pos)
                .any(|(w, pos)| w == s && (pos == "NN" || pos == "VB"))
        }) {
            dict += &format!("{}\t{}\n", s, t);
        }
    }

    let files = [
        ("src.txt", src),
        ("tgt.txt", tgt.clone()),
        ("align.txt", align),
        ("src.dep", dep),
        ("reorder.ref", reorder),
        ("hyp.txt", hyp),
        ("ref.txt", tgt),
        ("dict.tsv", dict),
    ];
    for (name, text) in files {
        fs::write(dir.join(name), text).expect("write corpus file");
    }
    fs::write(
        dir.join("toy.conf"),
        "# Toy English-Hindi corpus generated by examples/make_toy_corpus.rs\n\
         source = src.txt\n\
         target = tgt.txt\n\
         alignment = align.txt\n\
         source_dep = src.dep\n\
         reordering_reference = reorder.ref\n\
         hypothesis = hyp.txt\n\
         reference = ref.txt\n\
         dictionary = dict.tsv\n\
         output_dir = out\n\
         \n\
         max_phrase_len = 4\n\
         lm_order = 5\n\
         smoothing = wb\n\
         min_count = 2\n\
         min_prob = 0.5\n\
         symmetrization = gdf\n\
         eos_markers = . \u{0964}\n\
         mbr_alpha = 1.0\n\
         workers = 1\n\
         distortion_limit = 6\n",
    )
    .expect("write config");
}

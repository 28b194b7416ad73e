//! Reading, validating and writing the corpora the toolkit consumes.
//!
//! File conventions:
//!
//! * text corpora: UTF-8, one sentence per line, tokens separated by single spaces;
//! * alignments: one line per sentence pair of 0-based `i-j` links, source index
//!   first, empty line for no links;
//! * POS sidecars: one line of space-separated tags per sentence;
//! * dependency parses: blank-line-separated blocks of
//!   `ID<TAB>FORM<TAB>POS<TAB>HEAD<TAB>DEPREL` lines, IDs 1-based and
//!   contiguous, HEAD 0 for the root;
//! * dictionaries: `source_root<TAB>target_root` per line.
//!
//! None of these formats is mandated by an external tool; they follow the
//! usual conventions of aligner and CoNLL-style parser output.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// A tokenized sentence: at least one token, no token containing whitespace.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sentence(Vec<String>);

impl Sentence {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::invalid("empty sentence"));
        }
        if let Some(bad) = tokens
            .iter()
            .find(|t| t.is_empty() || t.chars().any(char::is_whitespace))
        {
            return Err(Error::invalid(format!("invalid token {:?}", bad)));
        }
        Ok(Sentence(tokens))
    }

    /// Parses a space-separated line.
    pub fn parse(line: &str) -> Result<Self> {
        Sentence::new(line.split_whitespace().map(str::to_owned).collect())
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.0
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

/// A sentence with one POS tag per token.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaggedSentence {
    sentence: Sentence,
    pos: Vec<String>,
}

impl TaggedSentence {
    pub fn new(sentence: Sentence, pos: Vec<String>) -> Result<Self> {
        if pos.len() != sentence.len() {
            return Err(Error::invalid(format!(
                "{} tags for {} tokens",
                pos.len(),
                sentence.len()
            )));
        }
        if pos.iter().any(|t| t.is_empty() || t.chars().any(char::is_whitespace)) {
            return Err(Error::invalid("empty or malformed POS tag"));
        }
        Ok(TaggedSentence { sentence, pos })
    }

    pub fn sentence(&self) -> &Sentence {
        &self.sentence
    }

    pub fn tokens(&self) -> &[String] {
        self.sentence.tokens()
    }

    pub fn pos(&self) -> &[String] {
        &self.pos
    }

    pub fn len(&self) -> usize {
        self.sentence.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Word alignment of one sentence pair: a set of `(source, target)` links.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AlignmentSet {
    points: BTreeSet<(usize, usize)>,
    src_len: usize,
    tgt_len: usize,
}

impl AlignmentSet {
    pub fn empty(src_len: usize, tgt_len: usize) -> Self {
        AlignmentSet {
            points: BTreeSet::new(),
            src_len,
            tgt_len,
        }
    }

    /// Builds a set, rejecting out-of-range links. Duplicates collapse.
    pub fn new(
        src_len: usize,
        tgt_len: usize,
        points: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut set = AlignmentSet::empty(src_len, tgt_len);
        for (s, t) in points {
            if s >= src_len || t >= tgt_len {
                return Err(Error::invalid(format!(
                    "link {}-{} outside {}x{}",
                    s, t, src_len, tgt_len
                )));
            }
            set.points.insert((s, t));
        }
        Ok(set)
    }

    pub(crate) fn from_set_unchecked(
        src_len: usize,
        tgt_len: usize,
        points: BTreeSet<(usize, usize)>,
    ) -> Self {
        debug_assert!(points.iter().all(|&(s, t)| s < src_len && t < tgt_len));
        AlignmentSet {
            points,
            src_len,
            tgt_len,
        }
    }

    pub fn src_len(&self) -> usize {
        self.src_len
    }

    pub fn tgt_len(&self) -> usize {
        self.tgt_len
    }

    pub fn points(&self) -> &BTreeSet<(usize, usize)> {
        &self.points
    }

    /// Links in `(source, target)` order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.points.iter().copied()
    }

    pub fn contains(&self, src: usize, tgt: usize) -> bool {
        self.points.contains(&(src, tgt))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Swaps the roles of source and target.
    pub fn transposed(&self) -> AlignmentSet {
        AlignmentSet {
            points: self.points.iter().map(|&(s, t)| (t, s)).collect(),
            src_len: self.tgt_len,
            tgt_len: self.src_len,
        }
    }

    /// Shrinks the sentence dimensions, dropping links that fall outside.
    pub fn truncated(&self, src_len: usize, tgt_len: usize) -> AlignmentSet {
        AlignmentSet {
            points: self
                .points
                .iter()
                .copied()
                .filter(|&(s, t)| s < src_len && t < tgt_len)
                .collect(),
            src_len,
            tgt_len,
        }
    }

    /// Renames source positions: a link `(s, t)` becomes `(new_position[s], t)`.
    pub fn remap_source(&self, new_position: &[usize]) -> AlignmentSet {
        assert_eq!(new_position.len(), self.src_len);
        AlignmentSet {
            points: self
                .points
                .iter()
                .map(|&(s, t)| (new_position[s], t))
                .collect(),
            src_len: self.src_len,
            tgt_len: self.tgt_len,
        }
    }

    /// Serializes as sorted `i-j` pairs.
    pub fn to_line(&self) -> String {
        let mut line = String::new();
        for (k, (s, t)) in self.iter().enumerate() {
            if k > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{}-{}", s, t));
        }
        line
    }
}

/// Parses one alignment line against the given sentence lengths.
pub fn parse_alignment_line(line: &str, src_len: usize, tgt_len: usize) -> Result<AlignmentSet> {
    parse_alignment_line_at("<alignment>", 1, line, src_len, tgt_len)
}

pub(crate) fn parse_alignment_line_at(
    file: &str,
    lineno: usize,
    line: &str,
    src_len: usize,
    tgt_len: usize,
) -> Result<AlignmentSet> {
    let mut set = AlignmentSet::empty(src_len, tgt_len);
    for (s, t, token) in parse_alignment_points(file, lineno, line)? {
        if s >= src_len || t >= tgt_len {
            return Err(Error::parse(
                file,
                lineno,
                format!(
                    "link {:?} out of bounds for {} source and {} target tokens",
                    token, src_len, tgt_len
                ),
            ));
        }
        set.points.insert((s, t));
    }
    Ok(set)
}

/// Parses the links of a line without bounds, for files whose sentence
/// lengths are unknown.
pub(crate) fn parse_alignment_points<'a>(
    file: &str,
    lineno: usize,
    line: &'a str,
) -> Result<Vec<(usize, usize, &'a str)>> {
    line.split_whitespace()
        .map(|token| {
            let parsed = token
                .split_once('-')
                .and_then(|(s, t)| Some((s.parse().ok()?, t.parse().ok()?)));
            match parsed {
                Some((s, t)) => Ok((s, t, token)),
                None => Err(Error::parse(
                    file,
                    lineno,
                    format!("malformed alignment link {:?}", token),
                )),
            }
        })
        .collect()
}

/// One token of a dependency parse. `head` is 0 for the root, otherwise the
/// 1-based id of the governing token.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepNode {
    pub form: String,
    pub pos: String,
    pub head: usize,
    pub label: String,
}

/// A validated dependency tree: a single root, no cycles, every node
/// reachable from the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepTree {
    nodes: Vec<DepNode>,
    root: usize,
    children: Vec<Vec<usize>>,
}

impl DepTree {
    pub fn new(nodes: Vec<DepNode>) -> std::result::Result<Self, String> {
        let n = nodes.len();
        if n == 0 {
            return Err("empty tree".into());
        }
        for (i, node) in nodes.iter().enumerate() {
            if node.head > n {
                return Err(format!(
                    "node {} has head {} outside 0..={}",
                    i + 1,
                    node.head,
                    n
                ));
            }
        }

        // 0 = unvisited, 1 = on the current path, 2 = known to reach the root
        let mut state = vec![0u8; n];
        for start in 0..n {
            let mut path = Vec::new();
            let mut cur = start;
            loop {
                match state[cur] {
                    2 => break,
                    1 => return Err(format!("cycle through node {}", cur + 1)),
                    _ => {}
                }
                state[cur] = 1;
                path.push(cur);
                match nodes[cur].head {
                    0 => break,
                    h => cur = h - 1,
                }
            }
            for p in path {
                state[p] = 2;
            }
        }

        let roots: Vec<usize> = (0..n).filter(|&i| nodes[i].head == 0).collect();
        let root = match roots.as_slice() {
            [r] => *r,
            [] => return Err("no root".into()),
            _ => {
                return Err(format!(
                    "multiple roots: {}",
                    roots
                        .iter()
                        .map(|r| (r + 1).to_string())
                        .collect::<Vec<_>>()
                        .join(", ")
                ))
            }
        };

        let mut children = vec![Vec::new(); n];
        for (i, node) in nodes.iter().enumerate() {
            if node.head > 0 {
                children[node.head - 1].push(i);
            }
        }

        // Acyclic with a unique root implies reachability; checked anyway.
        let mut seen = vec![false; n];
        let mut stack = vec![root];
        while let Some(i) = stack.pop() {
            seen[i] = true;
            stack.extend(children[i].iter().copied());
        }
        if let Some(u) = seen.iter().position(|s| !s) {
            return Err(format!("node {} unreachable from the root", u + 1));
        }

        Ok(DepTree {
            nodes,
            root,
            children,
        })
    }

    /// Builds a tree from 1-based head indices (0 = root) and POS tags.
    pub fn from_heads(forms: &[String], pos: &[String], heads: &[usize]) -> std::result::Result<Self, String> {
        if forms.len() != pos.len() || forms.len() != heads.len() {
            return Err("forms, tags and heads differ in length".into());
        }
        DepTree::new(
            forms
                .iter()
                .zip(pos)
                .zip(heads)
                .map(|((f, p), &h)| DepNode {
                    form: f.clone(),
                    pos: p.clone(),
                    head: h,
                    label: "dep".into(),
                })
                .collect(),
        )
    }

    pub fn nodes(&self) -> &[DepNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// 0-based position of the root token.
    pub fn root(&self) -> usize {
        self.root
    }

    /// 0-based positions of the direct dependents of token `i`, left to right.
    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    /// 0-based positions of `i` and all its descendants, in sentence order.
    pub fn subtree(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![i];
        while let Some(j) = stack.pop() {
            out.push(j);
            stack.extend(self.children[j].iter().copied());
        }
        out.sort_unstable();
        out
    }

    pub fn forms(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.form.clone()).collect()
    }

    pub fn pos_tags(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.pos.clone()).collect()
    }

    /// The tree with its final token removed, provided that token is a leaf
    /// and not the only one.
    pub fn without_last_leaf(&self) -> Option<DepTree> {
        let last = self.nodes.len() - 1;
        if last == 0 || !self.children[last].is_empty() {
            return None;
        }
        DepTree::new(self.nodes[..last].to_vec()).ok()
    }

    /// CoNLL-style block, one tab-separated line per node.
    pub fn to_block(&self) -> String {
        let mut out = String::new();
        for (i, n) in self.nodes.iter().enumerate() {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                i + 1,
                n.form,
                n.pos,
                n.head,
                n.label
            ));
        }
        out
    }
}

/// Source-root to target-root lexicon. Keys are case-folded; the first
/// translation listed for a root is the preferred one.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BilingualDictionary {
    entries: BTreeMap<String, Vec<String>>,
}

impl BilingualDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, source_root: &str, target_root: &str) {
        self.entries
            .entry(source_root.to_lowercase())
            .or_default()
            .push(target_root.to_owned());
    }

    pub fn lookup(&self, source_root: &str) -> Option<&[String]> {
        self.entries
            .get(&source_root.to_lowercase())
            .map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One aligned sentence pair with optional annotation layers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SentencePair {
    pub source: Sentence,
    pub source_pos: Option<Vec<String>>,
    pub target: Sentence,
    pub target_pos: Option<Vec<String>>,
    pub alignment: AlignmentSet,
    pub source_tree: Option<DepTree>,
}

impl SentencePair {
    /// Builds a pair after checking every cross-layer length constraint.
    pub fn new(
        source: Sentence,
        source_pos: Option<Vec<String>>,
        target: Sentence,
        target_pos: Option<Vec<String>>,
        alignment: AlignmentSet,
        source_tree: Option<DepTree>,
    ) -> Result<Self> {
        if alignment.src_len() != source.len() || alignment.tgt_len() != target.len() {
            return Err(Error::invalid(format!(
                "alignment is {}x{} but sentences are {}x{}",
                alignment.src_len(),
                alignment.tgt_len(),
                source.len(),
                target.len()
            )));
        }
        if let Some(pos) = &source_pos {
            TaggedSentence::new(source.clone(), pos.clone())?;
        }
        if let Some(pos) = &target_pos {
            TaggedSentence::new(target.clone(), pos.clone())?;
        }
        if let Some(tree) = &source_tree {
            if tree.len() != source.len() {
                return Err(Error::invalid(format!(
                    "tree has {} nodes for {} source tokens",
                    tree.len(),
                    source.len()
                )));
            }
        }
        Ok(SentencePair {
            source,
            source_pos,
            target,
            target_pos,
            alignment,
            source_tree,
        })
    }

    /// The source with its tags: the POS sidecar if present, else the tags
    /// of the parse.
    pub fn source_tagged(&self) -> Option<TaggedSentence> {
        let pos = match (&self.source_pos, &self.source_tree) {
            (Some(pos), _) => pos.clone(),
            (None, Some(tree)) => tree.pos_tags(),
            (None, None) => return None,
        };
        TaggedSentence::new(self.source.clone(), pos).ok()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParallelCorpus {
    pub pairs: Vec<SentencePair>,
}

impl ParallelCorpus {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Paths of the files making up a parallel corpus.
#[derive(Clone, Debug, Default)]
pub struct CorpusPaths {
    pub source: PathBuf,
    pub target: PathBuf,
    pub alignment: PathBuf,
    pub source_pos: Option<PathBuf>,
    pub target_pos: Option<PathBuf>,
    pub source_dep: Option<PathBuf>,
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

/// Reads a UTF-8 file as lines, without line terminators.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l).to_owned())
        .collect())
}

/// Reads a corpus of non-empty sentences.
pub fn read_sentences(path: &Path) -> Result<Vec<Sentence>> {
    let name = display(path);
    read_lines(path)?
        .iter()
        .enumerate()
        .map(|(i, l)| Sentence::parse(l).map_err(|e| Error::parse(&name, i + 1, e.to_string())))
        .collect()
}

/// Reads token lines, allowing empty lines (e.g. empty system output).
pub fn read_token_lines(path: &Path) -> Result<Vec<Vec<String>>> {
    Ok(read_lines(path)?
        .iter()
        .map(|l| l.split_whitespace().map(str::to_owned).collect())
        .collect())
}

/// Reads a POS sidecar: one line of tags per sentence.
pub fn read_tag_lines(path: &Path) -> Result<Vec<Vec<String>>> {
    read_token_lines(path)
}

/// Reads a whole alignment file when sentence lengths are unknown; each set
/// is sized to cover its largest indices.
pub fn read_alignment_file_unsized(path: &Path) -> Result<Vec<AlignmentSet>> {
    let name = display(path);
    read_lines(path)?
        .iter()
        .enumerate()
        .map(|(i, line)| {
            let pts = parse_alignment_points(&name, i + 1, line)?;
            let src_len = pts.iter().map(|p| p.0 + 1).max().unwrap_or(0);
            let tgt_len = pts.iter().map(|p| p.1 + 1).max().unwrap_or(0);
            AlignmentSet::new(src_len, tgt_len, pts.into_iter().map(|(s, t, _)| (s, t)))
        })
        .collect()
}

/// Reads an alignment file, checking each line against the given lengths.
pub fn read_alignment_file(path: &Path, lengths: &[(usize, usize)]) -> Result<Vec<AlignmentSet>> {
    let name = display(path);
    let lines = read_lines(path)?;
    if lines.len() != lengths.len() {
        return Err(Error::invalid(format!(
            "{} has {} lines, expected {}",
            name,
            lines.len(),
            lengths.len()
        )));
    }
    lines
        .iter()
        .zip(lengths)
        .enumerate()
        .map(|(i, (line, &(s, t)))| parse_alignment_line_at(&name, i + 1, line, s, t))
        .collect()
}

pub fn write_alignment_file(path: &Path, sets: &[AlignmentSet]) -> Result<()> {
    write_lines(path, sets.iter().map(AlignmentSet::to_line))
}

fn parse_dep_line(line: &str) -> Option<(usize, DepNode)> {
    let fields: Vec<&str> = if line.contains('\t') {
        line.split('\t').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    };
    if fields.len() < 5 {
        return None;
    }
    Some((
        fields[0].parse().ok()?,
        DepNode {
            form: fields[1].to_owned(),
            pos: fields[2].to_owned(),
            head: fields[3].parse().ok()?,
            label: fields[4].to_owned(),
        },
    ))
}

/// Parses dependency blocks from text. `file` only labels errors.
pub fn parse_dependency_text(file: &str, text: &str) -> Result<Vec<DepTree>> {
    let mut trees = Vec::new();
    let mut block: Vec<DepNode> = Vec::new();
    let mut block_start = 0;

    let finish = |block: &mut Vec<DepNode>, trees: &mut Vec<DepTree>| -> Result<()> {
        if block.is_empty() {
            return Ok(());
        }
        let index = trees.len() + 1;
        let tree = DepTree::new(std::mem::take(block)).map_err(|message| Error::Tree {
            file: file.to_owned(),
            index,
            message,
        })?;
        trees.push(tree);
        Ok(())
    };

    for (i, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            finish(&mut block, &mut trees)?;
            continue;
        }
        if block.is_empty() {
            block_start = i + 1;
        }
        let (id, node) = parse_dep_line(line).ok_or_else(|| {
            Error::parse(file, i + 1, format!("expected ID FORM POS HEAD DEPREL, got {:?}", line))
        })?;
        if id != block.len() + 1 {
            return Err(Error::Tree {
                file: file.to_owned(),
                index: trees.len() + 1,
                message: format!(
                    "non-contiguous id {} at line {} (block starting at line {})",
                    id,
                    i + 1,
                    block_start
                ),
            });
        }
        block.push(node);
    }
    finish(&mut block, &mut trees)?;
    Ok(trees)
}

pub fn read_dependency_file(path: &Path) -> Result<Vec<DepTree>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dependency_text(&display(path), &text)
}

pub fn write_dependency_file(path: &Path, trees: &[DepTree]) -> Result<()> {
    let mut out = String::new();
    for tree in trees {
        out.push_str(&tree.to_block());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_dictionary(path: &Path) -> Result<BilingualDictionary> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dictionary(&display(path), &text)
}

pub fn parse_dictionary(file: &str, text: &str) -> Result<BilingualDictionary> {
    let mut dict = BilingualDictionary::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.is_empty() {
            continue;
        }
        let (src, tgt) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(file, i + 1, "expected source_root<TAB>target_root"))?;
        let (src, tgt) = (src.trim(), tgt.trim());
        if src.is_empty() || tgt.is_empty() {
            return Err(Error::parse(file, i + 1, "empty dictionary field"));
        }
        dict.insert(src, tgt);
    }
    Ok(dict)
}

fn check_count(first: &Path, a: usize, second: &Path, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LineCount {
            first: display(first),
            first_count: a,
            second: display(second),
            second_count: b,
        });
    }
    Ok(())
}

fn check_tags(file: &Path, lineno: usize, tags: &[String], tokens: usize) -> Result<()> {
    if tags.len() != tokens {
        return Err(Error::parse(
            display(file),
            lineno,
            format!("{} tags for {} tokens", tags.len(), tokens),
        ));
    }
    Ok(())
}

/// Reads and cross-validates every layer of a parallel corpus.
pub fn read_parallel_corpus(paths: &CorpusPaths) -> Result<ParallelCorpus> {
    let sources = read_sentences(&paths.source)?;
    let targets = read_sentences(&paths.target)?;
    check_count(&paths.source, sources.len(), &paths.target, targets.len())?;

    let align_lines = read_lines(&paths.alignment)?;
    check_count(&paths.source, sources.len(), &paths.alignment, align_lines.len())?;

    let load_tags = |p: &Option<PathBuf>| -> Result<Option<Vec<Vec<String>>>> {
        match p {
            None => Ok(None),
            Some(p) => {
                let tags = read_tag_lines(p)?;
                check_count(&paths.source, sources.len(), p, tags.len())?;
                Ok(Some(tags))
            }
        }
    };
    let src_tags = load_tags(&paths.source_pos)?;
    let tgt_tags = load_tags(&paths.target_pos)?;

    let trees = match &paths.source_dep {
        None => None,
        Some(p) => {
            let trees = read_dependency_file(p)?;
            check_count(&paths.source, sources.len(), p, trees.len())?;
            Some(trees)
        }
    };

    let align_name = display(&paths.alignment);
    let mut pairs = Vec::with_capacity(sources.len());
    for (i, (source, target)) in sources.into_iter().zip(targets).enumerate() {
        let lineno = i + 1;
        let alignment =
            parse_alignment_line_at(&align_name, lineno, &align_lines[i], source.len(), target.len())?;
        let source_pos = match &src_tags {
            Some(tags) => {
                check_tags(paths.source_pos.as_ref().unwrap(), lineno, &tags[i], source.len())?;
                Some(tags[i].clone())
            }
            None => None,
        };
        let target_pos = match &tgt_tags {
            Some(tags) => {
                check_tags(paths.target_pos.as_ref().unwrap(), lineno, &tags[i], target.len())?;
                Some(tags[i].clone())
            }
            None => None,
        };
        let source_tree = match &trees {
            Some(trees) => {
                let tree = &trees[i];
                if tree.len() != source.len() {
                    return Err(Error::Tree {
                        file: display(paths.source_dep.as_ref().unwrap()),
                        index: lineno,
                        message: format!(
                            "{} nodes for {} tokens in {}",
                            tree.len(),
                            source.len(),
                            display(&paths.source)
                        ),
                    });
                }
                Some(tree.clone())
            }
            None => None,
        };
        let pair = SentencePair::new(source, source_pos, target, target_pos, alignment, source_tree)
            .map_err(|e| Error::parse(display(&paths.source), lineno, e.to_string()))?;
        pairs.push(pair);
    }
    Ok(ParallelCorpus { pairs })
}

/// Writes one line per item, each terminated by `\n`.
pub fn write_lines<I, S>(path: &Path, lines: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = io::BufWriter::new(file);
    for line in lines {
        writeln!(out, "{}", line.as_ref()).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn alignment_line_parses() {
        let a = parse_alignment_line("0-0 1-1", 2, 2).unwrap();
        assert_eq!(a.points().iter().copied().collect::<Vec<_>>(), vec![(0, 0), (1, 1)]);
        assert!(parse_alignment_line("", 3, 4).unwrap().is_empty());
    }

    #[test]
    fn alignment_duplicates_collapse() {
        let a = parse_alignment_line("0-0 0-0 1-0", 2, 1).unwrap();
        assert_eq!(a.points().iter().copied().collect::<Vec<_>>(), vec![(0, 0), (1, 0)]);
        assert_eq!(a.to_line(), "0-0 1-0");
    }

    #[test]
    fn alignment_errors_name_token() {
        let err = parse_alignment_line("0-0 x-1", 2, 2).unwrap_err().to_string();
        assert!(err.contains("\"x-1\""), "{err}");
        let err = parse_alignment_line("0-5", 3, 3).unwrap_err().to_string();
        assert!(err.contains("0-5") && err.contains("out of bounds"), "{err}");
        assert!(parse_alignment_line("3", 3, 3).is_err());
    }

    #[test]
    fn dependency_block_parses() {
        let text = "1\tin\tIN\t2\tprep\n2\thouse\tNN\t0\troot\n3\tburned\tVB\t2\tvmod\n";
        let trees = parse_dependency_text("t", text).unwrap();
        assert_eq!(trees.len(), 1);
        let t = &trees[0];
        assert_eq!(t.root(), 1);
        assert_eq!(t.children(1), &[0, 2]);
        assert_eq!(t.subtree(1), vec![0, 1, 2]);
    }

    #[test]
    fn dependency_space_separated_is_accepted() {
        let trees = parse_dependency_text("t", "1 in IN 2 prep\n2 house NN 0 root\n").unwrap();
        assert_eq!(trees[0].len(), 2);
    }

    #[test]
    fn dependency_errors() {
        let err = parse_dependency_text("t", "1\ta\tX\t1\tself\n").unwrap_err().to_string();
        assert!(err.contains("cycle"), "{err}");
        let err = parse_dependency_text("t", "1\ta\tX\t0\tr\n2\tb\tX\t0\tr\n").unwrap_err().to_string();
        assert!(err.contains("multiple roots"), "{err}");
        let err = parse_dependency_text("t", "1\ta\tX\t0\tr\n3\tb\tX\t1\tr\n").unwrap_err().to_string();
        assert!(err.contains("non-contiguous"), "{err}");
        // second sentence is the bad one
        let err = parse_dependency_text("t", "1\ta\tX\t0\tr\n\n1\ta\tX\t2\tr\n2\tb\tX\t1\tr\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("sentence 2") && err.contains("cycle"), "{err}");
        assert!(parse_dependency_text("t", "").unwrap().is_empty());
    }

    #[test]
    fn dictionary_groups_and_folds_case() {
        let d = parse_dictionary("d", "book\tkitaab\nbook\tpustak\n").unwrap();
        assert_eq!(d.lookup("book").unwrap(), &["kitaab".to_string(), "pustak".to_string()]);
        let d = parse_dictionary("d", "Book\tkitaab\n").unwrap();
        assert_eq!(d.lookup("book").unwrap(), &["kitaab".to_string()]);
        assert_eq!(d.lookup("BOOK").unwrap(), &["kitaab".to_string()]);
        let err = parse_dictionary("d", "ok\tfine\nbroken line\n").unwrap_err().to_string();
        assert!(err.contains("d:2"), "{err}");
        assert!(parse_dictionary("d", "\tx\n").is_err());
    }

    #[test]
    fn sentence_rejects_bad_tokens() {
        assert!(Sentence::new(vec![]).is_err());
        assert!(Sentence::new(vec!["a b".into()]).is_err());
        assert!(Sentence::new(vec!["".into()]).is_err());
        assert_eq!(Sentence::parse("a  b").unwrap().to_string(), "a b");
    }

    #[test]
    fn last_leaf_removal() {
        let t = DepTree::from_heads(&toks("a b ."), &toks("NN VB ."), &[2, 0, 2]).unwrap();
        let s = t.without_last_leaf().unwrap();
        assert_eq!(s.len(), 2);
        let t = DepTree::from_heads(&toks("a b"), &toks("NN VB"), &[2, 0]).unwrap();
        assert!(t.without_last_leaf().is_none());
    }
}

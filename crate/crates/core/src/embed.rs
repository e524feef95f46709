//! Word vectors, POS/relation tag embeddings and cosine similarity.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use thiserror::Error;

use crate::corpus::{AnnotatedSample, EntityMention};
use crate::depgraph::DepGraph;
use crate::rng;

pub const DEFAULT_WORD_DIM: usize = 300;
pub const DEFAULT_TAG_DIM: usize = 30;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: expected a word and {expected} values, found {found} values")]
    Columns {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: `{value}` is not a number")]
    Number { line: usize, value: String },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("path interior is empty")]
    EmptyPath,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum OovPolicy {
    /// Unknown words map to the zero vector.
    #[default]
    ZeroVector,
    /// Unknown words map to a pseudo-random vector keyed by the word itself.
    HashedRandom,
}

impl std::str::FromStr for OovPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero_vector" => Ok(OovPolicy::ZeroVector),
            "hashed_random" => Ok(OovPolicy::HashedRandom),
            other => Err(format!(
                "unknown OOV policy `{other}` (zero_vector|hashed_random)"
            )),
        }
    }
}

impl std::fmt::Display for OovPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OovPolicy::ZeroVector => "zero_vector",
            OovPolicy::HashedRandom => "hashed_random",
        })
    }
}

/// A word-vector table. Keys are lowercase.
#[derive(Debug, Clone)]
pub struct WordVectors {
    dim: usize,
    table: HashMap<String, Vec<f64>>,
    oov: OovPolicy,
}

impl WordVectors {
    pub fn new(dim: usize, oov: OovPolicy) -> Self {
        WordVectors {
            dim,
            table: HashMap::new(),
            oov,
        }
    }

    /// Reads the standard text format: a word followed by `dim` numbers.
    pub fn load(path: impl AsRef<Path>, dim: usize, oov: OovPolicy) -> Result<Self, EmbedError> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|source| EmbedError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut wv = WordVectors::new(dim, oov);
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| EmbedError::Read {
                path: path.to_path_buf(),
                source,
            })?;
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else {
                continue;
            };
            let values = fields
                .map(|f| {
                    f.parse::<f64>().map_err(|_| EmbedError::Number {
                        line: i + 1,
                        value: f.to_string(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            if values.len() != dim {
                return Err(EmbedError::Columns {
                    line: i + 1,
                    expected: dim,
                    found: values.len(),
                });
            }
            wv.table.entry(word.to_lowercase()).or_insert(values);
        }
        Ok(wv)
    }

    /// Writes the text format [`WordVectors::load`] reads, words sorted.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EmbedError> {
        let path = path.as_ref();
        let wrap = |source| EmbedError::Write {
            path: path.to_path_buf(),
            source,
        };
        let mut out = BufWriter::new(fs::File::create(path).map_err(wrap)?);
        let mut words: Vec<&String> = self.table.keys().collect();
        words.sort();
        for word in words {
            write!(out, "{word}").map_err(wrap)?;
            for x in &self.table[word] {
                write!(out, " {x}").map_err(wrap)?;
            }
            writeln!(out).map_err(wrap)?;
        }
        out.flush().map_err(wrap)
    }

    pub fn insert(&mut self, word: &str, vector: Vec<f64>) {
        assert_eq!(vector.len(), self.dim, "vector length must equal dim");
        self.table.insert(word.to_lowercase(), vector);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn oov_policy(&self) -> OovPolicy {
        self.oov
    }

    pub fn contains(&self, word: &str) -> bool {
        self.table.contains_key(&word.to_lowercase())
    }

    /// Total lookup: table entries first, then the OOV policy.
    pub fn lookup(&self, word: &str) -> Cow<'_, [f64]> {
        let key = word.to_lowercase();
        if let Some(v) = self.table.get(&key) {
            return Cow::Borrowed(v);
        }
        match self.oov {
            OovPolicy::ZeroVector => Cow::Owned(vec![0.0; self.dim]),
            OovPolicy::HashedRandom => {
                let mut rng = rng::stream(0, &["oov", &key]);
                Cow::Owned((0..self.dim).map(|_| rng.gen_range(-0.5..0.5)).collect())
            }
        }
    }

    /// Mean vector of a list of words; zero for an empty list.
    pub fn mean<'a>(&self, words: impl IntoIterator<Item = &'a str>) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        let mut count = 0usize;
        for w in words {
            add_assign(&mut acc, &self.lookup(w));
            count += 1;
        }
        if count > 0 {
            scale(&mut acc, 1.0 / count as f64);
        }
        acc
    }
}

pub(crate) fn add_assign(acc: &mut [f64], v: &[f64]) {
    acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
}

pub(crate) fn scale(v: &mut [f64], factor: f64) {
    v.iter_mut().for_each(|x| *x *= factor);
}

/// `u.v / (|u||v|)`, defined as 0 when either norm is 0.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, EmbedError> {
    if u.len() != v.len() {
        return Err(EmbedError::Dimension(u.len(), v.len()));
    }
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// Randomly initialised POS and dependency-relation embeddings.
///
/// Each tag's vector is drawn from uniform `[-0.5/dim, 0.5/dim]` using a
/// stream keyed by `(seed, table, tag)`, so a table rebuilt from the same
/// seed is bit-identical whatever vocabulary order it is built in. Tags never
/// registered are derived the same way on lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct TagEmbeddings {
    dim: usize,
    seed: u64,
    pos_table: BTreeMap<String, Vec<f64>>,
    rel_table: BTreeMap<String, Vec<f64>>,
}

impl TagEmbeddings {
    pub fn new(dim: usize, seed: u64) -> Self {
        TagEmbeddings {
            dim,
            seed,
            pos_table: BTreeMap::new(),
            rel_table: BTreeMap::new(),
        }
    }

    /// Registers the coarse POS classes and syntactic relations seen in
    /// `samples`.
    pub fn from_samples<'a>(
        dim: usize,
        seed: u64,
        samples: impl IntoIterator<Item = &'a AnnotatedSample>,
    ) -> Self {
        let mut tags = TagEmbeddings::new(dim, seed);
        for s in samples {
            for t in &s.tokens {
                tags.register_pos(&t.coarse_pos.to_string());
            }
            for e in &s.syn_edges {
                tags.register_rel(&e.rel);
            }
        }
        tags
    }

    fn draw(&self, table: &str, tag: &str) -> Vec<f64> {
        let bound = 0.5 / self.dim as f64;
        let mut rng = rng::stream(self.seed, &[table, tag]);
        (0..self.dim).map(|_| rng.gen_range(-bound..=bound)).collect()
    }

    pub fn register_pos(&mut self, tag: &str) {
        if !self.pos_table.contains_key(tag) {
            let v = self.draw("pos", tag);
            self.pos_table.insert(tag.to_string(), v);
        }
    }

    pub fn register_rel(&mut self, rel: &str) {
        if !self.rel_table.contains_key(rel) {
            let v = self.draw("rel", rel);
            self.rel_table.insert(rel.to_string(), v);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pos_vector(&self, tag: &str) -> Cow<'_, [f64]> {
        match self.pos_table.get(tag) {
            Some(v) => Cow::Borrowed(v),
            None => Cow::Owned(self.draw("pos", tag)),
        }
    }

    pub fn rel_vector(&self, rel: &str) -> Cow<'_, [f64]> {
        match self.rel_table.get(rel) {
            Some(v) => Cow::Borrowed(v),
            None => Cow::Owned(self.draw("rel", rel)),
        }
    }

    pub fn pos_vocab(&self) -> impl Iterator<Item = &str> {
        self.pos_table.keys().map(String::as_str)
    }

    pub fn rel_vocab(&self) -> impl Iterator<Item = &str> {
        self.rel_table.keys().map(String::as_str)
    }
}

/// How entity syntactic features are encoded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum FeatureMode {
    /// Tag embedding of the head POS, mean relation embedding.
    #[default]
    Embedding,
    /// One-hot head POS and multi-hot relations over the registered vocabularies.
    OneHot,
}

impl std::str::FromStr for FeatureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "embedding" => Ok(FeatureMode::Embedding),
            "one_hot" => Ok(FeatureMode::OneHot),
            other => Err(format!("unknown feature mode `{other}` (embedding|one_hot)")),
        }
    }
}

impl std::fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FeatureMode::Embedding => "embedding",
            FeatureMode::OneHot => "one_hot",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntacticFeature {
    pub vector: Vec<f64>,
}

/// The span token whose syntactic head lies outside the span, falling back
/// to the first span token.
pub fn entity_head(sample: &AnnotatedSample, mention: &EntityMention) -> usize {
    mention
        .indices()
        .find(|&i| {
            sample
                .syn_edges
                .iter()
                .find(|e| e.dep == i)
                .is_some_and(|e| e.head.is_none_or(|h| !mention.contains(h)))
        })
        .unwrap_or(mention.start)
}

/// POS part of the head token concatenated with the mean relation part of
/// every syntactic edge touching the span.
pub fn syntactic_feature(
    sample: &AnnotatedSample,
    mention: &EntityMention,
    g: &DepGraph,
    tags: &TagEmbeddings,
    mode: FeatureMode,
) -> SyntacticFeature {
    let head_pos = sample.tokens[entity_head(sample, mention)]
        .coarse_pos
        .to_string();
    let rels: Vec<&str> = g
        .labelled_edges()
        .filter(|&(h, d, _)| mention.contains(h) || mention.contains(d))
        .map(|(_, _, r)| r)
        .collect();
    let vector = match mode {
        FeatureMode::Embedding => {
            let mut vector = tags.pos_vector(&head_pos).into_owned();
            let mut rel_part = vec![0.0; tags.dim()];
            for r in &rels {
                add_assign(&mut rel_part, &tags.rel_vector(r));
            }
            if !rels.is_empty() {
                scale(&mut rel_part, 1.0 / rels.len() as f64);
            }
            vector.extend(rel_part);
            vector
        }
        FeatureMode::OneHot => {
            let mut vector: Vec<f64> = tags
                .pos_vocab()
                .map(|t| if t == head_pos { 1.0 } else { 0.0 })
                .collect();
            vector.extend(
                tags.rel_vocab()
                    .map(|r| if rels.contains(&r) { 1.0 } else { 0.0 }),
            );
            vector
        }
    };
    SyntacticFeature { vector }
}

/// Mean word vector of the interior tokens.
pub fn path_embedding(
    sample: &AnnotatedSample,
    interior: &[usize],
    wv: &WordVectors,
) -> Result<Vec<f64>, EmbedError> {
    if interior.is_empty() {
        return Err(EmbedError::EmptyPath);
    }
    Ok(wv.mean(interior.iter().map(|&i| sample.tokens[i].surface.as_str())))
}

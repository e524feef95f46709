//! Relation-classification samples and the `coco-corpus/1` JSONL format.
//!
//! A corpus file starts with a header line declaring the label set and the
//! negative label, followed by one record per line. A record is either an
//! annotated sample or a counterfactual (a sample line plus provenance keys,
//! recognised by the presence of `source_id`).
//!
//! Token indices are 0-based, entity spans are half-open and a ROOT head is
//! written as `-1`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub const FORMAT_TAG: &str = "coco-corpus/1";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: sample `{sample_id}`: {violation}")]
    Invalid {
        line: usize,
        sample_id: String,
        violation: Violation,
    },
}

/// A broken sample invariant.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("token {index} has an empty surface")]
    EmptySurface { index: usize },
    #[error("{tokens} tokens but {pos} POS tags")]
    PosLength { tokens: usize, pos: usize },
    #[error("expected 2 or 3 entity mentions, found {0}")]
    EntityCount(usize),
    #[error("entity roles must be e1, e2 and optionally e3, each once")]
    EntityRoles,
    #[error("entity `{id}` span [{start}, {end}) is outside 0..{len}")]
    SpanOutOfRange {
        id: String,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("entity spans `{0}` and `{1}` overlap")]
    SpanOverlap(String, String),
    #[error("label `{0}` is not in the declared label set")]
    UnknownLabel(String),
    #[error("{layer} edge {head}->{dep} references a missing token")]
    EdgeOutOfRange { layer: Layer, head: i64, dep: i64 },
    #[error("{1} edge on token {0} is a self-loop")]
    SelfLoop(usize, Layer),
    #[error("token {0} does not have exactly one syntactic head")]
    HeadCount(usize),
    #[error("syntactic tree needs exactly one ROOT-headed token, found {0}")]
    RootCount(usize),
    #[error("syntactic heads form a cycle through token {0}")]
    Cycle(usize),
}

/// Coarse part-of-speech class used to match substitutable neighbors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CoarsePos {
    Verb,
    Noun,
    Adj,
    Adv,
    /// Any other tag, kept verbatim.
    Other(String),
}

impl fmt::Display for CoarsePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoarsePos::Verb => f.write_str("VERB"),
            CoarsePos::Noun => f.write_str("NOUN"),
            CoarsePos::Adj => f.write_str("ADJ"),
            CoarsePos::Adv => f.write_str("ADV"),
            CoarsePos::Other(tag) => f.write_str(tag),
        }
    }
}

/// Maps a Penn Treebank tag to its coarse class.
pub fn coarse_pos(pos: &str) -> CoarsePos {
    match pos {
        "VB" | "VBD" | "VBG" | "VBN" | "VBP" | "VBZ" => CoarsePos::Verb,
        "NN" | "NNS" | "NNP" | "NNPS" => CoarsePos::Noun,
        _ if pos.starts_with("JJ") => CoarsePos::Adj,
        _ if pos.starts_with("RB") => CoarsePos::Adv,
        _ => CoarsePos::Other(pos.to_string()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub index: usize,
    pub surface: String,
    pub pos: String,
    pub coarse_pos: CoarsePos,
}

impl Token {
    pub fn new(index: usize, surface: impl Into<String>, pos: impl Into<String>) -> Self {
        let pos = pos.into();
        Token {
            index,
            surface: surface.into(),
            coarse_pos: coarse_pos(&pos),
            pos,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityRole {
    #[serde(rename = "e1")]
    E1,
    #[serde(rename = "e2")]
    E2,
    #[serde(rename = "e3")]
    E3,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub id: String,
    pub start: usize,
    pub end: usize,
    pub role: EntityRole,
}

impl EntityMention {
    pub fn new(id: impl Into<String>, start: usize, end: usize, role: EntityRole) -> Self {
        EntityMention {
            id: id.into(),
            start,
            end,
            role,
        }
    }

    pub fn contains(&self, index: usize) -> bool {
        (self.start..self.end).contains(&index)
    }

    pub fn indices(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layer {
    Syntactic,
    Semantic,
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layer::Syntactic => "syntactic",
            Layer::Semantic => "semantic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepEdge {
    /// `None` is the ROOT sentinel.
    pub head: Option<usize>,
    pub dep: usize,
    pub rel: String,
    pub layer: Layer,
}

impl DepEdge {
    pub fn new(head: Option<usize>, dep: usize, rel: impl Into<String>, layer: Layer) -> Self {
        DepEdge {
            head,
            dep,
            rel: rel.into(),
            layer,
        }
    }
}

/// One relation-classification instance.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedSample {
    pub id: String,
    pub tokens: Vec<Token>,
    pub entities: Vec<EntityMention>,
    pub label: String,
    pub syn_edges: Vec<DepEdge>,
    pub sem_edges: Vec<DepEdge>,
    pub domain: Option<String>,
}

impl AnnotatedSample {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn entity(&self, role: EntityRole) -> Option<&EntityMention> {
        self.entities.iter().find(|e| e.role == role)
    }

    /// Whether `index` falls inside any entity span.
    pub fn in_entity(&self, index: usize) -> bool {
        self.entities.iter().any(|e| e.contains(index))
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    pub fn text(&self) -> String {
        self.surfaces().join(" ")
    }

    /// Surface strings of every entity mention, ordered by role.
    pub fn entity_surfaces(&self) -> Vec<(EntityRole, Vec<String>)> {
        let mut out: Vec<_> = self
            .entities
            .iter()
            .map(|e| {
                let words = self.tokens[e.indices()]
                    .iter()
                    .map(|t| t.surface.clone())
                    .collect();
                (e.role, words)
            })
            .collect();
        out.sort_by_key(|(role, _)| *role);
        out
    }

    /// Checks every sample invariant. `labels` is the declared label set;
    /// `check_tree` may be turned off for records whose edges are stale.
    pub fn validate(&self, labels: &[String], check_tree: bool) -> Result<(), Violation> {
        let n = self.tokens.len();
        for (i, token) in self.tokens.iter().enumerate() {
            if token.surface.is_empty() {
                return Err(Violation::EmptySurface { index: i });
            }
            debug_assert_eq!(token.index, i);
        }
        self.validate_entities()?;
        if !labels.contains(&self.label) {
            return Err(Violation::UnknownLabel(self.label.clone()));
        }
        for edge in self.syn_edges.iter().chain(&self.sem_edges) {
            let head_ok = edge.head.is_none_or(|h| h < n);
            if !head_ok || edge.dep >= n {
                return Err(Violation::EdgeOutOfRange {
                    layer: edge.layer,
                    head: edge.head.map_or(-1, |h| h as i64),
                    dep: edge.dep as i64,
                });
            }
            if edge.head == Some(edge.dep) {
                return Err(Violation::SelfLoop(edge.dep, edge.layer));
            }
        }
        if check_tree {
            check_syntactic_tree(n, &self.syn_edges)?;
        }
        Ok(())
    }

    fn validate_entities(&self) -> Result<(), Violation> {
        let n = self.tokens.len();
        let count = self.entities.len();
        if !(2..=3).contains(&count) {
            return Err(Violation::EntityCount(count));
        }
        let mut roles: Vec<EntityRole> = self.entities.iter().map(|e| e.role).collect();
        roles.sort();
        let expected: &[EntityRole] = if count == 2 {
            &[EntityRole::E1, EntityRole::E2]
        } else {
            &[EntityRole::E1, EntityRole::E2, EntityRole::E3]
        };
        if roles != expected {
            return Err(Violation::EntityRoles);
        }
        for e in &self.entities {
            if e.start >= e.end || e.end > n {
                return Err(Violation::SpanOutOfRange {
                    id: e.id.clone(),
                    start: e.start,
                    end: e.end,
                    len: n,
                });
            }
        }
        for (i, a) in self.entities.iter().enumerate() {
            for b in &self.entities[i + 1..] {
                if a.start < b.end && b.start < a.end {
                    return Err(Violation::SpanOverlap(a.id.clone(), b.id.clone()));
                }
            }
        }
        Ok(())
    }
}

fn check_syntactic_tree(n: usize, edges: &[DepEdge]) -> Result<(), Violation> {
    let mut head: Vec<Option<Option<usize>>> = vec![None; n];
    for edge in edges {
        if head[edge.dep].is_some() {
            return Err(Violation::HeadCount(edge.dep));
        }
        head[edge.dep] = Some(edge.head);
    }
    if let Some(i) = head.iter().position(Option::is_none) {
        return Err(Violation::HeadCount(i));
    }
    let head: Vec<Option<usize>> = head.into_iter().flatten().collect();
    let roots = head.iter().filter(|h| h.is_none()).count();
    if roots != 1 {
        return Err(Violation::RootCount(roots));
    }
    // every chain of heads must reach ROOT within n steps
    for start in 0..n {
        let mut cur = start;
        let mut steps = 0;
        while let Some(h) = head[cur] {
            cur = h;
            steps += 1;
            if steps > n {
                return Err(Violation::Cycle(start));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    SynCo,
    SemCo,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::SynCo => "SynCo",
            Method::SemCo => "SemCo",
        })
    }
}

/// One token edit, written as `[index, original, replacement]`.
///
/// `index` refers to the source sample. An insertion has an empty
/// `original` and is placed right after `index`; a deletion has an empty
/// `replacement`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "(usize, String, String)", into = "(usize, String, String)")]
pub struct Substitution {
    pub index: usize,
    pub original: String,
    pub replacement: String,
}

impl Substitution {
    pub fn new(index: usize, original: impl Into<String>, replacement: impl Into<String>) -> Self {
        Substitution {
            index,
            original: original.into(),
            replacement: replacement.into(),
        }
    }

    pub fn is_insertion(&self) -> bool {
        self.original.is_empty()
    }

    pub fn is_deletion(&self) -> bool {
        self.replacement.is_empty()
    }
}

impl From<(usize, String, String)> for Substitution {
    fn from((index, original, replacement): (usize, String, String)) -> Self {
        Substitution {
            index,
            original,
            replacement,
        }
    }
}

impl From<Substitution> for (usize, String, String) {
    fn from(s: Substitution) -> Self {
        (s.index, s.original, s.replacement)
    }
}

/// A generated sample with its provenance.
///
/// `sample` holds the edited tokens, the (re-indexed) entity mentions and the
/// candidate's label. When token count changed, the dependency layers no
/// longer describe the text: `edges_stale` is set and both edge lists are
/// empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Counterfactual {
    pub sample: AnnotatedSample,
    pub source_id: String,
    pub candidate_id: String,
    pub method: Method,
    pub substitutions: Vec<Substitution>,
    pub scores: BTreeMap<String, f64>,
    pub verified: bool,
    pub predicted_label: String,
    pub edges_stale: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    Sample(AnnotatedSample),
    Counterfactual(Counterfactual),
}

impl Record {
    pub fn sample(&self) -> &AnnotatedSample {
        match self {
            Record::Sample(s) => s,
            Record::Counterfactual(cf) => &cf.sample,
        }
    }
}

impl From<AnnotatedSample> for Record {
    fn from(s: AnnotatedSample) -> Self {
        Record::Sample(s)
    }
}

impl From<Counterfactual> for Record {
    fn from(cf: Counterfactual) -> Self {
        Record::Counterfactual(cf)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusHeader {
    pub labels: Vec<String>,
    pub negative_label: String,
}

impl CorpusHeader {
    pub fn new(labels: Vec<String>, negative_label: impl Into<String>) -> Self {
        CorpusHeader {
            labels,
            negative_label: negative_label.into(),
        }
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub header: CorpusHeader,
    pub records: Vec<Record>,
}

impl Corpus {
    pub fn new(header: CorpusHeader, records: Vec<Record>) -> Self {
        Corpus { header, records }
    }

    pub fn from_samples(header: CorpusHeader, samples: Vec<AnnotatedSample>) -> Self {
        Corpus {
            header,
            records: samples.into_iter().map(Record::Sample).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Every record viewed as a sample, counterfactuals included.
    pub fn samples(&self) -> impl Iterator<Item = &AnnotatedSample> {
        self.records.iter().map(Record::sample)
    }

    pub fn counterfactuals(&self) -> impl Iterator<Item = &Counterfactual> {
        self.records.iter().filter_map(|r| match r {
            Record::Counterfactual(cf) => Some(cf),
            Record::Sample(_) => None,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    format: String,
    labels: Vec<String>,
    negative_label: String,
}

#[derive(Serialize, Deserialize)]
struct EdgeLine {
    head: i64,
    dep: i64,
    rel: String,
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    id: String,
    tokens: Vec<String>,
    pos: Vec<String>,
    entities: Vec<EntityMention>,
    label: String,
    syn_edges: Vec<EdgeLine>,
    sem_edges: Vec<EdgeLine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    candidate_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    substitutions: Option<Vec<Substitution>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scores: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    predicted_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    verified: Option<bool>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    edges_stale: bool,
}

fn edge_to_line(edge: &DepEdge) -> EdgeLine {
    EdgeLine {
        head: edge.head.map_or(-1, |h| h as i64),
        dep: edge.dep as i64,
        rel: edge.rel.clone(),
    }
}

fn edge_from_line(line: &EdgeLine, layer: Layer, n: usize) -> Result<DepEdge, Violation> {
    let out_of_range = || Violation::EdgeOutOfRange {
        layer,
        head: line.head,
        dep: line.dep,
    };
    let head = match line.head {
        -1 => None,
        h if h >= 0 && (h as usize) < n => Some(h as usize),
        _ => return Err(out_of_range()),
    };
    if line.dep < 0 || line.dep as usize >= n {
        return Err(out_of_range());
    }
    Ok(DepEdge::new(head, line.dep as usize, line.rel.clone(), layer))
}

impl RecordLine {
    fn from_sample(s: &AnnotatedSample) -> Self {
        RecordLine {
            id: s.id.clone(),
            tokens: s.tokens.iter().map(|t| t.surface.clone()).collect(),
            pos: s.tokens.iter().map(|t| t.pos.clone()).collect(),
            entities: s.entities.clone(),
            label: s.label.clone(),
            syn_edges: s.syn_edges.iter().map(edge_to_line).collect(),
            sem_edges: s.sem_edges.iter().map(edge_to_line).collect(),
            domain: s.domain.clone(),
            source_id: None,
            candidate_id: None,
            method: None,
            substitutions: None,
            scores: None,
            predicted_label: None,
            verified: None,
            edges_stale: false,
        }
    }

    fn from_record(r: &Record) -> Self {
        match r {
            Record::Sample(s) => RecordLine::from_sample(s),
            Record::Counterfactual(cf) => {
                let mut line = RecordLine::from_sample(&cf.sample);
                line.source_id = Some(cf.source_id.clone());
                line.candidate_id = Some(cf.candidate_id.clone());
                line.method = Some(cf.method);
                line.substitutions = Some(cf.substitutions.clone());
                line.scores = Some(cf.scores.clone());
                line.predicted_label = Some(cf.predicted_label.clone());
                line.verified = Some(cf.verified);
                line.edges_stale = cf.edges_stale;
                line
            }
        }
    }

    /// Builds the sample part; structural problems that prevent building
    /// (length mismatch, edge indices) are reported as violations.
    fn to_sample(&self) -> Result<AnnotatedSample, Violation> {
        if self.tokens.len() != self.pos.len() {
            return Err(Violation::PosLength {
                tokens: self.tokens.len(),
                pos: self.pos.len(),
            });
        }
        let n = self.tokens.len();
        let tokens = self
            .tokens
            .iter()
            .zip(&self.pos)
            .enumerate()
            .map(|(i, (w, p))| Token::new(i, w.clone(), p.clone()))
            .collect();
        let syn_edges = self
            .syn_edges
            .iter()
            .map(|e| edge_from_line(e, Layer::Syntactic, n))
            .collect::<Result<_, _>>()?;
        let sem_edges = self
            .sem_edges
            .iter()
            .map(|e| edge_from_line(e, Layer::Semantic, n))
            .collect::<Result<_, _>>()?;
        Ok(AnnotatedSample {
            id: self.id.clone(),
            tokens,
            entities: self.entities.clone(),
            label: self.label.clone(),
            syn_edges,
            sem_edges,
            domain: self.domain.clone(),
        })
    }
}

/// Serialises one sample to its JSON object (the wire form used by the
/// prediction protocol as well).
pub fn sample_to_json(sample: &AnnotatedSample) -> Value {
    serde_json::to_value(RecordLine::from_sample(sample)).expect("record lines always serialise")
}

/// Parses a sample object without label-set or tree validation.
pub fn sample_from_json(value: Value) -> Result<AnnotatedSample, String> {
    let line: RecordLine = serde_json::from_value(value).map_err(|e| e.to_string())?;
    line.to_sample().map_err(|v| v.to_string())
}

fn parse_record(line: &str, lineno: usize, header: &CorpusHeader) -> Result<Record, CorpusError> {
    let malformed = |message: String| CorpusError::Malformed {
        line: lineno,
        message,
    };
    let parsed: RecordLine = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
    let invalid = |violation: Violation| CorpusError::Invalid {
        line: lineno,
        sample_id: parsed.id.clone(),
        violation,
    };
    let sample = parsed.to_sample().map_err(invalid)?;
    let Some(source_id) = parsed.source_id.clone() else {
        sample.validate(&header.labels, true).map_err(invalid)?;
        return Ok(Record::Sample(sample));
    };
    sample
        .validate(&header.labels, !parsed.edges_stale)
        .map_err(invalid)?;
    let missing = |field: &str| malformed(format!("counterfactual `{}` lacks `{field}`", parsed.id));
    let cf = Counterfactual {
        sample,
        source_id,
        candidate_id: parsed.candidate_id.clone().ok_or_else(|| missing("candidate_id"))?,
        method: parsed.method.ok_or_else(|| missing("method"))?,
        substitutions: parsed
            .substitutions
            .clone()
            .ok_or_else(|| missing("substitutions"))?,
        scores: parsed.scores.clone().ok_or_else(|| missing("scores"))?,
        verified: parsed.verified.unwrap_or(true),
        predicted_label: parsed
            .predicted_label
            .clone()
            .ok_or_else(|| missing("predicted_label"))?,
        edges_stale: parsed.edges_stale,
    };
    Ok(Record::Counterfactual(cf))
}

/// Reads a corpus from any buffered reader.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Corpus, CorpusError> {
    let mut header: Option<CorpusHeader> = None;
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| CorpusError::Malformed {
            line: lineno,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match &header {
            None => {
                let h: HeaderLine =
                    serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                        line: lineno,
                        message: format!("expected corpus header: {e}"),
                    })?;
                if h.format != FORMAT_TAG {
                    return Err(CorpusError::Malformed {
                        line: lineno,
                        message: format!("unsupported format `{}`", h.format),
                    });
                }
                if !h.labels.contains(&h.negative_label) {
                    return Err(CorpusError::Malformed {
                        line: lineno,
                        message: format!(
                            "negative label `{}` is not among the labels",
                            h.negative_label
                        ),
                    });
                }
                header = Some(CorpusHeader::new(h.labels, h.negative_label));
            }
            Some(h) => records.push(parse_record(&line, lineno, h)?),
        }
    }
    Ok(Corpus {
        header: header.unwrap_or_default(),
        records,
    })
}

/// Loads a corpus file. An empty file yields an empty corpus.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| CorpusError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    read_corpus(BufReader::new(file))
}

/// Writes a corpus. The header is omitted for an empty corpus without
/// declared labels, so `[]` becomes an empty file.
pub fn write_corpus<W: Write>(corpus: &Corpus, mut out: W) -> std::io::Result<()> {
    if !corpus.header.labels.is_empty() || !corpus.records.is_empty() {
        let header = HeaderLine {
            format: FORMAT_TAG.to_string(),
            labels: corpus.header.labels.clone(),
            negative_label: corpus.header.negative_label.clone(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
    }
    for record in &corpus.records {
        serde_json::to_writer(&mut out, &RecordLine::from_record(record))?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn emit_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let wrap = |source| CorpusError::Write {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::create(path).map_err(wrap)?;
    write_corpus(corpus, BufWriter::new(file)).map_err(wrap)
}

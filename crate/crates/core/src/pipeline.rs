//! Configuration and end-to-end orchestration: ingest, generate, verify,
//! augment, train and evaluate, writing `cad.jsonl`, `augmented.jsonl`,
//! `model.bin` and `report.json` to the output directory.
//!
//! Configuration is JSON. Nested objects and dotted keys are equivalent
//! (`{"synco":{"tdt":0.3}}` is `{"synco.tdt":0.3}`); command-line flags use
//! the same dotted names.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::augment::{augment, generate, Generators};
use crate::classify::{train, BuiltinClassifier, ClassifyError, HttpClassifier, LinearRcModel, Predictor, TrainConfig};
use crate::corpus::{emit_corpus, load_corpus, Corpus, CorpusHeader, Counterfactual, Method, Record};
use crate::depgraph::AggregationMode;
use crate::embed::{FeatureMode, OovPolicy, WordVectors, DEFAULT_TAG_DIM, DEFAULT_WORD_DIM};
use crate::evalkit::{score, MetricReport};
use crate::semco::SemCoConfig;
use crate::synco::{GenerateError, SynCoConfig};

pub const SEED_ENV: &str = "COCO_SEED";

#[derive(Debug, Error, PartialEq)]
#[error("config key `{key}`: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

fn config_error(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum ClassifierSpec {
    #[default]
    Builtin,
    Http(String),
}

impl std::str::FromStr for ClassifierSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "builtin" {
            Ok(ClassifierSpec::Builtin)
        } else if let Some(url) = s.strip_prefix("http:") {
            // `http:http://host:port` and `http://host:port` both work
            let url = if url.starts_with("//") { s } else { url };
            Ok(ClassifierSpec::Http(url.to_string()))
        } else {
            Err(format!("expected `builtin` or `http:<url>`, got `{s}`"))
        }
    }
}

impl fmt::Display for ClassifierSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassifierSpec::Builtin => f.write_str("builtin"),
            ClassifierSpec::Http(url) => write!(f, "http:{url}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub synco_enabled: bool,
    pub synco: SynCoConfig,
    pub semco_enabled: bool,
    pub semco: SemCoConfig,
    pub train: TrainConfig,
    pub embeddings_path: Option<PathBuf>,
    pub embeddings_dim: usize,
    pub oov_policy: Option<OovPolicy>,
    pub tags_dim: usize,
    /// Defaults to `seed`.
    pub tags_seed: Option<u64>,
    pub classifier: ClassifierSpec,
    pub input_corpus: Option<PathBuf>,
    /// Evaluation corpus; the input corpus is scored when absent.
    pub input_test: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            synco_enabled: true,
            synco: SynCoConfig::default(),
            semco_enabled: true,
            semco: SemCoConfig::default(),
            train: TrainConfig::default(),
            embeddings_path: None,
            embeddings_dim: DEFAULT_WORD_DIM,
            oov_policy: None,
            tags_dim: DEFAULT_TAG_DIM,
            tags_seed: None,
            classifier: ClassifierSpec::Builtin,
            input_corpus: None,
            input_test: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Every accepted key.
pub const CONFIG_KEYS: &[&str] = &[
    "seed",
    "synco.enabled",
    "synco.tdt",
    "synco.fst",
    "synco.candidates",
    "synco.strict_flip",
    "synco.aggregation",
    "synco.feature_mode",
    "semco.enabled",
    "semco.sst",
    "semco.candidates",
    "semco.strict_flip",
    "semco.include_entities",
    "train.lr0",
    "train.lr_decay",
    "train.l2",
    "train.epochs",
    "train.batch_size",
    "embeddings.path",
    "embeddings.dim",
    "embeddings.oov_policy",
    "tags.dim",
    "tags.seed",
    "classifier",
    "input.corpus",
    "input.test",
    "output.dir",
];

fn flatten(prefix: &str, value: &Map<String, Value>, out: &mut Vec<(String, Value)>) {
    for (k, v) in value {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Object(inner) => flatten(&key, inner, out),
            other => out.push((key, other.clone())),
        }
    }
}

fn as_f64(key: &str, v: &Value) -> Result<f64, ConfigError> {
    v.as_f64().ok_or_else(|| config_error(key, format!("expected a number, got {v}")))
}

fn as_u64(key: &str, v: &Value) -> Result<u64, ConfigError> {
    v.as_u64()
        .ok_or_else(|| config_error(key, format!("expected a non-negative integer, got {v}")))
}

fn as_usize(key: &str, v: &Value) -> Result<usize, ConfigError> {
    as_u64(key, v).map(|n| n as usize)
}

fn as_bool(key: &str, v: &Value) -> Result<bool, ConfigError> {
    v.as_bool().ok_or_else(|| config_error(key, format!("expected true or false, got {v}")))
}

fn as_str<'a>(key: &str, v: &'a Value) -> Result<&'a str, ConfigError> {
    v.as_str().ok_or_else(|| config_error(key, format!("expected a string, got {v}")))
}

fn optional_path(key: &str, v: &Value) -> Result<Option<PathBuf>, ConfigError> {
    match v {
        Value::Null => Ok(None),
        other => Ok(Some(PathBuf::from(as_str(key, other)?))),
    }
}

fn parsed<T: std::str::FromStr<Err = String>>(key: &str, v: &Value) -> Result<T, ConfigError> {
    as_str(key, v)?.parse().map_err(|e: String| config_error(key, e))
}

fn check(key: &str, ok: bool, message: impl FnOnce() -> String) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(config_error(key, message()))
    }
}

impl PipelineConfig {
    /// Defaults overridden by the keys of `value`.
    pub fn from_json(value: &Value) -> Result<Self, ConfigError> {
        let Value::Object(map) = value else {
            return Err(config_error("<root>", "configuration must be a JSON object"));
        };
        let mut entries = Vec::new();
        flatten("", map, &mut entries);
        let mut cfg = PipelineConfig::default();
        for (key, v) in &entries {
            cfg.set(key, v)?;
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| config_error("<root>", format!("not JSON: {e}")))?;
        Self::from_json(&value)
    }

    /// Sets one dotted key, enforcing its range.
    pub fn set(&mut self, key: &str, v: &Value) -> Result<(), ConfigError> {
        match key {
            "seed" => self.seed = as_u64(key, v)?,
            "synco.enabled" => self.synco_enabled = as_bool(key, v)?,
            "synco.tdt" => {
                let x = as_f64(key, v)?;
                check(key, x >= 0.0, || format!("must be >= 0, got {x}"))?;
                self.synco.tdt = x;
            }
            "synco.fst" => {
                let x = as_f64(key, v)?;
                check(key, (-1.0..=1.0).contains(&x), || format!("must be in [-1, 1], got {x}"))?;
                self.synco.fst = x;
            }
            "synco.candidates" => {
                let n = as_usize(key, v)?;
                check(key, n >= 1, || "must be >= 1".into())?;
                self.synco.candidates_per_sample = n;
            }
            "synco.strict_flip" => self.synco.strict_flip = as_bool(key, v)?,
            "synco.aggregation" => self.synco.aggregation = parsed::<AggregationMode>(key, v)?,
            "synco.feature_mode" => self.synco.feature_mode = parsed::<FeatureMode>(key, v)?,
            "semco.enabled" => self.semco_enabled = as_bool(key, v)?,
            "semco.sst" => {
                let x = as_f64(key, v)?;
                check(key, (-1.0..=1.0).contains(&x), || format!("must be in [-1, 1], got {x}"))?;
                self.semco.sst = x;
            }
            "semco.candidates" => {
                let n = as_usize(key, v)?;
                check(key, n >= 1, || "must be >= 1".into())?;
                self.semco.candidates_per_sample = n;
            }
            "semco.strict_flip" => self.semco.strict_flip = as_bool(key, v)?,
            "semco.include_entities" => self.semco.include_entities = as_bool(key, v)?,
            "train.lr0" => {
                let x = as_f64(key, v)?;
                check(key, x > 0.0, || format!("must be > 0, got {x}"))?;
                self.train.lr0 = x;
            }
            "train.lr_decay" => {
                let x = as_f64(key, v)?;
                check(key, x > 0.0 && x <= 1.0, || format!("must be in (0, 1], got {x}"))?;
                self.train.lr_decay = x;
            }
            "train.l2" => {
                let x = as_f64(key, v)?;
                check(key, x >= 0.0, || format!("must be >= 0, got {x}"))?;
                self.train.l2 = x;
            }
            "train.epochs" => self.train.epochs = as_usize(key, v)?,
            "train.batch_size" => {
                let n = as_usize(key, v)?;
                check(key, n >= 1, || "must be >= 1".into())?;
                self.train.batch_size = n;
            }
            "embeddings.path" => self.embeddings_path = optional_path(key, v)?,
            "embeddings.dim" => {
                let n = as_usize(key, v)?;
                check(key, n >= 1, || "must be >= 1".into())?;
                self.embeddings_dim = n;
            }
            "embeddings.oov_policy" => {
                self.oov_policy = match v {
                    Value::Null => None,
                    other => Some(parsed::<OovPolicy>(key, other)?),
                }
            }
            "tags.dim" => {
                let n = as_usize(key, v)?;
                check(key, n >= 1, || "must be >= 1".into())?;
                self.tags_dim = n;
            }
            "tags.seed" => {
                self.tags_seed = match v {
                    Value::Null => None,
                    other => Some(as_u64(key, other)?),
                }
            }
            "classifier" => self.classifier = parsed::<ClassifierSpec>(key, v)?,
            "input.corpus" => self.input_corpus = optional_path(key, v)?,
            "input.test" => self.input_test = optional_path(key, v)?,
            "output.dir" => self.output_dir = PathBuf::from(as_str(key, v)?),
            _ => return Err(config_error(key, "unknown key")),
        }
        Ok(())
    }

    /// Sets a key from a command-line string: JSON scalars (numbers, `true`,
    /// `false`, `null`) are taken as such, anything else as a string.
    pub fn set_flag(&mut self, key: &str, raw: &str) -> Result<(), ConfigError> {
        let value = match serde_json::from_str::<Value>(raw) {
            Ok(v @ (Value::Number(_) | Value::Bool(_) | Value::Null)) => v,
            _ => Value::String(raw.to_string()),
        };
        self.set(key, &value)
    }

    /// Applies `COCO_SEED` if set.
    pub fn apply_env(&mut self) -> Result<(), ConfigError> {
        if let Ok(raw) = std::env::var(SEED_ENV) {
            self.seed = raw
                .trim()
                .parse()
                .map_err(|_| config_error(SEED_ENV, format!("expected an integer, got `{raw}`")))?;
        }
        Ok(())
    }

    pub fn synco_config(&self) -> SynCoConfig {
        SynCoConfig {
            seed: self.seed,
            ..self.synco.clone()
        }
    }

    pub fn semco_config(&self) -> SemCoConfig {
        SemCoConfig {
            seed: self.seed,
            ..self.semco.clone()
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }

    pub fn generators(&self) -> Generators {
        Generators {
            synco: self.synco_enabled.then(|| self.synco_config()),
            semco: self.semco_enabled.then(|| self.semco_config()),
            tag_dim: self.tags_dim,
            tag_seed: self.tags_seed.unwrap_or(self.seed),
        }
    }

    /// Word vectors from `embeddings.path`, or an empty table when no path is
    /// configured. The OOV policy defaults to `zero_vector` with a file and to
    /// `hashed_random` without one.
    pub fn load_vectors(&self) -> Result<WordVectors, crate::embed::EmbedError> {
        match &self.embeddings_path {
            Some(path) => WordVectors::load(
                path,
                self.embeddings_dim,
                self.oov_policy.unwrap_or(OovPolicy::ZeroVector),
            ),
            None => Ok(WordVectors::new(
                self.embeddings_dim,
                self.oov_policy.unwrap_or(OovPolicy::HashedRandom),
            )),
        }
    }

    /// The effective configuration as nested JSON.
    pub fn to_json(&self) -> Value {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        json!({
            "seed": self.seed,
            "synco": {
                "enabled": self.synco_enabled,
                "tdt": self.synco.tdt,
                "fst": self.synco.fst,
                "candidates": self.synco.candidates_per_sample,
                "strict_flip": self.synco.strict_flip,
                "aggregation": self.synco.aggregation.to_string(),
                "feature_mode": self.synco.feature_mode.to_string(),
            },
            "semco": {
                "enabled": self.semco_enabled,
                "sst": self.semco.sst,
                "candidates": self.semco.candidates_per_sample,
                "strict_flip": self.semco.strict_flip,
                "include_entities": self.semco.include_entities,
            },
            "train": {
                "lr0": self.train.lr0,
                "lr_decay": self.train.lr_decay,
                "l2": self.train.l2,
                "epochs": self.train.epochs,
                "batch_size": self.train.batch_size,
            },
            "embeddings": {
                "path": path(&self.embeddings_path),
                "dim": self.embeddings_dim,
                "oov_policy": self.oov_policy.map(|p| p.to_string()),
            },
            "tags": {"dim": self.tags_dim, "seed": self.tags_seed},
            "classifier": self.classifier.to_string(),
            "input": {"corpus": path(&self.input_corpus), "test": path(&self.input_test)},
            "output": {"dir": self.output_dir.display().to_string()},
        })
    }
}

/// Reads and validates a configuration file.
pub fn validate_config(path: impl AsRef<Path>) -> Result<PipelineConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error("<file>", format!("{}: {e}", path.display())))?;
    PipelineConfig::parse(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Input,
    Generation,
    Classifier,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Input => 3,
            ErrorKind::Generation => 4,
            ErrorKind::Classifier => 5,
        }
    }
}

#[derive(Debug, Error)]
#[error("stage `{stage}` failed: {message}")]
pub struct PipelineError {
    pub stage: &'static str,
    pub kind: ErrorKind,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: &'static str, kind: ErrorKind, message: impl fmt::Display) -> Self {
        PipelineError {
            stage,
            kind,
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }
}

impl From<ConfigError> for PipelineError {
    fn from(e: ConfigError) -> Self {
        PipelineError::new("config", ErrorKind::Config, e)
    }
}

fn generation_error(e: GenerateError) -> PipelineError {
    match e {
        GenerateError::Classifier(e) => PipelineError::new("generate", ErrorKind::Classifier, e),
        other => PipelineError::new("generate", ErrorKind::Generation, other),
    }
}

fn classifier_error(stage: &'static str) -> impl Fn(ClassifyError) -> PipelineError {
    move |e| PipelineError::new(stage, ErrorKind::Classifier, e)
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    pub seed: u64,
    pub classifier: String,
    pub original_size: usize,
    pub cad_size: usize,
    pub cad_by_method: BTreeMap<String, usize>,
    pub augmented_size: usize,
    pub test_size: usize,
    pub metrics: MetricReport,
}

pub const CAD_FILE: &str = "cad.jsonl";
pub const AUGMENTED_FILE: &str = "augmented.jsonl";
pub const MODEL_FILE: &str = "model.bin";
pub const REPORT_FILE: &str = "report.json";

/// Trains the built-in model, falling back to the all-zero model when the
/// corpus is empty.
pub fn train_or_zero(
    samples: &[crate::corpus::AnnotatedSample],
    header: &CorpusHeader,
    wv: &WordVectors,
    cfg: &TrainConfig,
) -> Result<LinearRcModel, ClassifyError> {
    if samples.is_empty() {
        cfg.validate()?;
        return Ok(LinearRcModel::zeros(header.labels.clone(), wv.dim()));
    }
    train(samples, &header.labels, wv, cfg)
}

/// The verifying classifier named by `spec`.
pub fn verifier(
    spec: &ClassifierSpec,
    samples: &[crate::corpus::AnnotatedSample],
    header: &CorpusHeader,
    wv: &Arc<WordVectors>,
    cfg: &TrainConfig,
) -> Result<Box<dyn Predictor>, ClassifyError> {
    Ok(match spec {
        ClassifierSpec::Builtin => Box::new(BuiltinClassifier::new(
            train_or_zero(samples, header, wv, cfg)?,
            Arc::clone(wv),
        )),
        ClassifierSpec::Http(url) => Box::new(HttpClassifier::new(url.clone(), header.labels.clone())),
    })
}

pub fn cad_corpus(header: &CorpusHeader, cad: &[Counterfactual]) -> Corpus {
    Corpus::new(header.clone(), cad.iter().cloned().map(Record::Counterfactual).collect())
}

struct Artifacts {
    written: Vec<PathBuf>,
    keep: bool,
}

impl Drop for Artifacts {
    fn drop(&mut self) {
        if !self.keep {
            for p in &self.written {
                let _ = std::fs::remove_file(p);
            }
        }
    }
}

/// Runs every stage and writes the four artifacts. On error, the artifacts
/// written by this run are removed.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineReport, PipelineError> {
    let input = config
        .input_corpus
        .as_ref()
        .ok_or_else(|| PipelineError::new("config", ErrorKind::Config, "`input.corpus` is required"))?;
    let corpus = load_corpus(input).map_err(|e| PipelineError::new("ingest", ErrorKind::Input, e))?;
    let header = corpus.header.clone();
    let originals: Vec<_> = corpus.samples().cloned().collect();
    let test: Vec<_> = match &config.input_test {
        Some(path) => {
            let t = load_corpus(path).map_err(|e| PipelineError::new("ingest", ErrorKind::Input, e))?;
            if !t.samples().all(|s| header.label_index(&s.label).is_some()) {
                return Err(PipelineError::new(
                    "ingest",
                    ErrorKind::Input,
                    "test corpus uses labels outside the training label set",
                ));
            }
            t.samples().cloned().collect()
        }
        None => originals.clone(),
    };
    log::info!("ingest: {} samples, {} test samples", originals.len(), test.len());

    let wv = Arc::new(
        config
            .load_vectors()
            .map_err(|e| PipelineError::new("embeddings", ErrorKind::Input, e))?,
    );
    let train_cfg = config.train_config();

    let verifier = verifier(&config.classifier, &originals, &header, &wv, &train_cfg)
        .map_err(classifier_error("verifier"))?;
    let cad = generate(&originals, &wv, &config.generators(), verifier.as_ref()).map_err(generation_error)?;
    let augmented = augment(&originals, &cad);
    log::info!("augment: {} + {} samples", originals.len(), cad.len());

    let model = train_or_zero(&augmented, &header, &wv, &train_cfg).map_err(classifier_error("train"))?;
    let final_classifier = BuiltinClassifier::new(model, Arc::clone(&wv));
    let predictions = final_classifier
        .predict_batch(&test)
        .map_err(classifier_error("evaluate"))?;
    let gold: Vec<String> = test.iter().map(|s| s.label.clone()).collect();
    let pred: Vec<String> = predictions.into_iter().map(|p| p.label).collect();
    let metrics = score(&gold, &pred, &header.labels, Some(&header.negative_label).filter(|n| !n.is_empty()).map(|s| s.as_str()))
        .map_err(|e| PipelineError::new("evaluate", ErrorKind::Input, e))?;

    let mut cad_by_method = BTreeMap::new();
    for m in [Method::SynCo, Method::SemCo] {
        cad_by_method.insert(m.to_string(), cad.iter().filter(|cf| cf.method == m).count());
    }
    let report = PipelineReport {
        seed: config.seed,
        classifier: config.classifier.to_string(),
        original_size: originals.len(),
        cad_size: cad.len(),
        cad_by_method,
        augmented_size: augmented.len(),
        test_size: test.len(),
        metrics,
    };

    let out = &config.output_dir;
    let output_error = |e: &dyn fmt::Display| PipelineError::new("output", ErrorKind::Input, e.to_string());
    std::fs::create_dir_all(out).map_err(|e| output_error(&e))?;
    let mut artifacts = Artifacts {
        written: Vec::new(),
        keep: false,
    };
    let cad_path = out.join(CAD_FILE);
    artifacts.written.push(cad_path.clone());
    emit_corpus(&cad_corpus(&header, &cad), &cad_path).map_err(|e| output_error(&e))?;

    let aug_path = out.join(AUGMENTED_FILE);
    artifacts.written.push(aug_path.clone());
    let aug_records = originals
        .iter()
        .cloned()
        .map(Record::Sample)
        .chain(cad.iter().cloned().map(Record::Counterfactual))
        .collect();
    emit_corpus(&Corpus::new(header.clone(), aug_records), &aug_path).map_err(|e| output_error(&e))?;

    let model_path = out.join(MODEL_FILE);
    artifacts.written.push(model_path.clone());
    final_classifier
        .model()
        .save(&model_path)
        .map_err(|e| output_error(&e))?;

    let report_path = out.join(REPORT_FILE);
    artifacts.written.push(report_path.clone());
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(&report_path, text + "\n").map_err(|e| output_error(&e))?;

    artifacts.keep = true;
    Ok(report)
}

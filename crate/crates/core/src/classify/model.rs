//! Built-in softmax-regression classifier over averaged word vectors.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;

use super::{ClassifyError, Prediction, Predictor};
use crate::corpus::{AnnotatedSample, EntityRole};
use crate::embed::WordVectors;
use crate::rng;

const MAGIC: &[u8; 8] = b"COCOLRM\0";
const VERSION: u32 = 1;

/// Mean of all tokens, then the mean of the e1 span and of the e2 span.
/// A third entity is ignored.
pub fn featurize(sample: &AnnotatedSample, wv: &WordVectors) -> Vec<f64> {
    let words = |range: std::ops::Range<usize>| {
        sample.tokens[range].iter().map(|t| t.surface.as_str())
    };
    let span = |role| {
        sample
            .entity(role)
            .map(|e| wv.mean(words(e.indices())))
            .unwrap_or_else(|| vec![0.0; wv.dim()])
    };
    let mut out = wv.mean(words(0..sample.len()));
    out.extend(span(EntityRole::E1));
    out.extend(span(EntityRole::E2));
    out
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr0: f64,
    pub lr_decay: f64,
    pub l2: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr0: 0.5,
            lr_decay: 0.9,
            l2: 0.002,
            epochs: 30,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        if !(self.lr0 > 0.0) {
            return Err(ClassifyError::Config(format!("lr0 must be > 0, got {}", self.lr0)));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(ClassifyError::Config(format!(
                "lr_decay must be in (0, 1], got {}",
                self.lr_decay
            )));
        }
        if !(self.l2 >= 0.0) {
            return Err(ClassifyError::Config(format!("l2 must be >= 0, got {}", self.l2)));
        }
        if self.batch_size == 0 {
            return Err(ClassifyError::Config("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Linear relation classifier: `softmax(W x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRcModel {
    labels: Vec<String>,
    word_dim: usize,
    /// `labels.len() x feature_dim`, row-major.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

/// Gradient of the training objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Mean softmax cross-entropy of `(features, targets)` plus
/// `(l2 / 2) * |W|^2`, with its gradient. The bias is not regularised.
pub fn loss_and_gradient(
    weights: &[f64],
    bias: &[f64],
    features: &[&[f64]],
    targets: &[usize],
    l2: f64,
) -> (f64, Gradient) {
    let classes = bias.len();
    let dim = weights.len() / classes.max(1);
    let mut grad = Gradient {
        weights: vec![0.0; weights.len()],
        bias: vec![0.0; classes],
    };
    let mut loss = 0.0;
    let m = features.len().max(1) as f64;
    for (x, &y) in features.iter().zip(targets) {
        let logits = logits(weights, bias, x);
        let probs = softmax(&logits);
        loss -= probs[y].max(f64::MIN_POSITIVE).ln();
        for (k, p) in probs.iter().enumerate() {
            let err = (p - if k == y { 1.0 } else { 0.0 }) / m;
            grad.bias[k] += err;
            let row = &mut grad.weights[k * dim..(k + 1) * dim];
            row.iter_mut().zip(x.iter()).for_each(|(g, xi)| *g += err * xi);
        }
    }
    loss /= m;
    loss += 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    grad.weights
        .iter_mut()
        .zip(weights)
        .for_each(|(g, w)| *g += l2 * w);
    (loss, grad)
}

fn logits(weights: &[f64], bias: &[f64], x: &[f64]) -> Vec<f64> {
    let dim = x.len();
    bias.iter()
        .enumerate()
        .map(|(k, b)| {
            b + weights[k * dim..(k + 1) * dim]
                .iter()
                .zip(x)
                .map(|(w, xi)| w * xi)
                .sum::<f64>()
        })
        .collect()
}

/// Trains by mini-batch SGD with learning rate `lr0 * lr_decay^epoch`,
/// starting from all-zero parameters.
pub fn train<'a>(
    samples: impl IntoIterator<Item = &'a AnnotatedSample>,
    labels: &[String],
    wv: &WordVectors,
    cfg: &TrainConfig,
) -> Result<LinearRcModel, ClassifyError> {
    cfg.validate()?;
    let mut features = Vec::new();
    let mut targets = Vec::new();
    for s in samples {
        let y = labels
            .iter()
            .position(|l| *l == s.label)
            .ok_or_else(|| ClassifyError::UnknownLabel(s.label.clone()))?;
        features.push(featurize(s, wv));
        targets.push(y);
    }
    let mut present = targets.clone();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        return Err(ClassifyError::SingleLabel(present.len()));
    }

    let mut model = LinearRcModel::zeros(labels.to_vec(), wv.dim());
    let mut order: Vec<usize> = (0..features.len()).collect();
    for epoch in 0..cfg.epochs {
        let lr = cfg.lr0 * cfg.lr_decay.powi(epoch as i32);
        order.sort_unstable();
        order.shuffle(&mut rng::stream(cfg.seed, &["train", &epoch.to_string()]));
        for batch in order.chunks(cfg.batch_size) {
            let xs: Vec<&[f64]> = batch.iter().map(|&i| features[i].as_slice()).collect();
            let ys: Vec<usize> = batch.iter().map(|&i| targets[i]).collect();
            let (_, grad) = loss_and_gradient(&model.weights, &model.bias, &xs, &ys, cfg.l2);
            model.step(&grad, lr);
        }
    }
    Ok(model)
}

impl LinearRcModel {
    pub fn zeros(labels: Vec<String>, word_dim: usize) -> Self {
        let k = labels.len();
        LinearRcModel {
            weights: vec![0.0; k * 3 * word_dim],
            bias: vec![0.0; k],
            labels,
            word_dim,
        }
    }

    pub fn from_parts(
        labels: Vec<String>,
        word_dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self, ClassifyError> {
        if bias.len() != labels.len() || weights.len() != labels.len() * 3 * word_dim {
            return Err(ClassifyError::ModelFormat(
                "parameter shapes do not match the label count and dimension".into(),
            ));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(ClassifyError::ModelFormat("non-finite parameter".into()));
        }
        Ok(LinearRcModel {
            labels,
            word_dim,
            weights,
            bias,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn word_dim(&self) -> usize {
        self.word_dim
    }

    pub fn feature_dim(&self) -> usize {
        3 * self.word_dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    fn step(&mut self, grad: &Gradient, lr: f64) {
        self.weights
            .iter_mut()
            .zip(&grad.weights)
            .for_each(|(w, g)| *w -= lr * g);
        self.bias
            .iter_mut()
            .zip(&grad.bias)
            .for_each(|(b, g)| *b -= lr * g);
    }

    /// Argmax of the softmax scores; ties go to the lowest label index.
    pub fn predict_features(&self, x: &[f64]) -> Prediction {
        let scores = softmax(&logits(&self.weights, &self.bias, x));
        let mut best = 0;
        for (k, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = k;
            }
        }
        Prediction {
            label: self.labels[best].clone(),
            scores,
        }
    }

    pub fn predict(&self, sample: &AnnotatedSample, wv: &WordVectors) -> Prediction {
        self.predict_features(&featurize(sample, wv))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 8 * (self.weights.len() + self.bias.len()));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.word_dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.labels.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.feature_dim() as u32).to_le_bytes());
        for label in &self.labels {
            out.extend_from_slice(&(label.len() as u32).to_le_bytes());
            out.extend_from_slice(label.as_bytes());
        }
        for v in self.weights.iter().chain(&self.bias) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ClassifyError> {
        let mut cursor = bytes;
        let mut magic = [0u8; 8];
        read_exact(&mut cursor, &mut magic)?;
        if &magic != MAGIC {
            return Err(ClassifyError::ModelFormat("bad magic".into()));
        }
        let version = read_u32(&mut cursor)?;
        if version != VERSION {
            return Err(ClassifyError::ModelFormat(format!(
                "unsupported version {version}"
            )));
        }
        let word_dim = read_u32(&mut cursor)? as usize;
        let num_labels = read_u32(&mut cursor)? as usize;
        let feature_dim = read_u32(&mut cursor)? as usize;
        if feature_dim != 3 * word_dim {
            return Err(ClassifyError::ModelFormat(format!(
                "feature dim {feature_dim} is not 3 x {word_dim}"
            )));
        }
        let mut labels = Vec::with_capacity(num_labels);
        for _ in 0..num_labels {
            let len = read_u32(&mut cursor)? as usize;
            let mut buf = vec![0u8; len];
            read_exact(&mut cursor, &mut buf)?;
            labels.push(
                String::from_utf8(buf)
                    .map_err(|_| ClassifyError::ModelFormat("label is not UTF-8".into()))?,
            );
        }
        let mut read_f64s = |count: usize| -> Result<Vec<f64>, ClassifyError> {
            (0..count)
                .map(|_| {
                    let mut b = [0u8; 8];
                    read_exact(&mut cursor, &mut b)?;
                    Ok(f64::from_le_bytes(b))
                })
                .collect()
        };
        let weights = read_f64s(num_labels * feature_dim)?;
        let bias = read_f64s(num_labels)?;
        if !cursor.is_empty() {
            return Err(ClassifyError::ModelFormat("trailing bytes".into()));
        }
        LinearRcModel::from_parts(labels, word_dim, weights, bias)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ClassifyError> {
        let path = path.as_ref();
        fs::File::create(path)
            .and_then(|mut f| f.write_all(&self.to_bytes()))
            .map_err(|source| ClassifyError::Io {
                path: path.to_path_buf(),
                source,
            })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ClassifyError> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|source| ClassifyError::Io {
                path: path.to_path_buf(),
                source,
            })?;
        LinearRcModel::from_bytes(&bytes)
    }
}

fn read_exact(cursor: &mut &[u8], buf: &mut [u8]) -> Result<(), ClassifyError> {
    cursor
        .read_exact(buf)
        .map_err(|_| ClassifyError::ModelFormat("truncated file".into()))
}

fn read_u32(cursor: &mut &[u8]) -> Result<u32, ClassifyError> {
    let mut b = [0u8; 4];
    read_exact(cursor, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

/// The built-in model bundled with the word vectors it featurizes with.
#[derive(Debug, Clone)]
pub struct BuiltinClassifier {
    model: Arc<LinearRcModel>,
    vectors: Arc<WordVectors>,
}

impl BuiltinClassifier {
    pub fn new(model: LinearRcModel, vectors: Arc<WordVectors>) -> Self {
        BuiltinClassifier {
            model: Arc::new(model),
            vectors,
        }
    }

    pub fn model(&self) -> &LinearRcModel {
        &self.model
    }

    pub fn vectors(&self) -> &WordVectors {
        &self.vectors
    }
}

impl Predictor for BuiltinClassifier {
    fn labels(&self) -> &[String] {
        self.model.labels()
    }

    fn predict_batch(&self, samples: &[AnnotatedSample]) -> Result<Vec<Prediction>, ClassifyError> {
        Ok(samples
            .iter()
            .map(|s| self.model.predict(s, &self.vectors))
            .collect())
    }
}

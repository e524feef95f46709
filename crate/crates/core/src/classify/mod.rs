//! Verification classifiers.
//!
//! Generators only need a [`Predictor`]: something that maps a batch of
//! samples to labels and per-label scores. Three implementations ship here:
//! the built-in linear model ([`BuiltinClassifier`]), a client for external
//! backbones speaking the `coco-predict/1` HTTP protocol
//! ([`HttpClassifier`]), and a constant predictor for tests and stubs.

mod model;
mod remote;
mod stub;

use std::path::PathBuf;

use thiserror::Error;

use crate::corpus::AnnotatedSample;

pub use model::{
    featurize, loss_and_gradient, softmax, train, BuiltinClassifier, Gradient, LinearRcModel,
    TrainConfig,
};
pub use remote::{external_predict, parse_response, HttpClassifier, PREDICT_FORMAT};
pub use stub::StubServer;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("training needs at least two distinct labels, found {0}")]
    SingleLabel(usize),
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("request to {endpoint} failed: {message}")]
    Network { endpoint: String, message: String },
    #[error("{endpoint} answered HTTP {status}")]
    Status { endpoint: String, status: u16 },
    #[error("response field `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("predicted label `{0}` is not in the declared label set")]
    UnknownLabel(String),
    #[error("model file: {0}")]
    ModelFormat(String),
    #[error("model file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// One prediction: the argmax label and the score of every label, ordered
/// like the predictor's label list.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: String,
    pub scores: Vec<f64>,
}

pub trait Predictor: Send + Sync {
    /// Label order used by [`Prediction::scores`].
    fn labels(&self) -> &[String];

    /// Predictions positionally aligned with `samples`.
    fn predict_batch(&self, samples: &[AnnotatedSample]) -> Result<Vec<Prediction>, ClassifyError>;

    fn predict(&self, sample: &AnnotatedSample) -> Result<Prediction, ClassifyError> {
        let mut out = self.predict_batch(std::slice::from_ref(sample))?;
        out.pop().ok_or_else(|| ClassifyError::Schema {
            field: "labels".into(),
            message: "empty response".into(),
        })
    }
}

/// Always predicts the same label, with a one-hot score vector.
#[derive(Debug, Clone)]
pub struct ConstantClassifier {
    labels: Vec<String>,
    label: String,
}

impl ConstantClassifier {
    pub fn new(labels: Vec<String>, label: impl Into<String>) -> Self {
        let label = label.into();
        assert!(labels.contains(&label), "constant label must be declared");
        ConstantClassifier { labels, label }
    }
}

impl Predictor for ConstantClassifier {
    fn labels(&self) -> &[String] {
        &self.labels
    }

    fn predict_batch(&self, samples: &[AnnotatedSample]) -> Result<Vec<Prediction>, ClassifyError> {
        let scores: Vec<f64> = self
            .labels
            .iter()
            .map(|l| if *l == self.label { 1.0 } else { 0.0 })
            .collect();
        Ok(samples
            .iter()
            .map(|_| Prediction {
                label: self.label.clone(),
                scores: scores.clone(),
            })
            .collect())
    }
}

impl<P: Predictor + ?Sized> Predictor for std::sync::Arc<P> {
    fn labels(&self) -> &[String] {
        (**self).labels()
    }

    fn predict_batch(&self, samples: &[AnnotatedSample]) -> Result<Vec<Prediction>, ClassifyError> {
        (**self).predict_batch(samples)
    }
}

impl<P: Predictor + ?Sized> Predictor for Box<P> {
    fn labels(&self) -> &[String] {
        (**self).labels()
    }

    fn predict_batch(&self, samples: &[AnnotatedSample]) -> Result<Vec<Prediction>, ClassifyError> {
        (**self).predict_batch(samples)
    }
}

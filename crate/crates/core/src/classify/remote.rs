//! Client side of the `coco-predict/1` protocol.
//!
//! `POST <endpoint>/predict` with `{"format":"coco-predict/1","samples":[...]}`
//! answers `{"labels":[...],"scores":[[...],...]}`, positionally aligned with
//! the request and with scores ordered like the corpus header's labels.

use std::time::Duration;

use serde_json::{json, Value};

use super::{ClassifyError, Prediction, Predictor};
use crate::corpus::{sample_to_json, AnnotatedSample};

pub const PREDICT_FORMAT: &str = "coco-predict/1";

fn predict_url(endpoint: &str) -> String {
    let base = endpoint.trim_end_matches('/');
    if base.ends_with("/predict") {
        base.to_string()
    } else {
        format!("{base}/predict")
    }
}

fn schema(field: impl Into<String>, message: impl Into<String>) -> ClassifyError {
    ClassifyError::Schema {
        field: field.into(),
        message: message.into(),
    }
}

/// Validates a response body against the request it answers.
pub fn parse_response(
    body: &str,
    labels: &[String],
    expected: usize,
) -> Result<Vec<Prediction>, ClassifyError> {
    let value: Value =
        serde_json::from_str(body).map_err(|e| schema("<body>", format!("not JSON: {e}")))?;
    let out_labels = value
        .get("labels")
        .ok_or_else(|| schema("labels", "missing"))?
        .as_array()
        .ok_or_else(|| schema("labels", "not an array"))?;
    let out_scores = value
        .get("scores")
        .ok_or_else(|| schema("scores", "missing"))?
        .as_array()
        .ok_or_else(|| schema("scores", "not an array"))?;
    if out_labels.len() != expected {
        return Err(schema(
            "labels",
            format!("{} entries for {expected} samples", out_labels.len()),
        ));
    }
    if out_scores.len() != expected {
        return Err(schema(
            "scores",
            format!("{} entries for {expected} samples", out_scores.len()),
        ));
    }
    out_labels
        .iter()
        .zip(out_scores)
        .enumerate()
        .map(|(i, (label, scores))| {
            let label = label
                .as_str()
                .ok_or_else(|| schema(format!("labels[{i}]"), "not a string"))?;
            if !labels.iter().any(|l| l == label) {
                return Err(ClassifyError::UnknownLabel(label.to_string()));
            }
            let scores = scores
                .as_array()
                .ok_or_else(|| schema(format!("scores[{i}]"), "not an array"))?
                .iter()
                .enumerate()
                .map(|(j, s)| {
                    s.as_f64()
                        .ok_or_else(|| schema(format!("scores[{i}][{j}]"), "not a number"))
                })
                .collect::<Result<Vec<f64>, _>>()?;
            if scores.len() != labels.len() {
                return Err(schema(
                    format!("scores[{i}]"),
                    format!("{} scores for {} labels", scores.len(), labels.len()),
                ));
            }
            Ok(Prediction {
                label: label.to_string(),
                scores,
            })
        })
        .collect()
}

/// One blocking request for the whole batch.
pub fn external_predict(
    endpoint: &str,
    samples: &[AnnotatedSample],
    labels: &[String],
    timeout: Duration,
) -> Result<Vec<Prediction>, ClassifyError> {
    let url = predict_url(endpoint);
    let request = json!({
        "format": PREDICT_FORMAT,
        "samples": samples.iter().map(sample_to_json).collect::<Vec<_>>(),
    });
    let agent = ureq::AgentBuilder::new().timeout(timeout).build();
    let response = agent
        .post(&url)
        .set("Content-Type", "application/json")
        .send_string(&request.to_string());
    let body = match response {
        Ok(r) => r.into_string().map_err(|e| ClassifyError::Network {
            endpoint: url.clone(),
            message: e.to_string(),
        })?,
        Err(ureq::Error::Status(status, _)) => {
            return Err(ClassifyError::Status {
                endpoint: url,
                status,
            })
        }
        Err(e) => {
            return Err(ClassifyError::Network {
                endpoint: url,
                message: e.to_string(),
            })
        }
    };
    parse_response(&body, labels, samples.len())
}

/// A [`Predictor`] backed by a remote backbone.
#[derive(Debug, Clone)]
pub struct HttpClassifier {
    endpoint: String,
    labels: Vec<String>,
    timeout: Duration,
    batch_size: usize,
}

impl HttpClassifier {
    pub fn new(endpoint: impl Into<String>, labels: Vec<String>) -> Self {
        HttpClassifier {
            endpoint: endpoint.into(),
            labels,
            timeout: Duration::from_secs(30),
            batch_size: 64,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    /// Requests carry at most `batch_size` samples; batches are sent one at
    /// a time.
    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

impl Predictor for HttpClassifier {
    fn labels(&self) -> &[String] {
        &self.labels
    }

    fn predict_batch(&self, samples: &[AnnotatedSample]) -> Result<Vec<Prediction>, ClassifyError> {
        let mut out = Vec::with_capacity(samples.len());
        for chunk in samples.chunks(self.batch_size) {
            out.extend(external_predict(
                &self.endpoint,
                chunk,
                &self.labels,
                self.timeout,
            )?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels() -> Vec<String> {
        vec!["A".into(), "B".into()]
    }

    #[test]
    fn url_building() {
        assert_eq!(predict_url("http://h:1"), "http://h:1/predict");
        assert_eq!(predict_url("http://h:1/"), "http://h:1/predict");
        assert_eq!(predict_url("http://h:1/predict"), "http://h:1/predict");
    }

    #[test]
    fn well_formed_response() {
        let p = parse_response(r#"{"labels":["B"],"scores":[[0.25,0.75]]}"#, &labels(), 1).unwrap();
        assert_eq!(p[0].label, "B");
        assert_eq!(p[0].scores, vec![0.25, 0.75]);
    }

    #[test]
    fn malformed_responses_name_the_field() {
        let field_of = |body: &str| match parse_response(body, &labels(), 1) {
            Err(ClassifyError::Schema { field, .. }) => field,
            other => panic!("expected schema error, got {other:?}"),
        };
        assert_eq!(field_of("not json"), "<body>");
        assert_eq!(field_of(r#"{"scores":[[1,0]]}"#), "labels");
        assert_eq!(field_of(r#"{"labels":["A"]}"#), "scores");
        assert_eq!(field_of(r#"{"labels":[3],"scores":[[1,0]]}"#), "labels[0]");
        assert_eq!(field_of(r#"{"labels":["A"],"scores":[[1,"x"]]}"#), "scores[0][1]");
        assert_eq!(field_of(r#"{"labels":["A"],"scores":[[1]]}"#), "scores[0]");
        assert_eq!(field_of(r#"{"labels":["A","A"],"scores":[[1,0],[1,0]]}"#), "labels");
    }

    #[test]
    fn undeclared_label_is_rejected() {
        let err = parse_response(r#"{"labels":["Z"],"scores":[[1,0]]}"#, &labels(), 1).unwrap_err();
        assert!(matches!(err, ClassifyError::UnknownLabel(l) if l == "Z"));
    }

    #[test]
    fn unreachable_endpoint_is_a_network_error() {
        // port 9 on localhost is almost never listening
        let err = external_predict("http://127.0.0.1:9", &[], &labels(), Duration::from_secs(2))
            .unwrap_err();
        assert!(matches!(err, ClassifyError::Network { .. }), "{err}");
    }
}

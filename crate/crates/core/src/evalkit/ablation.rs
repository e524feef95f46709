use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use super::metrics::{score, MetricReport};
use super::EvalError;
use crate::augment::{augment, generate, Generators};
use crate::classify::{train, BuiltinClassifier, Predictor, TrainConfig};
use crate::corpus::{AnnotatedSample, CorpusHeader};
use crate::embed::WordVectors;
use crate::semco::SemCoConfig;
use crate::synco::SynCoConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorSet {
    SynCo,
    SemCo,
    Both,
}

impl GeneratorSet {
    pub const ALL: [GeneratorSet; 3] = [GeneratorSet::SynCo, GeneratorSet::SemCo, GeneratorSet::Both];

    pub fn row_name(self) -> &'static str {
        match self {
            GeneratorSet::SynCo => "+SynCo",
            GeneratorSet::SemCo => "+SemCo",
            GeneratorSet::Both => "+CoCo",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct AblationConfig {
    pub train: TrainConfig,
    pub synco: SynCoConfig,
    pub semco: SemCoConfig,
    pub tag_dim: usize,
    pub tag_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub config: String,
    pub cad_size: usize,
    pub report: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn row(&self, config: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.config == config)
    }

    /// `{"rows":[{"config","accuracy","micro_f1","macro_f1"}]}`.
    pub fn to_json(&self) -> Value {
        json!({
            "rows": self.rows.iter().map(|r| json!({
                "config": r.config,
                "accuracy": r.report.accuracy,
                "micro_f1": r.report.micro_f1,
                "macro_f1": r.report.macro_f1,
            })).collect::<Vec<_>>()
        })
    }
}

fn evaluate(
    classifier: &dyn Predictor,
    test: &[AnnotatedSample],
    header: &CorpusHeader,
) -> Result<MetricReport, EvalError> {
    let pred: Vec<String> = classifier
        .predict_batch(test)?
        .into_iter()
        .map(|p| p.label)
        .collect();
    let gold: Vec<String> = test.iter().map(|s| s.label.clone()).collect();
    score(&gold, &pred, &header.labels, Some(&header.negative_label))
}

/// Trains on the originals (row `Ori`), then once per generator set on the
/// originals plus that set's counterfactuals, verified by the `Ori` model.
pub fn ablation_run(
    train_set: &[AnnotatedSample],
    test_set: &[AnnotatedSample],
    header: &CorpusHeader,
    wv: Arc<WordVectors>,
    cfg: &AblationConfig,
    sets: &[GeneratorSet],
) -> Result<AblationTable, EvalError> {
    let base = BuiltinClassifier::new(train(train_set, &header.labels, &wv, &cfg.train)?, Arc::clone(&wv));
    let mut rows = vec![AblationRow {
        config: "Ori".into(),
        cad_size: 0,
        report: evaluate(&base, test_set, header)?,
    }];
    for &set in sets {
        let generators = Generators {
            synco: matches!(set, GeneratorSet::SynCo | GeneratorSet::Both).then(|| cfg.synco.clone()),
            semco: matches!(set, GeneratorSet::SemCo | GeneratorSet::Both).then(|| cfg.semco.clone()),
            tag_dim: cfg.tag_dim,
            tag_seed: cfg.tag_seed,
        };
        let cad = generate(train_set, &wv, &generators, &base)?;
        let augmented = augment(train_set, &cad);
        let model = BuiltinClassifier::new(train(&augmented, &header.labels, &wv, &cfg.train)?, Arc::clone(&wv));
        rows.push(AblationRow {
            config: set.row_name().into(),
            cad_size: cad.len(),
            report: evaluate(&model, test_set, header)?,
        });
    }
    Ok(AblationTable { rows })
}

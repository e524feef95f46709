use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold occurrences.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub per_label: Vec<LabelMetrics>,
    pub support: usize,
    /// Label left out of the micro and macro averages, if any.
    pub negative_label: Option<String>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Scores `pred` against `gold`. Micro metrics pool true positives, false
/// positives and false negatives over every label except `negative`; macro
/// F1 averages the per-label F1 of those labels. Accuracy counts every
/// label. With `negative = None` nothing is excluded.
pub fn score(
    gold: &[String],
    pred: &[String],
    labels: &[String],
    negative: Option<&str>,
) -> Result<MetricReport, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    let index = |l: &String| {
        labels
            .iter()
            .position(|x| x == l)
            .ok_or_else(|| EvalError::UnknownLabel(l.clone()))
    };
    if let Some(neg) = negative {
        if !labels.iter().any(|l| l == neg) {
            return Err(EvalError::UnknownLabel(neg.to_string()));
        }
    }
    let k = labels.len();
    let (mut tp, mut fp, mut fneg) = (vec![0usize; k], vec![0usize; k], vec![0usize; k]);
    let mut correct = 0;
    for (g, p) in gold.iter().zip(pred) {
        let (g, p) = (index(g)?, index(p)?);
        if g == p {
            tp[g] += 1;
            correct += 1;
        } else {
            fp[p] += 1;
            fneg[g] += 1;
        }
    }
    let per_label: Vec<LabelMetrics> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let precision = ratio(tp[i], tp[i] + fp[i]);
            let recall = ratio(tp[i], tp[i] + fneg[i]);
            LabelMetrics {
                label: l.clone(),
                precision,
                recall,
                f1: harmonic(precision, recall),
                support: tp[i] + fneg[i],
            }
        })
        .collect();
    let positive: Vec<usize> = (0..k).filter(|&i| Some(labels[i].as_str()) != negative).collect();
    let sum = |v: &[usize]| positive.iter().map(|&i| v[i]).sum::<usize>();
    let (tp_all, fp_all, fn_all) = (sum(&tp), sum(&fp), sum(&fneg));
    let micro_precision = ratio(tp_all, tp_all + fp_all);
    let micro_recall = ratio(tp_all, tp_all + fn_all);
    let macro_f1 = if positive.is_empty() {
        0.0
    } else {
        positive.iter().map(|&i| per_label[i].f1).sum::<f64>() / positive.len() as f64
    };
    Ok(MetricReport {
        accuracy: ratio(correct, gold.len()),
        micro_precision,
        micro_recall,
        micro_f1: harmonic(micro_precision, micro_recall),
        macro_f1,
        per_label,
        support: gold.len(),
        negative_label: negative.map(str::to_string),
    })
}

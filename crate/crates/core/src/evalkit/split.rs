use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::AnnotatedSample;
use crate::rng;

/// Part of one domain held out for development; the rest of that domain
/// joins the test partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DevSpec {
    pub domain: String,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train: BTreeSet<String>,
    pub test: BTreeSet<String>,
    pub dev: Option<DevSpec>,
}

impl SplitPlan {
    pub fn new<'a>(
        train: impl IntoIterator<Item = &'a str>,
        test: impl IntoIterator<Item = &'a str>,
        dev: Option<(&str, f64)>,
    ) -> Self {
        SplitPlan {
            train: train.into_iter().map(str::to_string).collect(),
            test: test.into_iter().map(str::to_string).collect(),
            dev: dev.map(|(domain, fraction)| DevSpec {
                domain: domain.to_string(),
                fraction,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Split {
    pub train: Vec<AnnotatedSample>,
    pub dev: Vec<AnnotatedSample>,
    pub test: Vec<AnnotatedSample>,
}

/// Partitions the samples of the planned domains. Samples of other domains
/// are dropped; each partition keeps corpus order.
pub fn ood_split(samples: &[AnnotatedSample], plan: &SplitPlan, seed: u64) -> Result<Split, EvalError> {
    if let Some(d) = plan.train.intersection(&plan.test).next() {
        return Err(EvalError::Plan(format!("domain `{d}` is both train and test")));
    }
    if let Some(dev) = &plan.dev {
        if plan.train.contains(&dev.domain) {
            return Err(EvalError::Plan(format!("dev domain `{}` is also a train domain", dev.domain)));
        }
        if !(0.0..=1.0).contains(&dev.fraction) {
            return Err(EvalError::Plan(format!("dev fraction must be in [0, 1], got {}", dev.fraction)));
        }
    }
    let mut domains: Vec<&String> = plan.train.iter().chain(&plan.test).collect();
    if let Some(dev) = &plan.dev {
        domains.push(&dev.domain);
    }
    for s in samples {
        if s.domain.is_none() {
            return Err(EvalError::MissingDomain(s.id.clone()));
        }
    }
    for d in &domains {
        if !samples.iter().any(|s| s.domain.as_ref() == Some(*d)) {
            return Err(EvalError::EmptyDomain((*d).clone()));
        }
    }

    let mut to_dev = vec![false; samples.len()];
    if let Some(dev) = &plan.dev {
        let mut members: Vec<usize> = (0..samples.len())
            .filter(|&i| samples[i].domain.as_ref() == Some(&dev.domain))
            .collect();
        members.shuffle(&mut rng::stream(seed, &["split", &dev.domain]));
        let take = (dev.fraction * members.len() as f64).round() as usize;
        for &i in &members[..take] {
            to_dev[i] = true;
        }
    }
    let mut split = Split::default();
    for (i, s) in samples.iter().enumerate() {
        let domain = s.domain.as_ref().expect("checked above");
        let is_dev_domain = plan.dev.as_ref().is_some_and(|d| &d.domain == domain);
        if to_dev[i] {
            split.dev.push(s.clone());
        } else if plan.train.contains(domain) {
            split.train.push(s.clone());
        } else if plan.test.contains(domain) || is_dev_domain {
            split.test.push(s.clone());
        }
    }
    Ok(split)
}

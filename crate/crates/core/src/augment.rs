//! Corpus-level generation: runs the generators over every original sample
//! and merges their outputs.

use std::collections::HashSet;

use crate::classify::Predictor;
use crate::corpus::{AnnotatedSample, Counterfactual};
use crate::embed::{TagEmbeddings, WordVectors};
use crate::semco::{generate_semco, SemCoConfig};
use crate::synco::{generate_synco, GenerateError, SynCoConfig};

/// Which generators to run. `None` disables a generator.
#[derive(Debug, Clone, Default)]
pub struct Generators {
    pub synco: Option<SynCoConfig>,
    pub semco: Option<SemCoConfig>,
    /// Dimension and seed of the tag embeddings used by SynCo.
    pub tag_dim: usize,
    pub tag_seed: u64,
}

impl Generators {
    pub fn both(synco: SynCoConfig, semco: SemCoConfig) -> Self {
        Generators {
            synco: Some(synco),
            semco: Some(semco),
            tag_dim: crate::embed::DEFAULT_TAG_DIM,
            tag_seed: 0,
        }
    }

    pub fn only_synco(synco: SynCoConfig) -> Self {
        Generators {
            semco: None,
            ..Generators::both(synco, SemCoConfig::default())
        }
    }

    pub fn only_semco(semco: SemCoConfig) -> Self {
        Generators {
            synco: None,
            ..Generators::both(SynCoConfig::default(), semco)
        }
    }
}

/// SynCo outputs followed by SemCo outputs, without two counterfactuals that
/// share source and token sequence, sorted by source id (stable, so SynCo
/// comes first within a source).
pub fn generate(
    samples: &[AnnotatedSample],
    wv: &WordVectors,
    generators: &Generators,
    classifier: &dyn Predictor,
) -> Result<Vec<Counterfactual>, GenerateError> {
    let mut out = Vec::new();
    if let Some(cfg) = &generators.synco {
        let tags = TagEmbeddings::from_samples(generators.tag_dim, generators.tag_seed, samples);
        for original in samples {
            out.extend(generate_synco(original, samples, &tags, cfg, classifier)?);
        }
        log::info!("SynCo: {} counterfactuals from {} samples", out.len(), samples.len());
    }
    if let Some(cfg) = &generators.semco {
        let before = out.len();
        for original in samples {
            out.extend(generate_semco(original, samples, wv, cfg, classifier)?);
        }
        log::info!("SemCo: {} counterfactuals from {} samples", out.len() - before, samples.len());
    }
    Ok(dedupe(out))
}

/// Keeps the first counterfactual of every (source id, surface sequence) and
/// sorts by source id.
pub fn dedupe(mut cad: Vec<Counterfactual>) -> Vec<Counterfactual> {
    let mut seen = HashSet::new();
    cad.retain(|cf| {
        let key = (
            cf.source_id.clone(),
            cf.sample.tokens.iter().map(|t| t.surface.clone()).collect::<Vec<_>>(),
        );
        seen.insert(key)
    });
    cad.sort_by(|a, b| a.source_id.cmp(&b.source_id));
    cad
}

/// Originals followed by the counterfactual samples.
pub fn augment(originals: &[AnnotatedSample], cad: &[Counterfactual]) -> Vec<AnnotatedSample> {
    originals
        .iter()
        .cloned()
        .chain(cad.iter().map(|cf| cf.sample.clone()))
        .collect()
}

//! Syntactic counterfactuals.
//!
//! For an original sample and a handful of candidates carrying other labels:
//! entities of the two samples are paired when their aggregate centralities
//! are close, paired entities are compared by syntactic features, and the
//! first-order neighbors of the original entity are replaced by same-class
//! neighbors of the candidate entity. The edited sample takes the candidate's
//! label and is kept only if the verifying classifier agrees that the label
//! changed.

use std::collections::{BTreeMap, HashSet};

use rand::seq::index;
use rand::Rng;
use thiserror::Error;

use crate::classify::{ClassifyError, Predictor};
use crate::corpus::{AnnotatedSample, CoarsePos, Counterfactual, EntityMention, Layer, Method, Substitution};
use crate::depgraph::{
    first_order_neighbors, topological_distance, AggregationMode, CentralityProfile, DepGraph,
};
use crate::embed::{cosine, syntactic_feature, FeatureMode, TagEmbeddings};
use crate::rng;

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("verification failed: {0}")]
    Classifier(#[from] ClassifyError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynCoConfig {
    /// Topological-distance threshold: entities pair when TD < tdt.
    pub tdt: f64,
    /// Feature-similarity threshold: a pair is edited when FS > fst.
    pub fst: f64,
    pub candidates_per_sample: usize,
    pub seed: u64,
    /// Require the prediction to equal the candidate label rather than just
    /// differ from the original one.
    pub strict_flip: bool,
    pub aggregation: AggregationMode,
    pub feature_mode: FeatureMode,
}

impl Default for SynCoConfig {
    fn default() -> Self {
        SynCoConfig {
            tdt: 0.2,
            fst: 0.8,
            candidates_per_sample: 3,
            seed: 0,
            strict_flip: false,
            aggregation: AggregationMode::Mean,
            feature_mode: FeatureMode::Embedding,
        }
    }
}

impl SynCoConfig {
    pub fn validate(&self) -> Result<(), GenerateError> {
        if !(self.tdt >= 0.0) {
            return Err(GenerateError::Config(format!("tdt must be >= 0, got {}", self.tdt)));
        }
        if !(-1.0..=1.0).contains(&self.fst) {
            return Err(GenerateError::Config(format!("fst must be in [-1, 1], got {}", self.fst)));
        }
        if self.candidates_per_sample == 0 {
            return Err(GenerateError::Config("candidates_per_sample must be >= 1".into()));
        }
        Ok(())
    }
}

/// Up to `k` samples with a label different from the original's, drawn
/// uniformly without replacement. The draw depends only on `seed` and the
/// original's id.
pub fn sample_candidates<'a>(
    corpus: &'a [AnnotatedSample],
    original: &AnnotatedSample,
    k: usize,
    seed: u64,
) -> Vec<&'a AnnotatedSample> {
    let pool: Vec<&AnnotatedSample> = corpus.iter().filter(|s| s.label != original.label).collect();
    if pool.is_empty() {
        return Vec::new();
    }
    let mut rng = rng::stream(seed, &["candidates", &original.id]);
    index::sample(&mut rng, pool.len(), k.min(pool.len()))
        .into_iter()
        .map(|i| pool[i])
        .collect()
}

/// An original entity matched with a candidate entity.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityPair {
    pub original: EntityMention,
    pub candidate: EntityMention,
    pub td: f64,
}

/// Pairs every original mention with the candidate mention of smallest
/// topological distance, provided that distance is below `tdt`. Ties go to
/// the lower role.
pub fn pair_entities(
    original: &AnnotatedSample,
    candidate: &AnnotatedSample,
    profile_o: &CentralityProfile,
    profile_c: &CentralityProfile,
    tdt: f64,
) -> Vec<EntityPair> {
    let mut originals: Vec<&EntityMention> = original.entities.iter().collect();
    originals.sort_by_key(|e| e.role);
    let mut candidates: Vec<&EntityMention> = candidate.entities.iter().collect();
    candidates.sort_by_key(|e| e.role);
    originals
        .into_iter()
        .filter_map(|eo| {
            let avg_o = profile_o.entity(eo);
            let mut best: Option<(f64, &EntityMention)> = None;
            for ec in &candidates {
                let td = topological_distance(avg_o, profile_c.entity(ec));
                if td < tdt && best.is_none_or(|(b, _)| td < b) {
                    best = Some((td, ec));
                }
            }
            best.map(|(td, ec)| EntityPair {
                original: eo.clone(),
                candidate: ec.clone(),
                td,
            })
        })
        .collect()
}

/// A first-order neighbor with its coarse class and aggregate centrality.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub class: CoarsePos,
    pub avgc: f64,
}

/// A chosen edit: `target` (original token) takes the surface of `donor`
/// (candidate token).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Replacement {
    pub target: usize,
    pub donor: usize,
    pub td: f64,
}

/// For every class among the candidate neighbors that also occurs among the
/// original neighbors, one replacement: the donor is the candidate neighbor
/// closest (in TD) to any original neighbor of that class, and the target is
/// the original neighbor of that class closest to the donor. Ties go to the
/// lower token index.
pub fn select_replacements(original: &[Neighbor], candidate: &[Neighbor]) -> Vec<Replacement> {
    let mut by_class: BTreeMap<&CoarsePos, (Vec<&Neighbor>, Vec<&Neighbor>)> = BTreeMap::new();
    for n in candidate {
        by_class.entry(&n.class).or_default().1.push(n);
    }
    for n in original {
        if let Some(entry) = by_class.get_mut(&n.class) {
            entry.0.push(n);
        }
    }
    let closest = |pool: &[&Neighbor], to: f64| -> Option<(f64, usize)> {
        pool.iter()
            .map(|n| (topological_distance(n.avgc, to), n.index))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
    };
    let mut out = Vec::new();
    for (mut targets, mut donors) in by_class.into_values() {
        if targets.is_empty() {
            continue;
        }
        targets.sort_by_key(|n| n.index);
        donors.sort_by_key(|n| n.index);
        let donor = donors
            .iter()
            .filter_map(|d| closest(&targets, d.avgc).map(|(td, _)| (td, *d)))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.index.cmp(&b.1.index)))
            .map(|(_, d)| d)
            .expect("donors is non-empty");
        let (td, target) = closest(&targets, donor.avgc).expect("targets is non-empty");
        out.push(Replacement {
            target,
            donor: donor.index,
            td,
        });
    }
    out.sort_by_key(|r| r.target);
    out
}

/// Both sides of a pairing: sample, its syntactic graph and profile.
#[derive(Debug, Clone, Copy)]
pub struct SyntacticView<'a> {
    pub sample: &'a AnnotatedSample,
    pub graph: &'a DepGraph,
    pub profile: &'a CentralityProfile,
}

impl SyntacticView<'_> {
    /// Neighbors of `mention` that are not part of any entity.
    fn neighbors(&self, mention: &EntityMention) -> Vec<Neighbor> {
        first_order_neighbors(self.graph, mention)
            .into_iter()
            .filter(|&i| !self.sample.in_entity(i))
            .map(|i| Neighbor {
                index: i,
                class: self.sample.tokens[i].coarse_pos.clone(),
                avgc: self.profile.agg[i],
            })
            .collect()
    }
}

/// Outcome of editing around one entity pair.
#[derive(Debug, Clone, PartialEq)]
pub enum NeighborEdit {
    /// FS did not exceed the threshold.
    GatedOut { fs: f64 },
    /// FS passed; the substitutions may be empty when no class overlaps.
    Edited {
        fs: f64,
        substitutions: Vec<Substitution>,
        /// Donor POS tags, aligned with `substitutions`.
        pos: Vec<String>,
    },
}

pub fn feature_similarity(
    pair: &EntityPair,
    original: &SyntacticView<'_>,
    candidate: &SyntacticView<'_>,
    tags: &TagEmbeddings,
    mode: FeatureMode,
) -> f64 {
    let fo = syntactic_feature(original.sample, &pair.original, original.graph, tags, mode);
    let fc = syntactic_feature(candidate.sample, &pair.candidate, candidate.graph, tags, mode);
    cosine(&fo.vector, &fc.vector).unwrap_or(0.0)
}

/// Replaces first-order neighbors of the original entity with same-class
/// neighbors of the candidate entity, when their features are similar
/// enough. Replacements that would not change the surface are dropped.
pub fn substitute_neighbors(
    pair: &EntityPair,
    original: &SyntacticView<'_>,
    candidate: &SyntacticView<'_>,
    tags: &TagEmbeddings,
    config: &SynCoConfig,
) -> NeighborEdit {
    let fs = feature_similarity(pair, original, candidate, tags, config.feature_mode);
    if !(fs > config.fst) {
        return NeighborEdit::GatedOut { fs };
    }
    let replacements = select_replacements(
        &original.neighbors(&pair.original),
        &candidate.neighbors(&pair.candidate),
    );
    let mut substitutions = Vec::new();
    let mut pos = Vec::new();
    for r in replacements {
        let from = &original.sample.tokens[r.target];
        let to = &candidate.sample.tokens[r.donor];
        if from.surface != to.surface {
            substitutions.push(Substitution::new(r.target, &from.surface, &to.surface));
            pos.push(to.pos.clone());
        }
    }
    NeighborEdit::Edited {
        fs,
        substitutions,
        pos,
    }
}

pub(crate) fn counterfactual_id(original: &AnnotatedSample, method: Method, candidate: &AnnotatedSample) -> String {
    format!("{}::{}::{}", original.id, method, candidate.id)
}

/// Builds the unverified counterfactual of `original` against one candidate,
/// or `None` when no pair survives the gates or nothing would change.
pub fn build_synco_candidate(
    original: &SyntacticView<'_>,
    candidate: &SyntacticView<'_>,
    tags: &TagEmbeddings,
    config: &SynCoConfig,
) -> Option<Counterfactual> {
    let pairs = pair_entities(
        original.sample,
        candidate.sample,
        original.profile,
        candidate.profile,
        config.tdt,
    );
    let mut substitutions: Vec<Substitution> = Vec::new();
    let mut new_pos: Vec<String> = Vec::new();
    let mut touched = HashSet::new();
    let (mut max_td, mut min_fs) = (f64::NEG_INFINITY, f64::INFINITY);
    for pair in &pairs {
        let NeighborEdit::Edited {
            fs,
            substitutions: subs,
            pos,
        } = substitute_neighbors(pair, original, candidate, tags, config)
        else {
            continue;
        };
        let before = substitutions.len();
        for (s, p) in subs.into_iter().zip(pos) {
            if touched.insert(s.index) {
                substitutions.push(s);
                new_pos.push(p);
            }
        }
        if substitutions.len() > before {
            max_td = max_td.max(pair.td);
            min_fs = min_fs.min(fs);
        }
    }
    if substitutions.is_empty() {
        return None;
    }
    let mut sample = original.sample.clone();
    for (s, p) in substitutions.iter().zip(new_pos) {
        let token = &mut sample.tokens[s.index];
        token.surface = s.replacement.clone();
        token.coarse_pos = crate::corpus::coarse_pos(&p);
        token.pos = p;
    }
    sample.id = counterfactual_id(original.sample, Method::SynCo, candidate.sample);
    sample.label = candidate.sample.label.clone();
    let mut order: Vec<usize> = (0..substitutions.len()).collect();
    order.sort_by_key(|&i| substitutions[i].index);
    let substitutions = order.into_iter().map(|i| substitutions[i].clone()).collect();
    Some(Counterfactual {
        sample,
        source_id: original.sample.id.clone(),
        candidate_id: candidate.sample.id.clone(),
        method: Method::SynCo,
        substitutions,
        scores: BTreeMap::from([("fs".to_string(), min_fs), ("td".to_string(), max_td)]),
        verified: false,
        predicted_label: String::new(),
        edges_stale: false,
    })
}

/// Whether `predicted` counts as a label flip.
pub fn is_flip(predicted: &str, original_label: &str, candidate_label: &str, strict: bool) -> bool {
    if strict {
        predicted == candidate_label
    } else {
        predicted != original_label
    }
}

/// Verifies candidate counterfactuals in one batch and returns one of the
/// verified ones at random, or `None` if none flipped.
pub fn verify_and_choose(
    original: &AnnotatedSample,
    built: Vec<Counterfactual>,
    classifier: &dyn Predictor,
    strict: bool,
    seed: u64,
    method: Method,
) -> Result<Option<Counterfactual>, ClassifyError> {
    if built.is_empty() {
        return Ok(None);
    }
    let samples: Vec<AnnotatedSample> = built.iter().map(|cf| cf.sample.clone()).collect();
    let predictions = classifier.predict_batch(&samples)?;
    let mut verified: Vec<Counterfactual> = built
        .into_iter()
        .zip(predictions)
        .filter(|(cf, p)| is_flip(&p.label, &original.label, &cf.sample.label, strict))
        .map(|(mut cf, p)| {
            cf.verified = true;
            cf.predicted_label = p.label;
            cf
        })
        .collect();
    if verified.is_empty() {
        return Ok(None);
    }
    let pick = rng::stream(seed, &[&method.to_string(), "choose", &original.id])
        .gen_range(0..verified.len());
    Ok(Some(verified.swap_remove(pick)))
}

/// Runs the syntactic pipeline for one original sample.
pub fn generate_synco(
    original: &AnnotatedSample,
    corpus: &[AnnotatedSample],
    tags: &TagEmbeddings,
    config: &SynCoConfig,
    classifier: &dyn Predictor,
) -> Result<Option<Counterfactual>, GenerateError> {
    config.validate()?;
    let candidates = sample_candidates(corpus, original, config.candidates_per_sample, config.seed);
    if candidates.is_empty() {
        return Ok(None);
    }
    let graph_o = DepGraph::build(original, Layer::Syntactic);
    let Ok(profile_o) = CentralityProfile::compute(&graph_o, config.aggregation) else {
        return Ok(None);
    };
    let view_o = SyntacticView {
        sample: original,
        graph: &graph_o,
        profile: &profile_o,
    };
    let mut built = Vec::new();
    for candidate in candidates {
        let graph_c = DepGraph::build(candidate, Layer::Syntactic);
        let Ok(profile_c) = CentralityProfile::compute(&graph_c, config.aggregation) else {
            continue;
        };
        let view_c = SyntacticView {
            sample: candidate,
            graph: &graph_c,
            profile: &profile_c,
        };
        if let Some(cf) = build_synco_candidate(&view_o, &view_c, tags, config) {
            built.push(cf);
        }
    }
    Ok(verify_and_choose(
        original,
        built,
        classifier,
        config.strict_flip,
        config.seed,
        Method::SynCo,
    )?)
}

//! Semantic counterfactuals.
//!
//! The shortest path between the two entities in the semantic graph carries
//! the context that expresses their relation. When a candidate's path is
//! similar enough to the original's, the original path tokens are replaced by
//! the candidate's, in path order, and the result is verified like a
//! syntactic counterfactual.

use std::collections::BTreeMap;

use crate::classify::Predictor;
use crate::corpus::{AnnotatedSample, Counterfactual, EntityRole, Layer, Method, Substitution, Token};
use crate::depgraph::{shortest_dependency_path, DepGraph, SdpResult};
use crate::embed::{cosine, path_embedding, EmbedError, WordVectors};
use crate::synco::{counterfactual_id, sample_candidates, verify_and_choose, GenerateError};

#[derive(Debug, Clone, PartialEq)]
pub struct SemCoConfig {
    /// Semantic-similarity threshold: a candidate path is spliced when its
    /// similarity exceeds `sst`.
    pub sst: f64,
    pub candidates_per_sample: usize,
    pub seed: u64,
    pub strict_flip: bool,
    /// Average over the whole path, entity tokens included, instead of the
    /// interior only.
    pub include_entities: bool,
}

impl Default for SemCoConfig {
    fn default() -> Self {
        SemCoConfig {
            sst: 0.6,
            candidates_per_sample: 3,
            seed: 0,
            strict_flip: false,
            include_entities: false,
        }
    }
}

impl SemCoConfig {
    pub fn validate(&self) -> Result<(), GenerateError> {
        if !(-1.0..=1.0).contains(&self.sst) {
            return Err(GenerateError::Config(format!("sst must be in [-1, 1], got {}", self.sst)));
        }
        if self.candidates_per_sample == 0 {
            return Err(GenerateError::Config("candidates_per_sample must be >= 1".into()));
        }
        Ok(())
    }
}

/// SDP between e1 and e2 on the semantic layer, with every entity token
/// (e3 included) removed from the interior.
pub fn semantic_path(sample: &AnnotatedSample, graph: &DepGraph) -> Option<SdpResult> {
    let e1 = sample.entity(EntityRole::E1)?;
    let e2 = sample.entity(EntityRole::E2)?;
    let mut sdp = shortest_dependency_path(graph, e1, e2);
    if !sdp.found {
        return None;
    }
    sdp.interior.retain(|&i| !sample.in_entity(i));
    Some(sdp)
}

/// Cosine of the mean interior word vectors.
pub fn path_similarity(
    original: &AnnotatedSample,
    candidate: &AnnotatedSample,
    sdp_o: &SdpResult,
    sdp_c: &SdpResult,
    wv: &WordVectors,
) -> Result<f64, EmbedError> {
    let u = path_embedding(original, &sdp_o.interior, wv)?;
    let v = path_embedding(candidate, &sdp_c.interior, wv)?;
    cosine(&u, &v)
}

fn full_path_similarity(
    original: &AnnotatedSample,
    candidate: &AnnotatedSample,
    sdp_o: &SdpResult,
    sdp_c: &SdpResult,
    wv: &WordVectors,
) -> Result<f64, EmbedError> {
    let u = path_embedding(original, &sdp_o.path, wv)?;
    let v = path_embedding(candidate, &sdp_c.path, wv)?;
    cosine(&u, &v)
}

/// Result of splicing a candidate path into an original sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Splice {
    pub tokens: Vec<Token>,
    pub entities: Vec<crate::corpus::EntityMention>,
    pub substitutions: Vec<Substitution>,
    pub length_changed: bool,
}

/// Replaces the original interior tokens by the candidate interior tokens,
/// pairing them in path order. Surplus candidate tokens go right after the
/// last replaced position; surplus original tokens are deleted. Replacements
/// that keep the surface leave the token untouched.
pub fn splice_path(
    original: &AnnotatedSample,
    sdp_o: &SdpResult,
    candidate: &AnnotatedSample,
    sdp_c: &SdpResult,
) -> Splice {
    let o = &sdp_o.interior;
    let c = &sdp_c.interior;
    let shared = o.len().min(c.len());
    let mut replace: BTreeMap<usize, &Token> = BTreeMap::new();
    let mut delete = Vec::new();
    for (rank, &i) in o.iter().enumerate() {
        if rank < shared {
            replace.insert(i, &candidate.tokens[c[rank]]);
        } else {
            delete.push(i);
        }
    }
    let anchor = (shared > 0).then(|| o[shared - 1]);
    let inserted: Vec<&Token> = c[shared..].iter().map(|&j| &candidate.tokens[j]).collect();

    let mut tokens = Vec::with_capacity(original.len() + inserted.len());
    let mut new_index = vec![usize::MAX; original.len()];
    let mut substitutions = Vec::new();
    for (i, token) in original.tokens.iter().enumerate() {
        if delete.contains(&i) {
            substitutions.push(Substitution::new(i, &token.surface, ""));
            continue;
        }
        new_index[i] = tokens.len();
        match replace.get(&i) {
            Some(donor) if donor.surface != token.surface => {
                substitutions.push(Substitution::new(i, &token.surface, &donor.surface));
                tokens.push(Token::new(tokens.len(), &donor.surface, &donor.pos));
            }
            _ => tokens.push(Token::new(tokens.len(), &token.surface, &token.pos)),
        }
        if anchor == Some(i) {
            for donor in &inserted {
                substitutions.push(Substitution::new(i, "", &donor.surface));
                tokens.push(Token::new(tokens.len(), &donor.surface, &donor.pos));
            }
        }
    }
    let entities = original
        .entities
        .iter()
        .map(|e| {
            let mut e = e.clone();
            let last = new_index[e.end - 1];
            e.start = new_index[e.start];
            e.end = last + 1;
            e
        })
        .collect();
    let length_changed = tokens.len() != original.len();
    Splice {
        tokens,
        entities,
        substitutions,
        length_changed,
    }
}

/// The unverified semantic counterfactual against one candidate, or `None`
/// when a path is missing, the similarity gate fails or nothing changes.
pub fn build_semco_candidate(
    original: &AnnotatedSample,
    sdp_o: &SdpResult,
    candidate: &AnnotatedSample,
    wv: &WordVectors,
    config: &SemCoConfig,
) -> Option<Counterfactual> {
    let graph_c = DepGraph::build(candidate, Layer::Semantic);
    let sdp_c = semantic_path(candidate, &graph_c)?;
    if sdp_o.interior.is_empty() || sdp_c.interior.is_empty() {
        return None;
    }
    let similarity = if config.include_entities {
        full_path_similarity(original, candidate, sdp_o, &sdp_c, wv)
    } else {
        path_similarity(original, candidate, sdp_o, &sdp_c, wv)
    }
    .ok()?;
    if !(similarity > config.sst) {
        return None;
    }
    let splice = splice_path(original, sdp_o, candidate, &sdp_c);
    if splice.substitutions.is_empty() {
        return None;
    }
    let mut sample = original.clone();
    sample.id = counterfactual_id(original, Method::SemCo, candidate);
    sample.label = candidate.label.clone();
    sample.tokens = splice.tokens;
    sample.entities = splice.entities;
    if splice.length_changed {
        sample.syn_edges.clear();
        sample.sem_edges.clear();
    }
    Some(Counterfactual {
        sample,
        source_id: original.id.clone(),
        candidate_id: candidate.id.clone(),
        method: Method::SemCo,
        substitutions: splice.substitutions,
        scores: BTreeMap::from([("path_similarity".to_string(), similarity)]),
        verified: false,
        predicted_label: String::new(),
        edges_stale: splice.length_changed,
    })
}

/// Runs the semantic pipeline for one original sample.
pub fn generate_semco(
    original: &AnnotatedSample,
    corpus: &[AnnotatedSample],
    wv: &WordVectors,
    config: &SemCoConfig,
    classifier: &dyn Predictor,
) -> Result<Option<Counterfactual>, GenerateError> {
    config.validate()?;
    let candidates = sample_candidates(corpus, original, config.candidates_per_sample, config.seed);
    if candidates.is_empty() {
        return Ok(None);
    }
    let graph_o = DepGraph::build(original, Layer::Semantic);
    let Some(sdp_o) = semantic_path(original, &graph_o) else {
        return Ok(None);
    };
    let built = candidates
        .into_iter()
        .filter_map(|c| build_semco_candidate(original, &sdp_o, c, wv, config))
        .collect();
    Ok(verify_and_choose(
        original,
        built,
        classifier,
        config.strict_flip,
        config.seed,
        Method::SemCo,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::ConstantClassifier;
    use crate::corpus::fixtures::{bottle_original, build, city_candidate, labels};
    use crate::embed::OovPolicy;
    use approx::assert_abs_diff_eq;

    fn sdp(interior: &[usize]) -> SdpResult {
        SdpResult {
            path: interior.to_vec(),
            interior: interior.to_vec(),
            found: true,
        }
    }

    fn vectors() -> WordVectors {
        let mut wv = WordVectors::new(3, OovPolicy::ZeroVector);
        wv.insert("in", vec![1.0, 0.2, 0.0]);
        wv.insert("from", vec![0.9, 0.3, 0.1]);
        wv.insert("is", vec![0.0, 1.0, 0.0]);
        wv.insert("under", vec![0.0, 0.0, 1.0]);
        wv
    }

    #[test]
    fn bottle_city_splice() {
        let o = bottle_original();
        let c = city_candidate();
        let so = semantic_path(&o, &DepGraph::build(&o, Layer::Semantic)).unwrap();
        let sc = semantic_path(&c, &DepGraph::build(&c, Layer::Semantic)).unwrap();
        assert_eq!(so.interior, vec![2]);
        assert_eq!(sc.interior, vec![2]);
        let splice = splice_path(&o, &so, &c, &sc);
        let text: Vec<_> = splice.tokens.iter().map(|t| t.surface.as_str()).collect();
        assert_eq!(text.join(" "), "Wine is from the bottle");
        assert_eq!(splice.substitutions, vec![Substitution::new(2, "in", "from")]);
        assert!(!splice.length_changed);
    }

    #[test]
    fn bottle_city_generation() {
        let o = bottle_original();
        let c = city_candidate();
        let wv = vectors();
        let cfg = SemCoConfig::default();
        let flips = ConstantClassifier::new(labels(), "Entity-Origin");
        let cf = generate_semco(&o, std::slice::from_ref(&c), &wv, &cfg, &flips).unwrap().unwrap();
        assert_eq!(cf.sample.text(), "Wine is from the bottle");
        assert_eq!(cf.sample.label, "Entity-Origin");
        assert_eq!(cf.method, Method::SemCo);
        assert!(!cf.edges_stale);
        assert_eq!(cf.sample.sem_edges, o.sem_edges);
        let sim = cf.scores["path_similarity"];
        assert!(sim > 0.6);

        let stays = ConstantClassifier::new(labels(), "Content-Container");
        assert!(generate_semco(&o, &[c], &wv, &cfg, &stays).unwrap().is_none());
    }

    #[test]
    fn similarity_of_identical_and_orthogonal_paths() {
        let o = bottle_original();
        let wv = vectors();
        assert_abs_diff_eq!(path_similarity(&o, &o, &sdp(&[2]), &sdp(&[2]), &wv).unwrap(), 1.0, epsilon = 1e-12);
        // "in" against "is"... use an orthogonal pair
        let mut other = o.clone();
        other.tokens[2].surface = "under".into();
        let mut mine = o.clone();
        mine.tokens[2].surface = "is".into();
        assert_abs_diff_eq!(path_similarity(&mine, &other, &sdp(&[2]), &sdp(&[2]), &wv).unwrap(), 0.0);
        assert!(path_similarity(&o, &o, &sdp(&[]), &sdp(&[2]), &wv).is_err());
    }

    #[test]
    fn longer_candidate_path_inserts_after_last_replacement() {
        // A x y B  <-  C p q r D
        let o = build(
            "o",
            &[("A", "NN"), ("x", "IN"), ("y", "VB"), ("B", "NN"), ("end", "NN")],
            &[(0, 1), (3, 4)],
            "Other",
            &[],
            &[],
        );
        let c = build(
            "c",
            &[("C", "NN"), ("p", "IN"), ("q", "VB"), ("r", "RB"), ("D", "NN")],
            &[(0, 1), (4, 5)],
            "Entity-Origin",
            &[],
            &[],
        );
        let splice = splice_path(&o, &sdp(&[1, 2]), &c, &sdp(&[1, 2, 3]));
        let text: Vec<_> = splice.tokens.iter().map(|t| t.surface.as_str()).collect();
        assert_eq!(text, ["A", "p", "q", "r", "B", "end"]);
        assert_eq!(
            splice.substitutions,
            vec![
                Substitution::new(1, "x", "p"),
                Substitution::new(2, "y", "q"),
                Substitution::new(2, "", "r"),
            ]
        );
        assert!(splice.length_changed);
        assert_eq!((splice.entities[1].start, splice.entities[1].end), (4, 5));
        assert_eq!(splice.tokens[3].pos, "RB");
        let mut cf = o.clone();
        cf.tokens = splice.tokens;
        cf.entities = splice.entities;
        assert_eq!(cf.entity_surfaces(), o.entity_surfaces());
    }

    #[test]
    fn shorter_candidate_path_deletes_the_tail() {
        let o = build(
            "o",
            &[("A", "NN"), ("x", "IN"), ("y", "VB"), ("B", "NN")],
            &[(0, 1), (3, 4)],
            "Other",
            &[],
            &[],
        );
        let c = build(
            "c",
            &[("C", "NN"), ("p", "IN"), ("D", "NN")],
            &[(0, 1), (2, 3)],
            "Entity-Origin",
            &[],
            &[],
        );
        let splice = splice_path(&o, &sdp(&[1, 2]), &c, &sdp(&[1]));
        let text: Vec<_> = splice.tokens.iter().map(|t| t.surface.as_str()).collect();
        assert_eq!(text, ["A", "p", "B"]);
        assert_eq!(
            splice.substitutions,
            vec![Substitution::new(1, "x", "p"), Substitution::new(2, "y", "")]
        );
        assert_eq!((splice.entities[1].start, splice.entities[1].end), (2, 3));
    }

    #[test]
    fn identical_interiors_are_the_identity() {
        let o = bottle_original();
        let splice = splice_path(&o, &sdp(&[1, 2]), &o, &sdp(&[1, 2]));
        assert_eq!(splice.tokens, o.tokens);
        assert_eq!(splice.entities, o.entities);
        assert!(splice.substitutions.is_empty());
    }

    #[test]
    fn disconnected_semantic_graph_is_skipped() {
        let mut o = bottle_original();
        o.sem_edges.truncate(1);
        assert!(semantic_path(&o, &DepGraph::build(&o, Layer::Semantic)).is_none());
        let flips = ConstantClassifier::new(labels(), "Entity-Origin");
        let out = generate_semco(&o, &[city_candidate()], &vectors(), &SemCoConfig::default(), &flips);
        assert!(out.unwrap().is_none());
    }

    #[test]
    fn third_entity_never_enters_the_interior() {
        let mut o = bottle_original();
        o.entities.push(crate::corpus::EntityMention::new("x", 2, 3, EntityRole::E3));
        let sdp = semantic_path(&o, &DepGraph::build(&o, Layer::Semantic)).unwrap();
        assert!(sdp.interior.is_empty());
        assert_eq!(sdp.path, vec![0, 2, 4]);
    }

    #[test]
    fn config_ranges() {
        assert!(SemCoConfig::default().validate().is_ok());
        assert!(SemCoConfig { sst: 1.2, ..Default::default() }.validate().is_err());
        assert!(SemCoConfig { candidates_per_sample: 0, ..Default::default() }.validate().is_err());
    }
}

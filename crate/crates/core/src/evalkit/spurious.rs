//! Synthetic relation-classification data with an injected shortcut.
//!
//! Every sentence reads `E1 was VERB PREP the E2`, optionally followed by a
//! decoy adverb. The relation is carried by the verb and the preposition,
//! whose vectors share a per-label direction. Entities come from
//! label-independent pools. In the training split the decoy accompanies a
//! fixed share of one label; in the test split it accompanies the same share
//! of another label, so a classifier that learned the shortcut is punished.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{AnnotatedSample, CorpusHeader, DepEdge, EntityMention, EntityRole, Layer, Token};
use crate::embed::{OovPolicy, WordVectors};
use crate::rng;

pub const CONFOUNDED_LABEL: &str = "Content-Container";
pub const ANTI_LABEL: &str = "Entity-Origin";
pub const NEGATIVE_LABEL: &str = "Other";
pub const DECOY: &str = "reportedly";

const LABELS: [&str; 3] = [CONFOUNDED_LABEL, ANTI_LABEL, NEGATIVE_LABEL];

const VERBS: [&[&str]; 3] = [
    &["stored", "kept", "packed", "sealed", "held", "enclosed"],
    &["sent", "shipped", "imported", "brought", "exported", "delivered"],
    &["seen", "mentioned", "discussed", "noticed", "compared", "described"],
];
const PREPS: [&[&str]; 3] = [
    &["in", "inside", "within"],
    &["from", "out", "off"],
    &["near", "with", "beside"],
];
const SHARED_VERBS: &[&str] = &["found", "placed", "moved", "left", "put"];
const SHARED_PREPS: &[&str] = &["at", "by", "around"];
const HEADS: &[&str] = &[
    "wine", "letter", "coffee", "parcel", "oil", "book", "sugar", "apple", "water", "tea", "paper",
    "flour", "cheese", "honey", "salt", "rice", "milk", "beer", "juice", "bread",
];
const DEPENDENTS: &[&str] = &[
    "bottle", "city", "box", "factory", "jar", "farm", "bag", "village", "crate", "mill",
    "cup", "port", "barrel", "region", "basket", "store", "tank", "country", "drawer", "island",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SpuriousConfig {
    pub train_size: usize,
    pub test_size: usize,
    /// Share of confounded-label training samples (and of anti-label test
    /// samples) that carry the decoy.
    pub confound_rate: f64,
    /// Share of samples whose verb and preposition come from a
    /// label-neutral pool.
    pub ambiguity: f64,
    pub word_dim: usize,
}

impl Default for SpuriousConfig {
    fn default() -> Self {
        SpuriousConfig {
            train_size: 2000,
            test_size: 500,
            confound_rate: 0.95,
            ambiguity: 0.3,
            word_dim: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpuriousBenchmark {
    pub header: CorpusHeader,
    pub train: Vec<AnnotatedSample>,
    pub test: Vec<AnnotatedSample>,
    pub vectors: WordVectors,
}

fn random_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    // unit expected norm
    let bound = (3.0 / dim as f64).sqrt();
    (0..dim).map(|_| rng.gen_range(-bound..bound)).collect()
}

fn combine(parts: &[(f64, &[f64])]) -> Vec<f64> {
    let dim = parts[0].1.len();
    (0..dim).map(|i| parts.iter().map(|(w, v)| w * v[i]).sum()).collect()
}

fn vectors(seed: u64, dim: usize) -> WordVectors {
    let mut wv = WordVectors::new(dim, OovPolicy::ZeroVector);
    let mut rng = rng::stream(seed, &["spurious", "vectors"]);
    let context = random_direction(&mut rng, dim);
    let noun = random_direction(&mut rng, dim);
    let label_dirs: Vec<Vec<f64>> = (0..3).map(|_| random_direction(&mut rng, dim)).collect();
    for (k, label_dir) in label_dirs.iter().enumerate() {
        for w in VERBS[k].iter().chain(PREPS[k].iter()) {
            let noise = random_direction(&mut rng, dim);
            wv.insert(w, combine(&[(1.0, &context), (0.5, label_dir), (0.4, &noise)]));
        }
    }
    for w in SHARED_VERBS.iter().chain(SHARED_PREPS) {
        let noise = random_direction(&mut rng, dim);
        wv.insert(w, combine(&[(1.0, &context), (0.4, &noise)]));
    }
    for w in HEADS.iter().chain(DEPENDENTS) {
        let noise = random_direction(&mut rng, dim);
        wv.insert(w, combine(&[(1.0, &noun), (0.7, &noise)]));
    }
    for w in ["was", "the", DECOY] {
        let v = random_direction(&mut rng, dim);
        wv.insert(w, v);
    }
    wv
}

fn sentence(id: String, label: usize, decoy: bool, ambiguous: bool, rng: &mut ChaCha8Rng) -> AnnotatedSample {
    let pick = |pool: &[&'static str], rng: &mut ChaCha8Rng| *pool.choose(rng).expect("non-empty pool");
    let e1 = pick(HEADS, rng);
    let e2 = pick(DEPENDENTS, rng);
    let (verb, prep) = if ambiguous {
        (pick(SHARED_VERBS, rng), pick(SHARED_PREPS, rng))
    } else {
        (pick(VERBS[label], rng), pick(PREPS[label], rng))
    };
    let mut words = vec![
        (e1, "NN"),
        ("was", "VBD"),
        (verb, "VBN"),
        (prep, "IN"),
        ("the", "DT"),
        (e2, "NN"),
    ];
    let syn = |h: Option<usize>, d: usize, r: &str| DepEdge::new(h, d, r, Layer::Syntactic);
    let sem = |h: usize, d: usize, r: &str| DepEdge::new(Some(h), d, r, Layer::Semantic);
    let mut syn_edges = vec![
        syn(Some(2), 0, "nsubjpass"),
        syn(Some(2), 1, "auxpass"),
        syn(None, 2, "root"),
        syn(Some(2), 3, "prep"),
        syn(Some(5), 4, "det"),
        syn(Some(3), 5, "pobj"),
    ];
    if decoy {
        words.push((DECOY, "RB"));
        syn_edges.push(syn(Some(2), 6, "advmod"));
    }
    AnnotatedSample {
        tokens: words
            .iter()
            .enumerate()
            .map(|(i, (w, p))| Token::new(i, *w, *p))
            .collect(),
        entities: vec![
            EntityMention::new(format!("{id}-e1"), 0, 1, EntityRole::E1),
            EntityMention::new(format!("{id}-e2"), 5, 6, EntityRole::E2),
        ],
        id,
        label: LABELS[label].to_string(),
        syn_edges,
        sem_edges: vec![sem(2, 0, "ARG1"), sem(3, 2, "ARG1"), sem(3, 5, "ARG2")],
        domain: None,
    }
}

/// `n` samples with balanced labels; exactly `round(rate * n_label)`
/// samples of `decoy_label` carry the decoy.
fn split(
    name: &str,
    n: usize,
    decoy_label: usize,
    cfg: &SpuriousConfig,
    seed: u64,
) -> Vec<AnnotatedSample> {
    let mut rng = rng::stream(seed, &["spurious", name]);
    let mut labels: Vec<usize> = (0..n).map(|i| i % LABELS.len()).collect();
    labels.shuffle(&mut rng);
    let mut carriers: Vec<usize> = (0..n).filter(|&i| labels[i] == decoy_label).collect();
    carriers.shuffle(&mut rng);
    carriers.truncate((cfg.confound_rate * carriers.len() as f64).round() as usize);
    let mut decoy = vec![false; n];
    for i in carriers {
        decoy[i] = true;
    }
    (0..n)
        .map(|i| {
            let ambiguous = rng.gen_bool(cfg.ambiguity.clamp(0.0, 1.0));
            sentence(format!("{name}-{i:05}"), labels[i], decoy[i], ambiguous, &mut rng)
        })
        .collect()
}

/// Training split confounded towards one label and an anti-confounded test
/// split, with matching word vectors.
pub fn spurious_benchmark(seed: u64, cfg: &SpuriousConfig) -> SpuriousBenchmark {
    SpuriousBenchmark {
        header: CorpusHeader::new(LABELS.iter().map(|s| s.to_string()).collect(), NEGATIVE_LABEL),
        train: split("train", cfg.train_size, 0, cfg, seed),
        test: split("test", cfg.test_size, 1, cfg, seed),
        vectors: vectors(seed, cfg.word_dim),
    }
}

/// Whether a sample carries the decoy token.
pub fn has_decoy(sample: &AnnotatedSample) -> bool {
    sample.tokens.iter().any(|t| t.surface == DECOY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::cosine;

    fn share(samples: &[AnnotatedSample], label: &str) -> f64 {
        let of_label: Vec<_> = samples.iter().filter(|s| s.label == label).collect();
        of_label.iter().filter(|s| has_decoy(s)).count() as f64 / of_label.len() as f64
    }

    #[test]
    fn confound_rate_is_exact() {
        let b = spurious_benchmark(7, &SpuriousConfig::default());
        assert_eq!(b.train.len(), 2000);
        assert_eq!(b.test.len(), 500);
        assert!((share(&b.train, CONFOUNDED_LABEL) - 0.95).abs() <= 0.01);
        assert_eq!(share(&b.train, ANTI_LABEL), 0.0);
        assert_eq!(share(&b.train, NEGATIVE_LABEL), 0.0);
        assert!((share(&b.test, ANTI_LABEL) - 0.95).abs() <= 0.01);
        assert_eq!(share(&b.test, CONFOUNDED_LABEL), 0.0);
    }

    #[test]
    fn labels_are_balanced() {
        let b = spurious_benchmark(1, &SpuriousConfig::default());
        for l in LABELS {
            let n = b.train.iter().filter(|s| s.label == l).count();
            assert!((666..=667).contains(&n), "{l}: {n}");
        }
    }

    #[test]
    fn zero_rate_has_no_decoy() {
        let cfg = SpuriousConfig {
            confound_rate: 0.0,
            ..SpuriousConfig::default()
        };
        let b = spurious_benchmark(1, &cfg);
        assert!(!b.train.iter().chain(&b.test).any(has_decoy));
    }

    #[test]
    fn samples_are_valid() {
        let b = spurious_benchmark(3, &SpuriousConfig::default());
        for s in b.train.iter().chain(&b.test) {
            s.validate(&b.header.labels, true).unwrap();
        }
    }

    #[test]
    fn replay_is_identical() {
        let cfg = SpuriousConfig::default();
        let a = spurious_benchmark(5, &cfg);
        let b = spurious_benchmark(5, &cfg);
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
        assert_eq!(a.vectors.lookup("in"), b.vectors.lookup("in"));
        assert_ne!(a.train, spurious_benchmark(6, &cfg).train);
    }

    #[test]
    fn relation_words_are_close() {
        let b = spurious_benchmark(0, &SpuriousConfig::default());
        let c = cosine(&b.vectors.lookup("in"), &b.vectors.lookup("from")).unwrap();
        assert!(c > 0.5, "{c}");
    }
}

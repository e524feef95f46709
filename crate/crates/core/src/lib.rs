//! Entity-centric counterfactual data augmentation for relation classification.
//!
//! The crate is organised around the generation pipeline:
//!
//! - [`corpus`]: the annotated-sample data model and the JSONL corpus format.
//! - [`depgraph`]: syntactic and semantic dependency graph views, centrality
//!   measures, topological distance and shortest dependency paths.
//! - [`embed`]: word vectors, tag embeddings and cosine similarity.
//! - [`synco`]: the syntactic generator (neighbor substitution around entities).
//! - [`semco`]: the semantic generator (path splicing between entities).
//! - [`augment`]: corpus-level generation and de-duplication.
//! - [`classify`]: the verifying classifier, its model file and the HTTP
//!   prediction protocol.
//! - [`evalkit`]: metrics, domain splits and the spurious-correlation harness.
//! - [`pipeline`]: configuration and end-to-end orchestration.
//!
//! Entities are never edited: every counterfactual keeps the surface strings
//! of its source sample's entity mentions and carries a different label.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augment;
pub mod classify;
pub mod corpus;
pub mod depgraph;
pub mod embed;
pub mod evalkit;
pub mod pipeline;
pub mod rng;
pub mod semco;
pub mod synco;

pub use classify::{LinearRcModel, Prediction, Predictor, TrainConfig};
pub use corpus::{
    AnnotatedSample, CoarsePos, Corpus, CorpusHeader, Counterfactual, DepEdge, EntityMention,
    EntityRole, Layer, Method, Record, Substitution, Token,
};
pub use depgraph::{AggregationMode, CentralityProfile, DepGraph, SdpResult};
pub use embed::{FeatureMode, OovPolicy, TagEmbeddings, WordVectors};
pub use semco::SemCoConfig;
pub use synco::SynCoConfig;

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::VecDeque;

use coco_core::corpus::{AnnotatedSample, CorpusHeader, DepEdge, EntityMention, EntityRole, Layer, Token};
use coco_core::embed::{OovPolicy, WordVectors};
use coco_core::DepGraph;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const LABELS: [&str; 4] = ["Product-Producer", "Entity-Origin", "Content-Container", "Other"];

pub fn header() -> CorpusHeader {
    CorpusHeader::new(LABELS.iter().map(|s| s.to_string()).collect(), "Other")
}

pub fn labels() -> Vec<String> {
    header().labels
}

fn edges(spec: &[(i64, usize, &str)], layer: Layer) -> Vec<DepEdge> {
    spec.iter()
        .map(|&(h, d, r)| DepEdge::new((h >= 0).then_some(h as usize), d, r, layer))
        .collect()
}

pub fn sample(
    id: &str,
    words: &[(&str, &str)],
    entities: &[(usize, usize)],
    label: &str,
    syn: &[(i64, usize, &str)],
    sem: &[(i64, usize, &str)],
) -> AnnotatedSample {
    let roles = [EntityRole::E1, EntityRole::E2, EntityRole::E3];
    AnnotatedSample {
        id: id.to_string(),
        tokens: words.iter().enumerate().map(|(i, (w, p))| Token::new(i, *w, *p)).collect(),
        entities: entities
            .iter()
            .zip(roles)
            .map(|(&(s, e), role)| EntityMention::new(format!("{id}-{role:?}").to_lowercase(), s, e, role))
            .collect(),
        label: label.to_string(),
        syn_edges: edges(syn, Layer::Syntactic),
        sem_edges: edges(sem, Layer::Semantic),
        domain: None,
    }
}

/// "They drank wine produced by wineries".
pub fn wine_original() -> AnnotatedSample {
    sample(
        "ori",
        &[("They", "PRP"), ("drank", "VBD"), ("wine", "NN"), ("produced", "VBN"), ("by", "IN"), ("wineries", "NNS")],
        &[(2, 3), (5, 6)],
        "Product-Producer",
        &[(1, 0, "nsubj"), (-1, 1, "root"), (1, 2, "dobj"), (2, 3, "vmod"), (3, 4, "prep"), (4, 5, "pobj")],
        &[(1, 0, "ARG1"), (1, 2, "ARG2"), (3, 2, "ARG2"), (4, 3, "ARG1"), (4, 5, "ARG2")],
    )
}

/// "They bought the grapes from farms".
pub fn grapes_candidate() -> AnnotatedSample {
    sample(
        "can",
        &[("They", "PRP"), ("bought", "VBD"), ("the", "DT"), ("grapes", "NNS"), ("from", "IN"), ("farms", "NNS")],
        &[(3, 4), (5, 6)],
        "Entity-Origin",
        &[(1, 0, "nsubj"), (-1, 1, "root"), (3, 2, "det"), (1, 3, "dobj"), (1, 4, "prep"), (4, 5, "pobj")],
        &[(1, 0, "ARG1"), (1, 3, "ARG2"), (4, 3, "ARG1"), (4, 5, "ARG2")],
    )
}

const WORDS: &[(&str, &str)] = &[
    ("wine", "NN"), ("grapes", "NNS"), ("farm", "NN"), ("city", "NN"), ("letter", "NN"),
    ("box", "NN"), ("factory", "NN"), ("oil", "NN"), ("paper", "NN"), ("tea", "NN"),
    ("drank", "VBD"), ("bought", "VBD"), ("sent", "VBD"), ("kept", "VBD"), ("made", "VBN"),
    ("produced", "VBN"), ("stored", "VBN"), ("found", "VBN"), ("is", "VBZ"), ("was", "VBD"),
    ("in", "IN"), ("from", "IN"), ("by", "IN"), ("of", "IN"), ("near", "IN"), ("with", "IN"),
    ("the", "DT"), ("a", "DT"), ("old", "JJ"), ("red", "JJ"), ("large", "JJ"),
    ("quickly", "RB"), ("often", "RB"), ("they", "PRP"), ("it", "PRP"),
];
const SYN_RELS: &[&str] = &["nsubj", "dobj", "prep", "pobj", "det", "amod", "advmod", "vmod", "nmod"];
const SEM_RELS: &[&str] = &["ARG1", "ARG2", "BV", "compound"];

/// A random labelled tree over `n` nodes: `(head, dep)` pairs plus the root.
fn random_tree(n: usize, rng: &mut ChaCha8Rng) -> (usize, Vec<(usize, usize)>) {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let edges = (1..n).map(|k| (order[rng.gen_range(0..k)], order[k])).collect();
    (order[0], edges)
}

/// A valid sample of random shape: random words, syntactic tree, semantic
/// edges (possibly disconnected), 2 or 3 entity spans and a random label.
pub fn random_sample(id: &str, rng: &mut ChaCha8Rng) -> AnnotatedSample {
    let n = rng.gen_range(4..=12);
    let words: Vec<(&str, &str)> = (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect();
    let (root, tree) = random_tree(n, rng);
    let mut syn: Vec<(i64, usize, &str)> = vec![(-1, root, "root")];
    syn.extend(tree.iter().map(|&(h, d)| (h as i64, d, *SYN_RELS.choose(rng).unwrap())));
    let (_, sem_tree) = random_tree(n, rng);
    let keep = rng.gen_range(0.6..=1.0);
    let mut sem: Vec<(i64, usize, &str)> = Vec::new();
    for &(h, d) in &sem_tree {
        if rng.gen_bool(keep) {
            sem.push((h as i64, d, *SEM_RELS.choose(rng).unwrap()));
        }
    }
    // non-overlapping spans of length 1 or 2 at random cut points
    let count = if n >= 7 && rng.gen_bool(0.2) { 3 } else { 2 };
    let mut spans = Vec::new();
    while spans.len() < count {
        let len = if rng.gen_bool(0.25) { 2 } else { 1 };
        let start = rng.gen_range(0..=n - len);
        let span = (start, start + len);
        if spans.iter().all(|&(s, e): &(usize, usize)| span.1 <= s || e <= span.0) {
            spans.push(span);
        }
    }
    let label = *LABELS.choose(rng).unwrap();
    sample(id, &words, &spans, label, &syn, &sem)
}

pub fn fuzzed_corpus(n: usize, seed: u64) -> Vec<AnnotatedSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| random_sample(&format!("s{i:04}"), &mut rng)).collect()
}

/// Random vectors for every fuzz vocabulary word.
pub fn fuzz_vectors(dim: usize, seed: u64) -> WordVectors {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut wv = WordVectors::new(dim, OovPolicy::ZeroVector);
    for (w, _) in WORDS.iter().chain(&[("they", "")]) {
        let v = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        wv.insert(w, v);
    }
    wv
}

/// A random connected graph: a random spanning tree plus extra edges.
pub fn random_connected(n: usize, extra: f64, rng: &mut ChaCha8Rng) -> (usize, Vec<(usize, usize)>) {
    let (_, mut edges) = random_tree(n, rng);
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(extra) {
                edges.push((a, b));
            }
        }
    }
    (n, edges)
}

/// A random graph that may be disconnected.
pub fn random_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> (usize, Vec<(usize, usize)>) {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) {
                edges.push((a, b));
            }
        }
    }
    (n, edges)
}

pub fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut adj = vec![vec![false; n]; n];
    for &(a, b) in edges {
        if a != b {
            adj[a][b] = true;
            adj[b][a] = true;
        }
    }
    adj
}

/// All-pairs distances by Floyd-Warshall; `None` when unreachable.
pub fn floyd_warshall(adj: &[Vec<bool>]) -> Vec<Vec<Option<usize>>> {
    let n = adj.len();
    let mut d: Vec<Vec<Option<usize>>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Some(0) } else if adj[i][j] { Some(1) } else { None }).collect())
        .collect();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|c| a + b < c) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    d
}

/// Every shortest path from `s` to `t`, enumerated by depth-first search.
fn shortest_paths(adj: &[Vec<bool>], dist: &[Vec<Option<usize>>], s: usize, t: usize) -> Vec<Vec<usize>> {
    let Some(target) = dist[s][t] else { return Vec::new() };
    let mut out = Vec::new();
    let mut stack = vec![vec![s]];
    while let Some(path) = stack.pop() {
        let last = *path.last().unwrap();
        if path.len() - 1 == target {
            if last == t {
                out.push(path);
            }
            continue;
        }
        for next in 0..adj.len() {
            if adj[last][next] && !path.contains(&next) {
                let mut p = path.clone();
                p.push(next);
                stack.push(p);
            }
        }
    }
    out
}

pub fn naive_betweenness(adj: &[Vec<bool>]) -> Vec<f64> {
    let n = adj.len();
    let mut bc = vec![0.0; n];
    if n < 3 {
        return bc;
    }
    let dist = floyd_warshall(adj);
    for s in 0..n {
        for t in s + 1..n {
            let paths = shortest_paths(adj, &dist, s, t);
            if paths.is_empty() {
                continue;
            }
            for v in 0..n {
                if v == s || v == t {
                    continue;
                }
                let through = paths.iter().filter(|p| p.contains(&v)).count();
                bc[v] += through as f64 / paths.len() as f64;
            }
        }
    }
    let norm = 2.0 / ((n - 1) * (n - 2)) as f64;
    bc.iter().map(|b| b * norm).collect()
}

pub fn naive_closeness(adj: &[Vec<bool>]) -> Vec<f64> {
    let n = adj.len();
    let dist = floyd_warshall(adj);
    (0..n)
        .map(|v| {
            let reach: Vec<usize> = dist[v].iter().flatten().copied().collect();
            let total: usize = reach.iter().sum();
            if total == 0 {
                0.0
            } else {
                let k = reach.len() as f64;
                ((k - 1.0) / total as f64) * ((k - 1.0) / (n - 1) as f64)
            }
        })
        .collect()
}

pub fn naive_degree(adj: &[Vec<bool>]) -> Vec<f64> {
    let n = adj.len();
    adj.iter()
        .map(|row| row.iter().filter(|&&x| x).count() as f64 / (n - 1) as f64)
        .collect()
}

/// Shortest distance between any token of `a` and any token of `b`.
pub fn bfs_span_distance(g: &DepGraph, a: &EntityMention, b: &EntityMention) -> Option<usize> {
    let n = g.node_count();
    let mut dist = vec![None; n];
    let mut queue = VecDeque::new();
    for s in a.indices() {
        dist[s] = Some(0);
        queue.push_back(s);
    }
    while let Some(v) = queue.pop_front() {
        for &w in g.neighbors(v) {
            if dist[w].is_none() {
                dist[w] = Some(dist[v].unwrap() + 1);
                queue.push_back(w);
            }
        }
    }
    b.indices().filter_map(|t| dist[t]).min()
}

//! Undirected dependency-graph views and their topological quantities.
//!
//! Every metric is computed on the undirected view of one dependency layer,
//! without the ROOT sentinel. Node `i` is token `i`; tokens that take part in
//! no edge of the layer are isolated nodes.

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use crate::corpus::{AnnotatedSample, EntityMention, Layer};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("centrality needs at least 2 nodes, graph has {0}")]
    Degenerate(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepGraph {
    n: usize,
    adjacency: Vec<Vec<usize>>,
    rel_of: BTreeMap<(usize, usize), Vec<String>>,
    layer: Layer,
}

impl DepGraph {
    /// Builds the undirected view of one layer. Parallel edges collapse into
    /// one adjacency entry; their relation labels are all kept in
    /// [`DepGraph::relations`].
    pub fn build(sample: &AnnotatedSample, layer: Layer) -> Self {
        let edges = match layer {
            Layer::Syntactic => &sample.syn_edges,
            Layer::Semantic => &sample.sem_edges,
        };
        let mut g = DepGraph::empty(sample.len(), layer);
        for edge in edges {
            if let Some(head) = edge.head {
                g.add_edge(head, edge.dep);
                g.rel_of
                    .entry((head, edge.dep))
                    .or_default()
                    .push(edge.rel.clone());
            }
        }
        g
    }

    pub fn empty(n: usize, layer: Layer) -> Self {
        DepGraph {
            n,
            adjacency: vec![Vec::new(); n],
            rel_of: BTreeMap::new(),
            layer,
        }
    }

    /// Unlabelled graph from an edge list, mainly for tests and benches.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = DepGraph::empty(n, Layer::Syntactic);
        for &(a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    fn add_edge(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for (u, v) in [(a, b), (b, a)] {
            if let Err(pos) = self.adjacency[u].binary_search(&v) {
                self.adjacency[u].insert(pos, v);
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn layer(&self) -> Layer {
        self.layer
    }

    /// Neighbors of `v`, ascending.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// Relation labels on the directed pair `head -> dep`.
    pub fn relations(&self, head: usize, dep: usize) -> &[String] {
        self.rel_of
            .get(&(head, dep))
            .map(Vec::as_slice)
            .unwrap_or_default()
    }

    /// Every relation label on an edge touching `v`, either direction.
    pub fn incident_relations(&self, v: usize) -> impl Iterator<Item = &str> {
        self.rel_of
            .iter()
            .filter(move |((h, d), _)| *h == v || *d == v)
            .flat_map(|(_, rels)| rels.iter().map(String::as_str))
    }

    /// Every labelled directed pair as `(head, dep, rel)`.
    pub fn labelled_edges(&self) -> impl Iterator<Item = (usize, usize, &str)> {
        self.rel_of
            .iter()
            .flat_map(|(&(h, d), rels)| rels.iter().map(move |r| (h, d, r.as_str())))
    }

    /// BFS hop distances from `source`; `None` for unreachable nodes.
    pub fn distances_from(&self, source: usize) -> Vec<Option<usize>> {
        self.multi_source_distances(std::iter::once(source))
    }

    fn multi_source_distances(&self, sources: impl IntoIterator<Item = usize>) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        let mut queue = VecDeque::new();
        for s in sources {
            if dist[s].is_none() {
                dist[s] = Some(0);
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap_or_default();
            for &w in &self.adjacency[v] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}

/// `deg(v) / (n - 1)`.
pub fn degree_centrality(g: &DepGraph) -> Result<Vec<f64>, GraphError> {
    let n = g.node_count();
    if n < 2 {
        return Err(GraphError::Degenerate(n));
    }
    let denom = (n - 1) as f64;
    Ok((0..n).map(|v| g.degree(v) as f64 / denom).collect())
}

/// Closeness with the Wasserman-Faust correction: inside a component of
/// `k` nodes the raw value `(k - 1) / sum(d)` is scaled by `(k - 1) / (n - 1)`.
/// Isolated nodes get 0.
pub fn closeness_centrality(g: &DepGraph) -> Result<Vec<f64>, GraphError> {
    let n = g.node_count();
    if n < 2 {
        return Err(GraphError::Degenerate(n));
    }
    let out = (0..n)
        .map(|v| {
            let dist = g.distances_from(v);
            let (reached, total) = dist
                .iter()
                .flatten()
                .fold((0usize, 0usize), |(r, t), &d| (r + 1, t + d));
            if total == 0 {
                return 0.0;
            }
            let others = (reached - 1) as f64;
            (others / total as f64) * (others / (n - 1) as f64)
        })
        .collect();
    Ok(out)
}

/// Brandes betweenness for undirected, unweighted graphs, normalised by
/// `2 / ((n - 1)(n - 2))`. Graphs with fewer than 3 nodes score 0 everywhere.
pub fn betweenness_centrality(g: &DepGraph) -> Vec<f64> {
    let n = g.node_count();
    let mut bc = vec![0.0; n];
    if n < 3 {
        return bc;
    }
    let mut stack = Vec::with_capacity(n);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut sigma = vec![0.0f64; n];
    let mut dist: Vec<i64> = vec![-1; n];
    let mut delta = vec![0.0f64; n];
    let mut queue = VecDeque::with_capacity(n);

    for s in 0..n {
        stack.clear();
        preds.iter_mut().for_each(Vec::clear);
        sigma.fill(0.0);
        dist.fill(-1);
        delta.fill(0.0);
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in g.neighbors(v) {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                bc[w] += delta[w];
            }
        }
    }
    // each unordered pair was accumulated from both endpoints
    let scale = 1.0 / ((n - 1) * (n - 2)) as f64;
    bc.iter_mut().for_each(|b| *b *= scale);
    bc
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum AggregationMode {
    #[default]
    Mean,
    Sum,
}

impl std::str::FromStr for AggregationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(AggregationMode::Mean),
            "sum" => Ok(AggregationMode::Sum),
            other => Err(format!("unknown aggregation mode `{other}` (mean|sum)")),
        }
    }
}

impl std::fmt::Display for AggregationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AggregationMode::Mean => "mean",
            AggregationMode::Sum => "sum",
        })
    }
}

/// Combines the three centralities node by node.
pub fn aggregate_centrality(bc: &[f64], cc: &[f64], dc: &[f64], mode: AggregationMode) -> Vec<f64> {
    debug_assert!(bc.len() == cc.len() && cc.len() == dc.len());
    bc.iter()
        .zip(cc)
        .zip(dc)
        .map(|((b, c), d)| {
            let sum = b + c + d;
            match mode {
                AggregationMode::Mean => sum / 3.0,
                AggregationMode::Sum => sum,
            }
        })
        .collect()
}

/// Per-node centralities of one graph plus their aggregate (avgC).
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityProfile {
    pub bc: Vec<f64>,
    pub cc: Vec<f64>,
    pub dc: Vec<f64>,
    pub agg: Vec<f64>,
}

impl CentralityProfile {
    pub fn compute(g: &DepGraph, mode: AggregationMode) -> Result<Self, GraphError> {
        let dc = degree_centrality(g)?;
        let cc = closeness_centrality(g)?;
        let bc = betweenness_centrality(g);
        let agg = aggregate_centrality(&bc, &cc, &dc, mode);
        Ok(CentralityProfile { bc, cc, dc, agg })
    }

    /// Entity-level avgC: the mean aggregate over the mention's tokens.
    pub fn entity(&self, mention: &EntityMention) -> f64 {
        entity_centrality(self, mention)
    }
}

pub fn entity_centrality(profile: &CentralityProfile, mention: &EntityMention) -> f64 {
    let span = &profile.agg[mention.indices()];
    span.iter().sum::<f64>() / span.len() as f64
}

/// Topological distance between two avgC values.
pub fn topological_distance(a: f64, b: f64) -> f64 {
    (a - b).abs()
}

/// Shortest path between two entity mentions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SdpResult {
    /// From a token of the first mention to a token of the second, inclusive.
    pub path: Vec<usize>,
    /// Path tokens outside both spans, in path order.
    pub interior: Vec<usize>,
    pub found: bool,
}

/// Shortest path from any token of `e1` to any token of `e2`. Among equally
/// short paths the lexicographically smallest index sequence wins.
pub fn shortest_dependency_path(g: &DepGraph, e1: &EntityMention, e2: &EntityMention) -> SdpResult {
    let to_target = g.multi_source_distances(e2.indices());
    let start = e1
        .indices()
        .filter_map(|v| to_target[v].map(|d| (d, v)))
        .min();
    let Some((_, start)) = start else {
        return SdpResult::default();
    };
    // Walking greedily to the smallest neighbor one step closer yields the
    // lexicographically smallest shortest path.
    let mut path = vec![start];
    let mut cur = start;
    while let Some(d) = to_target[cur].filter(|&d| d > 0) {
        cur = g
            .neighbors(cur)
            .iter()
            .copied()
            .find(|&w| to_target[w] == Some(d - 1))
            .expect("BFS layers are connected");
        path.push(cur);
    }
    let interior = path
        .iter()
        .copied()
        .filter(|&v| !e1.contains(v) && !e2.contains(v))
        .collect();
    SdpResult {
        path,
        interior,
        found: true,
    }
}

/// Tokens adjacent to the mention's span, excluding the span, ascending.
pub fn first_order_neighbors(g: &DepGraph, mention: &EntityMention) -> Vec<usize> {
    let mut out: Vec<usize> = mention
        .indices()
        .flat_map(|v| g.neighbors(v).iter().copied())
        .filter(|&w| !mention.contains(w))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

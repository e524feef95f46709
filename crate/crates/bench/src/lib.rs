//! Workloads shared by the criterion benches.

use coco_core::evalkit::{spurious_benchmark, SpuriousBenchmark, SpuriousConfig};
use coco_core::DepGraph;
use rand::Rng;

/// A connected graph: a random spanning tree plus each remaining pair with
/// probability `p`.
pub fn random_graph(n: usize, p: f64, seed: u64) -> DepGraph {
    let mut rng = coco_core::rng::stream(seed, &["bench-graph"]);
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.gen_range(0..v), v));
    }
    for a in 0..n {
        for b in a + 2..n {
            if rng.gen_bool(p) {
                edges.push((a, b));
            }
        }
    }
    DepGraph::from_edges(n, &edges)
}

pub fn random_vector(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = coco_core::rng::stream(seed, &["bench-vector"]);
    (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// The shortcut benchmark at a reduced size.
pub fn corpus(train_size: usize, seed: u64) -> SpuriousBenchmark {
    spurious_benchmark(
        seed,
        &SpuriousConfig {
            train_size,
            test_size: 10,
            ..SpuriousConfig::default()
        },
    )
}

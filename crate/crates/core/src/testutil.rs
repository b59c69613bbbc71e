use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::Graph;

/// Uniform random undirected graph with exactly `m` edges.
pub fn random_graph(n: usize, m: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dyads: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let picked: Vec<_> = sample(&mut rng, dyads.len(), m)
        .into_iter()
        .map(|k| dyads[k])
        .collect();
    Graph::from_edge_list(n, &picked, false, None).unwrap()
}

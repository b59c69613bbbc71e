//! Shared fixtures for the benchmarks.

use ergm_core::{Attribute, Graph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sparse school-like network: `n` nodes in six grades, mean degree about
/// `mean_degree`, with most ties inside a grade.
pub fn school_network(n: usize, mean_degree: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grades: Vec<usize> = (0..n).map(|_| rng.random_range(7..13)).collect();
    let target = (n as f64 * mean_degree / 2.0) as usize;
    let mut pairs = Vec::with_capacity(target);
    while pairs.len() < target {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i == j {
            continue;
        }
        if grades[i] == grades[j] || rng.random_bool(0.15) {
            pairs.push((i, j));
        }
    }
    let mut g = Graph::from_edge_list(n, &pairs, false, None).expect("valid pairs");
    let labels: Vec<String> = grades.iter().map(|g| g.to_string()).collect();
    g.set_attribute("Grade", Attribute::new(&labels))
        .expect("n labels");
    g
}

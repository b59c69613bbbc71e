//! Simple labeled graphs with constant-time edge toggles.
//!
//! Undirected edges are stored once, canonically as `(i, j)` with `i < j`.
//! Every node also keeps an insertion-ordered neighbor set so that neighbor
//! iteration is `O(degree)` and membership tests are `O(1)`.

use std::collections::{BTreeMap, VecDeque};

use indexmap::IndexSet;
use rand::Rng;
use rustc_hash::FxBuildHasher;

use crate::error::{ErgmError, Result};

type FxIndexSet<T> = IndexSet<T, FxBuildHasher>;

/// A categorical node attribute, interned to integer codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    labels: Vec<String>,
    codes: Vec<u32>,
}

impl Attribute {
    pub fn new<S: AsRef<str>>(values: &[S]) -> Self {
        let mut lookup: BTreeMap<&str, u32> = BTreeMap::new();
        let mut codes = Vec::with_capacity(values.len());
        for v in values {
            let next = lookup.len() as u32;
            codes.push(*lookup.entry(v.as_ref()).or_insert(next));
        }
        Attribute {
            labels: values.iter().map(|v| v.as_ref().to_string()).collect(),
            codes,
        }
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Raw labels in node order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Interned labels in node order; equal labels share a code.
    pub fn codes(&self) -> &[u32] {
        &self.codes
    }
}

/// Attribute name to per-node values. Ordered so that exports are stable.
pub type AttributeTable = BTreeMap<String, Attribute>;

#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    directed: bool,
    edges: FxIndexSet<(u32, u32)>,
    out_nbrs: Vec<FxIndexSet<u32>>,
    // Only populated for directed graphs.
    in_nbrs: Vec<FxIndexSet<u32>>,
    attributes: AttributeTable,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.directed == other.directed
            && self.edges == other.edges
            && self.attributes == other.attributes
    }
}

impl Graph {
    pub fn empty(n: usize, directed: bool) -> Self {
        let in_nbrs = if directed {
            vec![FxIndexSet::default(); n]
        } else {
            Vec::new()
        };
        Graph {
            n,
            directed,
            edges: FxIndexSet::default(),
            out_nbrs: vec![FxIndexSet::default(); n],
            in_nbrs,
            attributes: AttributeTable::new(),
        }
    }

    /// Builds a graph from a list of dyads. Duplicates are dropped and, for
    /// undirected graphs, `(i, j)` and `(j, i)` denote the same edge.
    pub fn from_edge_list(
        n: usize,
        pairs: &[(usize, usize)],
        directed: bool,
        attributes: Option<AttributeTable>,
    ) -> Result<Self> {
        let mut g = Graph::empty(n, directed);
        for &(i, j) in pairs {
            g.check_dyad(i, j)?;
            if !g.has_edge_unchecked(i, j) {
                g.toggle_unchecked(i, j);
            }
        }
        for (name, attr) in attributes.unwrap_or_default() {
            g.set_attribute(name, attr)?;
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Number of dyads that could hold an edge.
    pub fn dyad_count(&self) -> usize {
        let pairs = self.n * self.n.saturating_sub(1);
        if self.directed {
            pairs
        } else {
            pairs / 2
        }
    }

    pub fn set_attribute(&mut self, name: impl Into<String>, attr: Attribute) -> Result<()> {
        let name = name.into();
        if attr.len() != self.n {
            return Err(ErgmError::AttributeLength {
                name,
                expected: self.n,
                found: attr.len(),
            });
        }
        self.attributes.insert(name, attr);
        Ok(())
    }

    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.attributes.get(name)
    }

    pub fn attributes(&self) -> &AttributeTable {
        &self.attributes
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.n {
            return Err(ErgmError::NodeOutOfRange { node, n: self.n });
        }
        Ok(())
    }

    pub(crate) fn check_dyad(&self, i: usize, j: usize) -> Result<()> {
        self.check_node(i)?;
        self.check_node(j)?;
        if i == j {
            return Err(ErgmError::SelfLoop(i));
        }
        Ok(())
    }

    fn key(&self, i: usize, j: usize) -> (u32, u32) {
        if self.directed || i < j {
            (i as u32, j as u32)
        } else {
            (j as u32, i as u32)
        }
    }

    pub fn has_edge(&self, i: usize, j: usize) -> Result<bool> {
        self.check_dyad(i, j)?;
        Ok(self.has_edge_unchecked(i, j))
    }

    #[inline]
    pub(crate) fn has_edge_unchecked(&self, i: usize, j: usize) -> bool {
        self.out_nbrs[i].contains(&(j as u32))
    }

    /// Flips the state of dyad `(i, j)`. Returns `true` if the edge is
    /// present afterwards.
    pub fn toggle_edge(&mut self, i: usize, j: usize) -> Result<bool> {
        self.check_dyad(i, j)?;
        Ok(self.toggle_unchecked(i, j))
    }

    pub(crate) fn toggle_unchecked(&mut self, i: usize, j: usize) -> bool {
        let key = self.key(i, j);
        let (a, b) = (i as u32, j as u32);
        if self.edges.swap_remove(&key) {
            self.out_nbrs[i].swap_remove(&b);
            if self.directed {
                self.in_nbrs[j].swap_remove(&a);
            } else {
                self.out_nbrs[j].swap_remove(&a);
            }
            false
        } else {
            self.edges.insert(key);
            self.out_nbrs[i].insert(b);
            if self.directed {
                self.in_nbrs[j].insert(a);
            } else {
                self.out_nbrs[j].insert(a);
            }
            true
        }
    }

    /// Neighbors of `i` (out-neighbors for directed graphs).
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.out_nbrs[i].iter().map(|&v| v as usize)
    }

    /// Degree of `i` (out-degree for directed graphs).
    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.out_nbrs[i].len()
    }

    pub fn in_degree(&self, i: usize) -> usize {
        if self.directed {
            self.in_nbrs[i].len()
        } else {
            self.out_nbrs[i].len()
        }
    }

    /// Number of common neighbors of `i` and `j` in an undirected graph.
    #[inline]
    pub fn shared_partners(&self, i: usize, j: usize) -> usize {
        let (small, large) = if self.out_nbrs[i].len() <= self.out_nbrs[j].len() {
            (&self.out_nbrs[i], &self.out_nbrs[j])
        } else {
            (&self.out_nbrs[j], &self.out_nbrs[i])
        };
        small.iter().filter(|v| large.contains(*v)).count()
    }

    /// Calls `f` on every common neighbor of `i` and `j`.
    pub(crate) fn for_each_shared_partner(&self, i: usize, j: usize, mut f: impl FnMut(usize)) {
        let (small, large) = if self.out_nbrs[i].len() <= self.out_nbrs[j].len() {
            (&self.out_nbrs[i], &self.out_nbrs[j])
        } else {
            (&self.out_nbrs[j], &self.out_nbrs[i])
        };
        for &v in small {
            if large.contains(&v) {
                f(v as usize);
            }
        }
    }

    /// Edges in storage order (canonical `i < j` when undirected).
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().map(|&(i, j)| (i as usize, j as usize))
    }

    /// Sorted edge list, suitable for export.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<_> = self.edges().collect();
        out.sort_unstable();
        out
    }

    /// Uniformly chosen existing edge, or `None` for an empty graph.
    pub fn random_edge<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<(usize, usize)> {
        if self.edges.is_empty() {
            return None;
        }
        let idx = rng.random_range(0..self.edges.len());
        self.edges
            .get_index(idx)
            .map(|&(i, j)| (i as usize, j as usize))
    }

    /// Uniformly chosen dyad `(i, j)`, `i != j`; canonical when undirected.
    pub fn random_dyad<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let i = rng.random_range(0..self.n);
        let mut j = rng.random_range(0..self.n - 1);
        if j >= i {
            j += 1;
        }
        if self.directed || i < j {
            (i, j)
        } else {
            (j, i)
        }
    }

    /// `hist[d]` is the number of nodes of degree `d` (out-degree when
    /// directed), for `d` in `0..n`.
    pub fn degree_histogram(&self) -> Vec<u64> {
        let mut hist = vec![0u64; self.n.max(1)];
        for i in 0..self.n {
            hist[self.degree(i)] += 1;
        }
        hist.truncate(self.n);
        hist
    }

    /// `hist[k]` is the number of edges whose endpoints share exactly `k`
    /// partners, for `k` in `0..=n-2`.
    pub fn esp_histogram(&self) -> Result<Vec<u64>> {
        if self.directed {
            return Err(ErgmError::DirectedUnsupported("edgewise shared partners"));
        }
        let mut hist = vec![0u64; self.n.saturating_sub(1).max(1)];
        for (i, j) in self.edges() {
            hist[self.shared_partners(i, j)] += 1;
        }
        Ok(hist)
    }

    /// Shortest-path distances over all unordered dyads, by breadth-first
    /// search from every node.
    pub fn geodesic_histogram(&self) -> Result<GeodesicHistogram> {
        if self.directed {
            return Err(ErgmError::DirectedUnsupported("geodesic distances"));
        }
        let n = self.n;
        let mut counts = vec![0u64; n.saturating_sub(1)];
        let mut unreachable = 0u64;
        let mut dist = vec![usize::MAX; n];
        let mut queue = VecDeque::with_capacity(n);
        for source in 0..n {
            dist.fill(usize::MAX);
            dist[source] = 0;
            queue.clear();
            queue.push_back(source);
            while let Some(u) = queue.pop_front() {
                for v in self.neighbors(u) {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            for &d in &dist[source + 1..] {
                match d {
                    usize::MAX => unreachable += 1,
                    d => counts[d - 1] += 1,
                }
            }
        }
        Ok(GeodesicHistogram {
            counts,
            unreachable,
        })
    }
}

/// Dyad counts by shortest-path length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeodesicHistogram {
    /// `counts[d - 1]` is the number of dyads at distance `d`.
    pub counts: Vec<u64>,
    pub unreachable: u64,
}

impl GeodesicHistogram {
    pub fn at(&self, distance: usize) -> u64 {
        distance
            .checked_sub(1)
            .and_then(|k| self.counts.get(k))
            .copied()
            .unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.unreachable
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_graph;

    fn undirected(n: usize, pairs: &[(usize, usize)]) -> Graph {
        Graph::from_edge_list(n, pairs, false, None).unwrap()
    }

    fn star4() -> Graph {
        undirected(4, &[(0, 1), (0, 2), (0, 3)])
    }

    #[test]
    fn triangle_from_edge_list() {
        let g = undirected(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.edge_list(), vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn empty_graph_degrees() {
        let g = undirected(4, &[]);
        assert!((0..4).all(|i| g.degree(i) == 0));
        assert_eq!(g.degree_histogram(), vec![4, 0, 0, 0]);
    }

    #[test]
    fn reversed_pair_is_deduplicated() {
        let g = undirected(3, &[(0, 1), (1, 0)]);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edge_list(), vec![(0, 1)]);
    }

    #[test]
    fn directed_keeps_both_orientations() {
        let g = Graph::from_edge_list(3, &[(0, 1), (1, 0)], true, None).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.degree(0), 1);
        assert_eq!(g.in_degree(0), 1);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            Graph::from_edge_list(3, &[(0, 3)], false, None),
            Err(ErgmError::NodeOutOfRange { node: 3, n: 3 })
        ));
        assert!(matches!(
            Graph::from_edge_list(3, &[(1, 1)], false, None),
            Err(ErgmError::SelfLoop(1))
        ));
        let mut attrs = AttributeTable::new();
        attrs.insert("grade".into(), Attribute::new(&["7", "8"]));
        assert!(matches!(
            Graph::from_edge_list(3, &[], false, Some(attrs)),
            Err(ErgmError::AttributeLength {
                expected: 3,
                found: 2,
                ..
            })
        ));
    }

    #[test]
    fn toggle_semantics() {
        let mut g = undirected(3, &[]);
        assert!(g.toggle_edge(0, 1).unwrap());
        assert_eq!(g.edge_list(), vec![(0, 1)]);

        let mut tri = undirected(3, &[(0, 1), (1, 2), (0, 2)]);
        assert!(!tri.toggle_edge(1, 0).unwrap());
        assert_eq!(tri.edge_list(), vec![(0, 2), (1, 2)]);

        assert!(matches!(g.toggle_edge(2, 2), Err(ErgmError::SelfLoop(2))));
        assert!(matches!(
            g.toggle_edge(0, 5),
            Err(ErgmError::NodeOutOfRange { .. })
        ));
    }

    #[test]
    fn degree_histograms() {
        assert_eq!(star4().degree_histogram(), vec![0, 3, 0, 1]);
        assert_eq!(undirected(5, &[]).degree_histogram(), vec![5, 0, 0, 0, 0]);

        let g = random_graph(8, 12, 3);
        let hist = g.degree_histogram();
        // Independent recount straight from the edge list.
        let mut deg = [0usize; 8];
        for (i, j) in g.edge_list() {
            deg[i] += 1;
            deg[j] += 1;
        }
        let mut expected = vec![0u64; 8];
        for d in deg {
            expected[d] += 1;
        }
        assert_eq!(hist, expected);
        assert_eq!(hist.iter().sum::<u64>(), 8);
        let weighted: u64 = hist.iter().enumerate().map(|(d, c)| d as u64 * c).sum();
        assert_eq!(weighted, 24);
    }

    #[test]
    fn esp_histograms() {
        let tri = undirected(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(tri.esp_histogram().unwrap(), vec![0, 3]);
        assert_eq!(star4().esp_histogram().unwrap(), vec![3, 0, 0]);
        let k4 = undirected(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert_eq!(k4.esp_histogram().unwrap()[2], 6);
        let d = Graph::from_edge_list(3, &[(0, 1)], true, None).unwrap();
        assert!(matches!(
            d.esp_histogram(),
            Err(ErgmError::DirectedUnsupported(_))
        ));
    }

    #[test]
    fn geodesic_small_cases() {
        let path = undirected(3, &[(0, 1), (1, 2)]);
        let h = path.geodesic_histogram().unwrap();
        assert_eq!((h.at(1), h.at(2), h.unreachable), (2, 1, 0));

        let pair = undirected(2, &[]);
        assert_eq!(pair.geodesic_histogram().unwrap().unreachable, 1);
    }

    #[test]
    fn geodesic_matches_floyd_warshall() {
        let g = random_graph(10, 15, 11);
        let n = g.n();
        let inf = usize::MAX / 4;
        let mut d = vec![vec![inf; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0;
        }
        for (i, j) in g.edge_list() {
            d[i][j] = 1;
            d[j][i] = 1;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        let mut counts = vec![0u64; n - 1];
        let mut unreachable = 0;
        for i in 0..n {
            for j in i + 1..n {
                if d[i][j] >= inf {
                    unreachable += 1;
                } else {
                    counts[d[i][j] - 1] += 1;
                }
            }
        }
        let h = g.geodesic_histogram().unwrap();
        assert_eq!(h.counts, counts);
        assert_eq!(h.unreachable, unreachable);
        assert_eq!(h.total(), 45);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_graph() -> impl Strategy<Value = Graph> {
            (2usize..12).prop_flat_map(|n| {
                proptest::collection::vec((0..n, 0..n), 0..40).prop_map(move |pairs| {
                    let pairs: Vec<_> = pairs.into_iter().filter(|(i, j)| i != j).collect();
                    undirected(n, &pairs)
                })
            })
        }

        proptest! {
            #[test]
            fn toggle_is_an_involution(g in arb_graph(), a in 0usize..100, b in 0usize..100) {
                let n = g.n();
                let (i, j) = (a % n, b % n);
                prop_assume!(i != j);
                let mut h = g.clone();
                h.toggle_edge(i, j).unwrap();
                prop_assert_ne!(&h, &g);
                h.toggle_edge(i, j).unwrap();
                prop_assert_eq!(h, g);
            }

            #[test]
            fn histogram_totals(g in arb_graph()) {
                let n = g.n() as u64;
                let m = g.edge_count() as u64;
                let deg = g.degree_histogram();
                prop_assert_eq!(deg.iter().sum::<u64>(), n);
                let weighted: u64 = deg.iter().enumerate().map(|(d, c)| d as u64 * c).sum();
                prop_assert_eq!(weighted, 2 * m);
                prop_assert_eq!(g.esp_histogram().unwrap().iter().sum::<u64>(), m);
                prop_assert_eq!(g.geodesic_histogram().unwrap().total(), n * (n - 1) / 2);
            }

            #[test]
            fn edge_list_round_trips(g in arb_graph()) {
                let h = Graph::from_edge_list(g.n(), &g.edge_list(), false, None).unwrap();
                prop_assert_eq!(h.edge_list(), g.edge_list());
            }
        }
    }
}

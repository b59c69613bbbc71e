//! Model terms: sufficient statistics and single-dyad change statistics.

use std::fmt;
use std::ops::{Deref, DerefMut};

use crate::error::{ErgmError, Result};
use crate::graph::Graph;

/// One statistic of an undirected ERGM. Decays are fixed constants.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelTerm {
    Edges,
    NodeMatch(String),
    GwDegree(f64),
    GwEsp(f64),
    Triangle,
    KStar(usize),
}

impl ModelTerm {
    /// Short label used in output tables, e.g. `nodematch.Grade`.
    pub fn label(&self) -> String {
        match self {
            ModelTerm::Edges => "edges".into(),
            ModelTerm::NodeMatch(attr) => format!("nodematch.{attr}"),
            ModelTerm::GwDegree(_) => "gwdegree".into(),
            ModelTerm::GwEsp(decay) => format!("gwesp.fixed.{decay}"),
            ModelTerm::Triangle => "triangle".into(),
            ModelTerm::KStar(k) => format!("kstar{k}"),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ModelTerm::GwDegree(d) | ModelTerm::GwEsp(d) if !(d.is_finite() && *d >= 0.0) => Err(
                ErgmError::InvalidModel(format!("decay must be finite and nonnegative, got {d}")),
            ),
            ModelTerm::KStar(k) if *k < 2 => Err(ErgmError::InvalidModel(format!(
                "kstar requires k >= 2, got {k}"
            ))),
            ModelTerm::NodeMatch(a) if a.is_empty() => Err(ErgmError::InvalidModel(
                "nodematch needs an attribute name".into(),
            )),
            _ => Ok(()),
        }
    }

    fn is_dyad_independent(&self) -> bool {
        matches!(self, ModelTerm::Edges | ModelTerm::NodeMatch(_))
    }
}

impl fmt::Display for ModelTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelTerm::Edges => write!(f, "edges"),
            ModelTerm::NodeMatch(attr) if is_identifier(attr) => write!(f, "nodematch({attr})"),
            ModelTerm::NodeMatch(attr) => write!(f, "nodematch(\"{attr}\")"),
            ModelTerm::GwDegree(d) => write!(f, "gwdegree({d:?})"),
            ModelTerm::GwEsp(d) => write!(f, "gwesp({d:?})"),
            ModelTerm::Triangle => write!(f, "triangle"),
            ModelTerm::KStar(k) => write!(f, "kstar({k})"),
        }
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

/// Ordered, nonempty list of terms. The order fixes the coordinates of both
/// the statistics and the parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    terms: Vec<ModelTerm>,
}

impl ModelSpec {
    pub fn new(terms: Vec<ModelTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(ErgmError::InvalidModel("model has no terms".into()));
        }
        for (k, t) in terms.iter().enumerate() {
            t.validate()?;
            if terms[..k].contains(t) {
                return Err(ErgmError::InvalidModel(format!("duplicate term `{t}`")));
            }
        }
        Ok(ModelSpec { terms })
    }

    pub fn terms(&self) -> &[ModelTerm] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    pub fn labels(&self) -> Vec<String> {
        self.terms.iter().map(ModelTerm::label).collect()
    }

    /// True when every term depends on a single dyad only, so the
    /// pseudolikelihood coincides with the likelihood.
    pub fn is_dyad_independent(&self) -> bool {
        self.terms.iter().all(ModelTerm::is_dyad_independent)
    }

    pub(crate) fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(ErgmError::DimensionMismatch {
                expected: self.dim(),
                found,
            });
        }
        Ok(())
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

/// Values of the model statistics, one per term.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StatVector(pub Vec<f64>);

impl StatVector {
    pub fn zeros(dim: usize) -> Self {
        StatVector(vec![0.0; dim])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for StatVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for StatVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for StatVector {
    fn from(v: Vec<f64>) -> Self {
        StatVector(v)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Geometric weights `e^τ (1 - r^k)` with `r = 1 - e^{-τ}`.
#[derive(Debug, Clone, Copy)]
struct GeometricWeight {
    exp_decay: f64,
    ratio: f64,
}

impl GeometricWeight {
    fn new(decay: f64) -> Self {
        GeometricWeight {
            exp_decay: decay.exp(),
            ratio: 1.0 - (-decay).exp(),
        }
    }

    fn weight(&self, k: usize) -> f64 {
        self.exp_decay * (1.0 - self.ratio.powi(k as i32))
    }

    /// `weight(k + 1) - weight(k)`, which simplifies to `r^k`.
    #[inline]
    fn increment(&self, k: usize) -> f64 {
        self.ratio.powi(k as i32)
    }
}

#[derive(Debug, Clone)]
enum BoundTerm {
    Edges,
    NodeMatch(Vec<u32>),
    GwDegree(GeometricWeight),
    GwEsp(GeometricWeight),
    Triangle,
    KStar(usize),
}

/// A model resolved against a particular node set: attribute lookups are
/// done once so the per-toggle path does no string handling.
#[derive(Debug, Clone)]
pub struct BoundModel {
    terms: Vec<BoundTerm>,
}

impl BoundModel {
    pub fn bind(spec: &ModelSpec, g: &Graph) -> Result<Self> {
        if g.is_directed() {
            return Err(ErgmError::DirectedUnsupported("every model term"));
        }
        let terms = spec
            .terms()
            .iter()
            .map(|t| {
                Ok(match t {
                    ModelTerm::Edges => BoundTerm::Edges,
                    ModelTerm::NodeMatch(name) => BoundTerm::NodeMatch(
                        g.attribute(name)
                            .ok_or_else(|| ErgmError::MissingAttribute(name.clone()))?
                            .codes()
                            .to_vec(),
                    ),
                    ModelTerm::GwDegree(d) => BoundTerm::GwDegree(GeometricWeight::new(*d)),
                    ModelTerm::GwEsp(d) => BoundTerm::GwEsp(GeometricWeight::new(*d)),
                    ModelTerm::Triangle => BoundTerm::Triangle,
                    ModelTerm::KStar(k) => BoundTerm::KStar(*k),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BoundModel { terms })
    }

    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    /// Full evaluation of the statistics on `g`.
    pub fn stats(&self, g: &Graph) -> StatVector {
        let n = g.n();
        let mut out = StatVector::zeros(self.dim());
        // Shared partner counts are only needed by the edge-wise terms.
        let needs_esp = self
            .terms
            .iter()
            .any(|t| matches!(t, BoundTerm::GwEsp(_) | BoundTerm::Triangle));
        let esp: Vec<usize> = if needs_esp {
            g.edges().map(|(i, j)| g.shared_partners(i, j)).collect()
        } else {
            Vec::new()
        };
        for (value, term) in out.iter_mut().zip(&self.terms) {
            *value = match term {
                BoundTerm::Edges => g.edge_count() as f64,
                BoundTerm::NodeMatch(codes) => {
                    g.edges().filter(|&(i, j)| codes[i] == codes[j]).count() as f64
                }
                BoundTerm::GwDegree(w) => (0..n).map(|i| w.weight(g.degree(i))).sum(),
                BoundTerm::GwEsp(w) => esp.iter().map(|&k| w.weight(k)).sum(),
                BoundTerm::Triangle => esp.iter().sum::<usize>() as f64 / 3.0,
                BoundTerm::KStar(k) => (0..n).map(|i| binomial(g.degree(i), *k)).sum(),
            };
        }
        out
    }

    /// Writes `s(g with (i,j) on) - s(g with (i,j) off)` into `out` using only
    /// the neighborhoods of `i` and `j`. `g` is left untouched.
    pub fn change_into(&self, g: &Graph, i: usize, j: usize, out: &mut [f64]) {
        let present = g.has_edge_unchecked(i, j) as usize;
        // Degrees with the dyad switched off.
        let di = g.degree(i) - present;
        let dj = g.degree(j) - present;
        let mut shared: Option<usize> = None;
        for (value, term) in out.iter_mut().zip(&self.terms) {
            *value = match term {
                BoundTerm::Edges => 1.0,
                BoundTerm::NodeMatch(codes) => (codes[i] == codes[j]) as u8 as f64,
                BoundTerm::GwDegree(w) => w.increment(di) + w.increment(dj),
                BoundTerm::Triangle => {
                    *shared.get_or_insert_with(|| g.shared_partners(i, j)) as f64
                }
                BoundTerm::KStar(k) => binomial(di, k - 1) + binomial(dj, k - 1),
                BoundTerm::GwEsp(w) => {
                    // The new edge itself, plus one extra partner on each
                    // edge (i,k) and (j,k) for every common neighbor k.
                    let mut count = 0usize;
                    let mut delta = 0.0;
                    g.for_each_shared_partner(i, j, |k| {
                        count += 1;
                        let sp_ik = g.shared_partners(i, k) - present;
                        let sp_jk = g.shared_partners(j, k) - present;
                        delta += w.increment(sp_ik) + w.increment(sp_jk);
                    });
                    shared = Some(count);
                    delta + w.weight(count)
                }
            };
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, t| acc * (n - t) as f64 / (t + 1) as f64)
}

/// Sufficient statistics `s(g)` in the coordinate order of `spec`.
pub fn compute_stats(g: &Graph, spec: &ModelSpec) -> Result<StatVector> {
    Ok(BoundModel::bind(spec, g)?.stats(g))
}

/// Change in `s` caused by switching dyad `(i, j)` from off to on.
pub fn change_stats(g: &Graph, spec: &ModelSpec, i: usize, j: usize) -> Result<StatVector> {
    g.check_dyad(i, j)?;
    let model = BoundModel::bind(spec, g)?;
    let mut out = StatVector::zeros(spec.dim());
    model.change_into(g, i, j, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Attribute;
    use crate::testutil::random_graph;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn graph(n: usize, pairs: &[(usize, usize)]) -> Graph {
        Graph::from_edge_list(n, pairs, false, None).unwrap()
    }

    fn spec(terms: Vec<ModelTerm>) -> ModelSpec {
        ModelSpec::new(terms).unwrap()
    }

    fn all_terms() -> ModelSpec {
        spec(vec![
            ModelTerm::Edges,
            ModelTerm::NodeMatch("a".into()),
            ModelTerm::GwDegree(0.5),
            ModelTerm::GwEsp(0.2),
            ModelTerm::Triangle,
            ModelTerm::KStar(2),
            ModelTerm::KStar(3),
            ModelTerm::GwDegree(0.0),
            ModelTerm::GwEsp(1.3),
        ])
    }

    #[test]
    fn complete_graph_edges() {
        let k4 = graph(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert_eq!(
            compute_stats(&k4, &spec(vec![ModelTerm::Edges])).unwrap().0,
            vec![6.0]
        );
    }

    #[test]
    fn triangle_gwesp_is_three_for_any_decay() {
        let tri = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        for decay in [0.0, 0.2, 1.0, 4.0] {
            let s = compute_stats(&tri, &spec(vec![ModelTerm::GwEsp(decay)])).unwrap();
            assert!((s[0] - 3.0).abs() < 1e-12, "decay {decay}: {}", s[0]);
        }
    }

    #[test]
    fn nodematch_with_uniform_attribute_counts_edges() {
        let mut g = random_graph(9, 14, 5);
        g.set_attribute("a", Attribute::new(&["x"; 9])).unwrap();
        let s = compute_stats(&g, &spec(vec![ModelTerm::NodeMatch("a".into())])).unwrap();
        assert_eq!(s[0], 14.0);
    }

    #[test]
    fn gwdegree_matches_degree_histogram_sum() {
        let g = random_graph(7, 10, 21);
        let tau: f64 = 0.5;
        // Independent degree count from the edge list.
        let mut deg = [0usize; 7];
        for (i, j) in g.edge_list() {
            deg[i] += 1;
            deg[j] += 1;
        }
        let mut hist = [0usize; 7];
        for d in deg {
            hist[d] += 1;
        }
        let expected: f64 = tau.exp()
            * (1..7)
                .map(|i| (1.0 - (1.0 - (-tau).exp()).powi(i as i32)) * hist[i] as f64)
                .sum::<f64>();
        let s = compute_stats(&g, &spec(vec![ModelTerm::GwDegree(tau)])).unwrap();
        assert!((s[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn triangle_free_gwesp_is_zero() {
        let g = graph(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]);
        let s = compute_stats(&g, &spec(vec![ModelTerm::GwEsp(0.7)])).unwrap();
        assert_eq!(s[0], 0.0);
    }

    #[test]
    fn simple_change_stats() {
        let empty = graph(4, &[]);
        let e = spec(vec![ModelTerm::Edges]);
        assert_eq!(change_stats(&empty, &e, 2, 3).unwrap().0, vec![1.0]);

        let path = graph(3, &[(0, 1), (1, 2)]);
        let t = spec(vec![ModelTerm::Triangle]);
        assert_eq!(change_stats(&path, &t, 0, 2).unwrap().0, vec![1.0]);
        assert_eq!(change_stats(&path, &t, 2, 0).unwrap().0, vec![1.0]);
    }

    #[test]
    fn errors() {
        let g = graph(3, &[]);
        let nm = spec(vec![ModelTerm::NodeMatch("grade".into())]);
        assert!(matches!(
            compute_stats(&g, &nm),
            Err(ErgmError::MissingAttribute(_))
        ));
        let d = Graph::from_edge_list(3, &[(0, 1)], true, None).unwrap();
        assert!(matches!(
            compute_stats(&d, &spec(vec![ModelTerm::Edges])),
            Err(ErgmError::DirectedUnsupported(_))
        ));
        assert!(matches!(
            change_stats(&g, &spec(vec![ModelTerm::Edges]), 1, 1),
            Err(ErgmError::SelfLoop(1))
        ));
        assert!(ModelSpec::new(vec![]).is_err());
        assert!(ModelSpec::new(vec![ModelTerm::KStar(1)]).is_err());
        assert!(ModelSpec::new(vec![ModelTerm::GwEsp(-0.1)]).is_err());
        assert!(ModelSpec::new(vec![ModelTerm::Edges, ModelTerm::Edges]).is_err());
    }

    #[test]
    fn change_stats_match_brute_force_difference() {
        let model = all_terms();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for case in 0..1000 {
            let n = rng.random_range(3..=10);
            let max_m = n * (n - 1) / 2;
            let m = rng.random_range(0..=max_m);
            let mut g = random_graph(n, m, case);
            let labels: Vec<String> = (0..n).map(|_| rng.random_range(0..3).to_string()).collect();
            g.set_attribute("a", Attribute::new(&labels)).unwrap();
            let (i, j) = g.random_dyad(&mut rng);
            let (i, j) = if rng.random_bool(0.5) { (j, i) } else { (i, j) };

            let delta = change_stats(&g, &model, i, j).unwrap();
            let mut on = g.clone();
            let mut off = g.clone();
            if !on.has_edge(i, j).unwrap() {
                on.toggle_edge(i, j).unwrap();
            } else {
                off.toggle_edge(i, j).unwrap();
            }
            let s_on = compute_stats(&on, &model).unwrap();
            let s_off = compute_stats(&off, &model).unwrap();
            for t in 0..model.dim() {
                let diff = s_on[t] - s_off[t];
                assert!(
                    (delta[t] - diff).abs() <= 1e-10,
                    "case {case} term {}: {} vs {diff}",
                    model.terms()[t],
                    delta[t]
                );
            }
        }
    }

    #[test]
    fn relabeling_invariance() {
        let model = spec(vec![
            ModelTerm::Edges,
            ModelTerm::Triangle,
            ModelTerm::KStar(2),
            ModelTerm::GwDegree(0.3),
            ModelTerm::GwEsp(0.3),
        ]);
        let g = random_graph(9, 16, 8);
        let perm = [4usize, 7, 1, 0, 8, 2, 6, 3, 5];
        let relabeled: Vec<_> = g
            .edge_list()
            .iter()
            .map(|&(i, j)| (perm[i], perm[j]))
            .collect();
        let h = graph(9, &relabeled);
        let a = compute_stats(&g, &model).unwrap();
        let b = compute_stats(&h, &model).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}

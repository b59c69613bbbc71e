//! Exhaustive enumeration on tiny graphs: exact normalising constants,
//! likelihoods and gridded posteriors.
//!
//! Graphs on `n` nodes are identified with bitmasks over the `C(n, 2)`
//! dyads taken in lexicographic order `(0,1), (0,2), ..., (n-2,n-1)`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{ErgmError, Result};
use crate::graph::Graph;
use crate::matrix::RowMatrix;
use crate::prior::LogPrior;
use crate::terms::{compute_stats, dot, BoundModel, ModelSpec};

/// Largest node count for multi-term models.
pub const MAX_NODES: usize = 5;
/// Largest node count for single-term models.
pub const MAX_NODES_SINGLE_TERM: usize = 6;

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Statistics of every graph on a fixed node set.
#[derive(Debug, Clone)]
pub struct ExactEnumeration {
    template: Graph,
    dyads: Vec<(usize, usize)>,
    stats: RowMatrix,
    // Distinct statistic vectors with the log of their multiplicity.
    distinct: Vec<(Vec<f64>, f64)>,
}

impl ExactEnumeration {
    /// Enumerates all graphs on the nodes (and attributes) of `template`;
    /// the template's own edges are ignored.
    pub fn new(template: &Graph, spec: &ModelSpec) -> Result<Self> {
        let n = template.n();
        let max = if spec.dim() == 1 {
            MAX_NODES_SINGLE_TERM
        } else {
            MAX_NODES
        };
        if n > max {
            return Err(ErgmError::TooLarge { n, max });
        }
        let mut empty = Graph::empty(n, template.is_directed());
        for (name, attr) in template.attributes() {
            empty.set_attribute(name.clone(), attr.clone())?;
        }
        let model = BoundModel::bind(spec, &empty)?;
        let dyads: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let count = 1usize << dyads.len();
        let rows: Vec<Vec<f64>> = (0..count)
            .into_par_iter()
            .map(|mask| {
                let mut g = empty.clone();
                for (k, &(i, j)) in dyads.iter().enumerate() {
                    if mask >> k & 1 == 1 {
                        g.toggle_unchecked(i, j);
                    }
                }
                model.stats(&g).into_inner()
            })
            .collect();
        let mut groups: BTreeMap<Vec<u64>, (Vec<f64>, u64)> = BTreeMap::new();
        for row in &rows {
            let key = row.iter().map(|v| v.to_bits()).collect();
            groups.entry(key).or_insert_with(|| (row.clone(), 0)).1 += 1;
        }
        let distinct = groups
            .into_values()
            .map(|(s, c)| (s, (c as f64).ln()))
            .collect();
        Ok(ExactEnumeration {
            template: empty,
            stats: RowMatrix::from_rows(spec.dim(), &rows),
            dyads,
            distinct,
        })
    }

    pub fn graph_count(&self) -> usize {
        self.stats.rows()
    }

    pub fn stats(&self, mask: usize) -> &[f64] {
        self.stats.row(mask)
    }

    pub fn mask_of(&self, g: &Graph) -> usize {
        self.dyads
            .iter()
            .enumerate()
            .filter(|(_, &(i, j))| g.has_edge_unchecked(i, j))
            .map(|(k, _)| 1usize << k)
            .sum()
    }

    pub fn graph_of(&self, mask: usize) -> Graph {
        let mut g = self.template.clone();
        for (k, &(i, j)) in self.dyads.iter().enumerate() {
            if mask >> k & 1 == 1 {
                g.toggle_unchecked(i, j);
            }
        }
        g
    }

    /// `log z(θ) = log Σ_g exp(θᵀ s(g))`.
    pub fn log_z(&self, theta: &[f64]) -> f64 {
        log_sum_exp(self.distinct.iter().map(|(s, lc)| dot(theta, s) + lc))
    }

    /// Exact probability of every graph, indexed by mask.
    pub fn probabilities(&self, theta: &[f64]) -> Vec<f64> {
        let log_z = self.log_z(theta);
        self.stats
            .iter_rows()
            .map(|s| (dot(theta, s) - log_z).exp())
            .collect()
    }

    /// `E_θ[s(Y)]`, the gradient of `log z`.
    pub fn expected_stats(&self, theta: &[f64]) -> Vec<f64> {
        let log_z = self.log_z(theta);
        let mut mean = vec![0.0; self.stats.cols()];
        for (s, lc) in &self.distinct {
            let w = (dot(theta, s) + lc - log_z).exp();
            for (m, v) in mean.iter_mut().zip(s) {
                *m += w * v;
            }
        }
        mean
    }

    /// Exact log-likelihood of a graph with statistics `s_obs`.
    pub fn log_likelihood(&self, s_obs: &[f64], theta: &[f64]) -> f64 {
        dot(theta, s_obs) - self.log_z(theta)
    }
}

/// `log z(θ)` for graphs on the node set of `template`.
pub fn exact_log_z(template: &Graph, spec: &ModelSpec, theta: &[f64]) -> Result<f64> {
    spec.check_dim(theta.len())?;
    Ok(ExactEnumeration::new(template, spec)?.log_z(theta))
}

/// Rectangular grid: `points` equally spaced values per coordinate,
/// endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub points: usize,
}

impl GridSpec {
    pub fn cube(dim: usize, lower: f64, upper: f64, points: usize) -> Self {
        GridSpec {
            lower: vec![lower; dim],
            upper: vec![upper; dim],
            points,
        }
    }

    fn axis(&self, k: usize) -> Vec<f64> {
        let step = (self.upper[k] - self.lower[k]) / (self.points - 1) as f64;
        (0..self.points)
            .map(|t| self.lower[k] + t as f64 * step)
            .collect()
    }
}

/// Unnormalized log posterior on a grid with normalized weights.
#[derive(Debug, Clone)]
pub struct ExactPosteriorGrid {
    pub points: RowMatrix,
    pub log_post: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ExactPosteriorGrid {
    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.points.cols()];
        for (p, w) in self.points.iter_rows().zip(&self.weights) {
            for (m, x) in mean.iter_mut().zip(p) {
                *m += w * x;
            }
        }
        mean
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        let mean = self.mean();
        let d = mean.len();
        let mut cov = DMatrix::zeros(d, d);
        for (p, w) in self.points.iter_rows().zip(&self.weights) {
            for a in 0..d {
                for b in 0..d {
                    cov[(a, b)] += w * (p[a] - mean[a]) * (p[b] - mean[b]);
                }
            }
        }
        cov
    }

    pub fn sd(&self) -> Vec<f64> {
        self.covariance()
            .diagonal()
            .iter()
            .map(|v| v.sqrt())
            .collect()
    }

    /// Grid point with the largest posterior weight.
    pub fn mode(&self) -> Vec<f64> {
        let best = self
            .log_post
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap_or(0);
        self.points.row(best).to_vec()
    }
}

/// `log p(θ|y) = θᵀs(y) − log z(θ) + log p(θ)` up to a constant, evaluated
/// on every grid point.
pub fn exact_posterior_grid<P: LogPrior>(
    y: &Graph,
    spec: &ModelSpec,
    prior: &P,
    grid: &GridSpec,
) -> Result<ExactPosteriorGrid> {
    let d = spec.dim();
    spec.check_dim(prior.dim())?;
    spec.check_dim(grid.lower.len())?;
    spec.check_dim(grid.upper.len())?;
    if grid.points < 2 || grid.lower.iter().zip(&grid.upper).any(|(l, u)| !(l < u)) {
        return Err(ErgmError::InvalidControl(
            "grid needs at least two points and lower < upper".into(),
        ));
    }
    let enumeration = ExactEnumeration::new(y, spec)?;
    let s_obs = compute_stats(y, spec)?;
    let axes: Vec<Vec<f64>> = (0..d).map(|k| grid.axis(k)).collect();
    let total = grid.points.pow(d as u32);
    let points: Vec<Vec<f64>> = (0..total)
        .map(|mut idx| {
            (0..d)
                .map(|k| {
                    let v = axes[k][idx % grid.points];
                    idx /= grid.points;
                    v
                })
                .collect()
        })
        .collect();
    let log_post: Vec<f64> = points
        .par_iter()
        .map(|t| enumeration.log_likelihood(&s_obs, t) + prior.log_density(t))
        .collect();
    let log_norm = log_sum_exp(log_post.iter().copied());
    let weights = log_post.iter().map(|l| (l - log_norm).exp()).collect();
    Ok(ExactPosteriorGrid {
        points: RowMatrix::from_rows(d, &points),
        log_post,
        weights,
    })
}

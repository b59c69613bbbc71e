//! Metropolis dyad-toggle simulation of networks from an ERGM.

use rand::Rng;

use crate::error::{ErgmError, Result};
use crate::graph::Graph;
use crate::matrix::RowMatrix;
use crate::rng::stream_rng;
use crate::terms::{dot, BoundModel, ModelSpec};

/// How the dyad to toggle is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Proposal {
    /// Every dyad with equal probability.
    #[default]
    UniformDyad,
    /// An existing edge or an empty dyad with probability 1/2 each, with the
    /// matching Hastings correction. Mixes better on sparse graphs.
    TieNoTie,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimControl {
    /// Toggle proposals before the first retained draw.
    pub aux_iters: usize,
    /// Toggle proposals between consecutive retained draws.
    pub thin: usize,
    pub seed: u64,
    pub proposal: Proposal,
}

impl Default for SimControl {
    fn default() -> Self {
        SimControl {
            aux_iters: 20_000,
            thin: 1_000,
            seed: 0,
            proposal: Proposal::UniformDyad,
        }
    }
}

impl SimControl {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.aux_iters == 0 || self.thin == 0 {
            return Err(ErgmError::InvalidControl(
                "aux_iters and thin must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One rows-by-dim matrix of simulated statistics.
pub type StatsMatrix = RowMatrix;

/// A Metropolis chain over networks at a fixed parameter. The caller owns
/// the random stream so that several samplers can share nothing.
#[derive(Debug, Clone)]
pub struct NetworkSampler {
    model: BoundModel,
    theta: Vec<f64>,
    graph: Graph,
    proposal: Proposal,
    delta: Vec<f64>,
    proposed: u64,
    accepted: u64,
}

impl NetworkSampler {
    pub fn new(start: Graph, spec: &ModelSpec, theta: &[f64], proposal: Proposal) -> Result<Self> {
        spec.check_dim(theta.len())?;
        if start.n() < 2 {
            return Err(ErgmError::InvalidModel(
                "network simulation needs at least two nodes".into(),
            ));
        }
        let model = BoundModel::bind(spec, &start)?;
        Ok(NetworkSampler {
            delta: vec![0.0; model.dim()],
            model,
            theta: theta.to_vec(),
            graph: start,
            proposal,
            proposed: 0,
            accepted: 0,
        })
    }

    /// Restarts from `start` at a new parameter, reusing allocations. The
    /// graph must have the same node set the sampler was built for.
    pub fn reset(&mut self, start: &Graph, theta: &[f64]) {
        debug_assert_eq!(start.n(), self.graph.n());
        self.graph.clone_from(start);
        self.theta.copy_from_slice(theta);
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn into_graph(self) -> Graph {
        self.graph
    }

    pub fn model(&self) -> &BoundModel {
        &self.model
    }

    pub fn acceptance(&self) -> (u64, u64) {
        (self.accepted, self.proposed)
    }

    /// One Metropolis–Hastings toggle proposal. Returns whether it was
    /// accepted.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        self.proposed += 1;
        let dyads = self.graph.dyad_count() as f64;
        let (i, j, log_q) = match self.proposal {
            Proposal::UniformDyad => {
                let (i, j) = self.graph.random_dyad(rng);
                (i, j, 0.0)
            }
            Proposal::TieNoTie => {
                let m = self.graph.edge_count() as f64;
                if rng.random_bool(0.5) {
                    let Some((i, j)) = self.graph.random_edge(rng) else {
                        return false;
                    };
                    // Removal: reverse move picks this dyad among D - m + 1 empty ones.
                    (i, j, (m / (dyads - m + 1.0)).ln())
                } else {
                    if m >= dyads {
                        return false;
                    }
                    let (i, j) = loop {
                        let (i, j) = self.graph.random_dyad(rng);
                        if !self.graph.has_edge_unchecked(i, j) {
                            break (i, j);
                        }
                    };
                    (i, j, ((dyads - m) / (m + 1.0)).ln())
                }
            }
        };
        self.model.change_into(&self.graph, i, j, &mut self.delta);
        let energy = dot(&self.theta, &self.delta);
        let log_ratio = if self.graph.has_edge_unchecked(i, j) {
            -energy
        } else {
            energy
        } + log_q;
        // NaN compares false and is rejected.
        let accept = log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio;
        if accept {
            self.graph.toggle_unchecked(i, j);
            self.accepted += 1;
        }
        accept
    }

    pub fn run<R: Rng + ?Sized>(&mut self, steps: usize, rng: &mut R) {
        for _ in 0..steps {
            self.step(rng);
        }
    }

    /// Statistics of the current state, by full evaluation.
    pub fn stats(&self) -> Vec<f64> {
        self.model.stats(&self.graph).into_inner()
    }
}

/// Runs `control.aux_iters` Metropolis steps from `start` and returns the
/// final network.
pub fn simulate_network(
    start: &Graph,
    spec: &ModelSpec,
    theta: &[f64],
    control: &SimControl,
) -> Result<Graph> {
    control.validate()?;
    let mut rng = stream_rng(control.seed, 0);
    let mut sampler = NetworkSampler::new(start.clone(), spec, theta, control.proposal)?;
    sampler.run(control.aux_iters, &mut rng);
    Ok(sampler.into_graph())
}

/// `nsim` statistic vectors: the first after an `aux_iters` burn-in from
/// `start`, the rest `thin` steps apart.
pub fn simulate_stats(
    start: &Graph,
    spec: &ModelSpec,
    theta: &[f64],
    nsim: usize,
    control: &SimControl,
) -> Result<StatsMatrix> {
    simulate_stats_with(
        start,
        spec,
        theta,
        nsim,
        control,
        &mut stream_rng(control.seed, 0),
    )
}

/// As [`simulate_stats`], drawing from a caller-supplied stream;
/// `control.seed` is ignored.
pub fn simulate_stats_with<R: Rng + ?Sized>(
    start: &Graph,
    spec: &ModelSpec,
    theta: &[f64],
    nsim: usize,
    control: &SimControl,
    rng: &mut R,
) -> Result<StatsMatrix> {
    control.validate()?;
    if nsim == 0 {
        return Err(ErgmError::InvalidControl("nsim must be at least 1".into()));
    }
    let mut sampler = NetworkSampler::new(start.clone(), spec, theta, control.proposal)?;
    let mut out = StatsMatrix::with_capacity(nsim, spec.dim());
    sampler.run(control.aux_iters, rng);
    out.push(&sampler.stats());
    for _ in 1..nsim {
        sampler.run(control.thin, rng);
        out.push(&sampler.stats());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::{compute_stats, ModelTerm};

    fn edges_model() -> ModelSpec {
        ModelSpec::new(vec![ModelTerm::Edges]).unwrap()
    }

    #[test]
    fn zero_parameter_gives_fair_coins() {
        let g = Graph::empty(8, false);
        let control = SimControl {
            aux_iters: 50_000,
            thin: 200,
            seed: 7,
            ..Default::default()
        };
        let stats = simulate_stats(&g, &edges_model(), &[0.0], 200, &control).unwrap();
        let mean = stats.column_means()[0];
        // 28 independent fair coins: sd of one draw sqrt(7), of the mean sqrt(7/200).
        let se = (7.0f64 / 200.0).sqrt();
        assert!((mean - 14.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn logit_parameter_sets_density() {
        let g = Graph::empty(10, false);
        let theta = (0.1f64 / 0.9).ln();
        assert!((theta + 2.1972).abs() < 1e-4);
        let control = SimControl {
            aux_iters: 5_000,
            thin: 100,
            seed: 3,
            ..Default::default()
        };
        let stats = simulate_stats(&g, &edges_model(), &[theta], 4000, &control).unwrap();
        let mean = stats.column_means()[0];
        // Binomial(45, 0.1): variance 4.05; thinning of 100 steps over 45
        // dyads leaves the draws close to independent.
        let se = (4.05f64 / 4000.0).sqrt();
        assert!((mean - 4.5).abs() < 4.0 * se, "mean {mean}");
    }

    #[test]
    fn six_node_column_mean() {
        let g = Graph::empty(6, false);
        let control = SimControl {
            aux_iters: 1_000,
            thin: 60,
            seed: 11,
            ..Default::default()
        };
        let stats = simulate_stats(&g, &edges_model(), &[0.0], 2000, &control).unwrap();
        let se = (15.0f64 / 4.0 / 2000.0).sqrt();
        assert!((stats.column_means()[0] - 7.5).abs() < 4.0 * se);
    }

    #[test]
    fn single_draw_matches_simulate_network() {
        let g = crate::testutil::random_graph(9, 10, 1);
        let spec = ModelSpec::new(vec![ModelTerm::Edges, ModelTerm::GwEsp(0.3)]).unwrap();
        let control = SimControl {
            aux_iters: 3_000,
            seed: 5,
            ..Default::default()
        };
        let theta = [-1.0, 0.4];
        let stats = simulate_stats(&g, &spec, &theta, 1, &control).unwrap();
        let net = simulate_network(&g, &spec, &theta, &control).unwrap();
        assert_eq!(stats.row(0), &compute_stats(&net, &spec).unwrap()[..]);
    }

    #[test]
    fn shape_and_determinism() {
        let g = crate::testutil::random_graph(7, 6, 2);
        let spec = ModelSpec::new(vec![ModelTerm::Edges, ModelTerm::Triangle]).unwrap();
        for proposal in [Proposal::UniformDyad, Proposal::TieNoTie] {
            let control = SimControl {
                aux_iters: 500,
                thin: 10,
                seed: 9,
                proposal,
            };
            let a = simulate_stats(&g, &spec, &[-0.5, 0.2], 13, &control).unwrap();
            let b = simulate_stats(&g, &spec, &[-0.5, 0.2], 13, &control).unwrap();
            assert_eq!((a.rows(), a.cols()), (13, 2));
            assert_eq!(a, b);
            let n1 = simulate_network(&g, &spec, &[-0.5, 0.2], &control).unwrap();
            let n2 = simulate_network(&g, &spec, &[-0.5, 0.2], &control).unwrap();
            assert_eq!(n1.edge_list(), n2.edge_list());
        }
    }

    #[test]
    fn tie_no_tie_agrees_with_uniform() {
        let g = Graph::empty(10, false);
        let theta = [-1.5];
        let mean = |proposal| {
            let control = SimControl {
                aux_iters: 2_000,
                thin: 100,
                seed: 21,
                proposal,
            };
            simulate_stats(&g, &edges_model(), &theta, 4000, &control)
                .unwrap()
                .column_means()[0]
        };
        let p = 1.0 / (1.0 + 1.5f64.exp());
        let exact = 45.0 * p;
        let se = (45.0 * p * (1.0 - p) / 4000.0).sqrt();
        assert!((mean(Proposal::UniformDyad) - exact).abs() < 4.0 * se);
        assert!((mean(Proposal::TieNoTie) - exact).abs() < 4.0 * se);
    }

    #[test]
    fn rejects_bad_input() {
        let g = Graph::empty(4, false);
        let control = SimControl::default();
        assert!(matches!(
            simulate_network(&g, &edges_model(), &[0.0, 1.0], &control),
            Err(ErgmError::DimensionMismatch {
                expected: 1,
                found: 2
            })
        ));
        let bad = SimControl {
            aux_iters: 0,
            ..control
        };
        assert!(simulate_network(&g, &edges_model(), &[0.0], &bad).is_err());
    }
}

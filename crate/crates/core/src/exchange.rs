//! Posterior sampling with the approximate exchange algorithm.
//!
//! Each chain proposes a parameter with a parallel adaptive-direction move
//! built from two other chains, simulates an auxiliary network at the
//! proposal and accepts with a ratio in which every normalising constant
//! cancels.

use nalgebra::DVector;
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{ErgmError, Result};
use crate::graph::Graph;
use crate::matrix::RowMatrix;
use crate::prior::LogPrior;
use crate::pseudo::{pseudo_posterior_mode, DyadDesign};
use crate::rng::stream_rng;
use crate::sampler::{NetworkSampler, Proposal};
use crate::terms::{compute_stats, ModelSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeControl {
    /// Sweeps discarded per chain before retention.
    pub burn_in: usize,
    /// Retained sweeps per chain.
    pub main_iters: usize,
    /// Toggle proposals for each auxiliary network.
    pub aux_iters: usize,
    pub nchains: usize,
    /// Scale of the direction between the two helper chains.
    pub gamma: f64,
    /// Standard deviation of the Gaussian jitter added to every proposal.
    pub sigma_epsilon: f64,
    pub proposal: Proposal,
    pub seed: u64,
    /// Initial state of each chain. When absent, chains start at
    /// independent draws from the normal approximation to the
    /// pseudo-posterior.
    pub start: Option<Vec<Vec<f64>>>,
}

impl Default for ExchangeControl {
    fn default() -> Self {
        ExchangeControl {
            burn_in: 300,
            main_iters: 2000,
            aux_iters: 20_000,
            nchains: 6,
            gamma: 0.6,
            sigma_epsilon: 0.0125,
            proposal: Proposal::UniformDyad,
            seed: 0,
            start: None,
        }
    }
}

impl ExchangeControl {
    fn validate(&self, dim: usize) -> Result<()> {
        if self.nchains < 3 {
            return Err(ErgmError::InvalidControl(format!(
                "nchains must be at least 3, got {}",
                self.nchains
            )));
        }
        if self.main_iters == 0 || self.aux_iters == 0 {
            return Err(ErgmError::InvalidControl(
                "main_iters and aux_iters must be at least 1".into(),
            ));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(ErgmError::InvalidControl("gamma must be positive".into()));
        }
        if !(self.sigma_epsilon > 0.0 && self.sigma_epsilon.is_finite()) {
            return Err(ErgmError::InvalidControl(
                "sigma_epsilon must be positive".into(),
            ));
        }
        if let Some(start) = &self.start {
            if start.len() != self.nchains {
                return Err(ErgmError::InvalidControl(format!(
                    "{} starting points for {} chains",
                    start.len(),
                    self.nchains
                )));
            }
            for s in start {
                if s.len() != dim {
                    return Err(ErgmError::DimensionMismatch {
                        expected: dim,
                        found: s.len(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Retained parameter draws of several chains, stored chain by chain.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSample {
    nchains: usize,
    iters: usize,
    draws: RowMatrix,
    pub accept_count: u64,
    pub proposal_count: u64,
}

impl PosteriorSample {
    /// `draws` holds `nchains * iters` rows, all of chain 0 first.
    pub fn new(nchains: usize, iters: usize, draws: RowMatrix) -> Result<Self> {
        if draws.rows() != nchains * iters {
            return Err(ErgmError::DimensionMismatch {
                expected: nchains * iters,
                found: draws.rows(),
            });
        }
        Ok(PosteriorSample {
            nchains,
            iters,
            draws,
            accept_count: 0,
            proposal_count: 0,
        })
    }

    pub fn with_acceptance(mut self, accepted: u64, proposed: u64) -> Self {
        self.accept_count = accepted;
        self.proposal_count = proposed;
        self
    }

    pub fn nchains(&self) -> usize {
        self.nchains
    }

    /// Retained draws per chain.
    pub fn iters(&self) -> usize {
        self.iters
    }

    pub fn dim(&self) -> usize {
        self.draws.cols()
    }

    pub fn len(&self) -> usize {
        self.draws.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.rows() == 0
    }

    /// All draws pooled, chain by chain.
    pub fn pooled(&self) -> &RowMatrix {
        &self.draws
    }

    pub fn draw(&self, chain: usize, iter: usize) -> &[f64] {
        self.draws.row(chain * self.iters + iter)
    }

    pub fn acceptance_rate(&self) -> Option<f64> {
        (self.proposal_count > 0).then(|| self.accept_count as f64 / self.proposal_count as f64)
    }
}

/// Parallel adaptive-direction proposal for chain `target`:
/// `θ_target + gamma (θ_a − θ_b) + jitter` with `a ≠ b` drawn uniformly from
/// the other chains.
pub fn ads_propose<R: Rng + ?Sized>(
    states: &[Vec<f64>],
    target: usize,
    gamma: f64,
    jitter: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    if states.len() < 3 {
        return Err(ErgmError::InvalidControl(format!(
            "adaptive direction proposals need at least 3 chains, got {}",
            states.len()
        )));
    }
    if target >= states.len() {
        return Err(ErgmError::InvalidControl(format!(
            "chain {target} out of range for {} chains",
            states.len()
        )));
    }
    let dim = states[target].len();
    if jitter.len() != dim || states.iter().any(|s| s.len() != dim) {
        return Err(ErgmError::DimensionMismatch {
            expected: dim,
            found: jitter.len(),
        });
    }
    let (a, b) = helper_pair(states.len(), target, rng);
    Ok((0..dim)
        .map(|k| states[target][k] + gamma * (states[a][k] - states[b][k]) + jitter[k])
        .collect())
}

fn helper_pair<R: Rng + ?Sized>(nchains: usize, target: usize, rng: &mut R) -> (usize, usize) {
    let picked = sample(rng, nchains - 1, 2);
    let skip = |k: usize| if k >= target { k + 1 } else { k };
    (skip(picked.index(0)), skip(picked.index(1)))
}

/// `min(0, (θ − θ')ᵀ(s(y') − s(y)) + log p(θ') − log p(θ))`. Non-finite
/// values map to `-∞` so that the move is rejected.
pub fn exchange_log_alpha<P: LogPrior + ?Sized>(
    theta: &[f64],
    theta_prop: &[f64],
    s_obs: &[f64],
    s_sim: &[f64],
    prior: &P,
) -> Result<f64> {
    let d = theta.len();
    for len in [theta_prop.len(), s_obs.len(), s_sim.len(), prior.dim()] {
        if len != d {
            return Err(ErgmError::DimensionMismatch {
                expected: d,
                found: len,
            });
        }
    }
    let data_term: f64 = (0..d)
        .map(|k| (theta[k] - theta_prop[k]) * (s_sim[k] - s_obs[k]))
        .sum();
    let value = data_term + prior.log_density(theta_prop) - prior.log_density(theta);
    Ok(if value.is_nan() {
        f64::NEG_INFINITY
    } else {
        value.min(0.0)
    })
}

struct Chain {
    rng: ChaCha8Rng,
    sampler: NetworkSampler,
    draws: Vec<f64>,
    accepted: u64,
    proposed: u64,
}

fn starting_points<P: LogPrior>(
    y: &Graph,
    spec: &ModelSpec,
    prior: &P,
    control: &ExchangeControl,
) -> Result<Vec<Vec<f64>>> {
    if let Some(start) = &control.start {
        return Ok(start.clone());
    }
    let design = DyadDesign::build(y, spec)?;
    let fit = pseudo_posterior_mode(&design, prior)?;
    let d = spec.dim();
    let cov = (-fit.hessian_pl)
        .try_inverse()
        .ok_or(ErgmError::NotPositiveDefinite(
            "negative pseudo-posterior Hessian",
        ))?;
    let cov = (&cov + cov.transpose()) * 0.5;
    let chol = cov
        .cholesky()
        .ok_or(ErgmError::NotPositiveDefinite(
            "negative pseudo-posterior Hessian",
        ))?
        .l();
    let mut rng = stream_rng(control.seed, 0);
    Ok((0..control.nchains)
        .map(|_| {
            let z = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
            let offset = &chol * z;
            fit.theta_pl
                .iter()
                .zip(offset.iter())
                .map(|(t, o)| t + o)
                .collect()
        })
        .collect())
}

/// Runs `burn_in + main_iters` sweeps in which every chain makes one
/// exchange update. Chains are updated in turn, each proposal using the
/// current states of the others, so the joint chain leaves the product of
/// posteriors invariant. Every chain draws from its own random stream.
pub fn run_exchange<P: LogPrior>(
    y: &Graph,
    spec: &ModelSpec,
    prior: &P,
    control: &ExchangeControl,
) -> Result<PosteriorSample> {
    let d = spec.dim();
    control.validate(d)?;
    spec.check_dim(prior.dim())?;
    let s_obs = compute_stats(y, spec)?.into_inner();
    let mut states = starting_points(y, spec, prior, control)?;
    let jitter = Normal::new(0.0, control.sigma_epsilon)
        .map_err(|e| ErgmError::InvalidControl(e.to_string()))?;

    let mut chains = states
        .iter()
        .enumerate()
        .map(|(c, theta)| {
            Ok(Chain {
                sampler: NetworkSampler::new(y.clone(), spec, theta, control.proposal)?,
                rng: stream_rng(control.seed, 1 + c as u64),
                draws: Vec::with_capacity(control.main_iters * d),
                accepted: 0,
                proposed: 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    for sweep in 0..control.burn_in + control.main_iters {
        let retain = sweep >= control.burn_in;
        for (h, chain) in chains.iter_mut().enumerate() {
            let noise: Vec<f64> = (0..d).map(|_| jitter.sample(&mut chain.rng)).collect();
            let proposal = ads_propose(&states, h, control.gamma, &noise, &mut chain.rng)?;
            let accepted = if proposal.iter().all(|v| v.is_finite()) {
                chain.sampler.reset(y, &proposal);
                chain.sampler.run(control.aux_iters, &mut chain.rng);
                let s_sim = chain.sampler.stats();
                let log_alpha = exchange_log_alpha(&states[h], &proposal, &s_obs, &s_sim, prior)?;
                log_alpha >= 0.0 || chain.rng.random::<f64>().ln() < log_alpha
            } else {
                false
            };
            if accepted {
                states[h] = proposal;
            }
            if retain {
                chain.proposed += 1;
                chain.accepted += u64::from(accepted);
                chain.draws.extend_from_slice(&states[h]);
            }
        }
    }

    let mut draws = RowMatrix::with_capacity(control.nchains * control.main_iters, d);
    let (mut accepted, mut proposed) = (0, 0);
    for chain in &chains {
        for row in chain.draws.chunks_exact(d) {
            draws.push(row);
        }
        accepted += chain.accepted;
        proposed += chain.proposed;
    }
    Ok(
        PosteriorSample::new(control.nchains, control.main_iters, draws)?
            .with_acceptance(accepted, proposed),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{exact_posterior_grid, GridSpec};
    use crate::prior::{FlatPrior, PriorSpec};
    use crate::terms::ModelTerm;

    #[test]
    fn ads_examples() {
        let mut rng = stream_rng(0, 0);
        let same = vec![vec![0.3, -0.2]; 4];
        assert_eq!(
            ads_propose(&same, 1, 0.6, &[0.0, 0.0], &mut rng).unwrap(),
            vec![0.3, -0.2]
        );
        let states = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let mut seen = [false; 2];
        for _ in 0..100 {
            let p = ads_propose(&states, 0, 0.6, &[0.0, 0.0], &mut rng).unwrap();
            if p == vec![0.6, -0.6] {
                seen[0] = true;
            } else {
                assert_eq!(p, vec![-0.6, 0.6]);
                seen[1] = true;
            }
        }
        assert_eq!(seen, [true, true]);
        assert!(ads_propose(&states[..2], 0, 0.6, &[0.0, 0.0], &mut rng).is_err());
        assert!(ads_propose(&states, 3, 0.6, &[0.0, 0.0], &mut rng).is_err());
    }

    #[test]
    fn helper_pairs_are_uniform() {
        // One-hot chain states reveal the helper pair through the proposal.
        let nchains = 5;
        let target = 2;
        let states: Vec<Vec<f64>> = (0..nchains)
            .map(|c| (0..nchains).map(|k| f64::from(u8::from(k == c))).collect())
            .collect();
        let mut counts = vec![vec![0u32; nchains]; nchains];
        let mut rng = stream_rng(4, 0);
        let calls = 100_000;
        for _ in 0..calls {
            let p = ads_propose(&states, target, 1.0, &[0.0; 5], &mut rng).unwrap();
            let a = (0..nchains).find(|&k| k != target && p[k] == 1.0).unwrap();
            let b = (0..nchains).find(|&k| k != target && p[k] == -1.0).unwrap();
            counts[a][b] += 1;
        }
        let cells = ((nchains - 1) * (nchains - 2)) as f64;
        let expected = calls as f64 / cells;
        let mut chi2 = 0.0;
        for a in 0..nchains {
            for b in 0..nchains {
                if a == target || b == target || a == b {
                    assert_eq!(counts[a][b], 0);
                } else {
                    chi2 += (counts[a][b] as f64 - expected).powi(2) / expected;
                }
            }
        }
        // 11 degrees of freedom; the 0.999 quantile is 31.26.
        assert!(chi2 < 31.26, "chi-square {chi2}");
    }

    #[test]
    fn log_alpha_examples() {
        let flat = FlatPrior { dim: 2 };
        let v =
            exchange_log_alpha(&[1.0, 0.0], &[0.0, 1.0], &[3.0, 2.0], &[4.0, 4.0], &flat).unwrap();
        assert!((v + 1.0).abs() < 1e-12);
        assert_eq!(
            exchange_log_alpha(&[0.4, 0.1], &[0.4, 0.1], &[3.0, 2.0], &[9.0, 1.0], &flat).unwrap(),
            0.0
        );
        let normal = PriorSpec::isotropic(vec![0.0, 0.0], 1.0).unwrap();
        let v = exchange_log_alpha(&[2.0, 0.0], &[0.0, 0.0], &[1.0, 1.0], &[1.0, 1.0], &normal)
            .unwrap();
        assert_eq!(v, 0.0);
        assert!(exchange_log_alpha(&[0.0], &[0.0, 1.0], &[0.0], &[0.0], &flat).is_err());
        let nan = exchange_log_alpha(
            &[f64::NAN, 0.0],
            &[0.0, 0.0],
            &[1.0, 1.0],
            &[2.0, 1.0],
            &flat,
        );
        assert_eq!(nan.unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn reverse_move_negates_log_ratio() {
        // Exchanging current and proposed parameters with the same observed
        // and auxiliary statistics negates the untruncated ratio.
        let prior = PriorSpec::isotropic(vec![0.0; 3], 2.0).unwrap();
        let (a, b) = ([0.2, -1.0, 0.5], [0.7, 0.1, -0.4]);
        let (s_obs, s_sim) = ([4.0, 2.0, 7.0], [6.0, 1.0, 3.0]);
        let fwd = exchange_log_alpha(&a, &b, &s_obs, &s_sim, &prior).unwrap();
        let back = exchange_log_alpha(&b, &a, &s_obs, &s_sim, &prior).unwrap();
        assert_eq!(fwd.max(back), 0.0);
        let raw: f64 = (0..3)
            .map(|k| (a[k] - b[k]) * (s_sim[k] - s_obs[k]))
            .sum::<f64>()
            + prior.log_density(&b)
            - prior.log_density(&a);
        assert!(raw.abs() > 0.1);
        assert!((fwd.min(back) + raw.abs()).abs() < 1e-12);
    }

    fn small_control(seed: u64) -> ExchangeControl {
        ExchangeControl {
            burn_in: 200,
            main_iters: 2000,
            aux_iters: 200,
            nchains: 4,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn edges_posterior_matches_exact_grid() {
        let y = Graph::from_edge_list(5, &[(0, 1), (1, 2), (2, 3)], false, None).unwrap();
        let spec = ModelSpec::new(vec![ModelTerm::Edges]).unwrap();
        let prior = PriorSpec::weakly_informative(1);
        let sample = run_exchange(&y, &spec, &prior, &small_control(1)).unwrap();
        let grid =
            exact_posterior_grid(&y, &spec, &prior, &GridSpec::cube(1, -8.0, 8.0, 3201)).unwrap();
        let mean = sample.pooled().column_means()[0];
        assert!(
            (mean - grid.mean()[0]).abs() < 0.1,
            "{mean} vs {:?}",
            grid.mean()
        );
        let rate = sample.acceptance_rate().unwrap();
        assert!(rate > 0.05 && rate < 0.95);
        assert_eq!(sample.len(), 8000);
    }

    #[test]
    fn forced_stay_accepts_everything() {
        // All chains at one point with negligible jitter: every proposal
        // is essentially the current state.
        let y = Graph::from_edge_list(5, &[(0, 1), (1, 2)], false, None).unwrap();
        let spec = ModelSpec::new(vec![ModelTerm::Edges]).unwrap();
        let control = ExchangeControl {
            burn_in: 0,
            main_iters: 50,
            aux_iters: 20,
            nchains: 3,
            sigma_epsilon: 1e-300,
            start: Some(vec![vec![-0.5]; 3]),
            ..Default::default()
        };
        let sample = run_exchange(&y, &spec, &FlatPrior { dim: 1 }, &control).unwrap();
        assert_eq!(sample.acceptance_rate(), Some(1.0));
        assert!(sample
            .pooled()
            .as_slice()
            .iter()
            .all(|&v| (v + 0.5).abs() < 1e-12));
    }

    #[test]
    fn more_edges_raise_the_posterior_mean() {
        let spec = ModelSpec::new(vec![ModelTerm::Edges]).unwrap();
        let prior = PriorSpec::weakly_informative(1);
        let few = Graph::from_edge_list(5, &[(0, 1), (2, 3)], false, None).unwrap();
        let many = Graph::from_edge_list(5, &[(0, 1), (2, 3), (1, 4), (0, 3), (2, 4)], false, None)
            .unwrap();
        let a = run_exchange(&few, &spec, &prior, &small_control(2)).unwrap();
        let b = run_exchange(&many, &spec, &prior, &small_control(2)).unwrap();
        assert!(b.pooled().column_means()[0] > a.pooled().column_means()[0] + 0.5);
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let y = crate::testutil::random_graph(8, 9, 2);
        let spec = ModelSpec::new(vec![ModelTerm::Edges, ModelTerm::GwEsp(0.5)]).unwrap();
        let prior = PriorSpec::weakly_informative(2);
        let control = ExchangeControl {
            burn_in: 5,
            main_iters: 30,
            aux_iters: 300,
            nchains: 4,
            seed: 12,
            ..Default::default()
        };
        let a = run_exchange(&y, &spec, &prior, &control).unwrap();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = single.install(|| run_exchange(&y, &spec, &prior, &control).unwrap());
        assert_eq!(a, b);
        assert_eq!((a.nchains(), a.iters(), a.dim()), (4, 30, 2));
        assert_eq!(a.proposal_count, 120);
    }

    #[test]
    fn rejects_bad_control() {
        let y = Graph::from_edge_list(5, &[(0, 1)], false, None).unwrap();
        let spec = ModelSpec::new(vec![ModelTerm::Edges]).unwrap();
        let prior = PriorSpec::weakly_informative(1);
        let two = ExchangeControl {
            nchains: 2,
            ..Default::default()
        };
        assert!(matches!(
            run_exchange(&y, &spec, &prior, &two),
            Err(ErgmError::InvalidControl(_))
        ));
        let wrong_prior = PriorSpec::weakly_informative(2);
        assert!(run_exchange(&y, &spec, &wrong_prior, &small_control(0)).is_err());
    }
}

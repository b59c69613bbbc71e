//! Pseudolikelihood inference and its calibration toward the true posterior.
//!
//! The pseudolikelihood treats every dyad as an independent logistic
//! regression on its change statistics. Its posterior is cheap to sample but
//! too narrow and off-centre for dyad-dependent models, so the draws are
//! moved by an affine map that matches the mode and curvature estimated for
//! the true posterior by stochastic approximation.

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rustc_hash::FxBuildHasher;

use crate::error::{ErgmError, Result};
use crate::graph::Graph;
use crate::matrix::RowMatrix;
use crate::prior::LogPrior;
use crate::rng::stream_rng;
use crate::sampler::{simulate_stats_with, Proposal, SimControl};
use crate::terms::{compute_stats, dot, BoundModel, ModelSpec};

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone)]
struct DesignRow {
    delta: Vec<f64>,
    on: f64,
    total: f64,
}

/// Logistic-regression design of a network: one row per distinct change
/// statistic vector, with counts of present and total dyads.
#[derive(Debug, Clone)]
pub struct DyadDesign {
    dim: usize,
    rows: Vec<DesignRow>,
}

impl DyadDesign {
    pub fn build(y: &Graph, spec: &ModelSpec) -> Result<Self> {
        let model = BoundModel::bind(spec, y)?;
        let mut groups: IndexMap<Vec<u64>, DesignRow, FxBuildHasher> = IndexMap::default();
        let mut delta = vec![0.0; spec.dim()];
        for i in 0..y.n() {
            for j in i + 1..y.n() {
                model.change_into(y, i, j, &mut delta);
                let key = delta.iter().map(|v| v.to_bits()).collect();
                let row = groups.entry(key).or_insert_with(|| DesignRow {
                    delta: delta.clone(),
                    on: 0.0,
                    total: 0.0,
                });
                row.total += 1.0;
                if y.has_edge_unchecked(i, j) {
                    row.on += 1.0;
                }
            }
        }
        Ok(DyadDesign {
            dim: spec.dim(),
            rows: groups.into_values().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of distinct design rows.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn log_lik(&self, theta: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|r| {
                let eta = dot(theta, &r.delta);
                r.on * eta - r.total * softplus(eta)
            })
            .sum()
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; self.dim];
        for r in &self.rows {
            let resid = r.on - r.total * logistic(dot(theta, &r.delta));
            for (g, d) in grad.iter_mut().zip(&r.delta) {
                *g += resid * d;
            }
        }
        grad
    }

    pub fn hessian(&self, theta: &[f64]) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.dim, self.dim);
        for r in &self.rows {
            let p = logistic(dot(theta, &r.delta));
            let w = r.total * p * (1.0 - p);
            for a in 0..self.dim {
                for b in 0..=a {
                    h[(a, b)] -= w * r.delta[a] * r.delta[b];
                }
            }
        }
        for a in 0..self.dim {
            for b in 0..a {
                h[(b, a)] = h[(a, b)];
            }
        }
        h
    }

    fn all_same_state(&self) -> Option<bool> {
        let on: f64 = self.rows.iter().map(|r| r.on).sum();
        let total: f64 = self.rows.iter().map(|r| r.total).sum();
        if on == 0.0 {
            Some(false)
        } else if on == total {
            Some(true)
        } else {
            None
        }
    }
}

/// Log pseudolikelihood: `Σ_{i<j} log Bernoulli(y_ij | logistic(θᵀδ_ij))`.
pub fn pseudo_loglik(y: &Graph, spec: &ModelSpec, theta: &[f64]) -> Result<f64> {
    spec.check_dim(theta.len())?;
    Ok(DyadDesign::build(y, spec)?.log_lik(theta))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Damped Newton ascent. `eval` returns value, gradient and Hessian.
fn newton_ascent(
    start: Vec<f64>,
    eval: impl Fn(&[f64]) -> (f64, Vec<f64>, DMatrix<f64>),
) -> Result<Vec<f64>> {
    const MAX_ITERS: usize = 500;
    let mut theta = start;
    let (mut value, mut grad, mut hess) = eval(&theta);
    for _ in 0..MAX_ITERS {
        let chol = (-hess.clone()).cholesky().ok_or_else(|| {
            ErgmError::NonEstimable(
                "singular information matrix (separation or collinear statistics)".into(),
            )
        })?;
        let step = chol.solve(&DVector::from_column_slice(&grad));
        if step.norm() <= 1e-10 * (1.0 + norm(&theta)) {
            theta.iter_mut().zip(step.iter()).for_each(|(t, s)| *t += s);
            return Ok(theta);
        }
        let mut scale = 1.0;
        loop {
            let trial: Vec<f64> = theta
                .iter()
                .zip(step.iter())
                .map(|(t, s)| t + scale * s)
                .collect();
            let (v, g, h) = eval(&trial);
            if v.is_finite() && v >= value - 1e-12 * value.abs().max(1.0) {
                theta = trial;
                value = v;
                grad = g;
                hess = h;
                break;
            }
            scale *= 0.5;
            if scale < 1e-10 {
                // No ascent possible along the Newton direction: at the
                // optimum up to rounding.
                return Ok(theta);
            }
        }
    }
    Err(ErgmError::NonEstimable(format!(
        "Newton iterations did not converge (gradient norm {:.3e})",
        norm(&grad)
    )))
}

// Beyond this linear predictor the fitted probabilities are numerically 0 or
// 1, which only happens when the design separates the dyads.
const SEPARATION_ETA: f64 = 30.0;

fn fit_mple_design(design: &DyadDesign) -> Result<Vec<f64>> {
    match design.all_same_state() {
        Some(false) => {
            return Err(ErgmError::NonEstimable(
                "separation: no dyad has an edge".into(),
            ))
        }
        Some(true) => {
            return Err(ErgmError::NonEstimable(
                "separation: every dyad has an edge".into(),
            ))
        }
        None => {}
    }
    let theta = newton_ascent(vec![0.0; design.dim()], |t| {
        (design.log_lik(t), design.gradient(t), design.hessian(t))
    })?;
    let separated = design
        .rows
        .iter()
        .any(|r| dot(&theta, &r.delta).abs() > SEPARATION_ETA);
    if separated || theta.iter().any(|t| !t.is_finite()) {
        return Err(ErgmError::NonEstimable(
            "separation: the estimate diverges along some direction".into(),
        ));
    }
    Ok(theta)
}

/// Maximum pseudolikelihood estimate.
pub fn fit_mple(y: &Graph, spec: &ModelSpec) -> Result<Vec<f64>> {
    fit_mple_design(&DyadDesign::build(y, spec)?)
}

/// Mode of the pseudo-posterior and the Hessian of its log density there.
#[derive(Debug, Clone)]
pub struct PseudoFit {
    pub theta_pl: Vec<f64>,
    pub hessian_pl: DMatrix<f64>,
}

pub fn pseudo_posterior_mode<P: LogPrior>(design: &DyadDesign, prior: &P) -> Result<PseudoFit> {
    if prior.dim() != design.dim() {
        return Err(ErgmError::DimensionMismatch {
            expected: design.dim(),
            found: prior.dim(),
        });
    }
    let prior_hess = prior.hessian();
    let eval = |t: &[f64]| {
        let mut g = design.gradient(t);
        for (a, b) in g.iter_mut().zip(prior.gradient(t)) {
            *a += b;
        }
        (
            design.log_lik(t) + prior.log_density(t),
            g,
            design.hessian(t) + &prior_hess,
        )
    };
    // The MPLE may not exist (separation) while the pseudo-posterior mode does.
    let start = fit_mple_design(design).unwrap_or_else(|_| vec![0.0; design.dim()]);
    let theta_pl = newton_ascent(start, eval)?;
    let hessian_pl = design.hessian(&theta_pl) + prior_hess;
    Ok(PseudoFit {
        theta_pl,
        hessian_pl,
    })
}

/// Cholesky factor `L` with `L Lᵀ = (-hessian)^{-1}`.
fn inverse_information_factor(hessian: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let info = -hessian.clone();
    let inv = info
        .cholesky()
        .ok_or(ErgmError::NotPositiveDefinite(what))?
        .inverse();
    // Symmetrize away rounding before factoring again.
    let inv = (&inv + inv.transpose()) * 0.5;
    Ok(inv
        .cholesky()
        .ok_or(ErgmError::NotPositiveDefinite(what))?
        .l())
}

fn rw_metropolis<P: LogPrior>(
    design: &DyadDesign,
    prior: &P,
    fit: &PseudoFit,
    mcmc: usize,
    seed: u64,
) -> Result<RowMatrix> {
    let d = design.dim();
    let scale = 2.38 / (d as f64).sqrt();
    let chol =
        inverse_information_factor(&fit.hessian_pl, "negative pseudo-posterior Hessian")? * scale;
    let log_target = |t: &[f64]| design.log_lik(t) + prior.log_density(t);
    let mut rng = stream_rng(seed, 0);
    let mut theta = fit.theta_pl.clone();
    let mut current = log_target(&theta);
    let burn_in = mcmc / 10;
    let mut out = RowMatrix::with_capacity(mcmc, d);
    for it in 0..burn_in + mcmc {
        let z = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let step = &chol * z;
        let proposal: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
        let cand = log_target(&proposal);
        if cand.is_finite() && rng.random::<f64>().ln() < cand - current {
            theta = proposal;
            current = cand;
        }
        if it >= burn_in {
            out.push(&theta);
        }
    }
    Ok(out)
}

/// Random-walk Metropolis on the pseudo-posterior, started at its mode;
/// `mcmc` draws are kept after `mcmc / 10` burn-in steps.
pub fn sample_pseudo_posterior<P: LogPrior>(
    y: &Graph,
    spec: &ModelSpec,
    prior: &P,
    mcmc: usize,
    seed: u64,
) -> Result<RowMatrix> {
    if mcmc == 0 {
        return Err(ErgmError::InvalidControl("mcmc must be at least 1".into()));
    }
    let design = DyadDesign::build(y, spec)?;
    let fit = pseudo_posterior_mode(&design, prior)?;
    rw_metropolis(&design, prior, &fit, mcmc, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrateControl {
    /// Stochastic-approximation iterations.
    pub iters: usize,
    pub aux_iters: usize,
    /// Simulated networks per gradient estimate.
    pub noisy_nsim: usize,
    /// Toggles between those simulated networks.
    pub noisy_thin: usize,
    /// Retained pseudo-posterior draws.
    pub mcmc: usize,
    /// Simulated networks for the covariance at the final estimate.
    pub hessian_nsim: usize,
    /// Step size `a_t = step_scale / (t + step_offset)`.
    pub step_scale: f64,
    pub step_offset: f64,
    /// Largest acceptable mean Newton step, in pseudo-posterior standard
    /// deviations, over the last tenth of the iterations.
    pub tolerance: f64,
    pub proposal: Proposal,
    pub seed: u64,
}

impl Default for CalibrateControl {
    fn default() -> Self {
        CalibrateControl {
            iters: 1000,
            aux_iters: 20_000,
            noisy_nsim: 100,
            noisy_thin: 1000,
            mcmc: 10_000,
            hessian_nsim: 1000,
            step_scale: 10.0,
            step_offset: 10.0,
            tolerance: 0.5,
            proposal: Proposal::UniformDyad,
            seed: 0,
        }
    }
}

impl CalibrateControl {
    fn validate(&self) -> Result<()> {
        let counts = [
            self.iters,
            self.aux_iters,
            self.noisy_nsim,
            self.noisy_thin,
            self.mcmc,
            self.hessian_nsim,
        ];
        if counts.contains(&0) {
            return Err(ErgmError::InvalidControl(
                "calibration counts must all be positive".into(),
            ));
        }
        if self.hessian_nsim < 2 {
            return Err(ErgmError::InvalidControl(
                "hessian_nsim must be at least 2".into(),
            ));
        }
        if !(self.step_scale > 0.0 && self.step_offset > 0.0 && self.tolerance > 0.0) {
            return Err(ErgmError::InvalidControl(
                "step sizes and tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// MAP and Hessian of the true posterior, with the pseudo-posterior fit
/// they were started from.
#[derive(Debug, Clone)]
pub struct MapEstimate {
    pub theta_map: Vec<f64>,
    pub hessian_map: DMatrix<f64>,
    pub pseudo: PseudoFit,
    /// Mean Newton step over the final window, in pseudo-posterior SDs.
    pub final_step: f64,
}

// Stream layout under the calibration seed.
const STREAM_PSEUDO_MCMC: u64 = 0;
const STREAM_HESSIAN: u64 = 1;
const STREAM_GRADIENT_BASE: u64 = 2;

/// Stochastic approximation of the posterior mode,
/// `θ ← θ + a_t · P · [s(y) − mean_k s(y'_k) + ∇log p(θ)]`, preconditioned by
/// `P = (−hessian_pl)^{-1}` and started at the pseudo-posterior mode. The
/// returned mode averages the second half of the iterates. The Hessian is
/// `−Cov_θ[s(Y)] + ∇² log p` at that mode.
pub fn estimate_map_and_hessians<P: LogPrior>(
    y: &Graph,
    spec: &ModelSpec,
    prior: &P,
    control: &CalibrateControl,
) -> Result<MapEstimate> {
    control.validate()?;
    spec.check_dim(prior.dim())?;
    let design = DyadDesign::build(y, spec)?;
    let pseudo = pseudo_posterior_mode(&design, prior)?;
    let d = spec.dim();
    let info_pl = -pseudo.hessian_pl.clone();
    let precondition = info_pl
        .clone()
        .cholesky()
        .ok_or(ErgmError::NotPositiveDefinite(
            "negative pseudo-posterior Hessian",
        ))?;
    let s_obs = compute_stats(y, spec)?;
    let sim = SimControl {
        aux_iters: control.aux_iters,
        thin: control.noisy_thin,
        seed: control.seed,
        proposal: control.proposal,
    };

    let mut theta = pseudo.theta_pl.clone();
    let mut average = vec![0.0; d];
    let mut averaged = 0usize;
    let window = (control.iters / 10).max(1);
    let mut window_grad = vec![0.0; d];
    // Caps a single update at this many pseudo-posterior SDs.
    const MAX_STEP: f64 = 3.0;

    for t in 0..control.iters {
        let mut rng = stream_rng(control.seed, STREAM_GRADIENT_BASE + t as u64);
        let stats = simulate_stats_with(y, spec, &theta, control.noisy_nsim, &sim, &mut rng)?;
        let mean = stats.column_means();
        let prior_grad = prior.gradient(&theta);
        let grad: Vec<f64> = (0..d).map(|k| s_obs[k] - mean[k] + prior_grad[k]).collect();
        if t + window >= control.iters {
            for (w, g) in window_grad.iter_mut().zip(&grad) {
                *w += g / window as f64;
            }
        }
        let newton = precondition.solve(&DVector::from_column_slice(&grad));
        let length = newton.dot(&(&info_pl * &newton)).sqrt();
        let a_t = control.step_scale / (t as f64 + control.step_offset);
        let shrink = if a_t * length > MAX_STEP {
            MAX_STEP / (a_t * length)
        } else {
            1.0
        };
        for (th, step) in theta.iter_mut().zip(newton.iter()) {
            *th += a_t * shrink * step;
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(ErgmError::NonConvergence(format!(
                "iterate became non-finite at step {t}"
            )));
        }
        if 2 * (t + 1) > control.iters {
            averaged += 1;
            for (a, th) in average.iter_mut().zip(&theta) {
                *a += (th - *a) / averaged as f64;
            }
        }
    }

    let mean_step = precondition.solve(&DVector::from_column_slice(&window_grad));
    let final_step = mean_step.dot(&(&info_pl * &mean_step)).sqrt();
    if !(final_step <= control.tolerance) {
        return Err(ErgmError::NonConvergence(format!(
            "mean Newton step over the last {window} iterations is {final_step:.3} \
             pseudo-posterior SDs (tolerance {}), last iterate {theta:?}",
            control.tolerance
        )));
    }

    let theta_map = average;
    let mut rng = stream_rng(control.seed, STREAM_HESSIAN);
    let stats = simulate_stats_with(y, spec, &theta_map, control.hessian_nsim, &sim, &mut rng)?;
    let hessian_map = -stats.covariance() + prior.hessian();
    Ok(MapEstimate {
        theta_map,
        hessian_map,
        pseudo,
        final_step,
    })
}

/// Affine map `θ ↦ θ_map + V (θ − θ_pl)` taking the pseudo-posterior's mode
/// and curvature onto the true posterior's.
#[derive(Debug, Clone)]
pub struct CalibrationMap {
    pub theta_map: Vec<f64>,
    pub hessian_map: DMatrix<f64>,
    pub theta_pl: Vec<f64>,
    pub v: DMatrix<f64>,
}

impl CalibrationMap {
    /// `V = L · L_pl^{-1}` with `L Lᵀ = (−H_map)^{-1}` and
    /// `L_pl L_plᵀ = (−H_pl)^{-1}`, both lower triangular.
    pub fn new(theta_map: Vec<f64>, hessian_map: DMatrix<f64>, pseudo: &PseudoFit) -> Result<Self> {
        if theta_map.len() != pseudo.theta_pl.len() {
            return Err(ErgmError::DimensionMismatch {
                expected: pseudo.theta_pl.len(),
                found: theta_map.len(),
            });
        }
        let l_map = inverse_information_factor(&hessian_map, "negative posterior Hessian")?;
        let l_pl =
            inverse_information_factor(&pseudo.hessian_pl, "negative pseudo-posterior Hessian")?;
        let l_pl_inv = l_pl.try_inverse().ok_or(ErgmError::NotPositiveDefinite(
            "negative pseudo-posterior Hessian",
        ))?;
        Ok(CalibrationMap {
            v: l_map * l_pl_inv,
            theta_map,
            hessian_map,
            theta_pl: pseudo.theta_pl.clone(),
        })
    }

    pub fn from_estimate(est: &MapEstimate) -> Result<Self> {
        Self::new(est.theta_map.clone(), est.hessian_map.clone(), &est.pseudo)
    }

    pub fn apply(&self, theta: &[f64]) -> Vec<f64> {
        let diff = DVector::from_iterator(
            theta.len(),
            theta.iter().zip(&self.theta_pl).map(|(t, p)| t - p),
        );
        let moved = &self.v * diff;
        self.theta_map
            .iter()
            .zip(moved.iter())
            .map(|(m, x)| m + x)
            .collect()
    }
}

/// Applies the calibration map to every draw.
pub fn calibrate_sample(draws: &RowMatrix, map: &CalibrationMap) -> Result<RowMatrix> {
    if draws.cols() != map.theta_map.len() {
        return Err(ErgmError::DimensionMismatch {
            expected: map.theta_map.len(),
            found: draws.cols(),
        });
    }
    let mut out = RowMatrix::with_capacity(draws.rows(), draws.cols());
    for row in draws.iter_rows() {
        out.push(&map.apply(row));
    }
    Ok(out)
}

/// Everything produced by a calibration run.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub estimate: MapEstimate,
    pub map: CalibrationMap,
    pub pseudo_draws: RowMatrix,
    pub draws: RowMatrix,
}

/// Pseudo-posterior sampling followed by calibration.
pub fn calibrate<P: LogPrior>(
    y: &Graph,
    spec: &ModelSpec,
    prior: &P,
    control: &CalibrateControl,
) -> Result<Calibration> {
    let estimate = estimate_map_and_hessians(y, spec, prior, control)?;
    let map = CalibrationMap::from_estimate(&estimate)?;
    let design = DyadDesign::build(y, spec)?;
    let seed = {
        let mut rng = stream_rng(control.seed, STREAM_PSEUDO_MCMC);
        rng.random::<u64>()
    };
    let pseudo_draws = rw_metropolis(&design, prior, &estimate.pseudo, control.mcmc, seed)?;
    let draws = calibrate_sample(&pseudo_draws, &map)?;
    Ok(Calibration {
        estimate,
        map,
        pseudo_draws,
        draws,
    })
}

//! Posterior-predictive goodness of fit on degree, geodesic-distance and
//! edgewise-shared-partner distributions.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{ErgmError, Result};
use crate::exchange::PosteriorSample;
use crate::graph::Graph;
use crate::matrix::RowMatrix;
use crate::rng::stream_rng;
use crate::sampler::{NetworkSampler, Proposal};
use crate::summary::{quantile, sorted_copy};
use crate::terms::ModelSpec;

/// Histogram truncation limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GofBins {
    /// Degrees `0..n_deg`.
    pub n_deg: usize,
    /// Distances `1..=n_dist`, followed by an unreachable column.
    pub n_dist: usize,
    /// Shared-partner counts `0..n_esp`.
    pub n_esp: usize,
}

impl Default for GofBins {
    fn default() -> Self {
        GofBins {
            n_deg: 14,
            n_dist: 15,
            n_esp: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GofControl {
    pub nsim: usize,
    pub aux_iters: usize,
    pub bins: GofBins,
    pub proposal: Proposal,
    pub seed: u64,
}

impl Default for GofControl {
    fn default() -> Self {
        GofControl {
            nsim: 100,
            aux_iters: 20_000,
            bins: GofBins::default(),
            proposal: Proposal::UniformDyad,
            seed: 0,
        }
    }
}

/// Which structural distribution a table describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GofStatistic {
    Degree,
    Geodesic,
    Esp,
}

impl GofStatistic {
    pub const ALL: [GofStatistic; 3] = [
        GofStatistic::Degree,
        GofStatistic::Geodesic,
        GofStatistic::Esp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GofStatistic::Degree => "degree",
            GofStatistic::Geodesic => "geodesic",
            GofStatistic::Esp => "esp",
        }
    }
}

/// Observed and replicated histograms for one statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct GofTable {
    pub statistic: GofStatistic,
    /// Bin labels: the degree, distance or shared-partner count, or `inf`
    /// for unreachable pairs.
    pub labels: Vec<String>,
    pub observed: Vec<f64>,
    /// One row per replicate.
    pub replicated: RowMatrix,
}

impl GofTable {
    /// Per-bin quantile of the replicated values.
    pub fn quantiles(&self, p: f64) -> Vec<f64> {
        (0..self.observed.len())
            .map(|c| quantile(&sorted_copy(&self.replicated.column(c)), p))
            .collect()
    }

    /// Fraction of bins, among those where the observed value or the upper
    /// band is nonzero, with the observed value inside the `[lo, hi]`
    /// quantile band. `None` when every bin is empty.
    pub fn coverage(&self, lo: f64, hi: f64) -> Option<f64> {
        let lower = self.quantiles(lo);
        let upper = self.quantiles(hi);
        let mut inside = 0usize;
        let mut counted = 0usize;
        for ((obs, l), u) in self.observed.iter().zip(&lower).zip(&upper) {
            if *obs == 0.0 && *u == 0.0 {
                continue;
            }
            counted += 1;
            if l <= obs && obs <= u {
                inside += 1;
            }
        }
        (counted > 0).then(|| inside as f64 / counted as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GofResult {
    pub bins: GofBins,
    pub degree: GofTable,
    pub geodesic: GofTable,
    pub esp: GofTable,
}

impl GofResult {
    pub fn tables(&self) -> [&GofTable; 3] {
        [&self.degree, &self.geodesic, &self.esp]
    }
}

fn truncate(counts: &[u64], bins: usize) -> Vec<f64> {
    (0..bins)
        .map(|k| counts.get(k).map_or(0.0, |&c| c as f64))
        .collect()
}

/// The three truncated histograms of a network, in table order.
pub fn gof_histograms(g: &Graph, bins: &GofBins) -> Result<[Vec<f64>; 3]> {
    let degree = truncate(&g.degree_histogram(), bins.n_deg);
    let geo = g.geodesic_histogram()?;
    let mut geodesic: Vec<f64> = (1..=bins.n_dist).map(|d| geo.at(d) as f64).collect();
    geodesic.push(geo.unreachable as f64);
    let esp = truncate(&g.esp_histogram()?, bins.n_esp);
    Ok([degree, geodesic, esp])
}

fn labels(stat: GofStatistic, bins: &GofBins) -> Vec<String> {
    match stat {
        GofStatistic::Degree => (0..bins.n_deg).map(|k| k.to_string()).collect(),
        GofStatistic::Geodesic => (1..=bins.n_dist)
            .map(|k| k.to_string())
            .chain(std::iter::once("inf".to_string()))
            .collect(),
        GofStatistic::Esp => (0..bins.n_esp).map(|k| k.to_string()).collect(),
    }
}

/// Simulates `nsim` networks, each from `y` at a parameter drawn uniformly
/// with replacement from the pooled posterior draws, and collects their
/// histograms. Replicate `r` uses its own random stream, so results do not
/// depend on the number of threads.
pub fn run_gof(
    y: &Graph,
    spec: &ModelSpec,
    posterior: &PosteriorSample,
    control: &GofControl,
) -> Result<GofResult> {
    if posterior.is_empty() {
        return Err(ErgmError::EmptySample);
    }
    spec.check_dim(posterior.dim())?;
    let bins = control.bins;
    if bins.n_deg == 0 || bins.n_dist == 0 || bins.n_esp == 0 {
        return Err(ErgmError::InvalidBins(format!(
            "bin limits must be positive, got degree {}, distance {}, esp {}",
            bins.n_deg, bins.n_dist, bins.n_esp
        )));
    }
    if control.nsim == 0 || control.aux_iters == 0 {
        return Err(ErgmError::InvalidControl(
            "nsim and aux_iters must be at least 1".into(),
        ));
    }
    let observed = gof_histograms(y, &bins)?;
    // Binds the model once to surface attribute errors before the fan-out.
    let template =
        NetworkSampler::new(y.clone(), spec, posterior.pooled().row(0), control.proposal)?;
    let pooled = posterior.pooled();

    let replicates = (0..control.nsim)
        .into_par_iter()
        .map_init(
            || template.clone(),
            |sampler, r| {
                let mut rng = stream_rng(control.seed, r as u64);
                let theta = pooled.row(rng.random_range(0..pooled.rows()));
                sampler.reset(y, theta);
                sampler.run(control.aux_iters, &mut rng);
                gof_histograms(sampler.graph(), &bins)
            },
        )
        .collect::<Result<Vec<_>>>()?;

    let [deg, geo, esp] = observed;
    let table = |stat: GofStatistic, obs: Vec<f64>, idx: usize| {
        let mut replicated = RowMatrix::with_capacity(control.nsim, obs.len());
        for rep in &replicates {
            replicated.push(&rep[idx]);
        }
        GofTable {
            statistic: stat,
            labels: labels(stat, &bins),
            observed: obs,
            replicated,
        }
    };
    Ok(GofResult {
        bins,
        degree: table(GofStatistic::Degree, deg, 0),
        geodesic: table(GofStatistic::Geodesic, geo, 1),
        esp: table(GofStatistic::Esp, esp, 2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::ModelTerm;

    fn point_mass(theta: &[f64]) -> PosteriorSample {
        PosteriorSample::new(1, 1, RowMatrix::from_rows(theta.len(), &[theta])).unwrap()
    }

    fn binomial_pmf(n: u64, p: f64, k: u64) -> f64 {
        let mut c = 1.0;
        for i in 0..k {
            c *= (n - i) as f64 / (i + 1) as f64;
        }
        c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
    }

    #[test]
    fn degree_law_under_dyad_independence() {
        let y = Graph::from_edge_list(8, &[(0, 1), (2, 3)], false, None).unwrap();
        let spec = ModelSpec::new(vec![ModelTerm::Edges]).unwrap();
        let theta = -0.4f64;
        let control = GofControl {
            nsim: 2000,
            aux_iters: 500,
            bins: GofBins {
                n_deg: 8,
                n_dist: 7,
                n_esp: 7,
            },
            seed: 3,
            ..Default::default()
        };
        let res = run_gof(&y, &spec, &point_mass(&[theta]), &control).unwrap();
        let p = 1.0 / (1.0 + (-theta).exp());
        let means = res.degree.replicated.column_means();
        for k in 0..8u64 {
            let expected = 8.0 * binomial_pmf(7, p, k);
            // Eight correlated degree indicators per network; a loose
            // per-node variance bound keeps the check honest.
            let se = (8.0 * 8.0 * binomial_pmf(7, p, k) / 2000.0).sqrt();
            assert!(
                (means[k as usize] - expected).abs() < 4.0 * se + 1e-9,
                "degree {k}: {} vs {expected}",
                means[k as usize]
            );
        }
    }

    #[test]
    fn row_sums_and_shapes() {
        let y = crate::testutil::random_graph(9, 12, 1);
        let spec = ModelSpec::new(vec![ModelTerm::Edges, ModelTerm::GwEsp(0.5)]).unwrap();
        let control = GofControl {
            nsim: 25,
            aux_iters: 400,
            bins: GofBins {
                n_deg: 9,
                n_dist: 8,
                n_esp: 8,
            },
            seed: 4,
            ..Default::default()
        };
        let res = run_gof(&y, &spec, &point_mass(&[-0.8, 0.3]), &control).unwrap();
        for t in res.tables() {
            assert_eq!(t.replicated.rows(), 25);
            assert_eq!(t.replicated.cols(), t.labels.len());
        }
        for r in 0..25 {
            let deg: f64 = res.degree.replicated.row(r).iter().sum();
            assert_eq!(deg, 9.0);
            let geo: f64 = res.geodesic.replicated.row(r).iter().sum();
            assert_eq!(geo, 36.0);
            // Edge count from the degree histogram: half the degree sum.
            let edges: f64 = res
                .degree
                .replicated
                .row(r)
                .iter()
                .enumerate()
                .map(|(k, c)| k as f64 * c)
                .sum::<f64>()
                / 2.0;
            let esp: f64 = res.esp.replicated.row(r).iter().sum();
            assert_eq!(esp, edges);
        }
        assert_eq!(res.observed_sum(), (9.0, 36.0, 12.0));
        assert_eq!(res.geodesic.labels.last().unwrap(), "inf");
    }

    impl GofResult {
        fn observed_sum(&self) -> (f64, f64, f64) {
            let s = |t: &GofTable| t.observed.iter().sum();
            (s(&self.degree), s(&self.geodesic), s(&self.esp))
        }
    }

    #[test]
    fn single_replicate_and_determinism() {
        let y = crate::testutil::random_graph(7, 8, 2);
        let spec = ModelSpec::new(vec![ModelTerm::Edges]).unwrap();
        let draws = RowMatrix::from_rows(1, &[[-1.0], [-0.5], [0.0]]);
        let post = PosteriorSample::new(3, 1, draws).unwrap();
        let control = GofControl {
            nsim: 1,
            aux_iters: 100,
            ..Default::default()
        };
        let one = run_gof(&y, &spec, &post, &control).unwrap();
        assert!(one.tables().iter().all(|t| t.replicated.rows() == 1));
        let control = GofControl {
            nsim: 40,
            ..control
        };
        let a = run_gof(&y, &spec, &post, &control).unwrap();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = single.install(|| run_gof(&y, &spec, &post, &control).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn truncation_and_padding() {
        let star = Graph::from_edge_list(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)], false, None)
            .unwrap();
        let bins = GofBins {
            n_deg: 3,
            n_dist: 4,
            n_esp: 3,
        };
        let [deg, geo, esp] = gof_histograms(&star, &bins).unwrap();
        assert_eq!(deg, vec![0.0, 5.0, 0.0]);
        assert_eq!(geo, vec![5.0, 10.0, 0.0, 0.0, 0.0]);
        assert_eq!(esp, vec![5.0, 0.0, 0.0]);
    }

    #[test]
    fn coverage_counts_non_empty_bins() {
        let replicated =
            RowMatrix::from_rows(3, &[[0.0, 1.0, 5.0], [0.0, 2.0, 6.0], [0.0, 3.0, 7.0]]);
        let t = GofTable {
            statistic: GofStatistic::Degree,
            labels: vec!["0".into(), "1".into(), "2".into()],
            observed: vec![0.0, 2.0, 9.0],
            replicated,
        };
        assert_eq!(t.coverage(0.05, 0.95), Some(0.5));
    }

    #[test]
    fn rejects_bad_input() {
        let y = Graph::from_edge_list(5, &[(0, 1)], false, None).unwrap();
        let spec = ModelSpec::new(vec![ModelTerm::Edges]).unwrap();
        let bad_bins = GofControl {
            bins: GofBins {
                n_deg: 0,
                ..Default::default()
            },
            ..Default::default()
        };
        assert!(matches!(
            run_gof(&y, &spec, &point_mass(&[0.0]), &bad_bins),
            Err(ErgmError::InvalidBins(_))
        ));
        let empty = PosteriorSample::new(0, 0, RowMatrix::new(1)).unwrap();
        assert!(matches!(
            run_gof(&y, &spec, &empty, &GofControl::default()),
            Err(ErgmError::EmptySample)
        ));
    }
}

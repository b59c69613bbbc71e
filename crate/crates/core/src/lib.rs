//! Bayesian inference for exponential random graph models.
//!
//! The crate covers the whole workflow: evaluating model statistics on a
//! network, simulating networks by dyad-toggle Metropolis, sampling the
//! posterior with the approximate exchange algorithm, a calibrated
//! pseudo-posterior as a fast alternative, posterior-predictive goodness of
//! fit, and brute-force ground truth on tiny graphs for testing.

pub mod error;
pub mod exact;
pub mod exchange;
pub mod formula;
pub mod gof;
pub mod graph;
pub mod io;
pub mod matrix;
pub mod prior;
pub mod pseudo;
pub mod rng;
pub mod sampler;
pub mod summary;
pub mod terms;

#[cfg(test)]
mod testutil;

pub use error::{ErgmError, Result};
pub use exact::{
    exact_log_z, exact_posterior_grid, ExactEnumeration, ExactPosteriorGrid, GridSpec,
};
pub use exchange::{
    ads_propose, exchange_log_alpha, run_exchange, ExchangeControl, PosteriorSample,
};
pub use formula::{parse_formula, FormulaError};
pub use gof::{gof_histograms, run_gof, GofBins, GofControl, GofResult, GofStatistic, GofTable};
pub use graph::{Attribute, AttributeTable, GeodesicHistogram, Graph};
pub use matrix::RowMatrix;
pub use prior::{FlatPrior, LogPrior, PriorSpec};
pub use pseudo::{
    calibrate, calibrate_sample, estimate_map_and_hessians, fit_mple, pseudo_loglik,
    sample_pseudo_posterior, CalibrateControl, Calibration, CalibrationMap, DyadDesign,
    MapEstimate, PseudoFit,
};
pub use sampler::{
    simulate_network, simulate_stats, simulate_stats_with, NetworkSampler, Proposal, SimControl,
    StatsMatrix,
};
pub use summary::{
    batch_means_se, kde, naive_se, quantile, summarize, summarize_values, ParamSummary,
    SummaryTable, SUMMARY_PROBS,
};
pub use terms::{change_stats, compute_stats, BoundModel, ModelSpec, ModelTerm, StatVector};

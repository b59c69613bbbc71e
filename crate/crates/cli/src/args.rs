use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ergm_core::Proposal;
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "ergm",
    version,
    about = "Bayesian inference for exponential random graph models"
)]
pub struct Cli {
    /// Worker threads; 0 uses one per core. Output does not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output directory.
    #[arg(long, global = true, env = "ERGM_OUT_DIR", default_value = "ergm-out")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Sample the posterior with the exchange algorithm.
    Fit(FitArgs),
    /// Sample the calibrated pseudo-posterior.
    Calibrate(CalibrateArgs),
    /// Posterior-predictive goodness of fit for a draws table.
    Gof(GofArgs),
    /// Simulate networks at a fixed parameter.
    Simulate(SimulateArgs),
    /// Summarize a draws table.
    Summary(SummaryArgs),
    /// Convert CSV edge and vertex tables to the native formats.
    Import(ImportArgs),
    /// Brute-force computations on tiny networks, for testing.
    #[command(subcommand)]
    Dev(DevCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProposalArg {
    /// Every dyad equally likely.
    Uniform,
    /// Edges and empty dyads proposed half the time each.
    TieNoTie,
}

impl From<ProposalArg> for Proposal {
    fn from(p: ProposalArg) -> Self {
        match p {
            ProposalArg::Uniform => Proposal::UniformDyad,
            ProposalArg::TieNoTie => Proposal::TieNoTie,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    /// Edge-list file.
    #[arg(long)]
    pub network: PathBuf,
    /// Node attribute table.
    #[arg(long)]
    pub attrs: Option<PathBuf>,
    /// Model formula, e.g. "edges + nodematch(Grade) + gwesp(0.2, fixed = TRUE)".
    #[arg(long)]
    pub model: String,
    #[arg(long, value_enum, default_value_t = ProposalArg::Uniform)]
    pub proposal: ProposalArg,
}

#[derive(Debug, Args, Serialize)]
pub struct PriorArgs {
    /// Prior mean: one value for every parameter or a comma-separated list.
    #[arg(
        long,
        default_value = "0",
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    pub prior_mean: Vec<f64>,
    /// Prior standard deviation, in the same form.
    #[arg(long, default_value = "10", value_delimiter = ',')]
    pub prior_sd: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[arg(long, default_value_t = 300)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 2000)]
    pub main_iters: usize,
    #[arg(long, default_value_t = 20_000)]
    pub aux_iters: usize,
    #[arg(long, default_value_t = 6)]
    pub nchains: usize,
    #[arg(long, default_value_t = 0.6)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.0125)]
    pub sigma_epsilon: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    /// Stochastic-approximation iterations.
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    #[arg(long, default_value_t = 20_000)]
    pub aux_iters: usize,
    /// Simulated networks per gradient estimate.
    #[arg(long, default_value_t = 100)]
    pub noisy_nsim: usize,
    /// Toggles between those networks.
    #[arg(long, default_value_t = 1000)]
    pub noisy_thin: usize,
    /// Pseudo-posterior draws.
    #[arg(long, default_value_t = 10_000)]
    pub mcmc: usize,
    /// Simulated networks for the Hessian at the mode.
    #[arg(long, default_value_t = 1000)]
    pub hessian_nsim: usize,
    #[arg(long, default_value_t = 10.0)]
    pub step_scale: f64,
    #[arg(long, default_value_t = 10.0)]
    pub step_offset: f64,
    /// Largest mean final step, in pseudo-posterior standard deviations.
    #[arg(long, default_value_t = 0.5)]
    pub tolerance: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct GofArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub draws: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub nsim: usize,
    #[arg(long, default_value_t = 20_000)]
    pub aux_iters: usize,
    #[arg(long, default_value_t = 14)]
    pub n_deg: usize,
    #[arg(long, default_value_t = 15)]
    pub n_dist: usize,
    #[arg(long, default_value_t = 10)]
    pub n_esp: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Starting network; its attributes are used by the model.
    #[command(flatten)]
    pub model: ModelArgs,
    /// Parameter vector, comma-separated.
    #[arg(
        long,
        value_delimiter = ',',
        allow_negative_numbers = true,
        required = true
    )]
    pub theta: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub nsim: usize,
    /// Toggles before the first network.
    #[arg(long, default_value_t = 20_000)]
    pub aux_iters: usize,
    /// Toggles between networks.
    #[arg(long, default_value_t = 1000)]
    pub thin: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SummaryArgs {
    #[arg(long)]
    pub draws: PathBuf,
    /// Formula whose term labels name the columns.
    #[arg(long)]
    pub model: Option<String>,
    /// Also write trace and density plots to the output directory.
    #[arg(long)]
    pub plots: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct ImportArgs {
    /// CSV with one edge per row in its first two columns.
    #[arg(long)]
    pub edges: PathBuf,
    /// CSV of node attributes, one row per node, with a header.
    #[arg(long)]
    pub vertices: Option<PathBuf>,
    /// Vertex column holding the ids used in the edge table. Without it,
    /// edges refer to vertex rows by number.
    #[arg(long)]
    pub id_column: Option<String>,
    /// Number of the first vertex when edges use row numbers.
    #[arg(long, default_value_t = 1)]
    pub index_base: usize,
    /// Node count when there is no vertex table.
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub directed: bool,
    /// Base name of the written files.
    #[arg(long, default_value = "network")]
    pub name: String,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DevCommand {
    /// Exact log normalising constant by enumeration.
    ExactLogz {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        attrs: Option<PathBuf>,
        #[arg(long)]
        model: String,
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            required = true
        )]
        theta: Vec<f64>,
    },
    /// Exact posterior moments on a parameter grid.
    ExactPosterior {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        attrs: Option<PathBuf>,
        #[arg(long)]
        model: String,
        #[command(flatten)]
        prior: PriorArgs,
        #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
        lower: f64,
        #[arg(long, default_value_t = 10.0)]
        upper: f64,
        /// Grid points per dimension.
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
}

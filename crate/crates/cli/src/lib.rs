//! Command-line front end: argument parsing, file plumbing and plots around
//! `ergm-core`.

pub mod args;
mod import;
pub mod svg;

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::Parser;
use ergm_core::io::{read_draws, read_edge_list, read_network, write_draws, write_edge_list};
use ergm_core::{
    calibrate, exact_log_z, exact_posterior_grid, parse_formula, run_exchange, run_gof, summarize,
    CalibrateControl, ExchangeControl, GofBins, GofControl, GofTable, Graph, GridSpec, ModelSpec,
    PosteriorSample, PriorSpec, SimControl,
};
use serde::Serialize;

pub use args::Cli;
use args::{
    CalibrateArgs, Command, DevCommand, FitArgs, GofArgs, ModelArgs, PriorArgs, SimulateArgs,
    SummaryArgs,
};

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    run_cli(&cli)
}

pub fn run_cli(cli: &Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .context("building the thread pool")?;
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Fit(a) => fit(cli, a),
        Command::Calibrate(a) => calibrate_cmd(cli, a),
        Command::Gof(a) => gof(cli, a),
        Command::Simulate(a) => simulate(cli, a),
        Command::Summary(a) => summary(cli, a),
        Command::Import(a) => {
            import::run(a, &cli.out)?;
            write_metadata(cli)
        }
        Command::Dev(d) => dev(d),
    }
}

#[derive(Serialize)]
struct RunRecord<'a> {
    program: &'static str,
    version: &'static str,
    #[serde(flatten)]
    cli: &'a Cli,
}

fn write_metadata(cli: &Cli) -> Result<()> {
    let record = RunRecord {
        program: "ergm",
        version: env!("CARGO_PKG_VERSION"),
        cli,
    };
    let mut text = serde_json::to_string_pretty(&record)?;
    text.push('\n');
    write_file(&cli.out, "run.json", text.as_bytes())
}

/// Prints to standard output; a closed pipe (as in `ergm summary | head`)
/// is not an error.
pub(crate) fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_with(dir: &Path, name: &str, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let file = fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
    let mut out = BufWriter::new(file);
    f(&mut out)?;
    out.flush()?;
    Ok(())
}

fn load_model(m: &ModelArgs) -> Result<(Graph, ModelSpec)> {
    let graph = read_network(&m.network, m.attrs.as_deref())
        .with_context(|| format!("reading network {}", m.network.display()))?;
    let spec = parse_formula(&m.model).with_context(|| format!("parsing model `{}`", m.model))?;
    // Surfaces missing attributes and directed input before any sampling.
    ergm_core::compute_stats(&graph, &spec)?;
    Ok((graph, spec))
}

fn broadcast(values: &[f64], dim: usize, what: &str) -> Result<Vec<f64>> {
    match values.len() {
        1 => Ok(vec![values[0]; dim]),
        n if n == dim => Ok(values.to_vec()),
        n => bail!("{what} has {n} values for a model with {dim} parameters"),
    }
}

fn build_prior(p: &PriorArgs, dim: usize) -> Result<PriorSpec> {
    let mean = broadcast(&p.prior_mean, dim, "--prior-mean")?;
    let sd = broadcast(&p.prior_sd, dim, "--prior-sd")?;
    Ok(PriorSpec::diagonal(mean, &sd)?)
}

fn write_sample_outputs(cli: &Cli, sample: &PosteriorSample, labels: &[String]) -> Result<()> {
    write_with(&cli.out, "draws.tsv", |w| Ok(write_draws(sample, w)?))?;
    let table = summarize(sample, labels)?;
    write_file(&cli.out, "summary.txt", table.to_string().as_bytes())?;
    write_file(
        &cli.out,
        "trace.svg",
        svg::trace_plot(sample, labels).as_bytes(),
    )?;
    write_file(
        &cli.out,
        "density.svg",
        svg::density_plot(sample, labels).as_bytes(),
    )?;
    emit(&table.to_string())
}

fn fit(cli: &Cli, a: &FitArgs) -> Result<()> {
    let (graph, spec) = load_model(&a.model)?;
    let prior = build_prior(&a.prior, spec.dim())?;
    let control = ExchangeControl {
        burn_in: a.burn_in,
        main_iters: a.main_iters,
        aux_iters: a.aux_iters,
        nchains: a.nchains,
        gamma: a.gamma,
        sigma_epsilon: a.sigma_epsilon,
        proposal: a.model.proposal.into(),
        seed: cli.seed,
        start: None,
    };
    let sample = run_exchange(&graph, &spec, &prior, &control)?;
    write_metadata(cli)?;
    write_sample_outputs(cli, &sample, &spec.labels())
}

fn calibrate_cmd(cli: &Cli, a: &CalibrateArgs) -> Result<()> {
    let (graph, spec) = load_model(&a.model)?;
    let prior = build_prior(&a.prior, spec.dim())?;
    let control = CalibrateControl {
        iters: a.iters,
        aux_iters: a.aux_iters,
        noisy_nsim: a.noisy_nsim,
        noisy_thin: a.noisy_thin,
        mcmc: a.mcmc,
        hessian_nsim: a.hessian_nsim,
        step_scale: a.step_scale,
        step_offset: a.step_offset,
        tolerance: a.tolerance,
        proposal: a.model.proposal.into(),
        seed: cli.seed,
    };
    let result = calibrate(&graph, &spec, &prior, &control)?;
    let labels = spec.labels();
    write_metadata(cli)?;
    let pseudo = PosteriorSample::new(1, a.mcmc, result.pseudo_draws)?;
    write_with(&cli.out, "pseudo_draws.tsv", |w| {
        Ok(write_draws(&pseudo, w)?)
    })?;
    write_with(&cli.out, "calibration.tsv", |w| {
        let d = labels.len();
        write!(w, "parameter\ttheta_pl\ttheta_map")?;
        for k in 1..=d {
            write!(w, "\tv_{k}")?;
        }
        writeln!(w)?;
        for (r, label) in labels.iter().enumerate() {
            write!(
                w,
                "{label}\t{}\t{}",
                result.map.theta_pl[r], result.map.theta_map[r]
            )?;
            for c in 0..d {
                write!(w, "\t{}", result.map.v[(r, c)])?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    let sample = PosteriorSample::new(1, a.mcmc, result.draws)?;
    write_sample_outputs(cli, &sample, &labels)
}

fn write_gof_table(cli: &Cli, table: &GofTable) -> Result<()> {
    let lo = table.quantiles(0.05);
    let mid = table.quantiles(0.5);
    let hi = table.quantiles(0.95);
    let mean = table.replicated.column_means();
    write_with(
        &cli.out,
        &format!("gof_{}.tsv", table.statistic.name()),
        |w| {
            writeln!(w, "bin\tobserved\tq05\tmedian\tq95\tmean")?;
            for b in 0..table.observed.len() {
                writeln!(
                    w,
                    "{}\t{}\t{}\t{}\t{}\t{}",
                    table.labels[b], table.observed[b], lo[b], mid[b], hi[b], mean[b]
                )?;
            }
            Ok(())
        },
    )
}

fn gof(cli: &Cli, a: &GofArgs) -> Result<()> {
    let (graph, spec) = load_model(&a.model)?;
    let posterior =
        read_draws(&a.draws).with_context(|| format!("reading draws {}", a.draws.display()))?;
    let control = GofControl {
        nsim: a.nsim,
        aux_iters: a.aux_iters,
        bins: GofBins {
            n_deg: a.n_deg,
            n_dist: a.n_dist,
            n_esp: a.n_esp,
        },
        proposal: a.model.proposal.into(),
        seed: cli.seed,
    };
    let result = run_gof(&graph, &spec, &posterior, &control)?;
    write_metadata(cli)?;
    for table in result.tables() {
        write_gof_table(cli, table)?;
        if let Some(c) = table.coverage(0.05, 0.95) {
            emit(&format!(
                "{:<9} observed inside the 5-95% band in {:.0}% of non-empty bins\n",
                table.statistic.name(),
                100.0 * c
            ))?;
        }
    }
    write_file(&cli.out, "gof.svg", svg::gof_plot(&result).as_bytes())
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Result<()> {
    let (graph, spec) = load_model(&a.model)?;
    if a.theta.len() != spec.dim() {
        bail!(
            "--theta has {} values for a model with {} parameters",
            a.theta.len(),
            spec.dim()
        );
    }
    let control = SimControl {
        aux_iters: a.aux_iters,
        thin: a.thin,
        seed: cli.seed,
        proposal: a.model.proposal.into(),
    };
    let networks = simulate_networks(&graph, &spec, &a.theta, a.nsim, &control)?;
    write_metadata(cli)?;
    write_with(&cli.out, "stats.tsv", |w| {
        writeln!(w, "sim\t{}", spec.labels().join("\t"))?;
        for (r, net) in networks.iter().enumerate() {
            write!(w, "{}", r + 1)?;
            for v in ergm_core::compute_stats(net, &spec)?.iter() {
                write!(w, "\t{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    let dir = cli.out.join("networks");
    for (r, net) in networks.iter().enumerate() {
        write_with(&dir, &format!("sim_{:04}.edges", r + 1), |w| {
            Ok(write_edge_list(net, w)?)
        })?;
    }
    Ok(())
}

/// The networks behind `simulate_stats`: same stream, same draws.
fn simulate_networks(
    start: &Graph,
    spec: &ModelSpec,
    theta: &[f64],
    nsim: usize,
    control: &SimControl,
) -> Result<Vec<Graph>> {
    let mut rng = ergm_core::rng::stream_rng(control.seed, 0);
    let mut sampler = ergm_core::NetworkSampler::new(start.clone(), spec, theta, control.proposal)?;
    let mut out = Vec::with_capacity(nsim);
    sampler.run(control.aux_iters, &mut rng);
    out.push(sampler.graph().clone());
    for _ in 1..nsim {
        sampler.run(control.thin, &mut rng);
        out.push(sampler.graph().clone());
    }
    Ok(out)
}

fn summary(cli: &Cli, a: &SummaryArgs) -> Result<()> {
    let sample =
        read_draws(&a.draws).with_context(|| format!("reading draws {}", a.draws.display()))?;
    let labels = match &a.model {
        Some(text) => {
            let spec = parse_formula(text)?;
            if spec.dim() != sample.dim() {
                bail!(
                    "model has {} parameters but the draws have {} columns",
                    spec.dim(),
                    sample.dim()
                );
            }
            spec.labels()
        }
        None => vec![String::new(); sample.dim()],
    };
    let table = summarize(&sample, &labels)?;
    emit(&table.to_string())?;
    if a.plots {
        let names: Vec<String> = table.params.iter().map(|p| p.label.clone()).collect();
        write_metadata(cli)?;
        write_file(
            &cli.out,
            "trace.svg",
            svg::trace_plot(&sample, &names).as_bytes(),
        )?;
        write_file(
            &cli.out,
            "density.svg",
            svg::density_plot(&sample, &names).as_bytes(),
        )?;
    }
    Ok(())
}

fn dev(cmd: &DevCommand) -> Result<()> {
    match cmd {
        DevCommand::ExactLogz {
            nodes,
            attrs,
            model,
            theta,
        } => {
            let mut g = Graph::empty(*nodes, false);
            if let Some(path) = attrs {
                for (name, attr) in ergm_core::io::read_attributes(path, *nodes)? {
                    g.set_attribute(name, attr)?;
                }
            }
            let spec = parse_formula(model)?;
            emit(&format!("{}\n", exact_log_z(&g, &spec, theta)?))?;
        }
        DevCommand::ExactPosterior {
            network,
            attrs,
            model,
            prior,
            lower,
            upper,
            points,
        } => {
            let g = match attrs {
                Some(_) => read_network(network, attrs.as_deref())?,
                None => read_edge_list(network)?,
            };
            let spec = parse_formula(model)?;
            let prior = build_prior(prior, spec.dim())?;
            let grid = exact_posterior_grid(
                &g,
                &spec,
                &prior,
                &GridSpec::cube(spec.dim(), *lower, *upper, *points),
            )?;
            let mut text = String::from("parameter\tmean\tsd\n");
            for ((label, m), s) in spec.labels().iter().zip(grid.mean()).zip(grid.sd()) {
                text.push_str(&format!("{label}\t{m}\t{s}\n"));
            }
            emit(&text)?;
        }
    }
    Ok(())
}

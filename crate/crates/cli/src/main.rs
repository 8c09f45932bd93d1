//! `mixev`: evidence estimation for univariate Gaussian mixtures.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mixture_evidence::estimators::Method;
use mixture_evidence::gibbs::write_chain_csv;
use mixture_evidence::harness::{
    run_experiment, write_dataset, write_outputs, DatasetSource, ExperimentConfig, PriorChoice,
    Replicate,
};
use mixture_evidence::Exec;

#[derive(Parser)]
#[command(
    name = "mixev",
    version,
    about = "Evidence estimation for univariate Gaussian mixtures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a simulated dataset, one value per line.
    Simulate(Opts),
    /// Run the Gibbs sampler and export the chain as CSV.
    Gibbs(Opts),
    /// Run one estimator on one replicate and print the estimate as JSON.
    Estimate {
        #[arg(long, value_name = "NAME")]
        estimator: Method,
        #[command(flatten)]
        opts: Opts,
    },
    /// Run the full replicated comparison and write the result tables.
    Compare(Opts),
    /// Report per-permutation contributions, the truncated subset and its workload gain.
    Calibrate(Opts),
}

/// Flags shared by every subcommand. Each one overrides the config file.
#[derive(Args, Clone, Default)]
struct Opts {
    /// JSON config document.
    #[arg(long)]
    config: Option<PathBuf>,
    /// d1, d2, galaxy or a path to a data file.
    #[arg(long)]
    dataset: Option<DatasetSource>,
    /// Sample size for simulated datasets.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    data_seed: Option<u64>,
    #[arg(long)]
    k: Option<usize>,
    /// `fixed:a,b` or `rg`.
    #[arg(long)]
    prior: Option<PriorChoice>,
    /// Comma-separated estimator names.
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<Method>>,
    #[arg(long = "T")]
    t: Option<usize>,
    #[arg(long = "J")]
    j: Option<usize>,
    #[arg(long = "J1")]
    j1: Option<usize>,
    #[arg(long = "M")]
    m: Option<usize>,
    /// Bridge proposal draws.
    #[arg(long = "M1")]
    m1: Option<usize>,
    /// Bridge posterior draws.
    #[arg(long = "M2")]
    m2: Option<usize>,
    /// Gibbs draws mixed into the bridge proposal.
    #[arg(long)]
    bridge_j1: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    burn_in: Option<usize>,
    /// Kept Gibbs draws after burn-in.
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file or directory, depending on the subcommand.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long)]
    threads: Option<usize>,
}

impl Opts {
    /// Resolved config; `only` replaces the estimator list for single-purpose subcommands.
    fn config_for(&self, only: Option<Method>) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)
                .with_context(|| format!("reading {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = self.$field.clone() { c.$field = v; } )* };
        }
        set!(
            dataset, k, prior, estimators, t, j, m, m1, m2, bridge_j1, tau, burn_in, iterations,
            replicates, seed
        );
        if self.n.is_some() {
            c.n = self.n;
        }
        if self.data_seed.is_some() {
            c.data_seed = self.data_seed;
        }
        if self.j1.is_some() {
            c.j1 = self.j1;
        }
        if self.out.is_some() {
            c.out = self.out.clone();
        }
        if let Some(m) = only {
            // the plain ordinate has the same inputs as the k!-scaled one
            c.estimators = vec![if m == Method::ChibPlain {
                Method::ChibStar
            } else {
                m
            }];
        }
        c.validate()?;
        Ok(c)
    }

    fn config(&self) -> Result<ExperimentConfig> {
        self.config_for(None)
    }

    fn exec(&self) -> Result<Exec> {
        match self.threads {
            Some(0) => bail!("--threads must be at least 1"),
            Some(1) => Ok(Exec::Sequential),
            Some(n) => {
                #[cfg(feature = "parallel")]
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()?;
                #[cfg(not(feature = "parallel"))]
                let _ = n;
                Ok(Exec::Parallel)
            }
            None => Ok(Exec::Parallel),
        }
    }
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn simulate(opts: &Opts) -> Result<()> {
    let cfg = opts.config_for(Some(Method::ChibStar))?;
    if matches!(cfg.dataset, DatasetSource::File(_)) {
        bail!("simulate needs a simulated dataset (d1, d2) or galaxy");
    }
    let data = cfg.load_data()?;
    match &cfg.out {
        Some(p) => write_dataset(&data, p)?,
        None => {
            let mut w = sink(&None)?;
            for x in data.values() {
                writeln!(w, "{x}")?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn gibbs(opts: &Opts) -> Result<()> {
    let cfg = opts.config_for(Some(Method::ChibStar))?;
    let data = cfg.load_data()?;
    let prior = cfg.prior.build(&data)?;
    let rep = Replicate::prepare(&cfg, &data, &prior, 0, opts.exec()?)?;
    write_chain_csv(&rep.chain, &data, &prior, sink(&cfg.out)?)?;
    eprintln!(
        "{} draws, {} label switches, pivot at draw {} (log posterior {:.4})",
        rep.chain.len(),
        rep.chain.switch_count(),
        rep.pivot.index,
        rep.pivot.log_posterior
    );
    Ok(())
}

fn estimate(method: Method, opts: &Opts) -> Result<()> {
    let cfg = opts.config_for(Some(method))?;
    let data = cfg.load_data()?;
    let prior = cfg.prior.build(&data)?;
    let rep = Replicate::prepare(&cfg, &data, &prior, 0, opts.exec()?)?;
    let est = rep.run(method)?;
    let mut w = sink(&cfg.out)?;
    serde_json::to_writer_pretty(&mut w, &est)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn compare(opts: &Opts) -> Result<()> {
    let cfg = opts.config()?;
    let record = run_experiment(&cfg, opts.exec()?)?;
    let dir = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("mixev-out"));
    write_outputs(&record, &dir)?;
    println!(
        "{:<10} {:>12} {:>10} {:>10} {:>8}",
        "estimator", "log E mean", "sd", "R median", "fails"
    );
    for s in &record.summary {
        println!(
            "{:<10} {:>12.4} {:>10.4} {:>10.4} {:>8}",
            s.method.to_string(),
            s.log_evidence_mean,
            s.log_evidence_sd,
            s.r_median,
            s.failures
        );
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn calibrate(opts: &Opts) -> Result<()> {
    let cfg = opts.config_for(Some(Method::DsApprox))?;
    let data = cfg.load_data()?;
    let prior = cfg.prior.build(&data)?;
    let exec = opts.exec()?;
    let mut reports = Vec::new();
    for r in 0..cfg.replicates {
        let rep = Replicate::prepare(&cfg, &data, &prior, r, exec)?;
        let est = rep.run(Method::DsApprox)?;
        let c = est
            .contributions
            .context("truncated estimator returned no calibration report")?;
        println!(
            "replicate {r}: |A| = {}, phi_hat = {:e}, delta = {:.4}",
            c.a_size, c.phi_hat, c.delta
        );
        for (p, eta) in c.permutations.iter().zip(&c.eta_bar) {
            println!("  {:?} {eta:.3e}", p.as_slice());
        }
        reports.push(c);
    }
    if let Some(p) = &cfg.out {
        let mut w = sink(&Some(p.clone()))?;
        serde_json::to_writer_pretty(&mut w, &reports)?;
        w.flush()?;
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate(o) => simulate(&o),
        Command::Gibbs(o) => gibbs(&o),
        Command::Estimate { estimator, opts } => estimate(estimator, &opts),
        Command::Compare(o) => compare(&o),
        Command::Calibrate(o) => calibrate(&o),
    }
}

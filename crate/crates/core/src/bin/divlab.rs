use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use divlab::cli::{self, Command, DivergenceChoice, ExperimentConfig};
use divlab::sanov::LdpEstimator;

/// Minimum divergence estimation under weighted sampling.
#[derive(Parser)]
#[command(name = "divlab", version, about, allow_negative_numbers = true)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Divergence functions: tables on an x grid or evaluation on two measures
    Divergence(Flags),
    /// Chernoff transform of a weight law on an x grid
    Chernoff(Flags),
    /// Minimum dual divergence estimate or weighted-sampling MLE
    Estimate(Flags),
    /// Sanov rates, sandwich certificates, conditional LDP Monte Carlo
    Sanov(Flags),
    /// Bahadur slopes, efficiency comparisons and empirical trends
    Bahadur(Flags),
    /// Weighted LLN/CLT checks and estimator variance comparison
    Clt(Flags),
}

#[derive(Args)]
struct Flags {
    /// JSON experiment file; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Validate and print the resolved plan without computing
    #[arg(long)]
    dry_run: bool,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Weight law: poisson1, exp1, normal11, twopoint[:p]
    #[arg(long)]
    law: Option<String>,
    /// Cressie-Read index, or "induced"
    #[arg(long, value_parser = parse_gamma)]
    gamma: Option<DivergenceChoice>,
    #[arg(long, value_delimiter = ',')]
    theta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    theta_prime: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    theta_t: Option<Vec<f64>>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<u64>>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    eps_grid: Option<Vec<f64>>,
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// a:b:m
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<f64>>,
    /// One- or two-column CSV of observations (and weights)
    #[arg(long)]
    data: Option<PathBuf>,
    /// unit, column, or a weight-law token
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    functional: Option<String>,
    #[arg(long)]
    statistic: Option<String>,
    #[arg(long, value_parser = parse_estimator)]
    estimator: Option<LdpEstimator>,
    #[arg(long)]
    resample_theta_sample: bool,
    /// Output directory
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_gamma(s: &str) -> Result<DivergenceChoice, String> {
    s.parse().map_err(|e: divlab::Error| e.to_string())
}

fn parse_estimator(s: &str) -> Result<LdpEstimator, String> {
    match s {
        "naive" => Ok(LdpEstimator::Naive),
        "tilted" => Ok(LdpEstimator::Tilted),
        _ => Err(format!("estimator: invalid value {s:?} (expected naive or tilted)")),
    }
}

impl Flags {
    fn into_config(self, command: Command) -> (Option<PathBuf>, bool, ExperimentConfig) {
        let c = ExperimentConfig {
            command: Some(command),
            mode: self.mode,
            model: self.model,
            law: self.law,
            gamma: self.gamma,
            theta: self.theta,
            theta_prime: self.theta_prime,
            theta_t: self.theta_t,
            n: self.n,
            n_grid: self.n_grid,
            epsilon: self.epsilon,
            eps_grid: self.eps_grid,
            cells: self.cells,
            reps: self.reps,
            seed: self.seed,
            grid: self.grid,
            step: self.step,
            p: self.p,
            q: self.q,
            data: self.data,
            weights: self.weights,
            functional: self.functional,
            statistic: self.statistic,
            estimator: self.estimator,
            resample_theta_sample: self.resample_theta_sample.then_some(true),
            output: self.output,
            tolerances: None,
        };
        (self.config, self.dry_run, c)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (command, flags) = match cli.command {
        Sub::Divergence(f) => (Command::Divergence, f),
        Sub::Chernoff(f) => (Command::Chernoff, f),
        Sub::Estimate(f) => (Command::Estimate, f),
        Sub::Sanov(f) => (Command::Sanov, f),
        Sub::Bahadur(f) => (Command::Bahadur, f),
        Sub::Clt(f) => (Command::Clt, f),
    };
    let (file, dry_run, overrides) = flags.into_config(command);
    let started = std::time::Instant::now();
    match cli::run(file.as_deref(), overrides, dry_run) {
        Ok(out) => match emit(&out) {
            Ok(()) => {
                if !dry_run {
                    eprintln!("divlab {}: done in {:.2?}", command.name(), started.elapsed());
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}

fn emit(text: &str) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes()).context("writing to stdout")?;
    out.flush().context("flushing stdout")
}

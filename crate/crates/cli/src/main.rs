use clap::{Args, Parser, Subcommand};
use galqr_cli::commands::{fit_command, simulate, summarize_command, version};
use galqr_cli::config::RunConfig;
use galqr_cli::{CliError, Result};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "galqr", version = version(), about = "Measurement-error corrected functional quantile regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation case and write its metrics table.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Case number (1 to 4).
        #[arg(long)]
        case: Option<u32>,
        /// Monte Carlo replicates per scenario.
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Fit the model to long-format CSV data.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        functional: Option<PathBuf>,
        #[arg(long)]
        scalar: Option<PathBuf>,
        /// Clean minute-level activity data before fitting.
        #[arg(long)]
        preprocess: bool,
    },
    /// Recompute summary tables from the output of `fit`.
    Summarize {
        #[command(flatten)]
        common: Common,
        /// Directory written by `fit`.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Credible level of the intervals.
        #[arg(long)]
        level: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Estimator name; repeat or comma-separate for several.
    #[arg(long, value_delimiter = ',')]
    estimator: Vec<String>,
    /// Quantile level; repeat or comma-separate for several.
    #[arg(long, value_delimiter = ',')]
    tau: Vec<f64>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if !self.estimator.is_empty() {
            cfg.fit.estimators = self.estimator.clone();
        }
        if !self.tau.is_empty() {
            cfg.fit.tau = self.tau.clone();
        }
        if let Some(v) = self.chains {
            cfg.mcmc.chains = v;
        }
        if let Some(v) = self.iters {
            cfg.mcmc.iters = v;
        }
        if let Some(v) = self.burnin {
            cfg.mcmc.burnin = v;
        }
        if let Some(v) = self.thin {
            cfg.mcmc.thin = v;
        }
        if let Some(v) = self.seed {
            cfg.mcmc.seed = v;
            cfg.sim.seed = v;
        }
        if let Some(v) = &self.out_dir {
            cfg.out_dir = v.clone();
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common, case, replicates } => {
            let mut cfg = common.resolve()?;
            if let Some(c) = case {
                cfg.simulate.case = c;
            }
            if let Some(r) = replicates {
                cfg.sim.n_r = r;
            }
            let report = simulate(&cfg)?;
            eprintln!("wrote {} rows to {}", report.rows.len(), cfg.out_dir.display());
        }
        Command::Fit { common, functional, scalar, preprocess } => {
            let mut cfg = common.resolve()?;
            if functional.is_some() {
                cfg.data.functional = functional;
            }
            if scalar.is_some() {
                cfg.data.scalar = scalar;
            }
            if preprocess {
                cfg.preprocess.enabled = true;
            }
            let s = fit_command(&cfg)?;
            eprintln!("wrote {} fits to {}", s.waic.len(), cfg.out_dir.display());
        }
        Command::Summarize { common, input, level } => {
            let mut cfg = common.resolve()?;
            if input.is_some() {
                cfg.data.fit_dir = input;
            }
            if let Some(l) = level {
                cfg.fit.level = l;
            }
            summarize_command(&cfg)?;
            eprintln!("wrote summaries to {}", cfg.out_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit(&e)
        }
    }
}

fn exit(e: &CliError) -> ExitCode {
    ExitCode::from(e.exit_code() as u8)
}

//! The `simulate`, `fit` and `summarize` commands. Each writes its outputs
//! under the configured output directory and is a pure function of the
//! configuration and input files.

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::ingest::read_raw;
use crate::preprocess::{preprocess_activity, PreprocessReport};
use crate::summary::{read_draws, read_loglik, summarize, write_draws, write_loglik, Summary};
use galqr::basis::{default_n_basis, unit_grid, BasisSystem};
use galqr::dataset::FunctionalDataset;
use galqr::sampler::{fit, ChainMeta, EstimatorRegistry, McmcConfig};
use galqr::seed::derive_seed;
use galqr::simlab::{run_case, CaseReport, FitSettings};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

pub const SCALAR_FILE: &str = "summary_scalar.csv";
pub const BANDS_FILE: &str = "summary_bands.csv";
pub const WAIC_FILE: &str = "waic.csv";
pub const RUN_LOG: &str = "run_log.json";

pub fn version() -> &'static str {
    env!("GALQR_VERSION")
}

/// Comment lines carrying the version and the resolved configuration.
pub fn header(cfg: &RunConfig) -> String {
    format!("# galqr {}\n# config: {}\n", version(), cfg.to_json_line())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

#[derive(Serialize)]
struct SimulationOutput<'a> {
    version: &'a str,
    config: &'a RunConfig,
    report: &'a CaseReport,
}

/// Runs one simulation case. The τ levels come from `fit.tau`. When some
/// replicates fail the remaining results are still written and
/// [`CliError::Partial`] is returned.
pub fn simulate(cfg: &RunConfig) -> Result<CaseReport> {
    cfg.validate()?;
    let case = cfg.simulate.case;
    let mut base = cfg.sim.clone();
    base.tau0 = cfg.fit.tau.clone();
    let settings = FitSettings {
        estimators: cfg.fit.estimators.clone(),
        n_basis: cfg.fit.n_basis,
        degree: cfg.fit.degree,
        priors: cfg.priors.clone(),
        mcmc: cfg.mcmc.clone(),
    };
    let report = run_case(case, &base, &settings)?;

    std::fs::create_dir_all(&cfg.out_dir)?;
    let stem = format!("case{case}");
    let mut csv_out = create(&cfg.out_dir, &format!("{stem}.csv"))?;
    std::io::Write::write_all(&mut csv_out, header(cfg).as_bytes())?;
    report.write_csv(&mut csv_out)?;
    let json_out = create(&cfg.out_dir, &format!("{stem}.json"))?;
    serde_json::to_writer_pretty(json_out, &SimulationOutput { version: version(), config: cfg, report: &report })?;

    if !report.is_complete() {
        let total = report.scenarios.iter().map(|s| s.config.n_r).sum();
        return Err(CliError::Partial {
            failed: report.failures.len(),
            total,
            partial: cfg.out_dir.join(format!("{stem}.csv")).display().to_string(),
        });
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub estimator: String,
    pub tau: f64,
    pub draws_file: String,
    pub loglik_file: Option<String>,
    pub n_draws: usize,
    pub chains: Vec<ChainMeta>,
}

/// Everything `summarize` needs to rebuild the summaries from a fit directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub version: String,
    pub config: RunConfig,
    pub n: usize,
    pub j: usize,
    pub p: usize,
    pub subject_ids: Vec<String>,
    /// Fitting grid, rescaled to `[0, 1]`.
    pub grid: Vec<f64>,
    /// Range of the input time axis; band tables are reported on this scale.
    pub time_range: (f64, f64),
    pub n_basis: usize,
    pub degree: usize,
    pub preprocess: Option<PreprocessReport>,
    pub fits: Vec<FitRecord>,
}

/// Reads the configured input files and, if enabled, preprocesses them.
pub fn load_dataset(cfg: &RunConfig) -> Result<(FunctionalDataset, Option<PreprocessReport>)> {
    let functional = cfg.data.functional.as_ref().ok_or_else(|| CliError::Config("data.functional is required".into()))?;
    let scalar = cfg.data.scalar.as_ref().ok_or_else(|| CliError::Config("data.scalar is required".into()))?;
    let raw = read_raw(functional, scalar)?;
    if cfg.preprocess.enabled {
        let (ds, rep) = preprocess_activity(&raw, &cfg.preprocess.options())?;
        Ok((ds, Some(rep)))
    } else {
        Ok((raw.into_dataset()?, None))
    }
}

fn eval_grid(cfg: &RunConfig, grid: &[f64]) -> Vec<f64> {
    match cfg.fit.eval_points {
        Some(p) => unit_grid(p),
        None => grid.to_vec(),
    }
}

fn tau_tag(tau: f64) -> String {
    format!("{tau}")
}

fn rescale_bands(summary: &mut Summary, (lo, hi): (f64, f64)) {
    for b in &mut summary.bands {
        b.t = lo + b.t * (hi - lo);
    }
}

fn write_summary(summary: &Summary, dir: &Path, head: &str) -> Result<()> {
    summary.write_scalar(create(dir, SCALAR_FILE)?, head)?;
    summary.write_bands(create(dir, BANDS_FILE)?, head)?;
    summary.write_waic(create(dir, WAIC_FILE)?, head)?;
    Ok(())
}

/// Fits every configured estimator at every τ. Fit `(e, k)` uses the MCMC seed
/// `derive_seed(mcmc.seed, [e, k])`.
pub fn fit_dataset(
    cfg: &RunConfig,
    data: &FunctionalDataset,
    basis: &BasisSystem,
) -> Result<Vec<galqr::sampler::PosteriorDraws>> {
    let registry = EstimatorRegistry::with_defaults();
    let mut out = Vec::new();
    for (e, name) in cfg.fit.estimators.iter().enumerate() {
        let est = registry.get(name)?;
        for (k, &tau) in cfg.fit.tau.iter().enumerate() {
            let mcmc = McmcConfig { seed: derive_seed(cfg.mcmc.seed, &[e as u64, k as u64]), ..cfg.mcmc.clone() };
            out.push(fit(data, basis, &cfg.priors, tau, est, &mcmc)?);
        }
    }
    Ok(out)
}

/// Ingests, fits and writes draws, log likelihoods, summaries and the run log.
pub fn fit_command(cfg: &RunConfig) -> Result<Summary> {
    cfg.validate()?;
    let (raw, preprocess) = load_dataset(cfg)?;
    let time_range = (raw.grid[0], raw.grid[raw.grid.len() - 1]);
    let data = raw.with_unit_grid();
    let k = cfg.fit.n_basis.unwrap_or_else(|| default_n_basis(data.t()));
    let basis = BasisSystem::new(&data.grid, k, cfg.fit.degree)?;
    let all = fit_dataset(cfg, &data, &basis)?;

    let dir = &cfg.out_dir;
    std::fs::create_dir_all(dir)?;
    let head = header(cfg);
    let eval = eval_grid(cfg, &data.grid);
    let mut summary = Summary::default();
    let mut fits = Vec::new();
    for draws in &all {
        let tag = format!("{}_tau{}", draws.estimator, tau_tag(draws.tau0));
        let draws_file = format!("draws_{tag}.csv");
        write_draws(draws, create(dir, &draws_file)?, &head)?;
        let loglik_file = match &draws.loglik {
            Some(ll) => {
                let name = format!("loglik_{tag}.csv");
                write_loglik(ll, create(dir, &name)?, &head)?;
                Some(name)
            }
            None => None,
        };
        summary.extend(summarize(draws, &basis, &eval, cfg.fit.level)?);
        fits.push(FitRecord {
            estimator: draws.estimator.clone(),
            tau: draws.tau0,
            draws_file,
            loglik_file,
            n_draws: draws.n_draws(),
            chains: draws.chains.clone(),
        });
    }
    rescale_bands(&mut summary, time_range);
    write_summary(&summary, dir, &head)?;

    let log = RunLog {
        version: version().to_string(),
        config: cfg.clone(),
        n: data.n(),
        j: data.j(),
        p: data.p(),
        subject_ids: data.subject_ids.clone(),
        grid: data.grid.clone(),
        time_range,
        n_basis: k,
        degree: cfg.fit.degree,
        preprocess,
        fits,
    };
    serde_json::to_writer_pretty(create(dir, RUN_LOG)?, &log)?;
    Ok(summary)
}

/// Rebuilds the summary tables from the draws of an earlier `fit`, using the
/// current `fit.level` and `fit.eval_points`.
pub fn summarize_command(cfg: &RunConfig) -> Result<Summary> {
    cfg.validate()?;
    let fit_dir: PathBuf = cfg
        .data
        .fit_dir
        .clone()
        .ok_or_else(|| CliError::Config("data.fit_dir (or --input) is required".into()))?;
    let log_path = fit_dir.join(RUN_LOG);
    let log: RunLog = serde_json::from_reader(
        File::open(&log_path).map_err(|e| CliError::input(format!("{}: {e}", log_path.display())))?,
    )?;
    let basis = BasisSystem::new(&log.grid, log.n_basis, log.degree)?;
    let eval = eval_grid(cfg, &log.grid);
    let mut summary = Summary::default();
    for rec in &log.fits {
        let loglik = match &rec.loglik_file {
            Some(f) => Some(read_loglik(File::open(fit_dir.join(f))?)?),
            None => None,
        };
        let draws = read_draws(File::open(fit_dir.join(&rec.draws_file))?, rec.tau, &rec.estimator, loglik)?;
        summary.extend(summarize(&draws, &basis, &eval, cfg.fit.level)?);
    }
    rescale_bands(&mut summary, log.time_range);
    std::fs::create_dir_all(&cfg.out_dir)?;
    write_summary(&summary, &cfg.out_dir, &header(cfg))?;
    Ok(summary)
}

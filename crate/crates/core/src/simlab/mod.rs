//! Simulated replicated functional data and the four-case experiment harness.

pub mod errors;

pub use errors::{skew_t_sample, ErrorModel, ErrorModelRegistry, ErrorSpec, NormalError, SkewTError};

use crate::basis::{default_n_basis, trapezoid_weights, unit_grid, BasisSystem};
use crate::dataset::FunctionalDataset;
use crate::error::{Error, Result};
use crate::sampler::{fit, EstimatorRegistry, McmcConfig, PriorConfig};
use crate::seed::derive_seed;
use nalgebra::DMatrix;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

/// Draw from the exchangeable Gaussian process with `cov(X(s), X(t)) = ρσ²`
/// for `s ≠ t` and variance `σ²`.
pub fn sim_gp_exchangeable<R: Rng + ?Sized>(
    meanfn: &dyn Fn(f64) -> f64,
    sigma: f64,
    rho: f64,
    grid: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::domain(format!("exchangeable correlation must lie in [0, 1), got {rho}")));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("σ must be nonnegative, got {sigma}")));
    }
    let z0: f64 = StandardNormal.sample(rng);
    let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
    Ok(grid
        .iter()
        .map(|&t| {
            let zt: f64 = StandardNormal.sample(rng);
            meanfn(t) + sigma * (a * z0 + b * zt)
        })
        .collect())
}

/// Mean of the simulated true curves, `(sin 2πt + 1.25) / 2`.
pub fn x_mean(t: f64) -> f64 {
    ((2.0 * PI * t).sin() + 1.25) / 2.0
}

/// Generating functional coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum BetaFn {
    /// `amplitude · sin(2π · frequency · t)`
    Sine { amplitude: f64, frequency: f64 },
    Linear { intercept: f64, slope: f64 },
    Zero,
}

impl BetaFn {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            BetaFn::Sine { amplitude, frequency } => amplitude * (2.0 * PI * frequency * t).sin(),
            BetaFn::Linear { intercept, slope } => intercept + slope * t,
            BetaFn::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    pub j: usize,
    /// Grid size on `[0, 1]`.
    pub t: usize,
    pub sigma_x: f64,
    pub rho_x: f64,
    pub sigma_u: f64,
    pub rho_u: f64,
    pub error: ErrorSpec,
    pub beta: BetaFn,
    pub beta_z: Vec<f64>,
    pub tau0: Vec<f64>,
    pub n_r: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 500,
            j: 5,
            t: 100,
            sigma_x: 4.0,
            rho_x: 0.5,
            sigma_u: 4.0,
            rho_u: 0.5,
            error: ErrorSpec::normal(1.0),
            beta: BetaFn::Sine { amplitude: 2.0, frequency: 1.0 },
            beta_z: vec![1.0, -0.5],
            tau0: vec![0.25, 0.5, 0.9],
            n_r: 100,
            seed: 20_240_601,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.j == 0 || self.t < 2 {
            return Err(Error::invalid("n and J must be positive and the grid needs at least 2 points"));
        }
        if !(self.sigma_x > 0.0) || !(self.sigma_u >= 0.0) {
            return Err(Error::invalid("σ_x must be positive and σ_u nonnegative"));
        }
        for rho in [self.rho_x, self.rho_u] {
            if !(0.0..1.0).contains(&rho) {
                return Err(Error::invalid(format!("correlations must lie in [0, 1), got {rho}")));
            }
        }
        if self.n_r == 0 {
            return Err(Error::invalid("n_r must be at least 1"));
        }
        if let Some(t) = self.tau0.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(Error::invalid(format!("τ0 must lie in (0,1), got {t}")));
        }
        ErrorModelRegistry::with_defaults().build(&self.error)?;
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        unit_grid(self.t)
    }
}

/// Simulates one dataset: true curves, `J` noisy replicates each, standard
/// normal covariates and responses `zᵀβ_z + ∫ β X + ε`.
pub fn generate_case(config: &SimConfig, rng: &mut dyn RngCore) -> Result<FunctionalDataset> {
    config.validate()?;
    let err = ErrorModelRegistry::with_defaults().build(&config.error)?;
    generate_with(config, err.as_ref(), rng)
}

fn generate_with(config: &SimConfig, err: &dyn ErrorModel, rng: &mut dyn RngCore) -> Result<FunctionalDataset> {
    let grid = config.grid();
    let (n, t, p) = (config.n, config.t, config.beta_z.len());
    let qw: Vec<f64> = trapezoid_weights(&grid)
        .iter()
        .zip(&grid)
        .map(|(w, &s)| w * config.beta.eval(s))
        .collect();
    let zero = |_: f64| 0.0;
    let mut x_true = DMatrix::zeros(n, t);
    let mut w = Vec::with_capacity(n);
    let mut z = DMatrix::zeros(n, p);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let x = sim_gp_exchangeable(&x_mean, config.sigma_x, config.rho_x, &grid, rng)?;
        let mut wi = DMatrix::zeros(config.j, t);
        for r in 0..config.j {
            if config.sigma_u > 0.0 {
                let u = sim_gp_exchangeable(&zero, config.sigma_u, config.rho_u, &grid, rng)?;
                for c in 0..t {
                    wi[(r, c)] = x[c] + u[c];
                }
            } else {
                wi.row_mut(r).copy_from_slice(&x);
            }
        }
        let mut lin = 0.0;
        for k in 0..p {
            let v: f64 = StandardNormal.sample(rng);
            z[(i, k)] = v;
            lin += v * config.beta_z[k];
        }
        lin += qw.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
        y.push(lin + err.sample(rng));
        x_true.row_mut(i).copy_from_slice(&x);
        w.push(wi);
    }
    let mut ds = FunctionalDataset::new(grid, w, z, y)?;
    ds.x_true = Some(x_true);
    Ok(ds)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub abias2: f64,
    pub avar: f64,
    pub mise: f64,
}

/// Integrated squared bias and variance of replicate estimates of a curve.
/// `AVar` averages squared deviations from the replicate mean with denominator `n_r`.
pub fn score_estimates(curves: &[Vec<f64>], truth: &[f64]) -> Result<Metrics> {
    if curves.len() < 2 {
        return Err(Error::invalid(format!("AVar needs at least 2 replicates, got {}", curves.len())));
    }
    let g = truth.len();
    if g == 0 {
        return Err(Error::dim("empty evaluation grid"));
    }
    if let Some(c) = curves.iter().find(|c| c.len() != g) {
        return Err(Error::dim(format!("estimate has {} grid points, truth has {g}", c.len())));
    }
    let r = curves.len() as f64;
    let mut abias2 = 0.0;
    let mut avar = 0.0;
    for l in 0..g {
        let m = curves.iter().map(|c| c[l]).sum::<f64>() / r;
        abias2 += (m - truth[l]).powi(2);
        avar += curves.iter().map(|c| (c[l] - m).powi(2)).sum::<f64>() / r;
    }
    abias2 /= g as f64;
    avar /= g as f64;
    Ok(Metrics { abias2, avar, mise: abias2 + avar })
}

/// Fitting settings shared by every replicate of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSettings {
    pub estimators: Vec<String>,
    /// Basis size; `None` picks the default for the grid.
    pub n_basis: Option<usize>,
    pub degree: usize,
    pub priors: PriorConfig,
    pub mcmc: McmcConfig,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            estimators: vec!["fbq".into(), "fast".into(), "naive".into()],
            n_basis: None,
            degree: 3,
            priors: PriorConfig::default(),
            mcmc: McmcConfig { chains: 1, ..Default::default() },
        }
    }
}

/// One data-generating setting inside a case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub label: String,
    pub config: SimConfig,
}

/// Scenario grid of simulation cases 1 to 4, built on top of `base`.
pub fn case_scenarios(case_id: u32, base: &SimConfig) -> Result<Vec<Scenario>> {
    let with = |label: String, f: &dyn Fn(&mut SimConfig)| {
        let mut config = base.clone();
        f(&mut config);
        Scenario { label, config }
    };
    Ok(match case_id {
        1 => [200, 500, 1000]
            .iter()
            .map(|&n| {
                with(format!("n={n}"), &|c| {
                    c.n = n;
                    c.error = ErrorSpec::normal(1.0);
                })
            })
            .collect(),
        2 => vec![with("skew_t".into(), &|c| {
            c.n = 500;
            c.error = ErrorSpec::skew_t(0.0, 5.0, 2.0);
        })],
        3 => [1.0, 4.0, 16.0]
            .iter()
            .map(|&s| with(format!("sigma_u={s}"), &|c| c.sigma_u = s))
            .collect(),
        4 => [2, 3, 4]
            .iter()
            .map(|&j| {
                with(format!("J={j}"), &|c| {
                    c.n = 500;
                    c.j = j;
                })
            })
            .collect(),
        other => return Err(Error::invalid(format!("unknown case {other}; expected 1, 2, 3 or 4"))),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub case: u32,
    pub scenario: String,
    pub estimator: String,
    pub tau: f64,
    pub n: usize,
    #[serde(rename = "J")]
    pub j: usize,
    pub sigma_u: f64,
    pub replicates: usize,
    pub abias2: f64,
    pub avar: f64,
    pub mise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskFailure {
    pub scenario: String,
    pub replicate: usize,
    pub message: String,
}

/// Result table of one case plus any replicate that failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub case: u32,
    pub scenarios: Vec<Scenario>,
    pub fit: FitSettings,
    pub rows: Vec<MetricsRow>,
    pub failures: Vec<TaskFailure>,
}

impl CaseReport {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn row(&self, scenario: &str, estimator: &str, tau: f64) -> Option<&MetricsRow> {
        self.rows
            .iter()
            .find(|r| r.scenario == scenario && r.estimator == estimator && (r.tau - tau).abs() < 1e-12)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["case", "scenario", "estimator", "tau", "n", "J", "sigma_u", "abias2", "avar", "mise"])?;
        for r in &self.rows {
            w.write_record(&[
                r.case.to_string(),
                r.scenario.clone(),
                r.estimator.clone(),
                r.tau.to_string(),
                r.n.to_string(),
                r.j.to_string(),
                r.sigma_u.to_string(),
                format!("{:.6}", r.abias2),
                format!("{:.6}", r.avar),
                format!("{:.6}", r.mise),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_csv(std::fs::File::create(dir.join(format!("{stem}.csv")))?)?;
        self.write_json(std::fs::File::create(dir.join(format!("{stem}.json")))?)?;
        Ok(())
    }
}

/// `β(t)` posterior-mean curves on the simulation grid, indexed `[estimator][τ]`.
type ReplicateCurves = Vec<Vec<Vec<f64>>>;

fn run_replicate(
    case_id: u32,
    s_idx: usize,
    r: usize,
    scenario: &Scenario,
    settings: &FitSettings,
    base_seed: u64,
) -> Result<ReplicateCurves> {
    let cfg = &scenario.config;
    let seed = derive_seed(base_seed, &[case_id as u64, s_idx as u64, r as u64]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = generate_case(cfg, &mut rng)?;
    let k = settings.n_basis.unwrap_or_else(|| default_n_basis(cfg.t));
    let basis = BasisSystem::new(&data.grid, k, settings.degree)?;
    let registry = EstimatorRegistry::with_defaults();
    let mut out = Vec::with_capacity(settings.estimators.len());
    for name in &settings.estimators {
        let est = registry.get(name)?;
        let mut per_tau = Vec::with_capacity(cfg.tau0.len());
        for &tau in &cfg.tau0 {
            let mcmc = McmcConfig { seed: derive_seed(seed, &[1]), ..settings.mcmc.clone() };
            let draws = fit(&data, &basis, &settings.priors, tau, est, &mcmc)?;
            per_tau.push(draws.beta_mean_curve(&basis, &data.grid)?);
        }
        out.push(per_tau);
    }
    Ok(out)
}

/// Runs every replicate of every scenario of a case concurrently and reduces
/// them in (scenario, replicate) order. Failed replicates are reported in
/// [`CaseReport::failures`] and left out of the metrics.
pub fn run_case(case_id: u32, base: &SimConfig, settings: &FitSettings) -> Result<CaseReport> {
    run_scenarios(case_id, case_scenarios(case_id, base)?, base.seed, settings)
}

/// [`run_case`] on an explicit list of scenarios; replicate seeds derive from
/// `base_seed`, the case id and the position in `scenarios`.
pub fn run_scenarios(case_id: u32, scenarios: Vec<Scenario>, base_seed: u64, settings: &FitSettings) -> Result<CaseReport> {
    let registry = EstimatorRegistry::with_defaults();
    for name in &settings.estimators {
        registry.get(name)?;
    }
    settings.mcmc.validate()?;
    settings.priors.validate()?;
    for s in &scenarios {
        s.config.validate()?;
    }
    let tasks: Vec<(usize, usize)> = scenarios
        .iter()
        .enumerate()
        .flat_map(|(s, sc)| (0..sc.config.n_r).map(move |r| (s, r)))
        .collect();
    let results: Vec<Result<ReplicateCurves>> = tasks
        .par_iter()
        .map(|&(s, r)| run_replicate(case_id, s, r, &scenarios[s], settings, base_seed))
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (s_idx, sc) in scenarios.iter().enumerate() {
        let cfg = &sc.config;
        let truth: Vec<f64> = cfg.grid().iter().map(|&t| cfg.beta.eval(t)).collect();
        let mut ok = Vec::new();
        for (&(s, r), res) in tasks.iter().zip(&results) {
            if s != s_idx {
                continue;
            }
            match res {
                Ok(c) => ok.push(c),
                Err(e) => failures.push(TaskFailure { scenario: sc.label.clone(), replicate: r, message: e.to_string() }),
            }
        }
        if ok.len() < 2 {
            continue;
        }
        for (e_idx, est) in settings.estimators.iter().enumerate() {
            for (t_idx, &tau) in cfg.tau0.iter().enumerate() {
                let curves: Vec<Vec<f64>> = ok.iter().map(|c| c[e_idx][t_idx].clone()).collect();
                let m = score_estimates(&curves, &truth)?;
                rows.push(MetricsRow {
                    case: case_id,
                    scenario: sc.label.clone(),
                    estimator: est.clone(),
                    tau,
                    n: cfg.n,
                    j: cfg.j,
                    sigma_u: cfg.sigma_u,
                    replicates: ok.len(),
                    abias2: m.abias2,
                    avar: m.avar,
                    mise: m.mise,
                });
            }
        }
    }
    Ok(CaseReport { case: case_id, scenarios, fit: settings.clone(), rows, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::mean;

    #[test]
    fn scoring_identities() {
        let truth = vec![0.0, 1.0, -2.0];
        let m = score_estimates(&[truth.clone(), truth.clone()], &truth).unwrap();
        assert_eq!((m.abias2, m.avar, m.mise), (0.0, 0.0, 0.0));
        let c = 0.3;
        let shifted: Vec<f64> = truth.iter().map(|v| v + c).collect();
        let m = score_estimates(&[shifted.clone(), shifted.clone(), shifted], &truth).unwrap();
        assert!((m.abias2 - c * c).abs() < 1e-12 && m.avar.abs() < 1e-12);
        let up: Vec<f64> = truth.iter().map(|v| v + c).collect();
        let down: Vec<f64> = truth.iter().map(|v| v - c).collect();
        let m = score_estimates(&[up, down], &truth).unwrap();
        assert!(m.abias2.abs() < 1e-12 && (m.avar - c * c).abs() < 1e-12);
        assert!((m.mise - m.abias2 - m.avar).abs() < 1e-12);
        assert!(score_estimates(&[truth.clone()], &truth).is_err());
        assert!(score_estimates(&[truth.clone(), vec![0.0]], &truth).is_err());
    }

    #[test]
    fn gp_rejects_negative_correlation() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sim_gp_exchangeable(&x_mean, 1.0, -0.1, &[0.0, 1.0], &mut rng).is_err());
    }

    #[test]
    fn gp_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let grid = [0.25, 0.6];
        let n = 100_000;
        let (sigma, rho) = (2.0, 0.5);
        let draws: Vec<Vec<f64>> = (0..n)
            .map(|_| sim_gp_exchangeable(&x_mean, sigma, rho, &grid, &mut rng).unwrap())
            .collect();
        let a: Vec<f64> = draws.iter().map(|d| d[0]).collect();
        let b: Vec<f64> = draws.iter().map(|d| d[1]).collect();
        let nf = n as f64;
        assert!((mean(&a) - 1.125).abs() < 3.0 * sigma / nf.sqrt());
        let (ma, mb) = (mean(&a), mean(&b));
        let cov = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / nf;
        // var of a product of correlated normals is σ⁴(1 + ρ²)
        let se = sigma * sigma * (1.0 + rho * rho).sqrt() / nf.sqrt();
        assert!((cov - rho * sigma * sigma).abs() < 3.0 * se, "cov {cov}");

        let indep: Vec<Vec<f64>> = (0..n)
            .map(|_| sim_gp_exchangeable(&|_| 0.0, 1.0, 0.0, &grid, &mut rng).unwrap())
            .collect();
        let c0 = indep.iter().map(|d| d[0] * d[1]).sum::<f64>() / nf;
        assert!(c0.abs() < 3.0 / nf.sqrt());
    }

    #[test]
    fn generation_special_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cfg = SimConfig { n: 20, j: 3, t: 30, sigma_u: 0.0, ..Default::default() };
        let ds = generate_case(&cfg, &mut rng).unwrap();
        let x = ds.x_true.as_ref().unwrap();
        for (i, w) in ds.w.iter().enumerate() {
            for r in 0..3 {
                assert_eq!(w.row(r), x.row(i));
            }
        }
        let cfg = SimConfig {
            n: 20,
            t: 30,
            beta: BetaFn::Zero,
            beta_z: vec![0.0, 0.0],
            error: ErrorSpec::normal(1e-300),
            ..Default::default()
        };
        let ds = generate_case(&cfg, &mut rng).unwrap();
        assert!(ds.y.iter().all(|v| v.abs() < 1e-250));
    }

    #[test]
    fn response_noise_variance() {
        // fixed true curves and covariates: regenerate only ε by reusing the seed stream layout
        let cfg = SimConfig { n: 100_000, j: 1, t: 5, sigma_x: 1.0, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ds = generate_case(&cfg, &mut rng).unwrap();
        let grid = cfg.grid();
        let qw = trapezoid_weights(&grid);
        let x = ds.x_true.unwrap();
        let resid: Vec<f64> = (0..cfg.n)
            .map(|i| {
                let signal: f64 = (0..cfg.t).map(|c| qw[c] * cfg.beta.eval(grid[c]) * x[(i, c)]).sum();
                ds.y[i] - ds.z[(i, 0)] * 1.0 + ds.z[(i, 1)] * 0.5 - signal
            })
            .collect();
        let v = crate::diagnostics::variance(&resid);
        assert!((v - 1.0).abs() < 3.0 * (2.0 / cfg.n as f64).sqrt(), "var {v}");
    }

    #[test]
    fn replicate_mean_approaches_truth() {
        let gap = |j: usize| {
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let cfg = SimConfig { n: 200, j, t: 20, ..Default::default() };
            let ds = generate_case(&cfg, &mut rng).unwrap();
            let x = ds.x_true.as_ref().unwrap();
            (0..cfg.n)
                .map(|i| {
                    let wbar = ds.replicate_mean(i);
                    wbar.iter().enumerate().map(|(c, v)| (v - x[(i, c)]).powi(2)).sum::<f64>()
                })
                .sum::<f64>()
        };
        assert!(gap(50) < gap(2) / 5.0);
    }

    #[test]
    fn case_grid_shapes() {
        let base = SimConfig::default();
        assert_eq!(case_scenarios(1, &base).unwrap().len(), 3);
        assert_eq!(case_scenarios(2, &base).unwrap()[0].config.error.kind, "skew_t");
        let c3 = case_scenarios(3, &base).unwrap();
        assert_eq!(c3.iter().map(|s| s.config.sigma_u).collect::<Vec<_>>(), vec![1.0, 4.0, 16.0]);
        let c4 = case_scenarios(4, &base).unwrap();
        assert_eq!(c4.iter().map(|s| s.config.j).collect::<Vec<_>>(), vec![2, 3, 4]);
        assert!(case_scenarios(5, &base).is_err());
    }

    #[test]
    fn small_case_is_deterministic_and_well_formed() {
        let base = SimConfig { n: 40, t: 20, n_r: 2, seed: 9, ..Default::default() };
        let settings = FitSettings {
            n_basis: Some(5),
            mcmc: McmcConfig { chains: 1, iters: 60, burnin: 20, ..Default::default() },
            ..Default::default()
        };
        let a = run_case(1, &base, &settings).unwrap();
        assert!(a.is_complete());
        assert_eq!(a.rows.len(), 27);
        for r in &a.rows {
            assert!((r.mise - r.abias2 - r.avar).abs() < 1e-12);
        }
        let b = run_case(1, &base, &settings).unwrap();
        let (mut ca, mut cb) = (Vec::new(), Vec::new());
        a.write_csv(&mut ca).unwrap();
        b.write_csv(&mut cb).unwrap();
        assert_eq!(ca, cb);
        assert!(String::from_utf8(ca).unwrap().starts_with("case,scenario,estimator,tau,n,J,sigma_u,abias2,avar,mise"));
    }
}

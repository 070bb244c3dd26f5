//! Run configuration: a TOML file with every field optional, overridden by flags.

use crate::error::{CliError, Result};
use crate::preprocess::PreprocessOptions;
use galqr::sampler::{McmcConfig, PriorConfig};
use galqr::simlab::SimConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub functional: Option<PathBuf>,
    pub scalar: Option<PathBuf>,
    /// Output directory of an earlier `fit`, read by `summarize`.
    pub fit_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub estimators: Vec<String>,
    pub tau: Vec<f64>,
    /// Basis size; unset picks `min(15, T/4)`.
    pub n_basis: Option<usize>,
    pub degree: usize,
    /// Points at which `β(t)` bands are reported; unset uses the data grid.
    pub eval_points: Option<usize>,
    pub level: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            estimators: vec!["fbq".into(), "fast".into(), "naive".into()],
            tau: vec![0.25, 0.5, 0.9],
            n_basis: None,
            degree: 3,
            eval_points: None,
            level: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub enabled: bool,
    pub winsorize_pct: f64,
    pub min_valid_days: usize,
    pub max_invalid_minutes: usize,
    pub downsample: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        let o = PreprocessOptions::default();
        Self {
            enabled: false,
            winsorize_pct: o.winsorize_pct,
            min_valid_days: o.min_valid_days,
            max_invalid_minutes: o.max_invalid_minutes,
            downsample: o.downsample,
        }
    }
}

impl PreprocessConfig {
    pub fn options(&self) -> PreprocessOptions {
        PreprocessOptions {
            winsorize_pct: self.winsorize_pct,
            min_valid_days: self.min_valid_days,
            max_invalid_minutes: self.max_invalid_minutes,
            downsample: self.downsample,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub case: u32,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { case: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    pub data: DataConfig,
    pub fit: FitConfig,
    pub mcmc: McmcConfig,
    pub priors: PriorConfig,
    pub preprocess: PreprocessConfig,
    pub simulate: SimulateConfig,
    pub sim: SimConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("galqr-out"),
            data: DataConfig::default(),
            fit: FitConfig::default(),
            mcmc: McmcConfig::default(),
            priors: PriorConfig::default(),
            preprocess: PreprocessConfig::default(),
            simulate: SimulateConfig::default(),
            sim: SimConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.fit.tau.is_empty() {
            return Err(CliError::Config("at least one τ is required".into()));
        }
        if let Some(t) = self.fit.tau.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(CliError::Config(format!("τ values must lie in (0,1), got {t}")));
        }
        if self.fit.estimators.is_empty() {
            return Err(CliError::Config("at least one estimator is required".into()));
        }
        let reg = galqr::sampler::EstimatorRegistry::with_defaults();
        for e in &self.fit.estimators {
            reg.get(e)?;
        }
        if !(self.fit.level > 0.0 && self.fit.level < 1.0) {
            return Err(CliError::Config(format!("level must lie in (0,1), got {}", self.fit.level)));
        }
        if self.fit.degree == 0 {
            return Err(CliError::Config("spline degree must be at least 1".into()));
        }
        if self.fit.eval_points.is_some_and(|p| p < 2) {
            return Err(CliError::Config("eval_points must be at least 2".into()));
        }
        self.mcmc.validate()?;
        self.priors.validate()?;
        self.preprocess.options().validate()?;
        Ok(())
    }

    /// The config as a single line, for file headers.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn partial_files_fill_in_defaults() {
        let c = RunConfig::from_toml(
            r#"
out_dir = "results"
[fit]
estimators = ["fast"]
tau = [0.1, 0.5, 0.9]
[mcmc]
iters = 500
burnin = 100
[priors.theta]
kind = "inv_gamma"
shape = 1.0
rate = 0.005
[preprocess]
enabled = true
min_valid_days = 4
"#,
        )
        .unwrap();
        assert_eq!(c.fit.estimators, vec!["fast"]);
        assert_eq!(c.mcmc.chains, McmcConfig::default().chains);
        assert_eq!(c.preprocess.min_valid_days, 4);
        assert_eq!(c.preprocess.max_invalid_minutes, 144);
        c.validate().unwrap();
    }

    #[test]
    fn fully_spelled_out_file_parses() {
        let c = RunConfig::from_toml(
            r#"
out_dir = "galqr-out"
[data]
functional = "days.csv"
scalar = "subjects.csv"
[fit]
estimators = ["fbq", "fast", "naive"]
tau = [0.25, 0.5, 0.9]
degree = 3
level = 0.95
[mcmc]
chains = 2
iters = 4000
burnin = 1000
thin = 1
seed = 1
store_loglik = true
[priors]
coef_var = 10000.0
phi_ridge = 0.0
k_eps = 3
alpha = 1.0
sigma_shape = 2.0
sigma_rate = 1.0
fix_gamma = false
k_u = 3
alpha_u = 1.0
k_x = 3
alpha_x = 1.0
wishart_extra_dof = 50.0
theta = { kind = "weibull", scale = 1.0 }
[preprocess]
enabled = false
winsorize_pct = 0.999
min_valid_days = 3
max_invalid_minutes = 144
downsample = 1
[simulate]
case = 1
[sim]
n = 500
j = 5
t = 100
sigma_x = 4.0
rho_x = 0.5
sigma_u = 4.0
rho_u = 0.5
n_r = 100
seed = 20240601
beta_z = [1.0, -0.5]
beta = { form = "sine", amplitude = 2.0, frequency = 1.0 }
error = { kind = "normal", sd = 1.0 }
"#,
        )
        .unwrap();
        let mut expected = RunConfig::default();
        expected.data.functional = Some("days.csv".into());
        expected.data.scalar = Some("subjects.csv".into());
        assert_eq!(c, expected);
        let skew = RunConfig::from_toml("[sim]\nerror = { kind = \"skew_t\", xi = 0.0, dof = 5.0, slant = 2.0 }").unwrap();
        assert_eq!(skew.sim.error, galqr::simlab::ErrorSpec::skew_t(0.0, 5.0, 2.0));
    }

    #[test]
    fn bad_values_are_config_errors() {
        assert!(RunConfig::from_toml("[fit]\nunknown = 1").is_err());
        let c = RunConfig::from_toml("[fit]\ntau = [1.5]").unwrap();
        assert_eq!(c.validate().unwrap_err().exit_code(), 2);
        let c = RunConfig::from_toml("[mcmc]\niters = 10\nburnin = 20").unwrap();
        assert_eq!(c.validate().unwrap_err().exit_code(), 2);
    }
}

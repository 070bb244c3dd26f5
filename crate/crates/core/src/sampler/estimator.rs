//! Estimators as interchangeable strategies, plus the multi-chain driver.

use super::draws::{ChainMeta, DrawBuffer, PosteriorDraws};
use super::gibbs::{MixtureHypers, Mode, ModelData, Sampler};
use super::priors::{MvnHyper, PriorConfig};
use crate::basis::BasisSystem;
use crate::calibration::{naive_scores, rc_calibrate, replicate_scores};
use crate::dataset::FunctionalDataset;
use crate::error::{Error, Result};
use crate::seed::derive_seed;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Everything a Gibbs run needs once an estimator has turned curves into scores.
pub struct Prepared {
    pub data: ModelData,
    pub mode: Mode,
    pub hypers: Option<MixtureHypers>,
}

pub trait Estimator: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn min_replicates(&self) -> usize;
    fn prepare(&self, data: &FunctionalDataset, basis: &BasisSystem, priors: &PriorConfig) -> Result<Prepared>;
}

fn model_data(data: &FunctionalDataset, basis: &BasisSystem, x: DMatrix<f64>) -> Result<ModelData> {
    ModelData::new(
        DVector::from_column_slice(&data.y),
        data.z.clone(),
        x,
        basis.penalty().clone(),
    )
}

/// Replicate means used as if they were the true curves.
pub struct Naive;

impl Estimator for Naive {
    fn name(&self) -> &'static str {
        "naive"
    }

    fn description(&self) -> &'static str {
        "replicate-averaged curves treated as error free"
    }

    fn min_replicates(&self) -> usize {
        1
    }

    fn prepare(&self, data: &FunctionalDataset, basis: &BasisSystem, _: &PriorConfig) -> Result<Prepared> {
        Ok(Prepared {
            data: model_data(data, basis, naive_scores(data, basis)?)?,
            mode: Mode::FixedX,
            hypers: None,
        })
    }
}

/// Two-stage fit: regression-calibrated scores, then the quantile model with scores fixed.
pub struct FastRc;

impl Estimator for FastRc {
    fn name(&self) -> &'static str {
        "fast"
    }

    fn description(&self) -> &'static str {
        "regression calibration of the scores followed by the quantile model"
    }

    fn min_replicates(&self) -> usize {
        2
    }

    fn prepare(&self, data: &FunctionalDataset, basis: &BasisSystem, _: &PriorConfig) -> Result<Prepared> {
        data.require_replicates(2, "the fast estimator")?;
        let rc = rc_calibrate(data, basis)?;
        Ok(Prepared {
            data: model_data(data, basis, rc.xhat_scores)?,
            mode: Mode::FixedX,
            hypers: None,
        })
    }
}

/// Joint model over latent scores, measurement-error mixture and response.
pub struct FullBayes;

impl Estimator for FullBayes {
    fn name(&self) -> &'static str {
        "fbq"
    }

    fn description(&self) -> &'static str {
        "full joint Bayesian model with latent scores and mixture measurement errors"
    }

    fn min_replicates(&self) -> usize {
        2
    }

    fn prepare(&self, data: &FunctionalDataset, basis: &BasisSystem, priors: &PriorConfig) -> Result<Prepared> {
        data.require_replicates(2, "the full Bayesian estimator")?;
        let rc = rc_calibrate(data, basis)?;
        let reps = replicate_scores(data, basis)?;
        let k = basis.n_basis();
        let hypers = MixtureHypers {
            u: MvnHyper::from_moments(DVector::zeros(k), &rc.sigma_u_hat, priors.wishart_extra_dof),
            x: MvnHyper::from_moments(rc.mu_x_hat.clone(), &rc.sigma_x_hat, priors.wishart_extra_dof),
        };
        Ok(Prepared {
            data: model_data(data, basis, rc.xhat_scores)?.with_replicates(reps)?,
            mode: Mode::Full,
            hypers: Some(hypers),
        })
    }
}

/// Estimators selectable by name.
pub struct EstimatorRegistry {
    entries: Vec<Box<dyn Estimator>>,
}

impl EstimatorRegistry {
    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    /// `fbq`, `fast` and `naive`.
    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(FullBayes));
        r.register(Box::new(FastRc));
        r.register(Box::new(Naive));
        r
    }

    /// Adds an estimator, replacing any existing one with the same name.
    pub fn register(&mut self, e: Box<dyn Estimator>) {
        self.entries.retain(|x| x.name() != e.name());
        self.entries.push(e);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn Estimator> {
        self.entries
            .iter()
            .find(|e| e.name().eq_ignore_ascii_case(name))
            .map(|e| e.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "estimator",
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }
}

impl Default for EstimatorRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcConfig {
    pub chains: usize,
    /// Total sweeps per chain, burn-in included.
    pub iters: usize,
    pub burnin: usize,
    pub thin: usize,
    pub seed: u64,
    /// Keep the `n × draws` pointwise log likelihood for WAIC.
    pub store_loglik: bool,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            chains: 2,
            iters: 4000,
            burnin: 1000,
            thin: 1,
            seed: 1,
            store_loglik: true,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 {
            return Err(Error::invalid("at least one chain is required"));
        }
        if self.thin == 0 {
            return Err(Error::invalid("thin must be at least 1"));
        }
        if self.iters <= self.burnin {
            return Err(Error::invalid(format!(
                "iters ({}) must exceed burnin ({})",
                self.iters, self.burnin
            )));
        }
        Ok(())
    }

    pub fn draws_per_chain(&self) -> usize {
        (self.iters - self.burnin) / self.thin
    }
}

/// Runs one chain from its initial state and collects thinned draws.
pub(crate) fn run_chain(sampler: &Sampler, mcmc: &McmcConfig, chain: usize) -> Result<(DrawBuffer, ChainMeta)> {
    let seed = derive_seed(mcmc.seed, &[chain as u64]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = sampler.init_state(&mut rng)?;
    let d = sampler.data();
    let mut buf = DrawBuffer::new(d.p(), d.k(), sampler.priors().k_eps, d.n());
    for it in 0..mcmc.iters {
        sampler.step(&mut state, it, &mut rng)?;
        if it >= mcmc.burnin && (it - mcmc.burnin + 1) % mcmc.thin == 0 {
            if mcmc.store_loglik {
                let ll = sampler.loglik(&state);
                if ll.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Divergence {
                        iteration: it,
                        last_valid: it.checked_sub(1),
                        message: "non-finite log likelihood".into(),
                    });
                }
                buf.push(&state, Some(ll.as_slice()));
            } else {
                buf.push(&state, None);
            }
        }
    }
    let meta = ChainMeta {
        chain,
        seed,
        iters: mcmc.iters,
        burnin: mcmc.burnin,
        thin: mcmc.thin,
        mh_acceptance: state.mh.iter().map(|m| m.acceptance_rate()).collect(),
    };
    Ok((buf, meta))
}

/// Fits the quantile model at level `tau0` with the given estimator.
/// Chains run concurrently and are merged in chain order.
pub fn fit(
    data: &FunctionalDataset,
    basis: &BasisSystem,
    priors: &PriorConfig,
    tau0: f64,
    estimator: &dyn Estimator,
    mcmc: &McmcConfig,
) -> Result<PosteriorDraws> {
    mcmc.validate()?;
    data.validate()?;
    data.require_replicates(estimator.min_replicates(), estimator.name())?;
    let prepared = estimator.prepare(data, basis, priors)?;
    let sampler = Sampler::new(
        prepared.data,
        priors.clone(),
        prepared.mode,
        tau0,
        mcmc.burnin,
        prepared.hypers,
    )?;
    let results: Vec<Result<(DrawBuffer, ChainMeta)>> = (0..mcmc.chains)
        .into_par_iter()
        .map(|c| run_chain(&sampler, mcmc, c))
        .collect();
    let mut buffers = Vec::with_capacity(results.len());
    let mut metas = Vec::with_capacity(results.len());
    for r in results {
        let (b, m) = r?;
        buffers.push(b);
        metas.push(m);
    }
    Ok(PosteriorDraws::from_buffers(
        tau0,
        estimator.name(),
        buffers,
        metas,
        mcmc.store_loglik,
    ))
}

/// [`fit`] with the estimator looked up by name in the default registry.
pub fn fit_named(
    data: &FunctionalDataset,
    basis: &BasisSystem,
    priors: &PriorConfig,
    tau0: f64,
    estimator: &str,
    mcmc: &McmcConfig,
) -> Result<PosteriorDraws> {
    let reg = EstimatorRegistry::with_defaults();
    fit(data, basis, priors, tau0, reg.get(estimator)?, mcmc)
}

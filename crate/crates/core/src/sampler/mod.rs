//! Gibbs samplers for the functional quantile model and their drivers.

pub mod dists;
pub mod draws;
pub mod estimator;
pub mod gibbs;
pub mod priors;
pub mod state;

pub use dists::{gig_sample, trunc_normal_sample};
pub use draws::{waic, ChainMeta, PosteriorDraws};
pub use estimator::{fit, fit_named, Estimator, EstimatorRegistry, FastRc, FullBayes, McmcConfig, Naive, Prepared};
pub use gibbs::{gibbs_step, MixtureHypers, Mode, ModelData, Sampler};
pub use priors::{MvnHyper, PriorConfig, ThetaPrior};
pub use state::{MhStats, ModelState, MvnComponent, MvnMixtureState};

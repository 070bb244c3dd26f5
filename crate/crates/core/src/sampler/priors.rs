use crate::error::{Error, Result};
use crate::linalg::symmetrize;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Hyperprior on the P-spline smoothing variance `θ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThetaPrior {
    /// Scale-dependent prior: `θ² ~ Weibull(shape 1/2, scale)`, i.e. `√θ²` is
    /// exponential with mean `√scale`.
    Weibull { scale: f64 },
    InvGamma { shape: f64, rate: f64 },
}

impl ThetaPrior {
    /// Log prior density of `θ²` up to a constant.
    pub fn log_density(&self, theta2: f64) -> f64 {
        match *self {
            ThetaPrior::Weibull { scale } => -0.5 * theta2.ln() - (theta2 / scale).sqrt(),
            ThetaPrior::InvGamma { shape, rate } => -(shape + 1.0) * theta2.ln() - rate / theta2,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ThetaPrior::Weibull { scale } => 2.0 * scale,
            ThetaPrior::InvGamma { shape, rate } => {
                if shape > 1.0 {
                    rate / (shape - 1.0)
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

/// Scalar prior settings. Mixture hyperparameters for the measurement-error
/// and latent-curve mixtures are derived from moment estimates at fit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    /// Prior variance of the intercept and of each scalar coefficient.
    pub coef_var: f64,
    pub theta: ThetaPrior,
    /// Ridge added to the difference penalty, making the `φ` prior proper.
    pub phi_ridge: f64,
    pub k_eps: usize,
    /// Dirichlet concentration of the GAL mixture (split evenly over components).
    pub alpha: f64,
    /// Gamma shape `a0` and rate `b0` of the GAL scale prior.
    pub sigma_shape: f64,
    pub sigma_rate: f64,
    /// Keep every `γ_k` at its initial value (0 gives asymmetric Laplace errors).
    pub fix_gamma: bool,
    pub k_u: usize,
    pub alpha_u: f64,
    pub k_x: usize,
    pub alpha_x: f64,
    /// Inverse-Wishart degrees of freedom are `K_n + wishart_extra_dof`.
    pub wishart_extra_dof: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            coef_var: 1e4,
            theta: ThetaPrior::Weibull { scale: 1.0 },
            phi_ridge: 0.0,
            k_eps: 3,
            alpha: 1.0,
            sigma_shape: 2.0,
            sigma_rate: 1.0,
            fix_gamma: false,
            k_u: 3,
            alpha_u: 1.0,
            k_x: 3,
            alpha_x: 1.0,
            wishart_extra_dof: 50.0,
        }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, what: &str| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{what} must be positive and finite, got {v}")))
            }
        };
        pos(self.coef_var, "coef_var")?;
        pos(self.alpha, "alpha")?;
        pos(self.alpha_u, "alpha_u")?;
        pos(self.alpha_x, "alpha_x")?;
        pos(self.sigma_shape, "sigma_shape")?;
        pos(self.sigma_rate, "sigma_rate")?;
        pos(self.wishart_extra_dof, "wishart_extra_dof")?;
        if !(self.phi_ridge >= 0.0 && self.phi_ridge.is_finite()) {
            return Err(Error::invalid("phi_ridge must be nonnegative"));
        }
        match self.theta {
            ThetaPrior::Weibull { scale } => pos(scale, "theta scale")?,
            ThetaPrior::InvGamma { shape, rate } => {
                pos(shape, "theta shape")?;
                pos(rate, "theta rate")?;
            }
        }
        if self.k_eps == 0 || self.k_u == 0 || self.k_x == 0 {
            return Err(Error::invalid("mixture sizes must be at least 1"));
        }
        Ok(())
    }
}

/// Normal/inverse-Wishart hyperparameters for one multivariate mixture:
/// component means `~ N(mean, mean_cov)`, covariances `~ IW(dof, scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MvnHyper {
    pub mean: DVector<f64>,
    pub mean_cov: DMatrix<f64>,
    pub dof: f64,
    pub scale: DMatrix<f64>,
}

impl MvnHyper {
    /// Centres the prior on a moment estimate `cov`: the inverse-Wishart mean
    /// equals the (ridged) estimate and component means spread with the same covariance.
    pub fn from_moments(mean: DVector<f64>, cov: &DMatrix<f64>, extra_dof: f64) -> Self {
        let k = mean.len();
        let reg = regularize(cov);
        let dof = k as f64 + extra_dof;
        Self {
            mean,
            mean_cov: reg.clone(),
            dof,
            scale: reg * (dof - k as f64 - 1.0).max(1e-3),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.mean.len();
        if self.mean_cov.shape() != (k, k) || self.scale.shape() != (k, k) {
            return Err(Error::dim("mixture hyperparameters disagree in dimension"));
        }
        if self.dof <= k as f64 - 1.0 {
            return Err(Error::invalid(format!(
                "inverse-Wishart dof {} must exceed K − 1 = {}",
                self.dof,
                k as f64 - 1.0
            )));
        }
        Ok(())
    }
}

/// Adds a small ridge so that a clipped moment estimate is positive definite.
pub fn regularize(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let k = cov.nrows();
    let mut out = cov.clone();
    symmetrize(&mut out);
    let scale = (out.trace() / k as f64).abs();
    let eps = if scale > 0.0 { 1e-4 * scale } else { 1e-10 };
    for i in 0..k {
        out[(i, i)] += eps;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid_and_round_trips() {
        let p = PriorConfig::default();
        p.validate().unwrap();
        let s = serde_json::to_string(&p).unwrap();
        let back: PriorConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(p, back);
        let partial: PriorConfig = serde_json::from_str(r#"{"k_eps": 1, "theta": {"kind": "inv_gamma", "shape": 1.0, "rate": 0.005}}"#).unwrap();
        assert_eq!(partial.k_eps, 1);
        assert_eq!(partial.coef_var, p.coef_var);
    }

    #[test]
    fn invalid_settings_are_rejected() {
        let bad = PriorConfig { k_eps: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = PriorConfig { alpha: -1.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn moment_hyper_has_matching_iw_mean() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let h = MvnHyper::from_moments(DVector::zeros(2), &cov, 2.0);
        h.validate().unwrap();
        let mean = &h.scale / (h.dof - 3.0);
        assert!((mean - regularize(&cov)).amax() < 1e-12);
    }
}

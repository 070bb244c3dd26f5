use crate::gal::{GalMixture, GalParams};
use nalgebra::{DMatrix, DVector};

/// One component of a multivariate normal mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct MvnComponent {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Finite multivariate normal mixture with per-item labels.
#[derive(Debug, Clone, PartialEq)]
pub struct MvnMixtureState {
    pub weights: Vec<f64>,
    pub components: Vec<MvnComponent>,
    pub labels: Vec<usize>,
}

impl MvnMixtureState {
    /// `Σ_k π_k μ_k`.
    pub fn weighted_mean(&self) -> DVector<f64> {
        let k = self.components[0].mean.len();
        self.weights
            .iter()
            .zip(&self.components)
            .fold(DVector::zeros(k), |acc, (w, c)| acc + &c.mean * *w)
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.components.len()];
        for l in &self.labels {
            c[*l] += 1;
        }
        c
    }
}

/// Random-walk Metropolis bookkeeping for one GAL component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhStats {
    pub log_scale: f64,
    pub accepted: u64,
    pub proposed: u64,
}

impl MhStats {
    pub fn new() -> Self {
        Self {
            log_scale: (0.5f64).ln(),
            accepted: 0,
            proposed: 0,
        }
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

impl Default for MhStats {
    fn default() -> Self {
        Self::new()
    }
}

/// Full state of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub beta0: f64,
    pub beta_z: DVector<f64>,
    pub phi: DVector<f64>,
    pub theta2: f64,
    /// Half-normal GAL latents, one per observation.
    pub s: Vec<f64>,
    /// Exponential GAL latents, one per observation.
    pub nu: Vec<f64>,
    pub gal_labels: Vec<usize>,
    pub gal_weights: Vec<f64>,
    pub gal: Vec<GalParams>,
    pub mh: Vec<MhStats>,
    /// Latent scores (`n × K`); held fixed outside the full model.
    pub x: DMatrix<f64>,
    /// Latent-score mixture, present in the full model only.
    pub x_mix: Option<MvnMixtureState>,
    /// Measurement-error mixture over all `n·J` replicate deviations
    /// (subject-major order), present in the full model only.
    pub u_mix: Option<MvnMixtureState>,
}

impl ModelState {
    pub fn gal_mixture(&self) -> GalMixture {
        GalMixture {
            weights: self.gal_weights.clone(),
            components: self.gal.clone(),
        }
    }

    /// Linear predictor `β0 + zᵢᵀβ_z + xᵢᵀφ` for every observation.
    pub fn linear_predictor(&self, z: &DMatrix<f64>) -> DVector<f64> {
        let mut eta = z * &self.beta_z + &self.x * &self.phi;
        eta.add_scalar_mut(self.beta0);
        eta
    }

    pub fn is_finite(&self) -> bool {
        self.beta0.is_finite()
            && self.beta_z.iter().all(|v| v.is_finite())
            && self.phi.iter().all(|v| v.is_finite())
            && self.theta2.is_finite()
            && self.theta2 > 0.0
            && self.gal.iter().all(|g| g.sigma.is_finite() && g.gamma.is_finite())
            && self.x.iter().all(|v| v.is_finite())
    }
}

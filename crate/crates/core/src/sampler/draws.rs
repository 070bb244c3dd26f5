use super::state::ModelState;
use crate::basis::BasisSystem;
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Run settings and adaptation summary for one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainMeta {
    pub chain: usize,
    pub seed: u64,
    pub iters: usize,
    pub burnin: usize,
    pub thin: usize,
    /// Post-burn-in acceptance rate of the `(γ_k, σ_k)` proposals.
    pub mh_acceptance: Vec<f64>,
}

/// Thinned draws, stored draw-major (`row d` is draw `d`).
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub tau0: f64,
    pub estimator: String,
    pub beta0: Vec<f64>,
    /// `draws × p`
    pub beta_z: DMatrix<f64>,
    /// `draws × K`
    pub phi: DMatrix<f64>,
    pub theta2: Vec<f64>,
    /// `draws × K_eps` each.
    pub gal_weights: DMatrix<f64>,
    pub gal_gamma: DMatrix<f64>,
    pub gal_sigma: DMatrix<f64>,
    /// Pointwise log likelihood, `n × draws`.
    pub loglik: Option<DMatrix<f64>>,
    pub chains: Vec<ChainMeta>,
}

/// Accumulates draws from a single chain.
#[derive(Debug, Clone, Default)]
pub(crate) struct DrawBuffer {
    beta0: Vec<f64>,
    beta_z: Vec<f64>,
    phi: Vec<f64>,
    theta2: Vec<f64>,
    weights: Vec<f64>,
    gamma: Vec<f64>,
    sigma: Vec<f64>,
    loglik: Vec<f64>,
    p: usize,
    k: usize,
    ke: usize,
    n: usize,
}

impl DrawBuffer {
    pub fn new(p: usize, k: usize, ke: usize, n: usize) -> Self {
        Self {
            p,
            k,
            ke,
            n,
            ..Default::default()
        }
    }

    pub fn push(&mut self, s: &ModelState, loglik: Option<&[f64]>) {
        self.beta0.push(s.beta0);
        self.beta_z.extend(s.beta_z.iter());
        self.phi.extend(s.phi.iter());
        self.theta2.push(s.theta2);
        self.weights.extend(&s.gal_weights);
        self.gamma.extend(s.gal.iter().map(|g| g.gamma));
        self.sigma.extend(s.gal.iter().map(|g| g.sigma));
        if let Some(l) = loglik {
            self.loglik.extend_from_slice(l);
        }
    }

    pub fn len(&self) -> usize {
        self.beta0.len()
    }
}

fn rows(data: &[f64], nrows: usize, ncols: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(nrows, ncols, data)
}

impl PosteriorDraws {
    pub(crate) fn from_buffers(
        tau0: f64,
        estimator: &str,
        buffers: Vec<DrawBuffer>,
        chains: Vec<ChainMeta>,
        with_loglik: bool,
    ) -> Self {
        let (p, k, ke, n) = buffers
            .first()
            .map_or((0, 0, 0, 0), |b| (b.p, b.k, b.ke, b.n));
        let mut all = DrawBuffer::new(p, k, ke, n);
        for b in buffers {
            all.beta0.extend(b.beta0);
            all.beta_z.extend(b.beta_z);
            all.phi.extend(b.phi);
            all.theta2.extend(b.theta2);
            all.weights.extend(b.weights);
            all.gamma.extend(b.gamma);
            all.sigma.extend(b.sigma);
            all.loglik.extend(b.loglik);
        }
        let d = all.len();
        let loglik = with_loglik.then(|| DMatrix::from_column_slice(n, d, &all.loglik));
        Self {
            tau0,
            estimator: estimator.to_string(),
            beta0: all.beta0,
            beta_z: rows(&all.beta_z, d, p),
            phi: rows(&all.phi, d, k),
            theta2: all.theta2,
            gal_weights: rows(&all.weights, d, ke),
            gal_gamma: rows(&all.gamma, d, ke),
            gal_sigma: rows(&all.sigma, d, ke),
            loglik,
            chains,
        }
    }

    pub fn n_draws(&self) -> usize {
        self.beta0.len()
    }

    /// Posterior mean of the basis coefficients of `β(t)`.
    pub fn phi_mean(&self) -> Vec<f64> {
        let d = self.n_draws() as f64;
        self.phi.row_sum().iter().map(|v| v / d).collect()
    }

    /// `β(t)` at `points` for every draw (`draws × points`).
    pub fn beta_curves(&self, basis: &BasisSystem, points: &[f64]) -> Result<DMatrix<f64>> {
        let b = basis.evaluate(points)?;
        Ok(&self.phi * b.transpose())
    }

    /// Posterior mean of `β(t)` at `points`.
    pub fn beta_mean_curve(&self, basis: &BasisSystem, points: &[f64]) -> Result<Vec<f64>> {
        basis.eval_beta(&self.phi_mean(), points)
    }

    pub fn waic(&self) -> Result<f64> {
        waic(self)
    }
}

/// `−2(lppd − p_waic)` with `p_waic = Σ_i var_s(log p(y_i | θ_s))`, the variance
/// taken over draws with denominator `S`.
pub fn waic(draws: &PosteriorDraws) -> Result<f64> {
    let ll = draws
        .loglik
        .as_ref()
        .ok_or_else(|| Error::invalid("draws carry no pointwise log likelihood"))?;
    waic_from_loglik(ll)
}

/// WAIC from an `n × S` pointwise log-likelihood matrix.
pub fn waic_from_loglik(ll: &DMatrix<f64>) -> Result<f64> {
    let s = ll.ncols();
    if s < 2 {
        return Err(Error::invalid(format!("WAIC needs at least 2 draws, got {s}")));
    }
    let mut lppd = 0.0;
    let mut p_waic = 0.0;
    for row in ll.row_iter() {
        let m = row.max();
        let mean_exp = row.iter().map(|v| (v - m).exp()).sum::<f64>() / s as f64;
        lppd += m + mean_exp.ln();
        let mu = row.mean();
        p_waic += row.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / s as f64;
    }
    Ok(-2.0 * (lppd - p_waic))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_loglik_has_no_penalty() {
        let ll = DMatrix::from_fn(4, 10, |i, _| -(i as f64) - 0.5);
        let w = waic_from_loglik(&ll).unwrap();
        let total: f64 = (0..4).map(|i| -(i as f64) - 0.5).sum();
        assert!((w + 2.0 * total).abs() < 1e-12);
    }

    #[test]
    fn duplicated_draws_leave_waic_unchanged() {
        let ll = DMatrix::from_fn(5, 7, |i, j| -(((i * 7 + j * 3) % 11) as f64) * 0.3 - 1.0);
        let mut dup = DMatrix::zeros(5, 14);
        dup.columns_mut(0, 7).copy_from(&ll);
        dup.columns_mut(7, 7).copy_from(&ll);
        let a = waic_from_loglik(&ll).unwrap();
        let b = waic_from_loglik(&dup).unwrap();
        assert!((a - b).abs() < 1e-12 * a.abs());
    }

    #[test]
    fn too_few_draws() {
        assert!(waic_from_loglik(&DMatrix::zeros(3, 1)).is_err());
    }
}

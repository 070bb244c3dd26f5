use super::dists::{
    categorical_log, dirichlet_sample, gamma_sample, inv_wishart_sample, mvn_from_precision, slice_sample,
};
use super::priors::{MvnHyper, PriorConfig, ThetaPrior};
use super::state::{MhStats, ModelState, MvnComponent, MvnMixtureState};
use crate::diagnostics::quantile;
use crate::error::{Error, Result};
use crate::gal::{GalParams, GammaBounds};
use crate::linalg::{chol_logdet, cholesky_jitter, mvn_logpdf_chol, symmetrize};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

const JITTER: f64 = 1e-10;
const ADAPT_TARGET: f64 = 0.3;

/// Which blocks a sweep updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Latent scores, measurement-error mixture and score mixture are sampled.
    Full,
    /// Scores are treated as observed covariates.
    FixedX,
}

/// Response, covariates and scores in basis coordinates.
#[derive(Debug, Clone)]
pub struct ModelData {
    pub y: DVector<f64>,
    /// `n × p` scalar covariates (no intercept column).
    pub z: DMatrix<f64>,
    /// `n × K` scores: the covariate in fixed mode, the starting value otherwise.
    pub x: DMatrix<f64>,
    /// Projected replicates (`J × K` per subject), required by the full model.
    pub replicates: Option<Vec<DMatrix<f64>>>,
    /// Roughness penalty on `φ` (`K × K`).
    pub penalty: DMatrix<f64>,
}

impl ModelData {
    pub fn new(y: DVector<f64>, z: DMatrix<f64>, x: DMatrix<f64>, penalty: DMatrix<f64>) -> Result<Self> {
        let n = y.len();
        if z.nrows() != n || x.nrows() != n {
            return Err(Error::dim(format!(
                "{} responses but {} covariate rows and {} score rows",
                n,
                z.nrows(),
                x.nrows()
            )));
        }
        if penalty.shape() != (x.ncols(), x.ncols()) {
            return Err(Error::dim("penalty must be K × K"));
        }
        if y.iter().chain(z.iter()).chain(x.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("data contain non-finite values"));
        }
        Ok(Self {
            y,
            z,
            x,
            replicates: None,
            penalty,
        })
    }

    pub fn with_replicates(mut self, reps: Vec<DMatrix<f64>>) -> Result<Self> {
        let k = self.k();
        if reps.len() != self.n() {
            return Err(Error::dim("one replicate score matrix per subject is required"));
        }
        let j = reps.first().map_or(0, |m| m.nrows());
        if reps.iter().any(|m| m.nrows() != j || m.ncols() != k) {
            return Err(Error::dim(format!("replicate scores must all be {j} × {k}")));
        }
        self.replicates = Some(reps);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.z.ncols()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    fn design(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let (n, p, k) = (self.n(), self.p(), self.k());
        let mut d = DMatrix::zeros(n, 1 + p + k);
        d.column_mut(0).fill(1.0);
        d.view_mut((0, 1), (n, p)).copy_from(&self.z);
        d.view_mut((0, 1 + p), (n, k)).copy_from(x);
        d
    }
}

/// Hyperparameters of the measurement-error (`u`) and score (`x`) mixtures.
#[derive(Debug, Clone)]
pub struct MixtureHypers {
    pub u: MvnHyper,
    pub x: MvnHyper,
}

struct HyperCache {
    hyper: MvnHyper,
    mean_prec: DMatrix<f64>,
    mean_prec_mean: DVector<f64>,
}

impl HyperCache {
    fn new(hyper: MvnHyper) -> Result<Self> {
        hyper.validate()?;
        let chol = Cholesky::new(hyper.mean_cov.clone())
            .ok_or_else(|| Error::invalid("mixture mean covariance is not positive definite"))?;
        let mean_prec = chol.inverse();
        let mean_prec_mean = &mean_prec * &hyper.mean;
        Ok(Self {
            hyper,
            mean_prec,
            mean_prec_mean,
        })
    }
}

struct CompCache {
    chol: Cholesky<f64, Dyn>,
    logdet: f64,
    prec: DMatrix<f64>,
    prec_mean: DVector<f64>,
}

fn comp_cache(c: &MvnComponent, iteration: usize) -> Result<CompCache> {
    let (chol, _) = cholesky_jitter(&c.cov, JITTER).ok_or_else(|| Error::Numerical {
        iteration,
        message: "mixture covariance is not positive definite".into(),
    })?;
    let logdet = chol_logdet(&chol);
    let prec = chol.inverse();
    let prec_mean = &prec * &c.mean;
    Ok(CompCache {
        chol,
        logdet,
        prec,
        prec_mean,
    })
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln(q(1−q))` for `q = logistic(eta)`.
fn log_logistic_jacobian(eta: f64) -> f64 {
    -softplus(-eta) - softplus(eta)
}

/// A configured Gibbs sampler for one quantile level.
pub struct Sampler {
    data: ModelData,
    priors: PriorConfig,
    mode: Mode,
    tau0: f64,
    bounds: GammaBounds,
    burnin: usize,
    design: Option<DMatrix<f64>>,
    phi_prec: DMatrix<f64>,
    phi_rank: usize,
    u_hyper: Option<HyperCache>,
    x_hyper: Option<HyperCache>,
}

impl Sampler {
    pub fn new(
        data: ModelData,
        priors: PriorConfig,
        mode: Mode,
        tau0: f64,
        burnin: usize,
        hypers: Option<MixtureHypers>,
    ) -> Result<Self> {
        priors.validate()?;
        let bounds = GammaBounds::for_tau0(tau0)?;
        let k = data.k();
        if k == 0 {
            return Err(Error::invalid("at least one basis score is required"));
        }
        let mut phi_prec = data.penalty.clone();
        for i in 0..k {
            phi_prec[(i, i)] += priors.phi_ridge;
        }
        let phi_rank = if priors.phi_ridge > 0.0 {
            k
        } else {
            let e = data.penalty.clone().symmetric_eigen().eigenvalues;
            let top = e.amax();
            e.iter().filter(|v| **v > 1e-9 * top).count()
        };
        let (design, u_hyper, x_hyper) = match mode {
            Mode::FixedX => (Some(data.design(&data.x)), None, None),
            Mode::Full => {
                let reps = data
                    .replicates
                    .as_ref()
                    .ok_or_else(|| Error::invalid("the full model needs replicate scores"))?;
                if reps.first().map_or(0, |m| m.nrows()) < 2 {
                    return Err(Error::ReplicatesRequired("the full model needs J ≥ 2".into()));
                }
                let h = hypers.ok_or_else(|| Error::invalid("the full model needs mixture hyperparameters"))?;
                if h.u.mean.len() != k || h.x.mean.len() != k {
                    return Err(Error::dim("mixture hyperparameters must have dimension K"));
                }
                (None, Some(HyperCache::new(h.u)?), Some(HyperCache::new(h.x)?))
            }
        };
        Ok(Self {
            data,
            priors,
            mode,
            tau0,
            bounds,
            burnin,
            design,
            phi_prec,
            phi_rank,
            u_hyper,
            x_hyper,
        })
    }

    pub fn data(&self) -> &ModelData {
        &self.data
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    pub fn priors(&self) -> &PriorConfig {
        &self.priors
    }

    /// Replaces the response vector, keeping everything else.
    pub fn set_response(&mut self, y: DVector<f64>) -> Result<()> {
        if y.len() != self.data.n() {
            return Err(Error::dim("response length changed"));
        }
        self.data.y = y;
        Ok(())
    }

    /// Replaces the replicate scores, keeping their shape.
    pub fn set_replicates(&mut self, reps: Vec<DMatrix<f64>>) -> Result<()> {
        let old = self
            .data
            .replicates
            .as_ref()
            .ok_or_else(|| Error::invalid("the data have no replicate scores"))?;
        if reps.len() != old.len() || reps.iter().zip(old).any(|(a, b)| a.shape() != b.shape()) {
            return Err(Error::dim("replicate score shapes changed"));
        }
        self.data.replicates = Some(reps);
        Ok(())
    }

    fn replicate_count(&self) -> usize {
        self.data
            .replicates
            .as_ref()
            .and_then(|r| r.first())
            .map_or(0, |m| m.nrows())
    }

    /// Starting state: least-squares coefficients, `θ² = 1`, `γ_k = 0`, GAL scale
    /// from the mean check loss of the residuals, uniformly random labels.
    pub fn init_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ModelState> {
        let (n, p, k) = (self.data.n(), self.data.p(), self.data.k());
        let x = self.data.x.clone();
        let d = self.data.design(&x);
        let m = d.ncols();
        let mut coefs = DVector::zeros(m);
        if n > 0 {
            let mut q = d.tr_mul(&d);
            let scale = (q.trace() / m as f64).max(1e-12);
            for i in 0..m {
                q[(i, i)] += 1e-6 * scale;
            }
            if let Some((c, _)) = cholesky_jitter(&q, JITTER) {
                coefs = c.solve(&d.tr_mul(&self.data.y));
            }
        }
        let mut resid = &self.data.y - &d * &coefs;
        let mut sigma = self.priors.sigma_shape / self.priors.sigma_rate;
        if n > 0 {
            let shift = quantile(resid.as_slice(), self.tau0);
            coefs[0] += shift;
            resid.add_scalar_mut(-shift);
            let tau = self.tau0;
            let check = resid
                .iter()
                .map(|r| if *r >= 0.0 { tau * r } else { (tau - 1.0) * r })
                .sum::<f64>()
                / n as f64;
            if check > 0.0 && check.is_finite() {
                sigma = check;
            }
        }
        let ke = self.priors.k_eps;
        let gal = vec![GalParams::with_bounds(self.tau0, 0.0, sigma, &self.bounds)?; ke];
        let gal_labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..ke)).collect();
        let mut s = vec![0.0; n];
        let mut nu = vec![0.0; n];
        for i in 0..n {
            let l = gal[gal_labels[i]].sample_latents(resid[i], rng);
            s[i] = l.s;
            nu[i] = l.nu;
        }
        let (x_mix, u_mix) = match self.mode {
            Mode::FixedX => (None, None),
            Mode::Full => {
                let xh = &self.x_hyper.as_ref().expect("checked in new").hyper;
                let uh = &self.u_hyper.as_ref().expect("checked in new").hyper;
                let kx = self.priors.k_x;
                let ku = self.priors.k_u;
                let nj = n * self.replicate_count();
                let x_mix = MvnMixtureState {
                    weights: vec![1.0 / kx as f64; kx],
                    components: vec![
                        MvnComponent {
                            mean: xh.mean.clone(),
                            cov: xh.mean_cov.clone(),
                        };
                        kx
                    ],
                    labels: (0..n).map(|_| rng.random_range(0..kx)).collect(),
                };
                let u_mix = MvnMixtureState {
                    weights: vec![1.0 / ku as f64; ku],
                    components: vec![
                        MvnComponent {
                            mean: DVector::zeros(k),
                            cov: uh.mean_cov.clone(),
                        };
                        ku
                    ],
                    labels: (0..nj).map(|_| rng.random_range(0..ku)).collect(),
                };
                (Some(x_mix), Some(u_mix))
            }
        };
        Ok(ModelState {
            beta0: coefs[0],
            beta_z: coefs.rows(1, p).into_owned(),
            phi: coefs.rows(1 + p, k).into_owned(),
            theta2: 1.0,
            s,
            nu,
            gal_labels,
            gal_weights: vec![1.0 / ke as f64; ke],
            gal,
            mh: vec![MhStats::new(); ke],
            x,
            x_mix,
            u_mix,
        })
    }

    pub fn residuals(&self, state: &ModelState) -> DVector<f64> {
        &self.data.y - state.linear_predictor(&self.data.z)
    }

    /// Pointwise log likelihood of the GAL mixture at the current residuals.
    pub fn loglik(&self, state: &ModelState) -> DVector<f64> {
        let mix = state.gal_mixture();
        self.residuals(state).map(|r| mix.logpdf(r))
    }

    /// One full sweep. `iteration` drives proposal adaptation during burn-in.
    pub fn step<R: Rng + ?Sized>(&self, state: &mut ModelState, iteration: usize, rng: &mut R) -> Result<()> {
        self.update_gal_latents(state, rng);
        self.update_coefs(state, iteration, rng)?;
        self.update_theta(state, rng);
        self.update_gal_params(state, iteration, rng);
        self.update_gal_weights(state, rng);
        if self.mode == Mode::Full {
            // the partially collapsed MH step leaves the latents stale
            self.update_gal_latents(state, rng);
            self.update_x(state, iteration, rng)?;
            self.update_u_mix(state, iteration, rng)?;
            self.update_x_mix(state, iteration, rng)?;
        }
        if !state.is_finite() {
            return Err(Error::Divergence {
                iteration,
                last_valid: iteration.checked_sub(1),
                message: "non-finite parameter after sweep".into(),
            });
        }
        Ok(())
    }

    fn update_gal_latents<R: Rng + ?Sized>(&self, state: &mut ModelState, rng: &mut R) {
        let resid = self.residuals(state);
        let ke = state.gal.len();
        let log_w: Vec<f64> = state.gal_weights.iter().map(|w| w.ln()).collect();
        let mut lw = vec![0.0; ke];
        for (i, r) in resid.iter().enumerate() {
            let label = if ke == 1 {
                0
            } else {
                for k in 0..ke {
                    lw[k] = log_w[k] + state.gal[k].logpdf(*r);
                }
                categorical_log(&lw, rng)
            };
            let l = state.gal[label].sample_latents(*r, rng);
            state.gal_labels[i] = label;
            state.s[i] = l.s;
            state.nu[i] = l.nu;
        }
    }

    fn update_coefs<R: Rng + ?Sized>(&self, state: &mut ModelState, iteration: usize, rng: &mut R) -> Result<()> {
        let (n, p, k) = (self.data.n(), self.data.p(), self.data.k());
        let built;
        let d = match &self.design {
            Some(d) => d,
            None => {
                built = self.data.design(&state.x);
                &built
            }
        };
        let mut dw = d.clone();
        let mut t = DVector::zeros(n);
        for i in 0..n {
            let g = &state.gal[state.gal_labels[i]];
            let w = 1.0 / (g.sigma * g.b * state.nu[i]);
            dw.row_mut(i).scale_mut(w);
            t[i] = self.data.y[i] - g.skew_coef() * state.s[i] - g.a * state.nu[i];
        }
        let mut q = d.tr_mul(&dw);
        let b = dw.tr_mul(&t);
        for j in 0..1 + p {
            q[(j, j)] += 1.0 / self.priors.coef_var;
        }
        let mut block = q.view_mut((1 + p, 1 + p), (k, k));
        block += &self.phi_prec / state.theta2;
        symmetrize(&mut q);
        let (chol, _) = cholesky_jitter(&q, JITTER).ok_or_else(|| Error::Numerical {
            iteration,
            message: "coefficient precision is not positive definite".into(),
        })?;
        let draw = mvn_from_precision(&chol, &b, rng);
        state.beta0 = draw[0];
        state.beta_z = draw.rows(1, p).into_owned();
        state.phi = draw.rows(1 + p, k).into_owned();
        Ok(())
    }

    fn update_theta<R: Rng + ?Sized>(&self, state: &mut ModelState, rng: &mut R) {
        let quad = state.phi.dot(&(&self.phi_prec * &state.phi)).max(0.0);
        let r = self.phi_rank as f64;
        state.theta2 = match self.priors.theta {
            ThetaPrior::InvGamma { shape, rate } => 1.0 / gamma_sample(shape + 0.5 * r, rate + 0.5 * quad, rng),
            ThetaPrior::Weibull { scale } => {
                let root = scale.sqrt();
                let logf = |l: f64| -0.5 * r * l - 0.5 * quad * (-l).exp() + 0.5 * l - (0.5 * l).exp() / root;
                slice_sample(state.theta2.ln(), logf, 2.0, rng).exp()
            }
        };
    }

    fn update_gal_params<R: Rng + ?Sized>(&self, state: &mut ModelState, iteration: usize, rng: &mut R) {
        let resid = self.residuals(state);
        let ke = state.gal.len();
        let mut members: Vec<Vec<f64>> = vec![Vec::new(); ke];
        for (i, r) in resid.iter().enumerate() {
            members[state.gal_labels[i]].push(*r);
        }
        if iteration == self.burnin {
            for m in state.mh.iter_mut() {
                m.accepted = 0;
                m.proposed = 0;
            }
        }
        let (lo, hi) = (self.bounds.lower, self.bounds.upper);
        let (a0, b0) = (self.priors.sigma_shape, self.priors.sigma_rate);
        let fix = self.priors.fix_gamma;
        for k in 0..ke {
            let cur = state.gal[k];
            let rs = &members[k];
            let cur_ll: f64 = rs.iter().map(|r| cur.logpdf(*r)).sum();
            let step = state.mh[k].log_scale.exp();
            let q = ((cur.gamma - lo) / (hi - lo)).clamp(1e-300, 1.0 - 1e-16);
            let eta = (q / (1.0 - q)).ln();
            let zeta = cur.sigma.ln();
            let eta_p = if fix {
                eta
            } else {
                eta + step * rng.sample::<f64, _>(StandardNormal)
            };
            let zeta_p = zeta + step * rng.sample::<f64, _>(StandardNormal);
            let gamma_p = if fix {
                cur.gamma
            } else {
                lo + (hi - lo) / (1.0 + (-eta_p).exp())
            };
            let sigma_p = zeta_p.exp();
            let mut proposal = None;
            let log_acc = match GalParams::with_bounds(self.tau0, gamma_p, sigma_p, &self.bounds) {
                Ok(pp) => {
                    let new_ll: f64 = rs.iter().map(|r| pp.logpdf(*r)).sum();
                    let mut diff = new_ll - cur_ll + a0 * (zeta_p - zeta) - b0 * (sigma_p - cur.sigma);
                    if !fix {
                        diff += log_logistic_jacobian(eta_p) - log_logistic_jacobian(eta);
                    }
                    proposal = Some(pp);
                    if diff.is_nan() {
                        f64::NEG_INFINITY
                    } else {
                        diff
                    }
                }
                Err(_) => f64::NEG_INFINITY,
            };
            let acc_prob = log_acc.min(0.0).exp();
            let accept = rng.random::<f64>() < acc_prob;
            if accept {
                state.gal[k] = proposal.expect("accepted proposals are valid");
            }
            let mh = &mut state.mh[k];
            if iteration < self.burnin {
                mh.log_scale += (acc_prob - ADAPT_TARGET) / ((iteration + 1) as f64).powf(0.6);
                mh.log_scale = mh.log_scale.clamp(-12.0, 3.0);
            } else {
                mh.proposed += 1;
                mh.accepted += accept as u64;
            }
        }
    }

    fn update_gal_weights<R: Rng + ?Sized>(&self, state: &mut ModelState, rng: &mut R) {
        let ke = state.gal.len();
        if ke == 1 {
            return;
        }
        let mut conc = vec![self.priors.alpha / ke as f64; ke];
        for l in &state.gal_labels {
            conc[*l] += 1.0;
        }
        state.gal_weights = dirichlet_sample(&conc, rng);
    }

    fn update_x<R: Rng + ?Sized>(&self, state: &mut ModelState, iteration: usize, rng: &mut R) -> Result<()> {
        let reps = self.data.replicates.as_ref().expect("full mode has replicates");
        let j = self.replicate_count();
        let (n, k) = (self.data.n(), self.data.k());
        let u_mix = state.u_mix.as_ref().expect("full mode state");
        let x_mix = state.x_mix.as_ref().expect("full mode state");
        let u_cache = u_mix
            .components
            .iter()
            .map(|c| comp_cache(c, iteration))
            .collect::<Result<Vec<_>>>()?;
        let x_cache = x_mix
            .components
            .iter()
            .map(|c| comp_cache(c, iteration))
            .collect::<Result<Vec<_>>>()?;
        let phi = &state.phi;
        let phi_outer = phi * phi.transpose();
        let zb = &self.data.z * &state.beta_z;
        let mut q = DMatrix::zeros(k, k);
        let mut b = DVector::zeros(k);
        for i in 0..n {
            let xc = &x_cache[x_mix.labels[i]];
            q.copy_from(&xc.prec);
            b.copy_from(&xc.prec_mean);
            for r in 0..j {
                let uc = &u_cache[u_mix.labels[i * j + r]];
                q += &uc.prec;
                let w = reps[i].row(r).transpose();
                b += &uc.prec * w - &uc.prec_mean;
            }
            let g = &state.gal[state.gal_labels[i]];
            let w = 1.0 / (g.sigma * g.b * state.nu[i]);
            let target =
                self.data.y[i] - state.beta0 - zb[i] - g.skew_coef() * state.s[i] - g.a * state.nu[i];
            q += &phi_outer * w;
            b += phi * (w * target);
            symmetrize(&mut q);
            let (chol, _) = cholesky_jitter(&q, JITTER).ok_or_else(|| Error::Numerical {
                iteration,
                message: format!("score precision for subject {i} is not positive definite"),
            })?;
            let draw = mvn_from_precision(&chol, &b, rng);
            state.x.row_mut(i).copy_from(&draw.transpose());
        }
        Ok(())
    }

    fn update_u_mix<R: Rng + ?Sized>(&self, state: &mut ModelState, iteration: usize, rng: &mut R) -> Result<()> {
        let reps = self.data.replicates.as_ref().expect("full mode has replicates");
        let j = self.replicate_count();
        let mut items = Vec::with_capacity(self.data.n() * j);
        for (i, w) in reps.iter().enumerate() {
            let xi = state.x.row(i);
            for r in 0..j {
                items.push((w.row(r) - xi).transpose());
            }
        }
        let h = self.u_hyper.as_ref().expect("full mode hyper");
        let mix = state.u_mix.as_mut().expect("full mode state");
        update_mixture(mix, &items, h, self.priors.alpha_u, iteration, rng)?;
        let centre = mix.weighted_mean();
        for c in mix.components.iter_mut() {
            c.mean -= &centre;
        }
        Ok(())
    }

    fn update_x_mix<R: Rng + ?Sized>(&self, state: &mut ModelState, iteration: usize, rng: &mut R) -> Result<()> {
        let items: Vec<DVector<f64>> = state.x.row_iter().map(|r| r.transpose()).collect();
        let h = self.x_hyper.as_ref().expect("full mode hyper");
        let mix = state.x_mix.as_mut().expect("full mode state");
        update_mixture(mix, &items, h, self.priors.alpha_x, iteration, rng)
    }
}

/// Labels, then covariance, mean and weights of a normal/inverse-Wishart mixture.
fn update_mixture<R: Rng + ?Sized>(
    mix: &mut MvnMixtureState,
    items: &[DVector<f64>],
    h: &HyperCache,
    alpha: f64,
    iteration: usize,
    rng: &mut R,
) -> Result<()> {
    let kc = mix.components.len();
    if kc > 1 {
        let cache = mix
            .components
            .iter()
            .map(|c| comp_cache(c, iteration))
            .collect::<Result<Vec<_>>>()?;
        let log_w: Vec<f64> = mix.weights.iter().map(|w| w.ln()).collect();
        let mut lw = vec![0.0; kc];
        for (l, e) in mix.labels.iter_mut().zip(items) {
            for m in 0..kc {
                lw[m] = log_w[m] + mvn_logpdf_chol(e, &mix.components[m].mean, &cache[m].chol, cache[m].logdet);
            }
            *l = categorical_log(&lw, rng);
        }
    }
    let dim = h.hyper.mean.len();
    for m in 0..kc {
        let mut count = 0usize;
        let mut sum = DVector::zeros(dim);
        let mut scatter = h.hyper.scale.clone();
        let mean = mix.components[m].mean.clone();
        for (l, e) in mix.labels.iter().zip(items) {
            if *l == m {
                count += 1;
                sum += e;
                let d = e - &mean;
                scatter.ger(1.0, &d, &d, 1.0);
            }
        }
        symmetrize(&mut scatter);
        let cov = inv_wishart_sample(h.hyper.dof + count as f64, &scatter, rng).map_err(|e| Error::Numerical {
            iteration,
            message: format!("inverse-Wishart update failed: {e}"),
        })?;
        let cc = comp_cache(
            &MvnComponent {
                mean: mean.clone(),
                cov: cov.clone(),
            },
            iteration,
        )?;
        let mut prec = &h.mean_prec + &cc.prec * count as f64;
        symmetrize(&mut prec);
        let lin = &h.mean_prec_mean + &cc.prec * sum;
        let (chol, _) = cholesky_jitter(&prec, JITTER).ok_or_else(|| Error::Numerical {
            iteration,
            message: "mixture mean precision is not positive definite".into(),
        })?;
        mix.components[m] = MvnComponent {
            mean: mvn_from_precision(&chol, &lin, rng),
            cov,
        };
    }
    if kc > 1 {
        let mut conc = vec![alpha / kc as f64; kc];
        for l in &mix.labels {
            conc[*l] += 1.0;
        }
        mix.weights = dirichlet_sample(&conc, rng);
    }
    Ok(())
}

/// One sweep applied to an owned state.
pub fn gibbs_step<R: Rng + ?Sized>(
    state: ModelState,
    sampler: &Sampler,
    iteration: usize,
    rng: &mut R,
) -> Result<ModelState> {
    let mut s = state;
    sampler.step(&mut s, iteration, rng)?;
    Ok(s)
}

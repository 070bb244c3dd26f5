//! The generalized asymmetric Laplace (GAL) family with its quantile fixed at zero.
//!
//! Parameterization: `ε = C|γ| s + A ν + u √(σ B ν)` with
//!
//! * `s ~ N⁺(0, σ²)` (half normal with scale σ),
//! * `ν ~ Exp` with **mean σ** (so that ε is a σ-scale family),
//! * `u ~ N(0, 1)`,
//! * `τ = I(γ<0) + (τ0 − I(γ<0)) / h(γ)`, `A = (1−2τ)/(τ(1−τ))`, `B = 2/(τ(1−τ))`,
//! * `C = 1 / (I(γ>0) − τ)`.
//!
//! With this choice of `C` the mass to the left of zero is exactly `τ0`. Taking
//! `C = sign(γ)` instead would put `τ·h((1−τ)γ)` there, which is not `τ0`.
//!
//! Conditional on `s`, the remaining two terms form an asymmetric Laplace
//! variable with density `τ(1−τ)/σ · exp(−ρ_τ(x/σ))`. Integrating `s` out gives a
//! closed form made of at most two truncated-normal pieces; [`GalParams::logpdf`]
//! evaluates it in log space and the same pieces drive the exact conditional
//! draw of `s` in the Gibbs sampler. At `γ = 0` the density is the asymmetric
//! Laplace density itself.

use crate::error::{Error, Result};
use crate::sampler::dists::{categorical_log, gig_sample, std_trunc_normal};
use crate::special::{log_ndtr, log_ndtr_diff, logsumexp};
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

const BISECT_TOL: f64 = 1e-12;
const BISECT_START: f64 = 40.0;
const CHI_FLOOR: f64 = 1e-250;

fn ln_h(gamma: f64) -> f64 {
    LN_2 + log_ndtr(-gamma.abs()) + 0.5 * gamma * gamma
}

/// `h(γ) = 2Φ(−|γ|) exp(γ²/2)`, in `(0, 1]`.
pub fn h_of_gamma(gamma: f64) -> Result<f64> {
    if !gamma.is_finite() {
        return Err(Error::domain(format!("h(γ) needs finite γ, got {gamma}")));
    }
    Ok(ln_h(gamma).exp())
}

/// Positive root of `h(γ) = target` for `target` in (0, 1).
fn positive_root(target: f64) -> f64 {
    let ln_target = target.ln();
    let mut hi = BISECT_START;
    // h decays like 1/γ, so very small targets need a wider bracket.
    while ln_h(hi) > ln_target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > BISECT_TOL * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if ln_h(mid) > ln_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Admissible open interval `(γ_L, γ_U)` for a target quantile level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaBounds {
    pub lower: f64,
    pub upper: f64,
}

impl GammaBounds {
    pub fn for_tau0(tau0: f64) -> Result<Self> {
        let (lower, upper) = gamma_bounds(tau0)?;
        Ok(Self { lower, upper })
    }

    pub fn contains(&self, gamma: f64) -> bool {
        gamma > self.lower && gamma < self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `γ_L` is the negative root of `h(γ) − (1 − τ0)`, `γ_U` the positive root of `h(γ) − τ0`.
pub fn gamma_bounds(tau0: f64) -> Result<(f64, f64)> {
    check_tau0(tau0)?;
    Ok((-positive_root(1.0 - tau0), positive_root(tau0)))
}

fn check_tau0(tau0: f64) -> Result<()> {
    if !(tau0 > 0.0 && tau0 < 1.0) {
        return Err(Error::domain(format!("τ0 must lie in (0,1), got {tau0}")));
    }
    Ok(())
}

fn tau_from(tau0: f64, gamma: f64) -> f64 {
    let ind = if gamma < 0.0 { 1.0 } else { 0.0 };
    ind + (tau0 - ind) / ln_h(gamma).exp()
}

/// Skewness level `τ` that puts the `τ0` quantile of `GAL(τ0, γ, ·)` at zero.
pub fn adjust_tau(tau0: f64, gamma: f64) -> Result<f64> {
    let bounds = GammaBounds::for_tau0(tau0)?;
    if !bounds.contains(gamma) {
        return Err(Error::domain(format!(
            "γ = {gamma} outside ({}, {}) for τ0 = {tau0}",
            bounds.lower, bounds.upper
        )));
    }
    Ok(tau_from(tau0, gamma))
}

/// Latent variables of the mixture representation for one observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GalLatents {
    /// Half-normal latent, `s ≥ 0`.
    pub s: f64,
    /// Exponential latent, `ν > 0`.
    pub nu: f64,
}

/// A normal density with unit variance restricted to `[lo, hi]`, weighted.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Piece {
    pub log_weight: f64,
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Quantile-fixed GAL parameters together with their derived constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GalParams {
    pub tau0: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub tau: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl GalParams {
    pub fn new(tau0: f64, gamma: f64, sigma: f64) -> Result<Self> {
        let bounds = GammaBounds::for_tau0(tau0)?;
        Self::with_bounds(tau0, gamma, sigma, &bounds)
    }

    /// Like [`GalParams::new`] with precomputed bounds for `tau0`.
    pub fn with_bounds(tau0: f64, gamma: f64, sigma: f64, bounds: &GammaBounds) -> Result<Self> {
        check_tau0(tau0)?;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!("σ must be positive, got {sigma}")));
        }
        if !bounds.contains(gamma) {
            return Err(Error::domain(format!(
                "γ = {gamma} outside ({}, {}) for τ0 = {tau0}",
                bounds.lower, bounds.upper
            )));
        }
        let tau = tau_from(tau0, gamma);
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::domain(format!("adjusted τ = {tau} left (0,1)")));
        }
        let q = tau * (1.0 - tau);
        let c = if gamma > 0.0 {
            1.0 / (1.0 - tau)
        } else if gamma < 0.0 {
            -1.0 / tau
        } else {
            0.0
        };
        Ok(Self {
            tau0,
            gamma,
            sigma,
            tau,
            a: (1.0 - 2.0 * tau) / q,
            b: 2.0 / q,
            c,
        })
    }

    /// Asymmetric Laplace special case (`γ = 0`).
    pub fn asymmetric_laplace(tau0: f64, sigma: f64) -> Result<Self> {
        Self::new(tau0, 0.0, sigma)
    }

    /// The coefficient `C|γ|` multiplying the half-normal latent.
    pub fn skew_coef(&self) -> f64 {
        self.c * self.gamma.abs()
    }

    pub fn with_sigma(&self, sigma: f64) -> Self {
        Self { sigma, ..*self }
    }

    /// Pieces of `∫ 2φ(u) exp(−ρ_τ(x − c·u)) du` over `u ≥ 0` in standardized units.
    pub(crate) fn pieces(&self, x: f64) -> ([Piece; 2], usize) {
        let tau = self.tau;
        let c = self.skew_coef();
        let empty = Piece {
            log_weight: f64::NEG_INFINITY,
            mean: 0.0,
            lo: 0.0,
            hi: 0.0,
        };
        let mut out = [empty; 2];
        let mut n = 0;
        // region where x − c·u ≥ 0: exp(−τx)·exp(τc·u)
        // region where x − c·u < 0: exp((1−τ)x)·exp(−(1−τ)c·u)
        let pos = (-tau * x, tau * c);
        let neg = ((1.0 - tau) * x, -(1.0 - tau) * c);
        let mut push = |(konst, k): (f64, f64), lo: f64, hi: f64| {
            let mass = if hi == f64::INFINITY {
                log_ndtr(k - lo)
            } else {
                log_ndtr_diff(lo - k, hi - k)
            };
            out[n] = Piece {
                log_weight: konst + 0.5 * k * k + mass,
                mean: k,
                lo,
                hi,
            };
            n += 1;
        };
        if c > 0.0 {
            let brk = x / c;
            if brk > 0.0 {
                push(pos, 0.0, brk);
                push(neg, brk, f64::INFINITY);
            } else {
                push(neg, 0.0, f64::INFINITY);
            }
        } else if c < 0.0 {
            let brk = x / c;
            if brk > 0.0 {
                push(neg, 0.0, brk);
                push(pos, brk, f64::INFINITY);
            } else {
                push(pos, 0.0, f64::INFINITY);
            }
        } else if x >= 0.0 {
            push(pos, 0.0, f64::INFINITY);
        } else {
            push(neg, 0.0, f64::INFINITY);
        }
        (out, n)
    }

    /// Log density at `eps`.
    pub fn logpdf(&self, eps: f64) -> f64 {
        let tau = self.tau;
        let x = eps / self.sigma;
        if self.gamma == 0.0 {
            let rho = if x >= 0.0 { tau * x } else { (tau - 1.0) * x };
            return (tau * (1.0 - tau)).ln() - self.sigma.ln() - rho;
        }
        let (pieces, n) = self.pieces(x);
        let lw: Vec<f64> = pieces[..n].iter().map(|p| p.log_weight).collect();
        (2.0 * tau * (1.0 - tau)).ln() - self.sigma.ln() + logsumexp(&lw)
    }

    pub fn pdf(&self, eps: f64) -> f64 {
        self.logpdf(eps).exp()
    }

    /// One draw together with the latents that produced it.
    pub fn sample_with_latents<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, GalLatents) {
        let z: f64 = rng.sample(StandardNormal);
        let s = self.sigma * z.abs();
        let e: f64 = rng.sample(Exp1);
        let nu = self.sigma * e;
        let u: f64 = rng.sample(StandardNormal);
        let eps = self.skew_coef() * s + self.a * nu + u * (self.sigma * self.b * nu).sqrt();
        (eps, GalLatents { s, nu })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_with_latents(rng).0
    }

    /// Exact draw of `(s, ν)` from their joint conditional given `ε`:
    /// `s` from the truncated-normal pieces, then `ν | s, ε` from a GIG law.
    pub fn sample_latents<R: Rng + ?Sized>(&self, eps: f64, rng: &mut R) -> GalLatents {
        let sigma = self.sigma;
        let s = if self.gamma == 0.0 {
            // s does not enter ε, so it keeps its half-normal prior
            sigma * rng.sample::<f64, _>(StandardNormal).abs()
        } else {
            let (pieces, n) = self.pieces(eps / sigma);
            let pick = if n == 2 {
                categorical_log(&[pieces[0].log_weight, pieces[1].log_weight], rng)
            } else {
                0
            };
            let p = pieces[pick];
            let u = p.mean + std_trunc_normal(p.lo - p.mean, p.hi - p.mean, rng);
            sigma * u.clamp(p.lo, p.hi)
        };
        let d = eps - self.skew_coef() * s;
        let sb = sigma * self.b;
        let chi = (d * d / sb).max(CHI_FLOOR);
        let psi = self.a * self.a / sb + 2.0 / sigma;
        let nu = gig_sample(0.5, chi, psi, rng).expect("χ and ψ are positive");
        GalLatents { s, nu }
    }
}

impl Distribution<f64> for GalParams {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        GalParams::sample(self, rng)
    }
}

/// Log density of the quantile-fixed GAL; see [`GalParams::logpdf`].
pub fn gal_logpdf(eps: f64, params: &GalParams) -> f64 {
    params.logpdf(eps)
}

pub fn gal_sample<R: Rng + ?Sized>(params: &GalParams, rng: &mut R) -> f64 {
    params.sample(rng)
}

/// Finite mixture of GAL components sharing the same `τ0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalMixture {
    pub weights: Vec<f64>,
    pub components: Vec<GalParams>,
}

impl GalMixture {
    pub fn new(weights: Vec<f64>, components: Vec<GalParams>) -> Result<Self> {
        if weights.is_empty() || weights.len() != components.len() {
            return Err(Error::domain(format!(
                "mixture needs matching non-empty weights/components ({} vs {})",
                weights.len(),
                components.len()
            )));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::domain("mixture weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("mixture weights sum to {total}, not 1")));
        }
        let tau0 = components[0].tau0;
        if components.iter().any(|c| c.tau0 != tau0) {
            return Err(Error::domain("mixture components must share τ0"));
        }
        Ok(Self { weights, components })
    }

    pub fn single(params: GalParams) -> Self {
        Self {
            weights: vec![1.0],
            components: vec![params],
        }
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn tau0(&self) -> f64 {
        self.components[0].tau0
    }

    pub fn logpdf(&self, eps: f64) -> f64 {
        if self.k() == 1 {
            return self.components[0].logpdf(eps);
        }
        let terms: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| w.ln() + c.logpdf(eps))
            .collect();
        logsumexp(&terms)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut u: f64 = rng.random();
        let mut idx = self.k() - 1;
        for (k, w) in self.weights.iter().enumerate() {
            if u < *w {
                idx = k;
                break;
            }
            u -= w;
        }
        self.components[idx].sample(rng)
    }
}

pub fn galmix_logpdf(eps: f64, mix: &GalMixture) -> f64 {
    mix.logpdf(eps)
}

pub fn galmix_sample<R: Rng + ?Sized>(mix: &GalMixture, rng: &mut R) -> f64 {
    mix.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate_from_neg_inf, integrate_to_inf};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // mpmath, 40 digits
    const H_ONE: f64 = 0.523_156_583_730_246_7;
    const H_HALF: f64 = 0.699_237_669_440_796_1;
    const ROOT_HALF: f64 = 1.087_643_042_781_705_5;

    #[test]
    fn h_basic_values() {
        assert_eq!(h_of_gamma(0.0).unwrap(), 1.0);
        let (a, b) = (h_of_gamma(1.7).unwrap(), h_of_gamma(-1.7).unwrap());
        assert!((a - b).abs() < 1e-15);
        assert!((h_of_gamma(1.0).unwrap() - H_ONE).abs() < 1e-14);
        assert!((h_of_gamma(0.5).unwrap() - H_HALF).abs() < 1e-14);
        assert!(h_of_gamma(f64::NAN).is_err());
        assert!(h_of_gamma(f64::INFINITY).is_err());
    }

    #[test]
    fn h_is_decreasing_in_magnitude_up_to_thirty() {
        let mut prev = 1.0;
        for i in 1..=3000 {
            let g = i as f64 * 0.01;
            let v = h_of_gamma(g).unwrap();
            assert!(v.is_finite() && v > 0.0 && v < prev, "γ={g}");
            prev = v;
        }
        // large-γ asymptote 2/(γ√(2π))
        let g = 30.0;
        let approx = 2.0 / (g * (2.0 * std::f64::consts::PI).sqrt());
        assert!((h_of_gamma(g).unwrap() / approx - 1.0).abs() < 2e-3);
    }

    #[test]
    fn latent_redraw_preserves_prior_marginals() {
        use crate::diagnostics::{ks_pvalue, ks_statistic};
        use crate::special::ndtr;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for (tau0, gamma, sigma) in [(0.5, 0.0, 1.0), (0.25, 0.9, 2.0), (0.9, -0.7, 0.5), (0.1, 0.2, 1.0)] {
            let p = GalParams::new(tau0, gamma, sigma).unwrap();
            let n = 20_000;
            let mut s = Vec::with_capacity(n);
            let mut nu = Vec::with_capacity(n);
            for _ in 0..n {
                let (eps, _) = p.sample_with_latents(&mut rng);
                let l = p.sample_latents(eps, &mut rng);
                s.push(l.s);
                nu.push(l.nu);
            }
            let ds = ks_statistic(&s, |x| 2.0 * ndtr(x / sigma) - 1.0);
            let dn = ks_statistic(&nu, |x| 1.0 - (-x / sigma).exp());
            assert!(ks_pvalue(ds, n as f64) > 1e-3, "s: {tau0} {gamma}: {ds}");
            assert!(ks_pvalue(dn, n as f64) > 1e-3, "ν: {tau0} {gamma}: {dn}");
        }
    }

    #[test]
    fn bounds_for_median_are_symmetric() {
        let (lo, hi) = gamma_bounds(0.5).unwrap();
        assert!((lo + hi).abs() < 1e-11);
        assert!((hi - ROOT_HALF).abs() < 1e-10);
    }

    #[test]
    fn bounds_residuals_and_signs() {
        for i in 1..100 {
            let tau0 = i as f64 / 100.0;
            let (lo, hi) = gamma_bounds(tau0).unwrap();
            assert!(lo < 0.0 && hi > 0.0);
            assert!((h_of_gamma(hi).unwrap() - tau0).abs() < 1e-10);
            assert!((h_of_gamma(lo).unwrap() - (1.0 - tau0)).abs() < 1e-10);
        }
        assert!(gamma_bounds(0.0).is_err());
        assert!(gamma_bounds(1.0).is_err());
        assert!(gamma_bounds(f64::NAN).is_err());
    }

    #[test]
    fn tiny_tau0_extends_the_bracket() {
        let (_, hi) = gamma_bounds(0.005).unwrap();
        assert!(hi > 40.0);
        assert!((h_of_gamma(hi).unwrap() - 0.005).abs() < 1e-10);
    }

    #[test]
    fn adjust_tau_values() {
        assert!((adjust_tau(0.25, 0.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((adjust_tau(0.5, 0.5).unwrap() - 0.5 / H_HALF).abs() < 1e-12);
        let (lo, hi) = gamma_bounds(0.3).unwrap();
        assert!(adjust_tau(0.3, hi + 1e-3).is_err());
        assert!(adjust_tau(0.3, lo - 1e-3).is_err());
        let near = adjust_tau(0.3, hi * (1.0 - 1e-9)).unwrap();
        assert!(near < 1.0 && near > 0.9999);
        let near = adjust_tau(0.3, lo * (1.0 - 1e-9)).unwrap();
        assert!(near > 0.0 && near < 1e-4);
    }

    #[test]
    fn params_reject_invalid_input() {
        assert!(GalParams::new(0.5, 0.0, 0.0).is_err());
        assert!(GalParams::new(0.5, 0.0, -1.0).is_err());
        assert!(GalParams::new(0.5, 5.0, 1.0).is_err());
        assert!(GalParams::new(1.5, 0.0, 1.0).is_err());
    }

    fn al_density(eps: f64, tau: f64, sigma: f64) -> f64 {
        let x = eps / sigma;
        let rho = x * (tau - if x < 0.0 { 1.0 } else { 0.0 });
        tau * (1.0 - tau) / sigma * (-rho).exp()
    }

    #[test]
    fn gamma_zero_is_asymmetric_laplace() {
        for &tau0 in &[0.1, 0.5, 0.9] {
            let p = GalParams::new(tau0, 0.0, 1.3).unwrap();
            for i in -50..=50 {
                let e = i as f64 * 0.2;
                assert!((p.pdf(e) - al_density(e, tau0, 1.3)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn density_is_continuous_in_gamma_at_zero() {
        let p0 = GalParams::new(0.3, 0.0, 1.0).unwrap();
        let pp = GalParams::new(0.3, 1e-7, 1.0).unwrap();
        let pm = GalParams::new(0.3, -1e-7, 1.0).unwrap();
        for &e in &[-3.0, -0.5, 0.2, 2.0] {
            assert!((p0.logpdf(e) - pp.logpdf(e)).abs() < 1e-5);
            assert!((p0.logpdf(e) - pm.logpdf(e)).abs() < 1e-5);
        }
    }

    fn left_right(p: &GalParams) -> (f64, f64) {
        let left = integrate_from_neg_inf(|e| p.pdf(e), 0.0, p.sigma, 1e-10);
        let right = integrate_to_inf(|e| p.pdf(e), 0.0, p.sigma, 1e-10);
        (left, right)
    }

    #[test]
    fn normalization_and_left_mass_on_stress_grid() {
        for &tau0 in &[0.05, 0.25, 0.5, 0.75, 0.95] {
            let b = GammaBounds::for_tau0(tau0).unwrap();
            for frac in [-0.95, -0.5, 0.0, 0.5, 0.95] {
                let gamma = if frac < 0.0 { -frac * b.lower } else { frac * b.upper };
                for &sigma in &[0.5, 1.0, 5.0] {
                    let p = GalParams::new(tau0, gamma, sigma).unwrap();
                    let (left, right) = left_right(&p);
                    assert!((left + right - 1.0).abs() < 1e-6, "τ0={tau0} γ={gamma} σ={sigma}: {}", left + right);
                    assert!((left - tau0).abs() < 1e-5, "τ0={tau0} γ={gamma} σ={sigma}: left={left}");
                }
            }
        }
    }

    #[test]
    fn logpdf_finite_everywhere() {
        let b = GammaBounds::for_tau0(0.2).unwrap();
        for gamma in [b.lower * 0.999, -0.2, 0.0, 0.3, b.upper * 0.999] {
            let p = GalParams::new(0.2, gamma, 1.0).unwrap();
            for &e in &[-1e4, -50.0, -1e-12, 0.0, 1e-12, 50.0, 1e4] {
                assert!(p.logpdf(e).is_finite(), "γ={gamma} ε={e}");
            }
        }
    }

    #[test]
    fn sample_quantile_sits_at_zero() {
        let p = GalParams::new(0.25, 1.2, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 200_000;
        let below = (0..n).filter(|_| p.sample(&mut rng) < 0.0).count() as f64 / n as f64;
        let se = (0.25f64 * 0.75 / n as f64).sqrt();
        assert!((below - 0.25).abs() < 4.0 * se, "{below}");
    }

    #[test]
    fn mixture_reduces_to_component() {
        let p = GalParams::new(0.4, 0.3, 2.0).unwrap();
        let one = GalMixture::new(vec![1.0], vec![p]).unwrap();
        let two = GalMixture::new(vec![0.5, 0.5], vec![p, p]).unwrap();
        for &e in &[-4.0, -0.1, 0.0, 0.7, 9.0] {
            assert_eq!(one.logpdf(e), p.logpdf(e));
            assert!((two.logpdf(e) - p.logpdf(e)).abs() < 1e-14);
        }
    }

    #[test]
    fn mixture_validation() {
        let p = GalParams::new(0.4, 0.3, 2.0).unwrap();
        let q = GalParams::new(0.5, 0.3, 2.0).unwrap();
        assert!(GalMixture::new(vec![0.5, 0.6], vec![p, p]).is_err());
        assert!(GalMixture::new(vec![0.5, 0.5], vec![p, q]).is_err());
        assert!(GalMixture::new(vec![1.0], vec![p, p]).is_err());
        assert!(GalMixture::new(vec![], vec![]).is_err());
    }

    #[test]
    fn mixture_normalizes() {
        let t = 0.7;
        let b = GammaBounds::for_tau0(t).unwrap();
        let comps = vec![
            GalParams::new(t, 0.5 * b.lower, 0.7).unwrap(),
            GalParams::new(t, 0.0, 1.5).unwrap(),
            GalParams::new(t, 0.8 * b.upper, 3.0).unwrap(),
        ];
        let mix = GalMixture::new(vec![0.2, 0.5, 0.3], comps).unwrap();
        let left = integrate_from_neg_inf(|e| mix.logpdf(e).exp(), 0.0, 1.0, 1e-10);
        let right = integrate_to_inf(|e| mix.logpdf(e).exp(), 0.0, 1.0, 1e-10);
        assert!((left + right - 1.0).abs() < 1e-6, "{}", left + right);
        assert!((left - t).abs() < 1e-5);
    }
}

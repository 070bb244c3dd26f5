//! Random variate generators used by the Gibbs sweeps.

use crate::error::{Error, Result};
use crate::special::logsumexp;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};

fn unif_open<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Standard normal restricted to `[a, ∞)`.
fn std_tail<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    if a <= 0.0 {
        loop {
            let z: f64 = rng.sample(StandardNormal);
            if z >= a {
                return z;
            }
        }
    }
    // Robert (1995) translated exponential proposal
    let alpha = 0.5 * (a + (a * a + 4.0).sqrt());
    loop {
        let e: f64 = rng.sample(Exp1);
        let z = a + e / alpha;
        let d = z - alpha;
        if unif_open(rng).ln() <= -0.5 * d * d {
            return z;
        }
    }
}

/// Standard normal restricted to `[a, b]` with `0 ≤ a < b`.
fn std_interval_right<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let alpha = 0.5 * (a + (a * a + 4.0).sqrt());
    let uniform_ok = b - a <= (0.5 + 0.5 * a * (a - (a * a + 4.0).sqrt()) * 0.5).exp() / alpha;
    if uniform_ok {
        loop {
            let z = a + (b - a) * rng.random::<f64>();
            if unif_open(rng).ln() <= 0.5 * (a * a - z * z) {
                return z;
            }
        }
    }
    loop {
        let z = std_tail(a, rng);
        if z <= b {
            return z;
        }
    }
}

/// Standard normal restricted to `[a, b]`; `b` may be `+∞` and `a` may be `−∞`.
pub fn std_trunc_normal<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if b == f64::INFINITY {
        return std_tail(a, rng);
    }
    if a == f64::NEG_INFINITY {
        return -std_tail(-b, rng);
    }
    if a >= 0.0 {
        return std_interval_right(a, b, rng);
    }
    if b <= 0.0 {
        return -std_interval_right(-b, -a, rng);
    }
    if b - a < (2.0 * std::f64::consts::PI).sqrt() {
        loop {
            let z = a + (b - a) * rng.random::<f64>();
            if unif_open(rng).ln() <= -0.5 * z * z {
                return z;
            }
        }
    }
    loop {
        let z: f64 = rng.sample(StandardNormal);
        if z >= a && z <= b {
            return z;
        }
    }
}

/// A draw from `N(mean, sd²)` conditioned on `(lower, ∞)`.
pub fn trunc_normal_sample<R: Rng + ?Sized>(mean: f64, sd: f64, lower: f64, rng: &mut R) -> f64 {
    mean + sd * std_tail((lower - mean) / sd, rng)
}

fn gig_mode(lambda: f64, omega: f64) -> f64 {
    if lambda >= 1.0 {
        (((lambda - 1.0).powi(2) + omega * omega).sqrt() + (lambda - 1.0)) / omega
    } else {
        omega / (((1.0 - lambda).powi(2) + omega * omega).sqrt() + (1.0 - lambda))
    }
}

// The three generators below follow Hörmann & Leydold (2014) for the
// standardized density x^(λ−1) exp(−ω(x + 1/x)/2), λ ≥ 0.

fn gig_rou_noshift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let ym = ((lambda + 1.0) + ((lambda + 1.0).powi(2) + omega * omega).sqrt()) / omega;
    let um = (0.5 * (lambda + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
    loop {
        let u = um * rng.random::<f64>();
        let v = unif_open(rng);
        let x = u / v;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn gig_rou_shift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let a = -(2.0 * (lambda + 1.0) / omega + xm);
    let b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
    let c = xm;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let fi = (-q / (2.0 * (-(p * p * p) / 27.0).sqrt())).clamp(-1.0, 1.0).acos();
    let fak = 2.0 * (-p / 3.0).sqrt();
    let y1 = fak * (fi / 3.0).cos() - a / 3.0;
    let y2 = fak * (fi / 3.0 + 4.0 / 3.0 * std::f64::consts::PI).cos() - a / 3.0;
    let uplus = (y1 - xm) * (t * y1.ln() - s * (y1 + 1.0 / y1) - nc).exp();
    let uminus = (y2 - xm) * (t * y2.ln() - s * (y2 + 1.0 / y2) - nc).exp();
    loop {
        let u = uminus + rng.random::<f64>() * (uplus - uminus);
        let v = unif_open(rng);
        let x = u / v + xm;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn gig_new_approach<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let xm = gig_mode(lambda, omega);
    let x0 = omega / (1.0 - lambda);
    let k0 = ((lambda - 1.0) * xm.ln() - 0.5 * omega * (xm + 1.0 / xm)).exp();
    let a0 = k0 * x0;
    let (k1, a1, k2, a2);
    if x0 >= 2.0 / omega {
        k1 = 0.0;
        a1 = 0.0;
        k2 = x0.powf(lambda - 1.0);
        a2 = k2 * 2.0 * (-omega * x0 / 2.0).exp() / omega;
    } else {
        k1 = (-omega).exp();
        a1 = if lambda == 0.0 {
            k1 * (2.0 / (omega * omega)).ln()
        } else {
            k1 / lambda * ((2.0 / omega).powf(lambda) - x0.powf(lambda))
        };
        k2 = (2.0 / omega).powf(lambda - 1.0);
        a2 = k2 * 2.0 * (-1.0f64).exp() / omega;
    }
    let total = a0 + a1 + a2;
    loop {
        let mut v = total * rng.random::<f64>();
        let (x, hx);
        if v <= a0 {
            x = x0 * v / a0;
            hx = k0;
        } else {
            v -= a0;
            if v <= a1 {
                if lambda == 0.0 {
                    x = omega * (omega.exp() * v).exp();
                    hx = k1 / x;
                } else {
                    x = (x0.powf(lambda) + lambda / k1 * v).powf(1.0 / lambda);
                    hx = k1 * x.powf(lambda - 1.0);
                }
            } else {
                v -= a1;
                let a = x0.max(2.0 / omega);
                x = -2.0 / omega * ((-omega / 2.0 * a).exp() - omega / (2.0 * k2) * v).ln();
                hx = k2 * (-omega / 2.0 * x).exp();
            }
        }
        if !(x > 0.0 && x.is_finite()) {
            continue;
        }
        let u = rng.random::<f64>() * hx;
        if u.ln() <= (lambda - 1.0) * x.ln() - omega / 2.0 * (x + 1.0 / x) {
            return x;
        }
    }
}

/// One draw from the generalized inverse Gaussian law with density
/// `∝ x^(λ−1) exp(−(χ/x + ψx)/2)`.
pub fn gig_sample<R: Rng + ?Sized>(lambda: f64, chi: f64, psi: f64, rng: &mut R) -> Result<f64> {
    if !(chi > 0.0 && psi > 0.0 && chi.is_finite() && psi.is_finite() && lambda.is_finite()) {
        return Err(Error::domain(format!(
            "GIG needs finite λ and positive χ, ψ (got λ = {lambda}, χ = {chi}, ψ = {psi})"
        )));
    }
    let lam = lambda.abs();
    let alpha = (chi / psi).sqrt();
    let omega = (chi * psi).sqrt();
    let y = if lam > 2.0 || omega > 3.0 {
        gig_rou_shift(lam, omega, rng)
    } else if lam >= 1.0 - 2.25 * omega * omega || omega > 0.2 {
        gig_rou_noshift(lam, omega, rng)
    } else {
        gig_new_approach(lam, omega, rng)
    };
    Ok(if lambda < 0.0 { alpha / y } else { alpha * y })
}

/// Gamma variate returned on the log scale, accurate for tiny shapes.
pub fn log_gamma_sample<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        let g: f64 = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
        return g.ln();
    }
    let g: f64 = Gamma::new(shape + 1.0, 1.0).expect("positive shape").sample(rng);
    g.ln() + unif_open(rng).ln() / shape
}

pub fn gamma_sample<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    (log_gamma_sample(shape, rng) - rate.ln()).exp()
}

pub fn dirichlet_sample<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Vec<f64> {
    let lg: Vec<f64> = alpha.iter().map(|a| log_gamma_sample(*a, rng)).collect();
    let norm = logsumexp(&lg);
    lg.iter().map(|v| (v - norm).exp()).collect()
}

/// Index drawn with probabilities proportional to `exp(log_w)`.
pub fn categorical_log<R: Rng + ?Sized>(log_w: &[f64], rng: &mut R) -> usize {
    let m = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut acc = 0.0;
    let mut cum = [0.0f64; 16];
    let mut heap;
    let cum: &mut [f64] = if log_w.len() <= 16 {
        &mut cum[..log_w.len()]
    } else {
        heap = vec![0.0; log_w.len()];
        &mut heap
    };
    for (c, l) in cum.iter_mut().zip(log_w) {
        acc += (l - m).exp();
        *c = acc;
    }
    let u = rng.random::<f64>() * acc;
    cum.iter().position(|c| u < *c).unwrap_or(log_w.len() - 1)
}

pub fn std_normal_vec<R: Rng + ?Sized>(k: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(k, |_, _| rng.sample(StandardNormal))
}

/// Draw from `N(Q⁻¹b, Q⁻¹)` given the Cholesky factor of the precision `Q`.
pub fn mvn_from_precision<R: Rng + ?Sized>(chol: &Cholesky<f64, Dyn>, b: &DVector<f64>, rng: &mut R) -> DVector<f64> {
    let l = chol.l_dirty();
    let mut v = l.solve_lower_triangular(b).expect("nonzero diagonal");
    v += std_normal_vec(b.len(), rng);
    l.tr_solve_lower_triangular(&v).expect("nonzero diagonal")
}

/// Draw from `N(mean, LLᵀ)` given the lower Cholesky factor `L` of the covariance.
pub fn mvn_from_cov_factor<R: Rng + ?Sized>(mean: &DVector<f64>, l: &DMatrix<f64>, rng: &mut R) -> DVector<f64> {
    mean + l * std_normal_vec(mean.len(), rng)
}

/// Inverse-Wishart draw with `dof` degrees of freedom and scale `psi`
/// (mean `psi / (dof − k − 1)`), by the Bartlett decomposition.
pub fn inv_wishart_sample<R: Rng + ?Sized>(dof: f64, psi: &DMatrix<f64>, rng: &mut R) -> Result<DMatrix<f64>> {
    let k = psi.nrows();
    if dof <= (k as f64) - 1.0 {
        return Err(Error::domain(format!("inverse-Wishart dof {dof} must exceed k − 1 = {}", k - 1)));
    }
    let psi_inv = Cholesky::new(psi.clone())
        .ok_or_else(|| Error::domain("inverse-Wishart scale is not positive definite"))?
        .inverse();
    let l = Cholesky::new(psi_inv)
        .ok_or_else(|| Error::domain("inverse-Wishart scale is ill conditioned"))?
        .l();
    let mut a = DMatrix::zeros(k, k);
    for i in 0..k {
        let shape = 0.5 * (dof - i as f64);
        a[(i, i)] = (2.0 * gamma_sample(shape, 1.0, rng)).sqrt();
        for j in 0..i {
            a[(i, j)] = rng.sample(StandardNormal);
        }
    }
    // W = (LA)(LA)ᵀ, Σ = W⁻¹ = (LA)⁻ᵀ(LA)⁻¹
    let la = l * a;
    let inv = la
        .solve_lower_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::domain("degenerate Bartlett factor"))?;
    let mut sigma = inv.tr_mul(&inv);
    crate::linalg::symmetrize(&mut sigma);
    Ok(sigma)
}

/// One univariate slice-sampling update (stepping out, then shrinkage) of
/// `x0` under the log density `logf`.
pub fn slice_sample<R: Rng + ?Sized, F: Fn(f64) -> f64>(x0: f64, logf: F, width: f64, rng: &mut R) -> f64 {
    let level = logf(x0) + unif_open(rng).ln();
    let mut lo = x0 - width * rng.random::<f64>();
    let mut hi = lo + width;
    for _ in 0..64 {
        if logf(lo) < level {
            break;
        }
        lo -= width;
    }
    for _ in 0..64 {
        if logf(hi) < level {
            break;
        }
        hi += width;
    }
    loop {
        let x = lo + (hi - lo) * rng.random::<f64>();
        if logf(x) >= level {
            return x;
        }
        if x < x0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo < 1e-12 * (1.0 + x0.abs()) {
            return x0;
        }
    }
}

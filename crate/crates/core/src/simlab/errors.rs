//! Response error distributions for simulation, selectable by name.

use crate::error::{Error, Result};
use crate::quad::integrate_from_neg_inf;
use rand::RngCore;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::gamma::ln_gamma;
use std::collections::BTreeMap;
use std::fmt::Debug;

pub trait ErrorModel: Send + Sync + Debug {
    fn name(&self) -> &'static str;
    fn sample(&self, rng: &mut dyn RngCore) -> f64;
    fn cdf(&self, x: f64) -> f64;

    /// `F⁻¹(p)` by bracketing and bisection on [`ErrorModel::cdf`].
    fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!("quantile level must lie in (0,1), got {p}")));
        }
        let (mut lo, mut hi) = (-1.0, 1.0);
        while self.cdf(lo) > p {
            lo *= 2.0;
            if lo < -1e12 {
                return Err(Error::Numerical { iteration: 0, message: "quantile bracket diverged".into() });
            }
        }
        while self.cdf(hi) < p {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::Numerical { iteration: 0, message: "quantile bracket diverged".into() });
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-12 * hi.abs().max(1.0) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalError {
    pub sd: f64,
}

impl ErrorModel for NormalError {
    fn name(&self) -> &'static str {
        "normal"
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.sd * z
    }

    fn cdf(&self, x: f64) -> f64 {
        crate::special::ndtr(x / self.sd)
    }
}

/// Azzalini skew-t with location `xi`, unit scale, `dof` degrees of freedom and slant `slant`.
#[derive(Debug, Clone)]
pub struct SkewTError {
    pub xi: f64,
    pub dof: f64,
    pub slant: f64,
    t_dof: StudentsT,
    t_dof1: StudentsT,
}

impl SkewTError {
    pub fn new(xi: f64, dof: f64, slant: f64) -> Result<Self> {
        if !(dof > 0.0 && dof.is_finite()) || !xi.is_finite() || !slant.is_finite() {
            return Err(Error::domain(format!("invalid skew-t parameters ({xi}, {dof}, {slant})")));
        }
        let t = |d: f64| StudentsT::new(0.0, 1.0, d).map_err(|e| Error::domain(e.to_string()));
        Ok(Self { xi, dof, slant, t_dof: t(dof)?, t_dof1: t(dof + 1.0)? })
    }

    /// `2 t_ν(x) T_{ν+1}(α x √((ν+1)/(ν+x²)))` at `x − xi`.
    pub fn pdf(&self, x: f64) -> f64 {
        let x = x - self.xi;
        let nu = self.dof;
        let log_t = ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * std::f64::consts::PI).ln()
            - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p();
        let arg = self.slant * x * ((nu + 1.0) / (nu + x * x)).sqrt();
        2.0 * log_t.exp() * self.t_dof1.cdf(arg)
    }
}

impl ErrorModel for SkewTError {
    fn name(&self) -> &'static str {
        "skew_t"
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        skew_t_draw(self.xi, self.dof, self.slant, rng)
    }

    fn cdf(&self, x: f64) -> f64 {
        if self.slant == 0.0 {
            return self.t_dof.cdf(x - self.xi);
        }
        integrate_from_neg_inf(|v| self.pdf(v), x, 1.0, 1e-12).clamp(0.0, 1.0)
    }
}

fn skew_t_draw(xi: f64, dof: f64, slant: f64, rng: &mut dyn RngCore) -> f64 {
    let delta = slant / (1.0 + slant * slant).sqrt();
    let z0: f64 = StandardNormal.sample(rng);
    let z1: f64 = StandardNormal.sample(rng);
    let w = ChiSquared::new(dof).expect("dof checked positive").sample(rng);
    xi + (delta * z0.abs() + (1.0 - delta * delta).sqrt() * z1) / (w / dof).sqrt()
}

/// One Azzalini skew-t draw.
pub fn skew_t_sample(xi: f64, dof: f64, slant: f64, rng: &mut dyn RngCore) -> Result<f64> {
    if !(dof > 0.0 && dof.is_finite()) {
        return Err(Error::domain(format!("dof must be positive, got {dof}")));
    }
    Ok(skew_t_draw(xi, dof, slant, rng))
}

/// A named error model plus its numeric parameters, e.g.
/// `{ "kind": "skew_t", "xi": 0, "dof": 5, "slant": 2 }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSpec {
    pub kind: String,
    #[serde(flatten)]
    pub params: BTreeMap<String, f64>,
}

impl ErrorSpec {
    pub fn normal(sd: f64) -> Self {
        Self { kind: "normal".into(), params: BTreeMap::from([("sd".to_string(), sd)]) }
    }

    pub fn skew_t(xi: f64, dof: f64, slant: f64) -> Self {
        Self {
            kind: "skew_t".into(),
            params: BTreeMap::from([("xi".to_string(), xi), ("dof".to_string(), dof), ("slant".to_string(), slant)]),
        }
    }

    fn take(&self, allowed: &[(&str, f64)]) -> Result<Vec<f64>> {
        if let Some(k) = self.params.keys().find(|k| !allowed.iter().any(|(a, _)| a == k)) {
            let names: Vec<&str> = allowed.iter().map(|(a, _)| *a).collect();
            return Err(Error::invalid(format!(
                "unknown parameter '{k}' for error model '{}' (expected {})",
                self.kind,
                names.join(", ")
            )));
        }
        Ok(allowed.iter().map(|(a, d)| self.params.get(*a).copied().unwrap_or(*d)).collect())
    }
}

pub type ErrorFactory = fn(&ErrorSpec) -> Result<Box<dyn ErrorModel>>;

fn build_normal(spec: &ErrorSpec) -> Result<Box<dyn ErrorModel>> {
    let v = spec.take(&[("sd", 1.0)])?;
    if !(v[0] > 0.0 && v[0].is_finite()) {
        return Err(Error::domain(format!("normal sd must be positive, got {}", v[0])));
    }
    Ok(Box::new(NormalError { sd: v[0] }))
}

fn build_skew_t(spec: &ErrorSpec) -> Result<Box<dyn ErrorModel>> {
    let v = spec.take(&[("xi", 0.0), ("dof", 5.0), ("slant", 2.0)])?;
    Ok(Box::new(SkewTError::new(v[0], v[1], v[2])?))
}

/// Error models selectable by [`ErrorSpec::kind`].
#[derive(Debug, Clone)]
pub struct ErrorModelRegistry {
    factories: BTreeMap<String, ErrorFactory>,
}

impl ErrorModelRegistry {
    pub fn empty() -> Self {
        Self { factories: BTreeMap::new() }
    }

    /// `normal` (sd) and `skew_t` (xi, dof, slant).
    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        r.register("normal", build_normal);
        r.register("skew_t", build_skew_t);
        r
    }

    pub fn register(&mut self, name: &str, f: ErrorFactory) {
        self.factories.insert(name.to_string(), f);
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    pub fn build(&self, spec: &ErrorSpec) -> Result<Box<dyn ErrorModel>> {
        let f = self.factories.get(&spec.kind).ok_or_else(|| Error::UnknownStrategy {
            kind: "error model",
            name: spec.kind.clone(),
            available: self.names().join(", "),
        })?;
        f(spec)
    }
}

impl Default for ErrorModelRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}

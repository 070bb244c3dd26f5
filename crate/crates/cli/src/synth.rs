//! Synthetic minute-level activity data with replicate days, non-wear gaps and
//! spikes, generated from a known scalar-on-function model.

use crate::ingest::{DayCurve, RawData, SubjectRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActivityConfig {
    /// Subjects with enough valid days.
    pub n: usize,
    /// Extra subjects with too few valid days, dropped by preprocessing.
    pub n_short: usize,
    /// Recorded days per subject.
    pub days: usize,
    /// Days per kept subject that exceed the invalid-minute limit.
    pub bad_days: usize,
    /// Grid length; must exceed the 144-minute invalid limit.
    pub minutes: usize,
    /// Variance of the day-level deviation relative to the subject-level one.
    pub noise_ratio: f64,
    /// Standard deviation of the unstructured minute-level noise.
    pub white_sd: f64,
    pub error_sd: f64,
    pub beta_z: Vec<f64>,
    pub seed: u64,
}

impl Default for ActivityConfig {
    fn default() -> Self {
        Self {
            n: 150,
            n_short: 2,
            days: 7,
            bad_days: 2,
            minutes: 1440,
            noise_ratio: 3.0,
            white_sd: 1.0,
            error_sd: 1.0,
            beta_z: vec![0.5, -0.3],
            seed: 7,
        }
    }
}

/// Generating coefficient function on the day rescaled to `[0, 1]`.
pub fn activity_beta(s: f64) -> f64 {
    2.0 * (2.0 * PI * s).cos() + 1.5 * (2.0 * PI * s).sin()
}

fn mean_profile(s: f64) -> f64 {
    10.0 - 6.0 * (2.0 * PI * s).cos() - 2.0 * (4.0 * PI * s).cos()
}

/// Orthonormal directions on `[0, 1]` with their subject-level variances.
fn directions() -> Vec<(Box<dyn Fn(f64) -> f64>, f64)> {
    let mut out: Vec<(Box<dyn Fn(f64) -> f64>, f64)> = Vec::new();
    for (k, var) in [(1.0, 1.0), (2.0, 0.5), (3.0, 0.25)] {
        out.push((Box::new(move |s: f64| 2f64.sqrt() * (2.0 * PI * k * s).cos()), var));
        out.push((Box::new(move |s: f64| 2f64.sqrt() * (2.0 * PI * k * s).sin()), var));
    }
    out
}

fn trapezoid_unit(values: &[f64]) -> f64 {
    let h = 1.0 / (values.len() - 1) as f64;
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    h * (inner + 0.5 * (values[0] + values[values.len() - 1]))
}

/// Latent curve `X_i = m + Σ a_ik ψ_k`; day `j` records `X_i + Σ b_ijk ψ_k + e`
/// with `var(b_ijk) = noise_ratio · var(a_ik)`. Invalid minutes hold zero.
/// `Y_i = 1 + ∫ β X_i + z_i'β_z + ε_i` with the integral over the unit-rescaled day.
pub fn simulate_activity(cfg: &ActivityConfig) -> RawData {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let t = cfg.minutes;
    let grid: Vec<f64> = (0..t).map(|m| m as f64).collect();
    let unit: Vec<f64> = (0..t).map(|m| m as f64 / (t - 1) as f64).collect();
    let dirs = directions();
    let basis: Vec<Vec<f64>> = dirs.iter().map(|(f, _)| unit.iter().map(|&s| f(s)).collect()).collect();
    let mean: Vec<f64> = unit.iter().map(|&s| mean_profile(s)).collect();
    let beta: Vec<f64> = unit.iter().map(|&s| activity_beta(s)).collect();
    let white = Normal::new(0.0, cfg.white_sd).expect("valid sd");
    let limit = 144;

    let total = cfg.n + cfg.n_short;
    let mut subjects = Vec::with_capacity(total);
    for i in 0..total {
        let short = i >= cfg.n;
        let a: Vec<f64> = dirs
            .iter()
            .map(|(_, v)| v.sqrt() * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let x: Vec<f64> = (0..t)
            .map(|c| mean[c] + a.iter().zip(&basis).map(|(ak, b)| ak * b[c]).sum::<f64>())
            .collect();
        let bx: Vec<f64> = x.iter().zip(&beta).map(|(x, b)| x * b).collect();
        let z = vec![rng.sample::<f64, _>(StandardNormal), f64::from(rng.random_bool(0.5))];
        let lin: f64 = z.iter().zip(&cfg.beta_z).map(|(z, b)| z * b).sum();
        let y = 1.0 + trapezoid_unit(&bx) + lin + cfg.error_sd * rng.sample::<f64, _>(StandardNormal);

        let bad = if short { cfg.days - 2 } else { cfg.bad_days };
        let mut days = Vec::with_capacity(cfg.days);
        for d in 0..cfg.days {
            let b: Vec<f64> = dirs
                .iter()
                .map(|(_, v)| (cfg.noise_ratio * v).sqrt() * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let mut values: Vec<f64> = (0..t)
                .map(|c| x[c] + b.iter().zip(&basis).map(|(bk, ph)| bk * ph[c]).sum::<f64>() + white.sample(&mut rng))
                .collect();
            let gap = if d < bad {
                rng.random_range(limit + 1..=(3 * limit).min(t))
            } else {
                rng.random_range(0..limit / 2)
            };
            let start = rng.random_range(0..=t - gap);
            let mut invalid = vec![false; t];
            for c in start..start + gap {
                invalid[c] = true;
                values[c] = 0.0;
            }
            if rng.random_bool(0.3) {
                let c = rng.random_range(0..t);
                if !invalid[c] {
                    values[c] += 200.0;
                }
            }
            days.push(DayCurve { id: format!("d{}", d + 1), values, invalid });
        }
        subjects.push(SubjectRecord { id: format!("s{:03}", i + 1), days, y, z });
    }
    RawData { grid, subjects, covariates: vec!["z_1".into(), "z_2".into()] }
}

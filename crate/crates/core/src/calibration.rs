//! Naive replicate averaging and regression calibration of basis scores.

use crate::basis::BasisSystem;
use crate::dataset::FunctionalDataset;
use crate::error::{Error, Result};
use crate::linalg::{clip_psd, symmetrize};
use nalgebra::{Cholesky, DMatrix, DVector};

const RC_JITTER: f64 = 1e-10;

/// Calibrated scores plus the moment estimates behind them.
#[derive(Debug, Clone)]
pub struct ScoreDataset {
    /// `n × K` projected replicate means.
    pub wbar_scores: DMatrix<f64>,
    /// `n × K` best linear predictions of the latent scores.
    pub xhat_scores: DMatrix<f64>,
    pub sigma_x_hat: DMatrix<f64>,
    pub sigma_u_hat: DMatrix<f64>,
    pub mu_x_hat: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct MomentEstimates {
    pub mu_x: DVector<f64>,
    pub sigma_x: DMatrix<f64>,
    pub sigma_u: DMatrix<f64>,
}

fn check_basis(data: &FunctionalDataset, basis: &BasisSystem) -> Result<()> {
    if data.grid.len() != basis.grid().len()
        || data.grid.iter().zip(basis.grid()).any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + a.abs()))
    {
        return Err(Error::dim("dataset grid differs from the basis grid"));
    }
    Ok(())
}

/// `diag(w) B`, so that a row of curve values times it gives the projection.
fn projector(basis: &BasisSystem) -> DMatrix<f64> {
    let mut m = basis.basis_matrix().clone();
    for (mut row, w) in m.row_iter_mut().zip(basis.quad_weights()) {
        row *= *w;
    }
    m
}

/// Projected scores of every replicate: one `J × K` matrix per subject.
pub fn replicate_scores(data: &FunctionalDataset, basis: &BasisSystem) -> Result<Vec<DMatrix<f64>>> {
    check_basis(data, basis)?;
    let proj = projector(basis);
    Ok(data.w.iter().map(|w| w * &proj).collect())
}

/// Projection of each subject's replicate mean, `n × K`.
pub fn naive_scores(data: &FunctionalDataset, basis: &BasisSystem) -> Result<DMatrix<f64>> {
    check_basis(data, basis)?;
    let proj = projector(basis);
    let n = data.n();
    let k = basis.n_basis();
    let mut out = DMatrix::zeros(n, k);
    for i in 0..n {
        let wbar = DVector::from_vec(data.replicate_mean(i));
        out.row_mut(i).copy_from(&(proj.tr_mul(&wbar)).transpose());
    }
    Ok(out)
}

/// Method-of-moments estimates from per-subject replicate scores (`J × K` each).
pub fn score_moments(scores: &[DMatrix<f64>]) -> Result<MomentEstimates> {
    let n = scores.len();
    if n < 2 {
        return Err(Error::invalid("moment estimates need at least two subjects"));
    }
    let j = scores[0].nrows();
    let k = scores[0].ncols();
    if j < 2 {
        return Err(Error::ReplicatesRequired(format!(
            "moment estimates need J ≥ 2, got J = {j}"
        )));
    }
    if scores.iter().any(|s| s.nrows() != j || s.ncols() != k) {
        return Err(Error::dim("replicate score arrays differ in shape"));
    }
    let means: Vec<DVector<f64>> = scores.iter().map(|s| s.row_mean().transpose()).collect();
    let mu = means.iter().fold(DVector::zeros(k), |acc, m| acc + m) / n as f64;

    let mut within = DMatrix::zeros(k, k);
    for (s, m) in scores.iter().zip(&means) {
        for r in s.row_iter() {
            let d = r.transpose() - m;
            within.ger(1.0, &d, &d, 1.0);
        }
    }
    within /= (n * (j - 1)) as f64;
    symmetrize(&mut within);

    let mut between = DMatrix::zeros(k, k);
    for m in &means {
        let d = m - &mu;
        between.ger(1.0, &d, &d, 1.0);
    }
    between /= (n - 1) as f64;

    let sigma_x = clip_psd(&(between - &within / j as f64));
    Ok(MomentEstimates {
        mu_x: mu,
        sigma_x,
        sigma_u: within,
    })
}

pub fn moment_estimates(data: &FunctionalDataset, basis: &BasisSystem) -> Result<MomentEstimates> {
    data.require_replicates(2, "moment estimation")?;
    score_moments(&replicate_scores(data, basis)?)
}

/// `μ + Σx (Σx + Σu/J)⁻¹ (w̄ − μ)` applied to each row of `wbar`.
pub fn blup(wbar: &DMatrix<f64>, m: &MomentEstimates, j: usize) -> Result<DMatrix<f64>> {
    let k = m.mu_x.len();
    let mut a = &m.sigma_x + &m.sigma_u / j as f64;
    symmetrize(&mut a);
    let chol = match Cholesky::new(a.clone()) {
        Some(c) => c,
        None => {
            let scale = (a.trace() / k as f64).abs().max(f64::MIN_POSITIVE);
            let mut aj = a.clone();
            for i in 0..k {
                aj[(i, i)] += RC_JITTER * scale;
            }
            Cholesky::new(aj).ok_or_else(|| {
                let e = a.clone().symmetric_eigen().eigenvalues;
                let (lo, hi) = (e.min(), e.max());
                Error::Singular(format!(
                    "calibration matrix has eigenvalues in [{lo:e}, {hi:e}], condition number {:e}",
                    if lo > 0.0 { hi / lo } else { f64::INFINITY }
                ))
            })?
        }
    };
    // gain = Σx A⁻¹, so gainᵀ = A⁻¹ Σx since both are symmetric
    let gain_t = chol.solve(&m.sigma_x);
    let mut centered = wbar.clone();
    for mut row in centered.row_iter_mut() {
        row -= m.mu_x.transpose();
    }
    let mut out = centered * gain_t;
    for mut row in out.row_iter_mut() {
        row += m.mu_x.transpose();
    }
    Ok(out)
}

pub fn rc_calibrate(data: &FunctionalDataset, basis: &BasisSystem) -> Result<ScoreDataset> {
    data.require_replicates(2, "regression calibration")?;
    let reps = replicate_scores(data, basis)?;
    let m = score_moments(&reps)?;
    let k = basis.n_basis();
    let mut wbar = DMatrix::zeros(data.n(), k);
    for (i, s) in reps.iter().enumerate() {
        wbar.row_mut(i).copy_from(&s.row_mean());
    }
    let xhat = blup(&wbar, &m, data.j())?;
    Ok(ScoreDataset {
        wbar_scores: wbar,
        xhat_scores: xhat,
        sigma_x_hat: m.sigma_x,
        sigma_u_hat: m.sigma_u,
        mu_x_hat: m.mu_x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::unit_grid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(rng: &mut ChaCha8Rng, chol_l: &DMatrix<f64>) -> DVector<f64> {
        let z = DVector::from_fn(chol_l.nrows(), |_, _| StandardNormal.sample(rng));
        chol_l * z
    }

    fn score_sample(
        n: usize,
        j: usize,
        sx: &DMatrix<f64>,
        su: &DMatrix<f64>,
        seed: u64,
    ) -> (Vec<DVector<f64>>, Vec<DMatrix<f64>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lx = Cholesky::new(sx.clone()).unwrap().l();
        let lu = Cholesky::new(su.clone()).unwrap().l();
        let k = sx.nrows();
        let mut xs = Vec::new();
        let mut ws = Vec::new();
        for _ in 0..n {
            let x = gaussian(&mut rng, &lx);
            let mut w = DMatrix::zeros(j, k);
            for r in 0..j {
                let u = gaussian(&mut rng, &lu);
                w.row_mut(r).copy_from(&(&x + u).transpose());
            }
            xs.push(x);
            ws.push(w);
        }
        (xs, ws)
    }

    fn curve_data(n: usize, j: usize, noise: f64, seed: u64) -> (FunctionalDataset, BasisSystem) {
        let grid = unit_grid(30);
        let basis = BasisSystem::new(&grid, 6, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = Vec::new();
        for _ in 0..n {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            let mut m = DMatrix::zeros(j, grid.len());
            for r in 0..j {
                for (c, t) in grid.iter().enumerate() {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    m[(r, c)] = a + b * (std::f64::consts::TAU * t).sin() + noise * e;
                }
            }
            w.push(m);
        }
        let z = DMatrix::zeros(n, 1);
        let ds = FunctionalDataset::new(grid, w, z, vec![0.0; n]).unwrap();
        (ds, basis)
    }

    #[test]
    fn naive_scores_without_noise_match_projection() {
        let (ds, basis) = curve_data(5, 1, 0.0, 1);
        let s = naive_scores(&ds, &basis).unwrap();
        for i in 0..5 {
            let p = basis.project_curve(ds.w[i].row(0).transpose().as_slice()).unwrap();
            assert!((s.row(i).transpose() - p).amax() < 1e-13);
        }
        // identical replicates average to the single projection
        let mut dup = ds.clone();
        dup.w = ds.w.iter().map(|m| DMatrix::from_fn(3, m.ncols(), |_, c| m[(0, c)])).collect();
        let s3 = naive_scores(&dup, &basis).unwrap();
        assert!((s3 - &s).amax() < 1e-13);
        // a constant shift moves scores by c·project(1)
        let mut shifted = ds.clone();
        shifted.w = ds.w.iter().map(|m| m.add_scalar(2.5)).collect();
        let ones = basis.project_curve(&vec![1.0; ds.t()]).unwrap();
        let s2 = naive_scores(&shifted, &basis).unwrap();
        for i in 0..5 {
            assert!((s2.row(i).transpose() - s.row(i).transpose() - &ones * 2.5).amax() < 1e-12);
        }
    }

    #[test]
    fn zero_noise_moments_and_identity_calibration() {
        let (ds1, basis) = curve_data(40, 1, 0.0, 2);
        let mut ds = ds1.clone();
        ds.w = ds1.w.iter().map(|m| DMatrix::from_fn(2, m.ncols(), |_, c| m[(0, c)])).collect();
        let m = moment_estimates(&ds, &basis).unwrap();
        assert!(m.sigma_u.amax() < 1e-14);
        let scores = naive_scores(&ds, &basis).unwrap();
        let (_, cov) = crate::linalg::row_covariance(&scores);
        assert!((&m.sigma_x - &cov).amax() < 1e-10 * cov.amax());
        // Σu = 0: the between-subject covariance here is rank two, so BLUP still
        // returns w̄ on the span of the data
        let rc = rc_calibrate(&ds, &basis).unwrap();
        assert!((&rc.xhat_scores - &rc.wbar_scores).amax() < 1e-6 * rc.wbar_scores.amax());
    }

    #[test]
    fn single_replicate_is_rejected() {
        let (ds, basis) = curve_data(10, 1, 1.0, 3);
        assert!(matches!(moment_estimates(&ds, &basis), Err(Error::ReplicatesRequired(_))));
        assert!(matches!(rc_calibrate(&ds, &basis), Err(Error::ReplicatesRequired(_))));
    }

    #[test]
    fn moments_recover_generating_covariances() {
        let sx = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]);
        let su = DMatrix::from_row_slice(2, 2, &[1.5, -0.3, -0.3, 0.8]);
        let (n, j) = (5000usize, 5usize);
        let (_, ws) = score_sample(n, j, &sx, &su, 11);
        let m = score_moments(&ws).unwrap();
        // Wishart standard errors: var(S_ab) = (Σ_ab² + Σ_aa Σ_bb) / df
        let df_u = (n * (j - 1)) as f64;
        let sbar = &sx + &su / j as f64;
        for a in 0..2 {
            for b in 0..2 {
                let se_u = ((su[(a, b)].powi(2) + su[(a, a)] * su[(b, b)]) / df_u).sqrt();
                assert!((m.sigma_u[(a, b)] - su[(a, b)]).abs() < 3.0 * se_u);
                let var_between = (sbar[(a, b)].powi(2) + sbar[(a, a)] * sbar[(b, b)]) / (n - 1) as f64;
                let se_x = (var_between + (se_u / j as f64).powi(2)).sqrt();
                assert!((m.sigma_x[(a, b)] - sx[(a, b)]).abs() < 3.0 * se_x);
            }
            let se_mu = (sbar[(a, a)] / n as f64).sqrt();
            assert!(m.mu_x[a].abs() < 3.0 * se_mu);
        }
    }

    #[test]
    fn negative_between_covariance_is_clipped() {
        // every subject has the same mean score but large within-subject spread
        let ws: Vec<DMatrix<f64>> = (0..20)
            .map(|i| {
                let e = if i % 2 == 0 { 1.0 } else { -1.0 };
                DMatrix::from_row_slice(2, 2, &[1.0 + e, 0.0, 1.0 - e, 0.01 * i as f64])
            })
            .collect();
        let m = score_moments(&ws).unwrap();
        let e = m.sigma_x.clone().symmetric_eigen().eigenvalues;
        assert!(e.min() >= -1e-14);
        assert!(e.min().abs() < 1e-14);
    }

    #[test]
    fn scalar_shrinkage_factor() {
        let m = MomentEstimates {
            mu_x: DVector::from_element(1, 1.0),
            sigma_x: DMatrix::from_element(1, 1, 2.0),
            sigma_u: DMatrix::from_element(1, 1, 3.0),
        };
        let w = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 5.0]);
        let x = blup(&w, &m, 4).unwrap();
        let f = 2.0 / (2.0 + 3.0 / 4.0);
        for i in 0..3 {
            assert!((x[(i, 0)] - (1.0 + f * (w[(i, 0)] - 1.0))).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_noise_blup_is_identity() {
        let m = MomentEstimates {
            mu_x: DVector::from_vec(vec![0.3, -1.0]),
            sigma_x: DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
            sigma_u: DMatrix::zeros(2, 2),
        };
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -3.0, 0.5]);
        assert!((blup(&w, &m, 2).unwrap() - &w).amax() < 1e-13);
    }

    #[test]
    fn blup_beats_replicate_mean() {
        let sx = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
        let su = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        let j = 2;
        let (xs, ws) = score_sample(10_000, j, &sx, &su, 5);
        let m = score_moments(&ws).unwrap();
        let mut wbar = DMatrix::zeros(xs.len(), 2);
        for (i, w) in ws.iter().enumerate() {
            wbar.row_mut(i).copy_from(&w.row_mean());
        }
        let xhat = blup(&wbar, &m, j).unwrap();
        let (mut e_rc, mut e_naive) = (0.0, 0.0);
        for (i, x) in xs.iter().enumerate() {
            e_rc += (xhat.row(i).transpose() - x).norm_squared();
            e_naive += (wbar.row(i).transpose() - x).norm_squared();
        }
        assert!(e_rc < e_naive, "{e_rc} vs {e_naive}");
    }

    #[test]
    fn calibration_is_scale_equivariant() {
        let (ds, basis) = curve_data(60, 3, 0.8, 6);
        let base = rc_calibrate(&ds, &basis).unwrap();
        let c = -3.7;
        let mut scaled = ds.clone();
        scaled.w = ds.w.iter().map(|m| m * c).collect();
        let rc = rc_calibrate(&scaled, &basis).unwrap();
        let diff = (&rc.xhat_scores - &base.xhat_scores * c).amax();
        assert!(diff < 1e-10 * (1.0 + base.xhat_scores.amax() * c.abs()), "{diff}");
    }

    #[test]
    fn shrinkage_vanishes_with_many_replicates() {
        let mut gaps = Vec::new();
        for j in [2, 20, 200] {
            let (ds, basis) = curve_data(80, j, 1.0, 7);
            let rc = rc_calibrate(&ds, &basis).unwrap();
            gaps.push((&rc.xhat_scores - &rc.wbar_scores).norm());
        }
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let (ds, _) = curve_data(5, 2, 1.0, 8);
        let other = BasisSystem::new(&unit_grid(31), 6, 3).unwrap();
        assert!(matches!(naive_scores(&ds, &other), Err(Error::Dimension(_))));
    }
}

use galqr::basis::second_difference_matrix;
use galqr::diagnostics::{batch_means_se, mean, variance};
use galqr::gal::GammaBounds;
use galqr::sampler::dists::{dirichlet_sample, inv_wishart_sample, mvn_from_cov_factor};
use galqr::sampler::{MixtureHypers, ModelState, Mode, ModelData, MvnHyper, PriorConfig, Sampler};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};

const TAU0: f64 = 0.3;

fn regenerate(s: &ModelState, z: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let eta = s.linear_predictor(z);
    DVector::from_fn(eta.len(), |i, _| eta[i] + s.gal[s.gal_labels[i]].sample(rng))
}

// Successive-conditional simulator against forward draws from the prior,
// with two free GAL components.
#[test]
fn successive_conditional_matches_prior() {
    let (n, k) = (30, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let z = DMatrix::from_fn(n, 2, |_, _| StandardNormal.sample(&mut rng));
    let x = DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(&mut rng));
    let d = second_difference_matrix(k);
    let priors = PriorConfig {
        coef_var: 1.0,
        phi_ridge: 1.0,
        k_eps: 2,
        ..Default::default()
    };
    let burn = 2000;
    let data = ModelData::new(DVector::zeros(n), z.clone(), x, d.transpose() * d).unwrap();
    let mut sampler = Sampler::new(data, priors, Mode::FixedX, TAU0, burn, None).unwrap();
    let mut state = sampler.init_state(&mut rng).unwrap();
    sampler.set_response(regenerate(&state, &z, &mut rng)).unwrap();

    let sweeps = 30_000;
    let mut chain: Vec<Vec<f64>> = vec![Vec::with_capacity(sweeps); 5];
    for it in 0..sweeps + burn {
        sampler.step(&mut state, it, &mut rng).unwrap();
        sampler.set_response(regenerate(&state, &z, &mut rng)).unwrap();
        if it >= burn {
            chain[0].push(state.beta_z[0]);
            chain[1].push(state.beta_z[1]);
            chain[2].push(state.theta2);
            chain[3].push(state.gal[0].gamma);
            chain[4].push(state.gal[1].sigma);
        }
    }

    let bounds = GammaBounds::for_tau0(TAU0).unwrap();
    let m = 100_000;
    let sigma_prior = Gamma::new(2.0, 1.0).unwrap();
    let mut forward: Vec<Vec<f64>> = vec![Vec::with_capacity(m); 5];
    for _ in 0..m {
        forward[0].push(StandardNormal.sample(&mut rng));
        forward[1].push(StandardNormal.sample(&mut rng));
        let e: f64 = Exp1.sample(&mut rng);
        forward[2].push(e * e);
        forward[3].push(bounds.lower + bounds.width() * rng.random::<f64>());
        forward[4].push(sigma_prior.sample(&mut rng));
    }
    for (name, (c, f)) in ["beta_z1", "beta_z2", "theta2", "gamma", "sigma"].iter().zip(chain.iter().zip(&forward)) {
        let se = (batch_means_se(c, 50).powi(2) + variance(f) / m as f64).sqrt();
        let score = (mean(c) - mean(f)) / se;
        assert!(score.abs() < 4.0, "{name}: z = {score}");
    }
}

fn regenerate_replicates(s: &ModelState, j: usize, rng: &mut ChaCha8Rng) -> Vec<DMatrix<f64>> {
    let u = &s.u_mix.as_ref().unwrap().components[0];
    let l = u.cov.clone().cholesky().unwrap().l();
    (0..s.x.nrows())
        .map(|i| {
            let xi = s.x.row(i).transpose();
            let mut w = DMatrix::zeros(j, xi.len());
            for r in 0..j {
                let e = DVector::from_fn(xi.len(), |_, _| StandardNormal.sample(rng));
                w.row_mut(r).copy_from(&(&xi + &u.mean + &l * e).transpose());
            }
            w
        })
        .collect()
}

// Full model with one error component (its mean is then pinned at zero) and two
// score components; responses and replicates are both regenerated.
#[test]
fn full_model_successive_conditional_matches_prior() {
    let (n, k, j) = (25, 2, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let z = DMatrix::from_fn(n, 1, |_, _| StandardNormal.sample(&mut rng));
    let x = DMatrix::zeros(n, k);
    let d = second_difference_matrix(k + 1);
    let penalty = d.columns(0, k).transpose() * d.columns(0, k);
    let priors = PriorConfig {
        coef_var: 1.0,
        phi_ridge: 1.0,
        k_eps: 1,
        k_u: 1,
        k_x: 2,
        ..Default::default()
    };
    let x_hyper = MvnHyper::from_moments(
        DVector::from_vec(vec![0.5, -0.5]),
        &DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.8]),
        4.0,
    );
    let u_hyper = MvnHyper::from_moments(DVector::zeros(k), &(DMatrix::identity(k, k) * 0.5), 4.0);
    let hypers = MixtureHypers { u: u_hyper.clone(), x: x_hyper.clone() };
    let reps = vec![DMatrix::zeros(j, k); n];
    let data = ModelData::new(DVector::zeros(n), z.clone(), x, penalty).unwrap().with_replicates(reps).unwrap();
    let burn = 1000;
    let mut sampler = Sampler::new(data, priors, Mode::Full, TAU0, burn, Some(hypers)).unwrap();
    let mut state = sampler.init_state(&mut rng).unwrap();
    for c in state.u_mix.as_mut().unwrap().components.iter_mut() {
        c.mean.fill(0.0);
    }
    sampler.set_replicates(regenerate_replicates(&state, j, &mut rng)).unwrap();
    sampler.set_response(regenerate(&state, &z, &mut rng)).unwrap();

    let sweeps = 30_000;
    let names = ["beta_z", "theta2", "x00", "x00_sq", "u_var", "x_weight"];
    let mut chain: Vec<Vec<f64>> = vec![Vec::with_capacity(sweeps); names.len()];
    for it in 0..sweeps + burn {
        sampler.step(&mut state, it, &mut rng).unwrap();
        sampler.set_replicates(regenerate_replicates(&state, j, &mut rng)).unwrap();
        sampler.set_response(regenerate(&state, &z, &mut rng)).unwrap();
        if it >= burn {
            chain[0].push(state.beta_z[0]);
            chain[1].push(state.theta2);
            chain[2].push(state.x[(0, 0)]);
            chain[3].push(state.x[(0, 0)].powi(2));
            chain[4].push(state.u_mix.as_ref().unwrap().components[0].cov[(0, 0)]);
            chain[5].push(state.x_mix.as_ref().unwrap().weights[0]);
        }
    }

    let m = 100_000;
    let mean_l = x_hyper.mean_cov.clone().cholesky().unwrap().l();
    let mut forward: Vec<Vec<f64>> = vec![Vec::with_capacity(m); names.len()];
    for _ in 0..m {
        forward[0].push(StandardNormal.sample(&mut rng));
        let e: f64 = Exp1.sample(&mut rng);
        forward[1].push(e * e);
        let w = dirichlet_sample(&[0.5, 0.5], &mut rng);
        let label = usize::from(rng.random::<f64>() >= w[0]);
        let mut comp = None;
        for c in 0..2 {
            let mu = mvn_from_cov_factor(&x_hyper.mean, &mean_l, &mut rng);
            let cov = inv_wishart_sample(x_hyper.dof, &x_hyper.scale, &mut rng).unwrap();
            if c == label {
                comp = Some((mu, cov));
            }
        }
        let (mu, cov) = comp.unwrap();
        let x0 = mvn_from_cov_factor(&mu, &cov.cholesky().unwrap().l(), &mut rng)[0];
        forward[2].push(x0);
        forward[3].push(x0 * x0);
        forward[4].push(inv_wishart_sample(u_hyper.dof, &u_hyper.scale, &mut rng).unwrap()[(0, 0)]);
        forward[5].push(w[0]);
    }
    for (name, (c, f)) in names.iter().zip(chain.iter().zip(&forward)) {
        let se = (batch_means_se(c, 50).powi(2) + variance(f) / m as f64).sqrt();
        let score = (mean(c) - mean(f)) / se;
        assert!(score.abs() < 4.0, "{name}: z = {score}");
    }
}

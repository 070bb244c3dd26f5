//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Cholesky factor, adding `jitter·mean(diag)·10^k` to the diagonal (k = 0..8)
/// until the factorization succeeds. Returns the factor and the jitter used.
pub fn cholesky_jitter(m: &DMatrix<f64>, jitter: f64) -> Option<(Cholesky<f64, Dyn>, f64)> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some((c, 0.0));
    }
    let n = m.nrows();
    let scale = (m.trace() / n as f64).abs().max(1e-300);
    let mut eps = jitter * scale;
    for _ in 0..9 {
        let mut a = m.clone();
        for i in 0..n {
            a[(i, i)] += eps;
        }
        if let Some(c) = Cholesky::new(a) {
            return Some((c, eps));
        }
        eps *= 10.0;
    }
    None
}

/// Eigenvalue clipping at zero: the nearest symmetric PSD matrix in Frobenius norm.
pub fn clip_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut s = m.clone();
    symmetrize(&mut s);
    let eig = s.symmetric_eigen();
    let vals = eig.eigenvalues.map(|v| v.max(0.0));
    let mut out = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
    symmetrize(&mut out);
    out
}

/// Solves `a x = b` for symmetric `a`, falling back to a jittered Cholesky.
pub fn sym_solve(a: &DMatrix<f64>, b: &DMatrix<f64>, jitter: f64) -> Option<DMatrix<f64>> {
    cholesky_jitter(a, jitter).map(|(c, _)| c.solve(b))
}

/// `ln det` from a Cholesky factor.
pub fn chol_logdet(c: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * c.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

/// Log density of `N(mean, Σ)` at `x` given the Cholesky factor of Σ and its log determinant.
pub fn mvn_logpdf_chol(x: &DVector<f64>, mean: &DVector<f64>, chol: &Cholesky<f64, Dyn>, logdet: f64) -> f64 {
    let k = x.len() as f64;
    let d = x - mean;
    let l = chol.l_dirty();
    let z = l
        .solve_lower_triangular(&d)
        .expect("cholesky factor has a nonzero diagonal");
    -0.5 * (z.norm_squared() + logdet + k * (2.0 * std::f64::consts::PI).ln())
}

/// Sample covariance (denominator `n - 1`) of the rows of `m`.
pub fn row_covariance(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let mean = m.row_mean().transpose();
    let mut c = DMatrix::zeros(m.ncols(), m.ncols());
    for r in m.row_iter() {
        let d = r.transpose() - &mean;
        c.ger(1.0, &d, &d, 1.0);
    }
    if n > 1 {
        c /= (n - 1) as f64;
    }
    (mean, c)
}

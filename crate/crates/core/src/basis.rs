//! B-spline basis on an observation grid, quadrature projections of curves onto
//! it, and the second-order difference penalty used by the P-spline prior.
//!
//! A curve `f` observed on the grid is reduced to the vector of inner products
//! `∫ b_k(t) f(t) dt` (trapezoid rule on the grid). With a functional coefficient
//! written as `β(t) = Σ_k φ_k b_k(t)`, the scalar term `∫ β(t) X(t) dt` is then
//! exactly `φᵀ · project(X)` up to quadrature error, so the projected scores are
//! the design row for φ. Note that under this reading φ are spline coefficients
//! of β, not the inner products `∫ b_k β`; the two coincide only for an
//! orthonormal basis (they differ by the Gram matrix, see [`BasisSystem::gram`]).

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Default number of basis functions for a grid of `t` points: `min(15, ⌊t/4⌋)`.
pub fn default_n_basis(t: usize) -> usize {
    15.min(t / 4)
}

#[derive(Debug, Clone)]
pub struct BasisSystem {
    grid: Vec<f64>,
    degree: usize,
    n_basis: usize,
    knots: Vec<f64>,
    /// `T × K_n` evaluations `b_k(t_j)`.
    basis_matrix: DMatrix<f64>,
    quad_weights: Vec<f64>,
    penalty: DMatrix<f64>,
    gram: DMatrix<f64>,
}

/// Trapezoid weights on an increasing grid.
pub fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let t = grid.len();
    if t < 2 {
        return vec![0.0; t];
    }
    (0..t)
        .map(|j| {
            let left = if j > 0 { grid[j] - grid[j - 1] } else { 0.0 };
            let right = if j + 1 < t { grid[j + 1] - grid[j] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// `∫ f dt` by the trapezoid rule on `grid`.
pub fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    trapezoid_weights(grid)
        .iter()
        .zip(values)
        .map(|(w, v)| w * v)
        .sum()
}

/// Second-order difference matrix `D` of size `(k-2) × k`.
pub fn second_difference_matrix(k: usize) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(k.saturating_sub(2), k);
    for r in 0..k.saturating_sub(2) {
        d[(r, r)] = 1.0;
        d[(r, r + 1)] = -2.0;
        d[(r, r + 2)] = 1.0;
    }
    d
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::invalid("grid needs at least two points"));
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("grid contains non-finite values"));
    }
    if let Some(w) = grid.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!(
            "grid must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

impl BasisSystem {
    /// Builds `n_basis` B-splines of the given degree on an open-uniform knot
    /// vector spanning `[grid[0], grid[T-1]]`.
    pub fn new(grid: &[f64], n_basis: usize, degree: usize) -> Result<Self> {
        check_grid(grid)?;
        if degree == 0 {
            return Err(Error::invalid("spline degree must be at least 1"));
        }
        if n_basis < degree + 1 || n_basis < 3 {
            return Err(Error::invalid(format!(
                "K_n = {n_basis} too small for degree {degree} (need ≥ {} and ≥ 3)",
                degree + 1
            )));
        }
        if n_basis > grid.len() {
            return Err(Error::invalid(format!(
                "K_n = {n_basis} exceeds the number of grid points {}",
                grid.len()
            )));
        }
        let (lo, hi) = (grid[0], grid[grid.len() - 1]);
        let interior = n_basis - degree - 1;
        let mut knots = Vec::with_capacity(n_basis + degree + 1);
        knots.extend(std::iter::repeat_n(lo, degree + 1));
        for i in 1..=interior {
            knots.push(lo + (hi - lo) * i as f64 / (interior + 1) as f64);
        }
        knots.extend(std::iter::repeat_n(hi, degree + 1));

        let mut sys = Self {
            grid: grid.to_vec(),
            degree,
            n_basis,
            knots,
            basis_matrix: DMatrix::zeros(0, 0),
            quad_weights: trapezoid_weights(grid),
            penalty: DMatrix::zeros(0, 0),
            gram: DMatrix::zeros(0, 0),
        };
        sys.basis_matrix = sys.evaluate(grid)?;
        let d = second_difference_matrix(n_basis);
        sys.penalty = d.transpose() * d;
        let wb = DMatrix::from_fn(grid.len(), n_basis, |j, k| {
            sys.quad_weights[j] * sys.basis_matrix[(j, k)]
        });
        sys.gram = sys.basis_matrix.transpose() * wb;
        Ok(sys)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn basis_matrix(&self) -> &DMatrix<f64> {
        &self.basis_matrix
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    /// Second-order difference penalty `P = DᵀD`.
    pub fn penalty(&self) -> &DMatrix<f64> {
        &self.penalty
    }

    /// Quadrature Gram matrix `G_kl = ∫ b_k b_l dt`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    fn find_span(&self, t: f64) -> usize {
        let p = self.degree;
        let n = self.n_basis;
        if t >= self.knots[n] {
            return n - 1;
        }
        // knots[p..=n] is increasing; find largest span with knots[span] <= t
        let mut lo = p;
        let mut hi = n;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if t < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    /// Nonzero basis values at `t` for span `span` (Cox–de Boor, triangular scheme).
    fn nonzero_basis(&self, span: usize, t: f64, out: &mut [f64]) {
        let p = self.degree;
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        out[0] = 1.0;
        for j in 1..=p {
            left[j] = t - self.knots[span + 1 - j];
            right[j] = self.knots[span + j] - t;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = out[r] / (right[r + 1] + left[j - r]);
                out[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            out[j] = saved;
        }
    }

    /// Evaluates all basis functions at the given points (rows = points).
    pub fn evaluate(&self, points: &[f64]) -> Result<DMatrix<f64>> {
        let (lo, hi) = (self.knots[0], self.knots[self.knots.len() - 1]);
        let slack = 1e-12 * (hi - lo).abs().max(1.0);
        let mut m = DMatrix::zeros(points.len(), self.n_basis);
        let mut vals = vec![0.0; self.degree + 1];
        for (i, &t) in points.iter().enumerate() {
            if !(t >= lo - slack && t <= hi + slack) {
                return Err(Error::domain(format!(
                    "evaluation point {t} outside the knot span [{lo}, {hi}]"
                )));
            }
            let t = t.clamp(lo, hi);
            let span = self.find_span(t);
            self.nonzero_basis(span, t, &mut vals);
            for (r, v) in vals.iter().enumerate() {
                m[(i, span - self.degree + r)] = *v;
            }
        }
        Ok(m)
    }

    /// Quadrature inner products `∫ b_k(t) f(t) dt` of a curve sampled on the grid.
    pub fn project_curve(&self, values: &[f64]) -> Result<DVector<f64>> {
        if values.len() != self.grid.len() {
            return Err(Error::dim(format!(
                "curve has {} values, grid has {}",
                values.len(),
                self.grid.len()
            )));
        }
        let wf = DVector::from_iterator(
            values.len(),
            values.iter().zip(&self.quad_weights).map(|(v, w)| v * w),
        );
        Ok(self.basis_matrix.tr_mul(&wf))
    }

    /// Design row of a curve for the scalar term `∫ β(t) f(t) dt = φᵀ row`.
    pub fn linear_functional_row(&self, values: &[f64]) -> Result<DVector<f64>> {
        self.project_curve(values)
    }

    /// `β(t) = Σ_k φ_k b_k(t)` at the requested points.
    pub fn eval_beta(&self, coefs: &[f64], points: &[f64]) -> Result<Vec<f64>> {
        if coefs.len() != self.n_basis {
            return Err(Error::dim(format!(
                "{} coefficients for {} basis functions",
                coefs.len(),
                self.n_basis
            )));
        }
        let b = self.evaluate(points)?;
        let phi = DVector::from_column_slice(coefs);
        Ok((b * phi).iter().copied().collect())
    }

    /// `φᵀ P φ`.
    pub fn roughness(&self, coefs: &[f64]) -> f64 {
        let phi = DVector::from_column_slice(coefs);
        (phi.transpose() * &self.penalty * &phi)[(0, 0)]
    }
}

/// Spline coefficients tied to their basis.
#[derive(Debug, Clone)]
pub struct CoefCurve<'a> {
    pub coefs: Vec<f64>,
    pub basis: &'a BasisSystem,
}

impl<'a> CoefCurve<'a> {
    pub fn new(coefs: Vec<f64>, basis: &'a BasisSystem) -> Result<Self> {
        if coefs.len() != basis.n_basis() {
            return Err(Error::dim("coefficient count does not match the basis"));
        }
        if coefs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("coefficients must be finite"));
        }
        Ok(Self { coefs, basis })
    }

    pub fn eval(&self, points: &[f64]) -> Result<Vec<f64>> {
        self.basis.eval_beta(&self.coefs, points)
    }
}

pub fn build_basis(grid: &[f64], n_basis: usize, degree: usize) -> Result<BasisSystem> {
    BasisSystem::new(grid, n_basis, degree)
}

pub fn project_curve(values: &[f64], basis: &BasisSystem) -> Result<DVector<f64>> {
    basis.project_curve(values)
}

pub fn eval_beta(curve: &CoefCurve<'_>, points: &[f64]) -> Result<Vec<f64>> {
    curve.eval(points)
}

/// `n` equally spaced points on `[0, 1]`.
pub fn unit_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

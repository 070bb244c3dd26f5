use crate::basis::check_grid;
use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Replicated functional proxies `W_ij(t)` on a common grid with scalar
/// covariates and responses.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalDataset {
    pub grid: Vec<f64>,
    /// One `J × T` matrix per subject.
    pub w: Vec<DMatrix<f64>>,
    /// `n × p` error-free covariates.
    pub z: DMatrix<f64>,
    pub y: Vec<f64>,
    /// Latent curves (`n × T`), known only for simulated data.
    pub x_true: Option<DMatrix<f64>>,
    pub subject_ids: Vec<String>,
}

impl FunctionalDataset {
    pub fn new(grid: Vec<f64>, w: Vec<DMatrix<f64>>, z: DMatrix<f64>, y: Vec<f64>) -> Result<Self> {
        let ids = (0..y.len()).map(|i| format!("{}", i + 1)).collect();
        let ds = Self {
            grid,
            w,
            z,
            y,
            x_true: None,
            subject_ids: ids,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        check_grid(&self.grid)?;
        let n = self.y.len();
        if self.w.len() != n || self.z.nrows() != n || self.subject_ids.len() != n {
            return Err(Error::dim(format!(
                "subjects disagree: {} responses, {} curve sets, {} covariate rows, {} ids",
                n,
                self.w.len(),
                self.z.nrows(),
                self.subject_ids.len()
            )));
        }
        let t = self.grid.len();
        let j = self.w.first().map_or(1, |m| m.nrows());
        if j == 0 {
            return Err(Error::dim("at least one replicate is required"));
        }
        for (i, m) in self.w.iter().enumerate() {
            if m.nrows() != j || m.ncols() != t {
                return Err(Error::dim(format!(
                    "subject {} has a {}×{} replicate array, expected {j}×{t}",
                    self.subject_ids[i],
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        if let Some(x) = &self.x_true {
            if x.nrows() != n || x.ncols() != t {
                return Err(Error::dim("x_true must be n × T"));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Replicates per subject.
    pub fn j(&self) -> usize {
        self.w.first().map_or(0, |m| m.nrows())
    }

    pub fn t(&self) -> usize {
        self.grid.len()
    }

    pub fn p(&self) -> usize {
        self.z.ncols()
    }

    /// `W̄_i(t)`, the replicate average for subject `i`.
    pub fn replicate_mean(&self, i: usize) -> Vec<f64> {
        let m = &self.w[i];
        let j = m.nrows() as f64;
        m.row_sum().iter().map(|v| v / j).collect()
    }

    pub fn require_replicates(&self, needed: usize, what: &str) -> Result<()> {
        if self.j() < needed {
            return Err(Error::ReplicatesRequired(format!(
                "{what} needs J ≥ {needed}, dataset has J = {}",
                self.j()
            )));
        }
        Ok(())
    }

    /// The same data with its grid mapped affinely onto `[0, 1]`.
    pub fn with_unit_grid(&self) -> Self {
        let (lo, hi) = (self.grid[0], self.grid[self.grid.len() - 1]);
        let mut out = self.clone();
        out.grid = self.grid.iter().map(|t| (t - lo) / (hi - lo)).collect();
        if let Some(last) = out.grid.last_mut() {
            *last = 1.0;
        }
        out
    }
}

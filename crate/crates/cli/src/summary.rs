//! Posterior summaries and the columnar draws format.

use crate::error::{CliError, Result};
use galqr::basis::BasisSystem;
use galqr::diagnostics::{mean, quantile_sorted};
use galqr::sampler::PosteriorDraws;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

pub const MIN_DRAWS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarRow {
    pub estimator: String,
    pub tau: f64,
    pub term: String,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub estimator: String,
    pub tau: f64,
    pub t: f64,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaicRow {
    pub estimator: String,
    pub tau: f64,
    pub waic: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scalar: Vec<ScalarRow>,
    pub bands: Vec<BandRow>,
    pub waic: Vec<WaicRow>,
}

/// Posterior mean and equal-tailed interval (empirical percentiles).
pub fn interval(xs: &[f64], level: f64) -> (f64, f64, f64) {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let a = 0.5 * (1.0 - level);
    (mean(xs), quantile_sorted(&v, a), quantile_sorted(&v, 1.0 - a))
}

/// Scalar table (intercept and `z_k`), pointwise bands for `β(t)` on
/// `eval_grid`, and WAIC when the draws carry a log likelihood.
pub fn summarize(draws: &PosteriorDraws, basis: &BasisSystem, eval_grid: &[f64], level: f64) -> Result<Summary> {
    let s = draws.n_draws();
    if s < MIN_DRAWS {
        return Err(CliError::input(format!("summaries need at least {MIN_DRAWS} draws, got {s}")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(CliError::input(format!("credible level must lie in (0,1), got {level}")));
    }
    let mut out = Summary::default();
    let mut push = |term: String, xs: &[f64]| {
        let (m, lo, hi) = interval(xs, level);
        out.scalar.push(ScalarRow {
            estimator: draws.estimator.clone(),
            tau: draws.tau0,
            term,
            mean: m,
            lower: lo,
            upper: hi,
        });
    };
    push("intercept".into(), &draws.beta0);
    for k in 0..draws.beta_z.ncols() {
        let col: Vec<f64> = draws.beta_z.column(k).iter().copied().collect();
        push(format!("z_{}", k + 1), &col);
    }
    let curves = draws.beta_curves(basis, eval_grid)?;
    for (c, &t) in eval_grid.iter().enumerate() {
        let col: Vec<f64> = curves.column(c).iter().copied().collect();
        let (m, lo, hi) = interval(&col, level);
        out.bands.push(BandRow {
            estimator: draws.estimator.clone(),
            tau: draws.tau0,
            t,
            mean: m,
            lower: lo,
            upper: hi,
        });
    }
    out.waic.push(WaicRow {
        estimator: draws.estimator.clone(),
        tau: draws.tau0,
        waic: draws.loglik.as_ref().map(|_| draws.waic()).transpose()?,
    });
    Ok(out)
}

impl Summary {
    pub fn extend(&mut self, other: Summary) {
        self.scalar.extend(other.scalar);
        self.bands.extend(other.bands);
        self.waic.extend(other.waic);
    }

    pub fn write_scalar<W: Write>(&self, out: W, header: &str) -> Result<()> {
        write_table(out, header, &self.scalar)
    }

    pub fn write_bands<W: Write>(&self, out: W, header: &str) -> Result<()> {
        write_table(out, header, &self.bands)
    }

    pub fn write_waic<W: Write>(&self, out: W, header: &str) -> Result<()> {
        write_table(out, header, &self.waic)
    }
}

fn write_table<W: Write, T: Serialize>(mut out: W, header: &str, rows: &[T]) -> Result<()> {
    out.write_all(header.as_bytes())?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn draw_columns(p: usize, k: usize, ke: usize) -> Vec<String> {
    let mut cols = vec!["beta0".to_string()];
    cols.extend((1..=p).map(|i| format!("z_{i}")));
    cols.extend((1..=k).map(|i| format!("phi_{i}")));
    cols.push("theta2".into());
    for prefix in ["weight", "gamma", "sigma"] {
        cols.extend((1..=ke).map(|i| format!("{prefix}_{i}")));
    }
    cols
}

/// One row per retained draw.
pub fn write_draws<W: Write>(draws: &PosteriorDraws, mut out: W, header: &str) -> Result<()> {
    out.write_all(header.as_bytes())?;
    let (p, k, ke) = (draws.beta_z.ncols(), draws.phi.ncols(), draws.gal_weights.ncols());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(draw_columns(p, k, ke))?;
    for d in 0..draws.n_draws() {
        let mut rec = vec![draws.beta0[d].to_string()];
        rec.extend(draws.beta_z.row(d).iter().map(|v| v.to_string()));
        rec.extend(draws.phi.row(d).iter().map(|v| v.to_string()));
        rec.push(draws.theta2[d].to_string());
        for m in [&draws.gal_weights, &draws.gal_gamma, &draws.gal_sigma] {
            rec.extend(m.row(d).iter().map(|v| v.to_string()));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `n × draws` pointwise log likelihood, one row per observation.
pub fn write_loglik<W: Write>(ll: &DMatrix<f64>, mut out: W, header: &str) -> Result<()> {
    out.write_all(header.as_bytes())?;
    let mut w = csv::Writer::from_writer(out);
    for row in ll.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn records<R: Read>(input: R, has_headers: bool) -> Result<(csv::StringRecord, Vec<Vec<f64>>)> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(has_headers)
        .from_reader(input);
    let headers = if has_headers { r.headers()?.clone() } else { csv::StringRecord::new() };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| CliError::input(format!("bad number '{s}' in draws file"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((headers, rows))
}

/// Reads draws written by [`write_draws`]; chain metadata is not stored in the file.
pub fn read_draws<R: Read>(input: R, tau0: f64, estimator: &str, loglik: Option<DMatrix<f64>>) -> Result<PosteriorDraws> {
    let (headers, rows) = records(input, true)?;
    let count = |prefix: &str| headers.iter().filter(|h| h.starts_with(prefix)).count();
    let (p, k, ke) = (count("z_"), count("phi_"), count("weight_"));
    let expected = draw_columns(p, k, ke);
    if headers.iter().ne(expected.iter().map(String::as_str)) {
        return Err(CliError::input("draws file has unexpected columns"));
    }
    let d = rows.len();
    let block = |start: usize, width: usize| DMatrix::from_fn(d, width, |r, c| rows[r][start + c]);
    let draws = PosteriorDraws {
        tau0,
        estimator: estimator.to_string(),
        beta0: rows.iter().map(|r| r[0]).collect(),
        beta_z: block(1, p),
        phi: block(1 + p, k),
        theta2: rows.iter().map(|r| r[1 + p + k]).collect(),
        gal_weights: block(2 + p + k, ke),
        gal_gamma: block(2 + p + k + ke, ke),
        gal_sigma: block(2 + p + k + 2 * ke, ke),
        loglik,
        chains: Vec::new(),
    };
    if let Some(ll) = &draws.loglik {
        if ll.ncols() != d {
            return Err(CliError::input(format!("log likelihood has {} draws, draws file has {d}", ll.ncols())));
        }
    }
    Ok(draws)
}

pub fn read_loglik<R: Read>(input: R) -> Result<DMatrix<f64>> {
    let (_, rows) = records(input, false)?;
    let n = rows.len();
    let s = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != s) {
        return Err(CliError::input("ragged log-likelihood file"));
    }
    Ok(DMatrix::from_fn(n, s, |i, j| rows[i][j]))
}

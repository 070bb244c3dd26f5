//! Cleaning of minute-level activity curves: winsorizing, valid-day filtering,
//! gap filling and block averaging.

use crate::error::{CliError, Result};
use crate::ingest::{DayCurve, RawData};
use galqr::dataset::FunctionalDataset;
use galqr::diagnostics::quantile_sorted;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessOptions {
    /// Values above this quantile of all valid entries are replaced by it.
    pub winsorize_pct: f64,
    pub min_valid_days: usize,
    /// Days with more invalid entries than this are dropped.
    pub max_invalid_minutes: usize,
    /// Average consecutive blocks of this many grid points (1 keeps the grid).
    pub downsample: usize,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self {
            winsorize_pct: 0.999,
            min_valid_days: 3,
            max_invalid_minutes: 144,
            downsample: 1,
        }
    }
}

impl PreprocessOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.winsorize_pct > 0.0 && self.winsorize_pct <= 1.0) {
            return Err(CliError::input(format!(
                "winsorize_pct must lie in (0, 1], got {}",
                self.winsorize_pct
            )));
        }
        if self.min_valid_days == 0 || self.downsample == 0 {
            return Err(CliError::input("min_valid_days and downsample must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedDay {
    pub subject: String,
    pub day: String,
    pub invalid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedSubject {
    pub subject: String,
    pub valid_days: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub cap: f64,
    pub values_capped: usize,
    pub dropped_days: Vec<DroppedDay>,
    pub dropped_subjects: Vec<DroppedSubject>,
    /// Replicates kept per subject (the smallest surviving day count).
    pub j: usize,
    pub t: usize,
}

fn fill_invalid(day: &DayCurve) -> Option<Vec<f64>> {
    let valid: Vec<usize> = (0..day.values.len()).filter(|&c| !day.invalid[c]).collect();
    let (&first, &last) = (valid.first()?, valid.last()?);
    let mut out = day.values.clone();
    let mut prev = first;
    for c in 0..out.len() {
        if !day.invalid[c] {
            prev = c;
            continue;
        }
        out[c] = if c < first {
            day.values[first]
        } else if c > last {
            day.values[last]
        } else {
            let next = (c + 1..out.len()).find(|&k| !day.invalid[k]).expect("c is before the last valid entry");
            let w = (c - prev) as f64 / (next - prev) as f64;
            day.values[prev] + w * (day.values[next] - day.values[prev])
        };
    }
    Some(out)
}

fn block_means(values: &[f64], size: usize) -> Vec<f64> {
    values.chunks(size).map(|b| b.iter().sum::<f64>() / b.len() as f64).collect()
}

/// Applies, in order: winsorizing at the global `winsorize_pct` quantile of valid
/// entries, dropping days with too many invalid entries, dropping subjects with
/// fewer than `min_valid_days` surviving days, truncating every subject to the
/// smallest surviving day count, linear interpolation over remaining invalid
/// entries and block averaging.
pub fn preprocess_activity(raw: &RawData, opts: &PreprocessOptions) -> Result<(FunctionalDataset, PreprocessReport)> {
    opts.validate()?;
    let t = raw.grid.len();
    if t % opts.downsample != 0 {
        return Err(CliError::input(format!(
            "grid of {t} points is not divisible into blocks of {}",
            opts.downsample
        )));
    }
    let mut pool: Vec<f64> = raw
        .subjects
        .iter()
        .flat_map(|s| s.days.iter())
        .flat_map(|d| d.values.iter().zip(&d.invalid).filter(|(_, inv)| !**inv).map(|(v, _)| *v))
        .collect();
    if pool.is_empty() {
        return Err(CliError::input("no valid entries to preprocess"));
    }
    pool.sort_by(f64::total_cmp);
    let cap = quantile_sorted(&pool, opts.winsorize_pct);

    let mut values_capped = 0;
    let mut dropped_days = Vec::new();
    let mut dropped_subjects = Vec::new();
    let mut kept: Vec<(usize, Vec<Vec<f64>>)> = Vec::new();
    for (i, s) in raw.subjects.iter().enumerate() {
        let mut days = Vec::new();
        for d in &s.days {
            let invalid = d.invalid.iter().filter(|b| **b).count();
            if invalid > opts.max_invalid_minutes {
                dropped_days.push(DroppedDay { subject: s.id.clone(), day: d.id.clone(), invalid });
                continue;
            }
            let mut day = d.clone();
            for v in day.values.iter_mut() {
                if *v > cap {
                    *v = cap;
                    values_capped += 1;
                }
            }
            let filled = fill_invalid(&day).ok_or_else(|| {
                CliError::input(format!("subject {}, day {} has no valid entries", s.id, d.id))
            })?;
            days.push(block_means(&filled, opts.downsample));
        }
        if days.len() < opts.min_valid_days {
            dropped_subjects.push(DroppedSubject { subject: s.id.clone(), valid_days: days.len() });
        } else {
            kept.push((i, days));
        }
    }
    if kept.is_empty() {
        let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
        for d in &dropped_subjects {
            *hist.entry(d.valid_days).or_default() += 1;
        }
        let hist: Vec<String> = hist.iter().map(|(k, v)| format!("{k} valid days: {v} subjects")).collect();
        return Err(CliError::input(format!(
            "every subject was dropped (min_valid_days = {}, max_invalid_minutes = {}); {}",
            opts.min_valid_days,
            opts.max_invalid_minutes,
            hist.join(", ")
        )));
    }
    let j = kept.iter().map(|(_, d)| d.len()).min().expect("nonempty");
    let grid = block_means(&raw.grid, opts.downsample);
    let tt = grid.len();
    let p = raw.covariates.len();
    let mut z = DMatrix::zeros(kept.len(), p);
    let mut w = Vec::with_capacity(kept.len());
    let mut y = Vec::with_capacity(kept.len());
    let mut ids = Vec::with_capacity(kept.len());
    for (row, (i, days)) in kept.iter().enumerate() {
        let s = &raw.subjects[*i];
        w.push(DMatrix::from_fn(j, tt, |r, c| days[r][c]));
        for k in 0..p {
            z[(row, k)] = s.z[k];
        }
        y.push(s.y);
        ids.push(s.id.clone());
    }
    let mut ds = FunctionalDataset::new(grid, w, z, y)?;
    ds.subject_ids = ids;
    Ok((
        ds,
        PreprocessReport { cap, values_capped, dropped_days, dropped_subjects, j, t: tt },
    ))
}

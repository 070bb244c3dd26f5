//! Long-format CSV input and output.
//!
//! Functional file: `subject_id, replicate_id, time, value[, invalid]`.
//! Scalar file: `subject_id, y, z_1, …, z_p`.

use crate::error::{CliError, Result};
use galqr::dataset::FunctionalDataset;
use nalgebra::DMatrix;
use std::collections::{BTreeMap, HashMap};
use std::path::Path;

/// One replicate (day) of one subject on the common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DayCurve {
    pub id: String,
    pub values: Vec<f64>,
    pub invalid: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    pub id: String,
    pub days: Vec<DayCurve>,
    pub y: f64,
    pub z: Vec<f64>,
}

/// Ingested data before any replicate filtering; subjects may differ in
/// their number of replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct RawData {
    pub grid: Vec<f64>,
    pub subjects: Vec<SubjectRecord>,
    pub covariates: Vec<String>,
}

const MAX_LISTED: usize = 20;

fn listing(items: &[String]) -> String {
    let mut s = items.iter().take(MAX_LISTED).cloned().collect::<Vec<_>>().join("; ");
    if items.len() > MAX_LISTED {
        s.push_str(&format!("; … and {} more", items.len() - MAX_LISTED));
    }
    s
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::input(format!("{}: missing column '{name}'", path.display())))
}

fn parse_f64(s: &str, what: &str, line: u64, path: &Path) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| CliError::input(format!("{}:{line}: cannot parse {what} '{s}'", path.display())))
}

fn parse_flag(s: &str, line: u64, path: &Path) -> Result<bool> {
    match s.to_ascii_lowercase().as_str() {
        "" | "0" | "false" | "no" => Ok(false),
        "1" | "true" | "yes" => Ok(true),
        _ => Err(CliError::input(format!("{}:{line}: invalid flag '{s}'", path.display()))),
    }
}

struct Cell {
    value: f64,
    invalid: bool,
}

/// Reads both files, checks that every subject and day covers the full time
/// grid, and orders subjects as in the scalar file.
pub fn read_raw(functional: &Path, scalar: &Path) -> Result<RawData> {
    let mut rdr = reader(functional)?;
    let headers = rdr.headers()?.clone();
    let c_sub = column(&headers, "subject_id", functional)?;
    let c_rep = column(&headers, "replicate_id", functional)?;
    let c_time = column(&headers, "time", functional)?;
    let c_val = column(&headers, "value", functional)?;
    let c_inv = headers.iter().position(|h| h == "invalid");

    // subject -> (day order, day -> time bits -> cell)
    let mut subj_order: Vec<String> = Vec::new();
    let mut days: HashMap<String, (Vec<String>, HashMap<String, BTreeMap<u64, Cell>>)> = HashMap::new();
    let mut times: BTreeMap<u64, f64> = BTreeMap::new();
    let mut duplicates = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let sid = rec.get(c_sub).unwrap_or("").to_string();
        let rid = rec.get(c_rep).unwrap_or("").to_string();
        if sid.is_empty() || rid.is_empty() {
            return Err(CliError::input(format!("{}:{line}: empty subject or replicate id", functional.display())));
        }
        let t = parse_f64(rec.get(c_time).unwrap_or(""), "time", line, functional)?;
        let v = parse_f64(rec.get(c_val).unwrap_or(""), "value", line, functional)?;
        if !t.is_finite() {
            return Err(CliError::input(format!("{}:{line}: non-finite time", functional.display())));
        }
        let invalid = match c_inv {
            Some(c) => parse_flag(rec.get(c).unwrap_or(""), line, functional)?,
            None => false,
        };
        if !invalid && !v.is_finite() {
            return Err(CliError::input(format!(
                "{}:{line}: non-finite value for a valid cell",
                functional.display()
            )));
        }
        let key = (t + 0.0).to_bits();
        times.insert(key, t + 0.0);
        let entry = days.entry(sid.clone()).or_insert_with(|| {
            subj_order.push(sid.clone());
            (Vec::new(), HashMap::new())
        });
        let day = entry.1.entry(rid.clone()).or_insert_with(|| {
            entry.0.push(rid.clone());
            BTreeMap::new()
        });
        if day.insert(key, Cell { value: v, invalid }).is_some() {
            duplicates.push(format!("subject {sid}, replicate {rid}, time {t}"));
        }
    }
    if !duplicates.is_empty() {
        return Err(CliError::input(format!("duplicate (subject, replicate, time) rows: {}", listing(&duplicates))));
    }
    if times.len() < 2 {
        return Err(CliError::input("the functional file needs at least two distinct time points"));
    }
    let grid: Vec<f64> = {
        let mut g: Vec<f64> = times.values().copied().collect();
        g.sort_by(f64::total_cmp);
        g
    };
    let keys: Vec<u64> = grid.iter().map(|t| t.to_bits()).collect();

    let (scalars, covariates) = read_scalar(scalar)?;
    let mut ragged = Vec::new();
    let mut subjects = Vec::with_capacity(scalars.len());
    for (sid, y, z) in scalars {
        let Some((order, map)) = days.remove(&sid) else {
            ragged.push(format!("subject {sid} has no functional data"));
            continue;
        };
        let mut curves = Vec::with_capacity(order.len());
        for rid in order {
            let cells = &map[&rid];
            let missing = keys.iter().filter(|k| !cells.contains_key(k)).count();
            if missing > 0 {
                ragged.push(format!(
                    "subject {sid}, replicate {rid}: {missing} of {} time points missing",
                    keys.len()
                ));
                continue;
            }
            let (values, invalid) = keys.iter().map(|k| (cells[k].value, cells[k].invalid)).unzip();
            curves.push(DayCurve { id: rid, values, invalid });
        }
        subjects.push(SubjectRecord { id: sid, days: curves, y, z });
    }
    for sid in subj_order.iter().filter(|s| days.contains_key(*s)) {
        ragged.push(format!("subject {sid} has functional data but no scalar row"));
    }
    if !ragged.is_empty() {
        return Err(CliError::input(format!(
            "subjects do not share a complete common grid: {}",
            listing(&ragged)
        )));
    }
    Ok(RawData { grid, subjects, covariates })
}

type ScalarRows = Vec<(String, f64, Vec<f64>)>;

fn read_scalar(path: &Path) -> Result<(ScalarRows, Vec<String>)> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    let c_sub = column(&headers, "subject_id", path)?;
    let c_y = column(&headers, "y", path)?;
    let mut zcols: Vec<(usize, usize, String)> = Vec::new();
    for (c, h) in headers.iter().enumerate() {
        if c == c_sub || c == c_y {
            continue;
        }
        let idx = h
            .strip_prefix("z_")
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| CliError::input(format!("{}: unexpected column '{h}'", path.display())))?;
        zcols.push((idx, c, h.to_string()));
    }
    zcols.sort();
    for (want, (idx, _, _)) in zcols.iter().enumerate() {
        if *idx != want + 1 {
            return Err(CliError::input(format!(
                "{}: covariate columns must be z_1..z_p without gaps",
                path.display()
            )));
        }
    }
    let mut rows = Vec::new();
    let mut seen = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let sid = rec.get(c_sub).unwrap_or("").to_string();
        if seen.insert(sid.clone(), line).is_some() {
            return Err(CliError::input(format!("{}:{line}: duplicate subject {sid}", path.display())));
        }
        let y = parse_f64(rec.get(c_y).unwrap_or(""), "y", line, path)?;
        let z = zcols
            .iter()
            .map(|(_, c, h)| parse_f64(rec.get(*c).unwrap_or(""), h, line, path))
            .collect::<Result<Vec<_>>>()?;
        if !y.is_finite() || z.iter().any(|v| !v.is_finite()) {
            return Err(CliError::input(format!("{}:{line}: non-finite scalar value", path.display())));
        }
        rows.push((sid, y, z));
    }
    if rows.is_empty() {
        return Err(CliError::input(format!("{}: no subjects", path.display())));
    }
    Ok((rows, zcols.into_iter().map(|(_, _, h)| h).collect()))
}

impl RawData {
    /// Dense dataset; every subject must carry the same set of replicate ids.
    pub fn into_dataset(self) -> Result<FunctionalDataset> {
        let mut order: Vec<String> = Vec::new();
        for s in &self.subjects {
            for d in &s.days {
                if !order.contains(&d.id) {
                    order.push(d.id.clone());
                }
            }
        }
        let mut missing = Vec::new();
        for s in &self.subjects {
            for rid in &order {
                if !s.days.iter().any(|d| &d.id == rid) {
                    missing.push(format!("subject {} is missing replicate {rid}", s.id));
                }
            }
        }
        if !missing.is_empty() {
            return Err(CliError::input(format!("incomplete replicates: {}", listing(&missing))));
        }
        let t = self.grid.len();
        let p = self.covariates.len();
        let n = self.subjects.len();
        let mut z = DMatrix::zeros(n, p);
        let mut w = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        let mut ids = Vec::with_capacity(n);
        for (i, s) in self.subjects.into_iter().enumerate() {
            let mut m = DMatrix::zeros(order.len(), t);
            for (r, rid) in order.iter().enumerate() {
                let d = s.days.iter().find(|d| &d.id == rid).expect("checked above");
                m.row_mut(r).copy_from_slice(&d.values);
            }
            for (k, v) in s.z.iter().enumerate() {
                z[(i, k)] = *v;
            }
            w.push(m);
            y.push(s.y);
            ids.push(s.id);
        }
        let mut ds = FunctionalDataset::new(self.grid, w, z, y)?;
        ds.subject_ids = ids;
        Ok(ds)
    }
}

/// Reads a replicated functional dataset from the two long-format files.
pub fn ingest_long_csv(functional: &Path, scalar: &Path) -> Result<FunctionalDataset> {
    read_raw(functional, scalar)?.into_dataset()
}

/// Writes `ds` in the format read by [`ingest_long_csv`].
pub fn export_long_csv(ds: &FunctionalDataset, functional: &Path, scalar: &Path) -> Result<()> {
    let mut f = csv::Writer::from_path(functional)?;
    f.write_record(["subject_id", "replicate_id", "time", "value"])?;
    for (i, m) in ds.w.iter().enumerate() {
        for r in 0..m.nrows() {
            for (c, t) in ds.grid.iter().enumerate() {
                f.write_record(&[
                    ds.subject_ids[i].clone(),
                    (r + 1).to_string(),
                    t.to_string(),
                    m[(r, c)].to_string(),
                ])?;
            }
        }
    }
    f.flush()?;
    write_scalar(ds.subject_ids.iter().cloned().zip(ds.y.iter().copied()), &ds.z, scalar)
}

pub(crate) fn write_scalar<I: Iterator<Item = (String, f64)>>(rows: I, z: &DMatrix<f64>, path: &Path) -> Result<()> {
    let mut s = csv::Writer::from_path(path)?;
    let mut header = vec!["subject_id".to_string(), "y".to_string()];
    header.extend((1..=z.ncols()).map(|k| format!("z_{k}")));
    s.write_record(&header)?;
    for (i, (id, y)) in rows.enumerate() {
        let mut rec = vec![id, y.to_string()];
        rec.extend(z.row(i).iter().map(|v| v.to_string()));
        s.write_record(&rec)?;
    }
    s.flush()?;
    Ok(())
}

/// Writes raw per-day data including the invalid mask.
pub fn export_raw_csv(raw: &RawData, functional: &Path, scalar: &Path) -> Result<()> {
    let mut f = csv::Writer::from_path(functional)?;
    f.write_record(["subject_id", "replicate_id", "time", "value", "invalid"])?;
    for s in &raw.subjects {
        for d in &s.days {
            for (c, t) in raw.grid.iter().enumerate() {
                f.write_record(&[
                    s.id.clone(),
                    d.id.clone(),
                    t.to_string(),
                    d.values[c].to_string(),
                    u8::from(d.invalid[c]).to_string(),
                ])?;
            }
        }
    }
    f.flush()?;
    let z = DMatrix::from_fn(raw.subjects.len(), raw.covariates.len(), |i, k| raw.subjects[i].z[k]);
    write_scalar(raw.subjects.iter().map(|s| (s.id.clone(), s.y)), &z, scalar)
}

//! Dataset and ensemble files.
//!
//! A dataset is a CSV with header `x1,…,xp,y` plus a JSON sidecar holding the
//! seed, the noise spec and `beta_true`. An ensemble is a CSV
//! with header `b1,…,bp` (one replicate per row) plus a sidecar with the seed,
//! `k` and the SHA-256 of the dataset file it was drawn from.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bootstrap::BootstrapEnsemble;
use crate::error::{Error, Result};
use crate::regression::{NoiseSpec, RegressionDataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub seed: u64,
    pub n: usize,
    pub p: usize,
    pub noise: NoiseSpec,
    pub beta_true: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMeta {
    pub seed: u64,
    pub k: usize,
    pub p: usize,
    pub source_sha256: String,
    pub beta_hat: Vec<f64>,
}

/// `path` with its extension replaced by `json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_sha256(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

fn write_matrix(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v:e}")))?;
    }
    w.flush()?;
    Ok(())
}

fn read_matrix(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{}: {s:?}: {e}", path.display()))))
            .collect::<Result<Vec<_>>>()?;
        if row.len() != header.len() {
            return Err(Error::Parse(format!("{}: ragged row", path.display())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

pub fn write_dataset(path: &Path, data: &RegressionDataset, meta: &DatasetMeta) -> Result<()> {
    let p = data.p();
    let mut header: Vec<String> = (1..=p).map(|i| format!("x{i}")).collect();
    header.push("y".into());
    let rows = (0..data.n()).map(|i| {
        let mut row: Vec<f64> = data.x().row(i).iter().copied().collect();
        row.push(data.y()[i]);
        row
    });
    write_matrix(path, &header, rows)?;
    write_json(&sidecar_path(path), meta)
}

/// Reads the CSV and, when present, the sidecar (attaching `beta_true`).
pub fn read_dataset(path: &Path) -> Result<(RegressionDataset, Option<DatasetMeta>)> {
    let (header, rows) = read_matrix(path)?;
    let p = header.len().checked_sub(1).filter(|p| *p >= 1).ok_or_else(|| Error::Parse("dataset needs x columns and y".into()))?;
    if header.last().map(String::as_str) != Some("y") {
        return Err(Error::Parse("last dataset column must be y".into()));
    }
    let n = rows.len();
    let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    let y = DVector::from_iterator(n, rows.iter().map(|r| r[p]));
    let mut data = RegressionDataset::new(x, y)?;
    let side = sidecar_path(path);
    let meta = if side.exists() {
        let meta: DatasetMeta = serde_json::from_str(&fs::read_to_string(&side)?)?;
        if let Some(b) = &meta.beta_true {
            data = data.with_beta_true(DVector::from_column_slice(b))?;
        }
        Some(meta)
    } else {
        None
    };
    Ok((data, meta))
}

pub fn write_ensemble(path: &Path, ens: &BootstrapEnsemble, source_sha256: &str) -> Result<()> {
    let header: Vec<String> = (1..=ens.p()).map(|i| format!("b{i}")).collect();
    write_matrix(path, &header, ens.beta_stars.iter().map(|b| b.iter().copied().collect()))?;
    let meta = EnsembleMeta {
        seed: ens.seed,
        k: ens.k(),
        p: ens.p(),
        source_sha256: source_sha256.to_owned(),
        beta_hat: ens.beta_hat.iter().copied().collect(),
    };
    write_json(&sidecar_path(path), &meta)
}

pub fn read_ensemble(path: &Path) -> Result<(BootstrapEnsemble, EnsembleMeta)> {
    let (header, rows) = read_matrix(path)?;
    let meta: EnsembleMeta = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    if header.len() != meta.p || rows.len() != meta.k || meta.beta_hat.len() != meta.p || rows.is_empty() {
        return Err(Error::Parse("ensemble CSV does not match its sidecar".into()));
    }
    let ens = BootstrapEnsemble {
        beta_stars: rows.into_iter().map(DVector::from_vec).collect(),
        beta_hat: DVector::from_vec(meta.beta_hat.clone()),
        resamples: None,
        seed: meta.seed,
    };
    Ok((ens, meta))
}

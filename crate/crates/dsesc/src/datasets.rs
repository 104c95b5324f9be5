//! Dataset loading and synthetic union-of-subspaces generation.
//!
//! Data matrices are d x n with samples as columns throughout the crate.
//! Two on-disk formats are supported:
//!
//! * CSV: first line `d,n`, then d lines of n comma-separated reals.
//!   Labels are a separate file with one integer per line, n lines.
//! * Raw binary: magic `DSESC1`, u64 little-endian d, u64 n, then d*n
//!   IEEE-754 little-endian f64 values in row-major order.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};

pub const BINARY_MAGIC: &[u8; 6] = b"DSESC1";

/// A d x n data matrix with optional ground-truth labels and cluster count.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub data: Matrix,
    pub labels: Option<Vec<usize>>,
    pub k: usize,
}

impl Dataset {
    /// Validates the invariants: n >= k >= 1, and labels (when present) have
    /// length n, lie in [0, k), and leave no cluster empty.
    pub fn new(data: Matrix, labels: Option<Vec<usize>>, k: usize) -> Result<Self> {
        let n = data.cols();
        if k == 0 {
            return Err(Error::InvalidArgument("cluster count k must be >= 1".into()));
        }
        if n < k {
            return Err(Error::InvalidArgument(format!(
                "need at least k = {k} samples, got {n}"
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::Dimension(format!(
                    "labels length {} does not match sample count {}",
                    labels.len(),
                    n
                )));
            }
            let mut seen = vec![false; k];
            for (i, &l) in labels.iter().enumerate() {
                if l >= k {
                    return Err(Error::InvalidArgument(format!(
                        "label {l} at sample {i} is outside [0, {k})"
                    )));
                }
                seen[l] = true;
            }
            if let Some(missing) = seen.iter().position(|&s| !s) {
                return Err(Error::InvalidArgument(format!(
                    "cluster {missing} has no samples"
                )));
            }
        }
        Ok(Dataset { data, labels, k })
    }

    pub fn dim(&self) -> usize {
        self.data.rows()
    }

    pub fn len(&self) -> usize {
        self.data.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    Csv,
    Bin,
}

/// Column normalization applied before training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormalizeMode {
    /// Scale each column to unit Euclidean norm; zero columns are left alone.
    #[serde(rename = "unit-norm")]
    UnitNorm,
    /// Shift each column to zero mean and unit variance over its entries;
    /// constant columns are centered but not scaled.
    #[serde(rename = "zero-mean-unit-var")]
    ZeroMeanUnitVar,
    #[serde(rename = "none")]
    None,
}

/// Loads a data matrix (and optional labels) from disk.
pub fn load_dataset(
    data_path: &Path,
    labels_path: Option<&Path>,
    format: FileFormat,
    k: Option<usize>,
) -> Result<Dataset> {
    let data = match format {
        FileFormat::Csv => read_csv_matrix(data_path)?,
        FileFormat::Bin => read_binary_matrix(data_path)?,
    };
    let labels = labels_path.map(|p| read_labels(p, data.cols())).transpose()?;
    let k = match (k, &labels) {
        (Some(k), _) => k,
        (None, Some(labels)) => labels.iter().copied().max().map_or(1, |m| m + 1),
        (None, None) => {
            return Err(Error::InvalidArgument(
                "cluster count k is required when no labels are given".into(),
            ))
        }
    };
    Dataset::new(data, labels, k)
}

/// Writes the data matrix (and labels, when present) in the given format.
pub fn save_dataset(ds: &Dataset, data_path: &Path, labels_path: Option<&Path>, format: FileFormat) -> Result<()> {
    match format {
        FileFormat::Csv => write_csv_matrix(&ds.data, data_path)?,
        FileFormat::Bin => write_binary_matrix(&ds.data, data_path)?,
    }
    if let (Some(path), Some(labels)) = (labels_path, &ds.labels) {
        let mut text = String::new();
        for l in labels {
            text.push_str(&l.to_string());
            text.push('\n');
        }
        fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    Ok(())
}

fn read_csv_matrix(path: &Path) -> Result<Matrix> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        path: path.display().to_string(),
        line: 1,
        message: "empty file".into(),
    })?;
    let dims: Vec<&str> = header.split(',').map(str::trim).collect();
    if dims.len() != 2 {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 1,
            message: format!("header must be `d,n`, got `{header}`"),
        });
    }
    let parse_dim = |s: &str| {
        s.parse::<usize>().map_err(|_| Error::Parse {
            path: path.display().to_string(),
            line: 1,
            message: format!("bad dimension `{s}`"),
        })
    };
    let d = parse_dim(dims[0])?;
    let n = parse_dim(dims[1])?;

    let mut data = Vec::with_capacity(d * n);
    let mut rows_read = 0usize;
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        if rows_read == d {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                message: format!("expected {d} data rows, found more"),
            });
        }
        let values: Vec<&str> = line.split(',').map(str::trim).collect();
        if values.len() != n {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                message: format!("row has {} columns, expected {n}", values.len()),
            });
        }
        for (col, v) in values.iter().enumerate() {
            let parsed: f64 = v.parse().map_err(|_| Error::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                message: format!("bad value `{v}` in column {}", col + 1),
            })?;
            data.push(parsed);
        }
        rows_read += 1;
    }
    if rows_read != d {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: rows_read + 1,
            message: format!("expected {d} data rows, found {rows_read}"),
        });
    }
    Matrix::from_vec(d, n, data)
}

fn write_csv_matrix(m: &Matrix, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("{},{}\n", m.rows(), m.cols()));
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

fn read_binary_matrix(path: &Path) -> Result<Matrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let err = |message: String| Error::Parse {
        path: path.display().to_string(),
        line: 0,
        message,
    };
    if bytes.len() < 6 + 16 {
        return Err(err("file too short for header".into()));
    }
    if &bytes[0..6] != BINARY_MAGIC {
        return Err(err("bad magic, expected DSESC1".into()));
    }
    let d = u64::from_le_bytes(bytes[6..14].try_into().unwrap()) as usize;
    let n = u64::from_le_bytes(bytes[14..22].try_into().unwrap()) as usize;
    let need = 22 + 8 * d * n;
    if bytes.len() != need {
        return Err(err(format!(
            "expected {need} bytes for a {d}x{n} matrix, got {}",
            bytes.len()
        )));
    }
    let mut data = Vec::with_capacity(d * n);
    for chunk in bytes[22..].chunks_exact(8) {
        data.push(f64::from_le_bytes(chunk.try_into().unwrap()));
    }
    Matrix::from_vec(d, n, data)
}

fn write_binary_matrix(m: &Matrix, path: &Path) -> Result<()> {
    let mut file =
        fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut bytes = Vec::with_capacity(22 + 8 * m.data().len());
    bytes.extend_from_slice(BINARY_MAGIC);
    bytes.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    bytes.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for v in m.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    file.write_all(&bytes)
        .map_err(|e| Error::io(path.display().to_string(), e))
}

fn read_labels(path: &Path, n: usize) -> Result<Vec<usize>> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut labels = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let l: usize = trimmed.parse().map_err(|_| Error::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            message: format!("bad label `{trimmed}`"),
        })?;
        labels.push(l);
    }
    if labels.len() != n {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: labels.len() + 1,
            message: format!("found {} labels for {n} samples", labels.len()),
        });
    }
    Ok(labels)
}

/// Parameters for the synthetic union-of-subspaces generator.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub k: usize,
    pub ambient_dim: usize,
    pub subspace_dim: usize,
    pub n_per_cluster: usize,
    pub noise_sigma: f64,
}

/// Samples `k` clusters, each on its own random `subspace_dim`-dimensional
/// linear subspace of R^ambient_dim: points are `U_c y + eps` with `y`
/// standard normal, `eps ~ N(0, noise_sigma^2)` per coordinate, and every
/// column normalized to unit Euclidean norm afterwards.
pub fn generate_union_of_subspaces(spec: &SyntheticSpec, rng: &mut Rng) -> Result<Dataset> {
    let SyntheticSpec {
        k,
        ambient_dim,
        subspace_dim,
        n_per_cluster,
        noise_sigma,
    } = *spec;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if subspace_dim == 0 || subspace_dim >= ambient_dim {
        return Err(Error::InvalidArgument(format!(
            "subspace_dim must satisfy 0 < {subspace_dim} < ambient_dim = {ambient_dim}"
        )));
    }
    if n_per_cluster < subspace_dim + 1 {
        return Err(Error::InvalidArgument(format!(
            "need at least subspace_dim + 1 = {} points per cluster, got {n_per_cluster}",
            subspace_dim + 1
        )));
    }
    if !(noise_sigma >= 0.0) {
        return Err(Error::InvalidArgument("noise_sigma must be >= 0".into()));
    }

    let n = k * n_per_cluster;
    let mut data = Matrix::zeros(ambient_dim, n);
    let mut labels = Vec::with_capacity(n);

    for cluster in 0..k {
        let basis = random_orthonormal_basis(ambient_dim, subspace_dim, rng);
        for p in 0..n_per_cluster {
            let col = cluster * n_per_cluster + p;
            let coords: Vec<f64> = (0..subspace_dim).map(|_| rng.normal()).collect();
            for row in 0..ambient_dim {
                let mut v = 0.0;
                for (s, &y) in coords.iter().enumerate() {
                    v += basis.get(row, s) * y;
                }
                if noise_sigma > 0.0 {
                    v += noise_sigma * rng.normal();
                }
                data.set(row, col, v);
            }
            labels.push(cluster);
        }
    }

    normalize_columns_in_place(&mut data, NormalizeMode::UnitNorm);
    Dataset::new(data, Some(labels), k)
}

/// Orthonormal basis of a random subspace, via modified Gram-Schmidt on
/// standard normal columns.
fn random_orthonormal_basis(ambient: usize, dim: usize, rng: &mut Rng) -> Matrix {
    let mut basis = Matrix::zeros(ambient, dim);
    let mut col = 0;
    while col < dim {
        let mut v: Vec<f64> = (0..ambient).map(|_| rng.normal()).collect();
        for prev in 0..col {
            let dot: f64 = (0..ambient).map(|i| v[i] * basis.get(i, prev)).sum();
            for i in 0..ambient {
                v[i] -= dot * basis.get(i, prev);
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            // Degenerate draw; resample this column.
            continue;
        }
        for i in 0..ambient {
            basis.set(i, col, v[i] / norm);
        }
        col += 1;
    }
    basis
}

/// Returns a copy of the dataset with columns normalized per `mode`.
pub fn normalize_columns(ds: &Dataset, mode: NormalizeMode) -> Dataset {
    let mut out = ds.clone();
    normalize_columns_in_place(&mut out.data, mode);
    out
}

fn normalize_columns_in_place(m: &mut Matrix, mode: NormalizeMode) {
    let (d, n) = m.shape();
    match mode {
        NormalizeMode::None => {}
        NormalizeMode::UnitNorm => {
            let norms = m.col_norms();
            for (j, &norm) in norms.iter().enumerate() {
                if norm > 0.0 {
                    for i in 0..d {
                        m.set(i, j, m.get(i, j) / norm);
                    }
                }
            }
        }
        NormalizeMode::ZeroMeanUnitVar => {
            for j in 0..n {
                let mean: f64 = (0..d).map(|i| m.get(i, j)).sum::<f64>() / d as f64;
                let var: f64 =
                    (0..d).map(|i| (m.get(i, j) - mean).powi(2)).sum::<f64>() / d as f64;
                let std = var.sqrt();
                for i in 0..d {
                    let centered = m.get(i, j) - mean;
                    m.set(i, j, if std > 0.0 { centered / std } else { centered });
                }
            }
        }
    }
}

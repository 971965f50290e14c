//! Dataset representation, CSV ingestion, response standardization,
//! train/calibration splitting, k-fold partitioning, and synthetic generators.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by dataset construction and I/O.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no rows in {path}")]
    NoRows { path: String },
    #[error("no columns in {path}")]
    NoColumns { path: String },
    #[error("duplicate header name '{name}' in {path}")]
    DuplicateHeader { path: String, name: String },
    #[error("response column '{name}' not found in {path}")]
    ResponseColumnMissing { path: String, name: String },
    #[error("cannot parse cell '{cell}' at row {row}, column '{column}' in {path}")]
    BadCell {
        path: String,
        row: usize,
        column: String,
        cell: String,
    },
    #[error("row {row} in {path} has {got} fields, expected {expected}")]
    RaggedRow {
        path: String,
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("non-finite value at row {row}, column '{column}'")]
    NonFinite { row: usize, column: String },
    #[error("training response is all zero; cannot standardize")]
    ZeroScale,
    #[error("split of n={n} with gamma={gamma} leaves an empty side")]
    EmptySplit { n: usize, gamma: f64 },
    #[error("fold count k={k} out of range for {n} indices (need 2 <= k <= n)")]
    BadFoldCount { k: usize, n: usize },
    #[error("empty index set")]
    EmptyIndexSet,
    #[error("invalid dimensions: {0}")]
    BadShape(String),
}

/// Dense row-major feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    /// Build from a flat row-major buffer.
    pub fn new(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self, DataError> {
        if values.len() != n_rows * n_cols {
            return Err(DataError::BadShape(format!(
                "{} values for {}x{} matrix",
                values.len(),
                n_rows,
                n_cols
            )));
        }
        Ok(Self {
            n_rows,
            n_cols,
            values,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, DataError> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(n_rows * n_cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n_cols {
                return Err(DataError::BadShape(format!(
                    "row {i} has {} values, expected {n_cols}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        Self::new(n_rows, n_cols, values)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.n_cols..(row + 1) * self.n_cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, col)).collect()
    }

    /// New matrix holding the given rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(idx.len() * self.n_cols);
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            n_rows: idx.len(),
            n_cols: self.n_cols,
            values,
        }
    }
}

/// A regression dataset: an n×p feature matrix plus a length-n response.
///
/// All entries are finite by construction; constructors reject NaN and ±inf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub features: FeatureMatrix,
    pub response: Vec<f64>,
    /// Names of the p feature columns, in original order.
    pub column_names: Vec<String>,
    /// Name of the response column.
    pub response_name: String,
}

impl Dataset {
    pub fn new(
        features: FeatureMatrix,
        response: Vec<f64>,
        column_names: Vec<String>,
        response_name: impl Into<String>,
    ) -> Result<Self, DataError> {
        if features.n_rows() == 0 || features.n_cols() == 0 {
            return Err(DataError::BadShape("empty feature matrix".into()));
        }
        if response.len() != features.n_rows() {
            return Err(DataError::BadShape(format!(
                "response length {} != row count {}",
                response.len(),
                features.n_rows()
            )));
        }
        if column_names.len() != features.n_cols() {
            return Err(DataError::BadShape(format!(
                "{} column names for {} columns",
                column_names.len(),
                features.n_cols()
            )));
        }
        for i in 0..features.n_rows() {
            for (j, name) in column_names.iter().enumerate() {
                if !features.get(i, j).is_finite() {
                    return Err(DataError::NonFinite {
                        row: i,
                        column: name.clone(),
                    });
                }
            }
            if !response[i].is_finite() {
                return Err(DataError::NonFinite {
                    row: i,
                    column: "response".into(),
                });
            }
        }
        Ok(Self {
            features,
            response,
            column_names,
            response_name: response_name.into(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.features.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.features.n_cols()
    }

    /// Sub-dataset holding the given rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(idx),
            response: idx.iter().map(|&i| self.response[i]).collect(),
            column_names: self.column_names.clone(),
            response_name: self.response_name.clone(),
        }
    }
}

/// Disjoint train/calibration index sets covering `[0, n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub calib: Vec<usize>,
}

/// Fold labels for a list of indices; `fold_of[i]` is the fold (in `0..k`)
/// of the i-th index of the set that was partitioned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub fold_of: Vec<usize>,
    pub k: usize,
}

impl FoldAssignment {
    /// Positions assigned to fold `j`.
    pub fn fold_positions(&self, j: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] == j)
            .collect()
    }
}

/// Which column of a CSV file holds the response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResponseColumn {
    Named(String),
    Last,
}

/// Load a dataset from a headered CSV file of finite reals.
///
/// The response column is extracted; the remaining columns become features
/// in their original order.
pub fn load_csv(path: impl AsRef<Path>, response: &ResponseColumn) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let path_str = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path_str.clone(),
        source,
    })?;

    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header_line = lines.next().ok_or_else(|| DataError::NoRows {
        path: path_str.clone(),
    })?;
    let headers: Vec<String> = header_line.split(',').map(|h| h.trim().to_string()).collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(DataError::NoColumns { path: path_str });
    }
    for (i, h) in headers.iter().enumerate() {
        if headers[..i].contains(h) {
            return Err(DataError::DuplicateHeader {
                path: path_str,
                name: h.clone(),
            });
        }
    }

    let resp_idx = match response {
        ResponseColumn::Named(name) => {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| DataError::ResponseColumnMissing {
                    path: path_str.clone(),
                    name: name.clone(),
                })?
        }
        ResponseColumn::Last => headers.len() - 1,
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut resp: Vec<f64> = Vec::new();
    for (row_no, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != headers.len() {
            return Err(DataError::RaggedRow {
                path: path_str,
                row: row_no + 1,
                got: cells.len(),
                expected: headers.len(),
            });
        }
        let mut row = Vec::with_capacity(headers.len() - 1);
        for (j, cell) in cells.iter().enumerate() {
            let value: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                DataError::BadCell {
                    path: path_str.clone(),
                    row: row_no + 1,
                    column: headers[j].clone(),
                    cell: (*cell).to_string(),
                }
            })?;
            if j == resp_idx {
                resp.push(value);
            } else {
                row.push(value);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(DataError::NoRows { path: path_str });
    }

    let mut feature_names = headers;
    let response_name = feature_names.remove(resp_idx);
    let features = FeatureMatrix::from_rows(&rows)?;
    Dataset::new(features, resp, feature_names, response_name)
}

/// Write a dataset as CSV (features in order, response last).
///
/// Values are printed with Rust's shortest round-trip formatting, so a
/// subsequent [`load_csv`] recovers every f64 bit-exactly.
pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let mut out = String::new();
    for name in &ds.column_names {
        out.push_str(name);
        out.push(',');
    }
    out.push_str(&ds.response_name);
    out.push('\n');
    for i in 0..ds.n_rows() {
        for j in 0..ds.n_cols() {
            let _ = write!(out, "{},", ds.features.get(i, j));
        }
        let _ = writeln!(out, "{}", ds.response[i]);
    }
    std::fs::write(path, out).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Divide the response by the mean absolute response over `train_idx`.
///
/// Returns the rescaled dataset and the scale, so reported lengths can be
/// mapped back to original units.
pub fn standardize_response(ds: &Dataset, train_idx: &[usize]) -> Result<(Dataset, f64), DataError> {
    if train_idx.is_empty() {
        return Err(DataError::EmptyIndexSet);
    }
    let scale =
        train_idx.iter().map(|&i| ds.response[i].abs()).sum::<f64>() / train_idx.len() as f64;
    if scale <= 0.0 {
        return Err(DataError::ZeroScale);
    }
    let mut out = ds.clone();
    for y in &mut out.response {
        *y /= scale;
    }
    Ok((out, scale))
}

/// Randomly partition `[0, n)` into a training set of size `round(gamma * n)`
/// and a calibration set holding the rest. Deterministic per seed.
pub fn split(n: usize, gamma: f64, seed: u64) -> Result<SplitIndices, DataError> {
    let n_train = (gamma * n as f64).round() as usize;
    if n < 2 || n_train == 0 || n_train >= n {
        return Err(DataError::EmptySplit { n, gamma });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    perm.shuffle(&mut rng);
    let calib = perm.split_off(n_train);
    Ok(SplitIndices { train: perm, calib })
}

/// Assign each of the given indices to one of `k` balanced random folds.
/// Fold sizes differ by at most one. Deterministic per seed.
pub fn kfold(idx: &[usize], k: usize, seed: u64) -> Result<FoldAssignment, DataError> {
    let n = idx.len();
    if k < 2 || k > n {
        return Err(DataError::BadFoldCount { k, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    // Deal the shuffled positions round-robin so sizes differ by at most 1.
    let mut fold_of = vec![0usize; n];
    for (slot, pos) in order.into_iter().enumerate() {
        fold_of[pos] = slot % k;
    }
    Ok(FoldAssignment { fold_of, k })
}

/// Slope of the conditional mean of the synthetic generator: m(t) = 2t.
pub const SYNTH_MEAN_SLOPE: f64 = 2.0;
/// Conditional noise scale of the synthetic generator: s(t) = 0.1 + t.
pub const SYNTH_SD_OFFSET: f64 = 0.1;

/// Conditional mean m(t) = 2t of the synthetic generator, as a function of x1.
pub fn synth_mean(x1: f64) -> f64 {
    SYNTH_MEAN_SLOPE * x1
}

/// Conditional standard deviation s(t) = 0.1 + t of the synthetic generator.
pub fn synth_sd(x1: f64) -> f64 {
    SYNTH_SD_OFFSET + x1
}

/// Heteroskedastic synthetic data: X uniform on [0,1]^p and
/// Y = m(x1) + s(x1)·ε with m(t) = 2t, s(t) = 0.1 + t, ε standard Gaussian.
///
/// The closed forms are exposed via [`synth_mean`] and [`synth_sd`] so tests
/// can compute oracle conditional quantiles.
pub fn synth_heteroskedastic(n: usize, p: usize, seed: u64) -> Result<Dataset, DataError> {
    if n == 0 || p == 0 {
        return Err(DataError::BadShape(format!("n={n}, p={p} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n * p);
    let mut response = Vec::with_capacity(n);
    for _ in 0..n {
        let start = values.len();
        for _ in 0..p {
            values.push(rng.random_range(0.0..1.0));
        }
        let x1 = values[start];
        let eps: f64 = rng.sample(StandardNormal);
        response.push(synth_mean(x1) + synth_sd(x1) * eps);
    }
    let column_names = (1..=p).map(|j| format!("x{j}")).collect();
    Dataset::new(FeatureMatrix::new(n, p, values)?, response, column_names, "y")
}

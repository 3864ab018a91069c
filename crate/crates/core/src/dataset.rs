//! Tabular decision data: CSV loading, target binarization, standardization,
//! seeded train/test splitting and threshold partitioning.
//!
//! A [`Dataset`] keeps two copies of the feature matrix. `x` is standardized
//! (population variance, divisor `n`) and is what models are fit on; `x_raw`
//! keeps the original scale and is what value statistics are computed on.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// The housing table shipped with the crate (506 rows, 13 features + `MEDV`).
pub const BUNDLED_HOUSING_CSV: &str = include_str!("../data/boston.csv");
/// Target column of the bundled table.
pub const HOUSING_TARGET: &str = "MEDV";
/// Default sensitive columns: `B` (derived from the proportion of blacks by
/// town) and `TAX` (full-value property-tax rate per $10,000).
pub const HOUSING_SENSITIVE: [&str; 2] = ["B", "TAX"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("parse error at line {line}, column `{column}`: {message}")]
    ParseError {
        line: usize,
        column: String,
        message: String,
    },
    #[error("i/o error reading {path}: {message}")]
    Io { path: String, message: String },
    #[error("split would leave the {side} side empty (n = {n}, test_fraction = {fraction})")]
    EmptySide {
        side: &'static str,
        n: usize,
        fraction: f64,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, DatasetError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(DatasetError::InvalidArgument("ragged rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }
}

/// A named numeric column.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

/// Parsed CSV contents with the target and sensitive columns resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub columns: Vec<Column>,
    pub target_column: String,
    pub sensitive_columns: Vec<String>,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Columns other than the target, in file order.
    pub fn feature_columns(&self) -> impl Iterator<Item = &Column> {
        self.columns
            .iter()
            .filter(move |c| c.name != self.target_column)
    }
}

/// Parses CSV text. Every cell must be a finite decimal number.
pub fn parse_csv(
    text: &str,
    target_column: &str,
    sensitive_columns: &[&str],
) -> Result<RawTable, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let bad_record = |e: csv::Error| DatasetError::ParseError {
        line: e.position().map_or(0, |p| p.line() as usize),
        column: String::new(),
        message: e.to_string(),
    };
    let header = records
        .next()
        .transpose()
        .map_err(bad_record)?
        .ok_or_else(|| DatasetError::ParseError {
            line: 1,
            column: String::new(),
            message: "missing header row".into(),
        })?;
    let names: Vec<String> = header.iter().map(str::to_string).collect();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for record in records {
        let record = record.map_err(bad_record)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != names.len() {
            return Err(DatasetError::ParseError {
                line,
                column: String::new(),
                message: format!("expected {} fields, found {}", names.len(), record.len()),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| DatasetError::ParseError {
                line,
                column: names[j].clone(),
                message: format!("`{cell}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(DatasetError::ParseError {
                    line,
                    column: names[j].clone(),
                    message: "non-finite value".into(),
                });
            }
            values[j].push(v);
        }
    }
    if values.first().is_none_or(Vec::is_empty) {
        return Err(DatasetError::ParseError {
            line: 2,
            column: String::new(),
            message: "no data rows".into(),
        });
    }
    for wanted in std::iter::once(&target_column).chain(sensitive_columns.iter()) {
        if !names.iter().any(|n| n == wanted) {
            return Err(DatasetError::MissingColumn((*wanted).to_string()));
        }
    }
    if sensitive_columns.contains(&target_column) {
        return Err(DatasetError::InvalidArgument(format!(
            "target column `{target_column}` cannot also be sensitive"
        )));
    }
    Ok(RawTable {
        columns: names
            .into_iter()
            .zip(values)
            .map(|(name, values)| Column { name, values })
            .collect(),
        target_column: target_column.to_string(),
        sensitive_columns: sensitive_columns.iter().map(|s| s.to_string()).collect(),
    })
}

pub fn load_csv(
    path: impl AsRef<Path>,
    target_column: &str,
    sensitive_columns: &[&str],
) -> Result<RawTable, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| DatasetError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_csv(&text, target_column, sensitive_columns)
}

/// The bundled housing table with the default target and sensitive columns.
pub fn bundled_housing() -> RawTable {
    parse_csv(BUNDLED_HOUSING_CSV, HOUSING_TARGET, &HOUSING_SENSITIVE)
        .expect("bundled housing CSV is valid")
}

/// Median with the even-length convention (mean of the two middle values).
pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Label 1 iff the value is at least the median, so the positive class is
/// never empty.
pub fn binarize_target(values: &[f64]) -> Vec<u8> {
    if values.is_empty() {
        return Vec::new();
    }
    let m = median(values);
    values.iter().map(|&v| u8::from(v >= m)).collect()
}

/// Per-feature location/scale used for standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub mean: Vec<f64>,
    /// Population standard deviation; constant columns store 0.
    pub scale: Vec<f64>,
}

impl Standardization {
    pub fn apply(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(&v, (&m, &s))| if s > 0.0 { (v - m) / s } else { 0.0 })
            .collect()
    }
}

/// Prepared decision data.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Standardized features, n × d.
    pub x: Matrix,
    /// Original-scale features, n × d.
    pub x_raw: Matrix,
    pub y: Vec<u8>,
    /// Feature indices of the sensitive attributes, in designation order.
    pub sensitive: Vec<usize>,
    pub feature_names: Vec<String>,
    pub standardization: Standardization,
    /// Row ids relative to the originally loaded table.
    pub row_ids: Vec<usize>,
    pub warnings: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from raw features, standardizing with statistics of
    /// the given rows.
    pub fn from_raw(
        x_raw: Matrix,
        y: Vec<u8>,
        sensitive: Vec<usize>,
        feature_names: Vec<String>,
    ) -> Result<Self, DatasetError> {
        let (n, d) = (x_raw.nrows(), x_raw.ncols());
        if y.len() != n {
            return Err(DatasetError::InvalidArgument(format!(
                "label length {} does not match {} rows",
                y.len(),
                n
            )));
        }
        if feature_names.len() != d {
            return Err(DatasetError::InvalidArgument(
                "feature name count does not match column count".into(),
            ));
        }
        if y.iter().any(|&v| v > 1) {
            return Err(DatasetError::InvalidArgument("labels must be 0 or 1".into()));
        }
        for (k, &s) in sensitive.iter().enumerate() {
            if s >= d || sensitive[..k].contains(&s) {
                return Err(DatasetError::InvalidArgument(format!(
                    "sensitive index {s} is out of range or repeated"
                )));
            }
        }
        let mut mean = vec![0.0; d];
        let mut scale = vec![0.0; d];
        let mut warnings = Vec::new();
        for j in 0..d {
            let col = x_raw.column(j);
            let mu = col.iter().sum::<f64>() / n.max(1) as f64;
            let var = col.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n.max(1) as f64;
            mean[j] = mu;
            // Relative threshold so that floating noise on a constant column
            // is not blown up to unit variance.
            if var.sqrt() > 1e-12 * mu.abs().max(1.0) {
                scale[j] = var.sqrt();
            } else {
                warnings.push(format!(
                    "column `{}` is constant; standardized to zeros",
                    feature_names[j]
                ));
            }
        }
        let standardization = Standardization { mean, scale };
        let mut x = Matrix::zeros(n, d);
        for i in 0..n {
            for (j, v) in standardization.apply(x_raw.row(i)).into_iter().enumerate() {
                x.set(i, j, v);
            }
        }
        Ok(Self {
            x,
            x_raw,
            y,
            sensitive,
            feature_names,
            standardization,
            row_ids: (0..n).collect(),
            warnings,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Raw-scale values of feature `j`.
    pub fn raw_column(&self, j: usize) -> Vec<f64> {
        self.x_raw.column(j)
    }

    /// Rows `idx` (positions in this dataset) with standardization carried
    /// over unchanged.
    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(idx),
            x_raw: self.x_raw.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            sensitive: self.sensitive.clone(),
            feature_names: self.feature_names.clone(),
            standardization: self.standardization.clone(),
            row_ids: idx.iter().map(|&i| self.row_ids[i]).collect(),
            warnings: self.warnings.clone(),
        }
    }

    /// Standardized value reconstructed back to raw scale.
    pub fn destandardize(&self, i: usize, j: usize) -> f64 {
        let s = &self.standardization;
        if s.scale[j] > 0.0 {
            self.x.get(i, j) * s.scale[j] + s.mean[j]
        } else {
            s.mean[j]
        }
    }
}

/// Builds the model-ready dataset: features are every non-target column,
/// labels are the binarized target.
pub fn standardize(table: &RawTable) -> Result<Dataset, DatasetError> {
    let n = table.n_rows();
    let target = table
        .column(&table.target_column)
        .ok_or_else(|| DatasetError::MissingColumn(table.target_column.clone()))?;
    let features: Vec<&Column> = table.feature_columns().collect();
    let mut x_raw = Matrix::zeros(n, features.len());
    for (j, c) in features.iter().enumerate() {
        if c.values.len() != n {
            return Err(DatasetError::InvalidArgument(format!(
                "column `{}` has {} values, expected {n}",
                c.name,
                c.values.len()
            )));
        }
        for (i, &v) in c.values.iter().enumerate() {
            x_raw.set(i, j, v);
        }
    }
    let names: Vec<String> = features.iter().map(|c| c.name.clone()).collect();
    let sensitive = table
        .sensitive_columns
        .iter()
        .map(|s| {
            names
                .iter()
                .position(|n| n == s)
                .ok_or_else(|| DatasetError::MissingColumn(s.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Dataset::from_raw(x_raw, binarize_target(&target.values), sensitive, names)
}

/// Complementary train/test datasets drawn from one source.
#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    pub seed: u64,
}

/// Seeded uniformly random split; `floor(test_fraction · n)` rows go to test.
pub fn split_train_test(
    data: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<SplitPair, DatasetError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DatasetError::InvalidArgument(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n = data.n();
    let n_test = (test_fraction * n as f64).floor() as usize;
    if n_test == 0 || n_test == n {
        return Err(DatasetError::EmptySide {
            side: if n_test == 0 { "test" } else { "train" },
            n,
            fraction: test_fraction,
        });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut test_idx = perm[..n_test].to_vec();
    let mut train_idx = perm[n_test..].to_vec();
    test_idx.sort_unstable();
    train_idx.sort_unstable();
    Ok(SplitPair {
        train: data.subset(&train_idx),
        test: data.subset(&test_idx),
        seed,
    })
}

/// Result of thresholding one attribute on its raw scale.
#[derive(Debug, Clone)]
pub struct Partition {
    /// Rows with raw value ≥ threshold.
    pub upper: Dataset,
    pub lower: Dataset,
    pub upper_idx: Vec<usize>,
    pub lower_idx: Vec<usize>,
}

impl Partition {
    /// One side is empty.
    pub fn is_degenerate(&self) -> bool {
        self.upper.is_empty() || self.lower.is_empty()
    }
}

pub fn partition_by_attribute(
    data: &Dataset,
    attr_index: usize,
    threshold: f64,
) -> Result<Partition, DatasetError> {
    if attr_index >= data.d() {
        return Err(DatasetError::InvalidArgument(format!(
            "attribute index {attr_index} out of range for {} features",
            data.d()
        )));
    }
    let (upper_idx, lower_idx): (Vec<usize>, Vec<usize>) =
        (0..data.n()).partition(|&i| data.x_raw.get(i, attr_index) >= threshold);
    Ok(Partition {
        upper: data.subset(&upper_idx),
        lower: data.subset(&lower_idx),
        upper_idx,
        lower_idx,
    })
}

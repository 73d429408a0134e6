//! Domain types shared by the whole toolkit.
//!
//! Instances live in matrix *columns* throughout: a feature matrix is d×n
//! (d features, n instances) and a distribution matrix is m×n (m labels).
//! File loaders that read row-per-instance data transpose on the way in.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Column sums of a distribution may deviate from one by at most this much.
pub const SIMPLEX_TOL: f64 = 1e-9;
/// Entries below zero by at most this much are clamped to zero.
pub const CLAMP_TOL: f64 = 1e-12;

/// d×n feature matrix, columns are instances.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: DMatrix<f64>,
}

impl FeatureMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidConfig(
                "feature matrix must have at least one row and one column".into(),
            ));
        }
        if let Some((idx, _)) = data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "feature matrix",
                iter: idx,
            });
        }
        Ok(Self { data })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Feature dimensionality d.
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    /// Number of instances n.
    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    /// New matrix holding the given instance columns, in order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self {
            data: self.data.select_columns(cols.iter()),
        }
    }
}

/// m×n matrix whose columns are label distributions (probability simplex points).
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionMatrix {
    data: DMatrix<f64>,
}

impl DistributionMatrix {
    /// Validate a raw matrix as a distribution matrix.
    ///
    /// Entries in [-1e-12, 0) are clamped to zero; anything more negative is
    /// a `NegativeEntry` error. Each column must sum to 1 within 1e-9.
    pub fn validate(raw: DMatrix<f64>) -> Result<Self> {
        let mut data = raw;
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidConfig(
                "distribution matrix must have at least one row and one column".into(),
            ));
        }
        for col in 0..data.ncols() {
            for row in 0..data.nrows() {
                let v = data[(row, col)];
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        context: "distribution matrix",
                        iter: col,
                    });
                }
                if v < -CLAMP_TOL {
                    return Err(Error::NegativeEntry { row, col, value: v });
                }
                if v < 0.0 {
                    data[(row, col)] = 0.0;
                }
            }
            let sum: f64 = data.column(col).iter().sum();
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::ColumnSumViolation { col, sum });
            }
        }
        Ok(Self { data })
    }

    /// Wrap a matrix produced by column-wise `normalize_to_simplex`; columns
    /// are valid by construction.
    pub fn from_normalized(data: DMatrix<f64>) -> Self {
        debug_assert!(data
            .column_iter()
            .all(|c| (c.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOL
                && c.iter().all(|&v| v >= 0.0)));
        Self { data }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Number of labels m.
    pub fn labels(&self) -> usize {
        self.data.nrows()
    }

    /// Number of instances n.
    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.data.column(i).iter().copied().collect()
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self {
            data: self.data.select_columns(cols.iter()),
        }
    }
}

/// m×n binary matrix; every column marks at least one relevant label.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLabelMatrix {
    data: DMatrix<f64>,
}

impl MultiLabelMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        for col in 0..data.ncols() {
            let mut any = false;
            for row in 0..data.nrows() {
                let v = data[(row, col)];
                if v != 0.0 && v != 1.0 {
                    return Err(Error::InvalidDistribution {
                        col,
                        reason: format!("entry ({row}, {col}) = {v} is not 0/1"),
                    });
                }
                any |= v == 1.0;
            }
            if !any {
                return Err(Error::InvalidDistribution {
                    col,
                    reason: "column has no relevant label".into(),
                });
            }
        }
        Ok(Self { data })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn labels(&self) -> usize {
        self.data.nrows()
    }

    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self {
            data: self.data.select_columns(cols.iter()),
        }
    }

    /// Fraction of entries on which the two matrices disagree.
    pub fn normalized_hamming(&self, other: &Self) -> Result<f64> {
        if self.data.shape() != other.data.shape() {
            return Err(shape_mismatch("normalized_hamming", &self.data, &other.data));
        }
        let differing = self
            .data
            .iter()
            .zip(other.data.iter())
            .filter(|(a, b)| a != b)
            .count();
        Ok(differing as f64 / (self.data.nrows() * self.data.ncols()) as f64)
    }
}

pub(crate) fn shape_mismatch(context: &'static str, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Error {
    Error::ShapeMismatch {
        context,
        expected: format!("{}x{}", a.nrows(), a.ncols()),
        found: format!("{}x{}", b.nrows(), b.ncols()),
    }
}

/// Clamp negatives to zero and rescale to unit sum.
///
/// Rules, in order: clamp entries below zero to zero; if the clamped sum is
/// below 1e-12 return the uniform vector; if the sum is already within 1e-12
/// of one return the clamped vector untouched (this makes the map exactly
/// idempotent); otherwise divide by the sum.
pub fn normalize_to_simplex(v: &[f64]) -> Vec<f64> {
    let m = v.len();
    assert!(m >= 1, "cannot normalize an empty vector");
    let mut w: Vec<f64> = v.iter().map(|&x| x.max(0.0)).collect();
    let sum: f64 = w.iter().sum();
    if sum < 1e-12 {
        return vec![1.0 / m as f64; m];
    }
    if (sum - 1.0).abs() <= 1e-12 {
        return w;
    }
    for x in &mut w {
        *x /= sum;
    }
    w
}

/// Predict label distributions for the instances in `x`: compute `w * x` and
/// normalize each column onto the simplex.
pub fn predict(w: &DMatrix<f64>, x: &FeatureMatrix) -> Result<DistributionMatrix> {
    if w.ncols() != x.dim() {
        return Err(Error::ShapeMismatch {
            context: "predict",
            expected: format!("predictor with {} columns", x.dim()),
            found: format!("{}x{}", w.nrows(), w.ncols()),
        });
    }
    let raw = w * x.matrix();
    let m = raw.nrows();
    let mut out = DMatrix::zeros(m, raw.ncols());
    for col in 0..raw.ncols() {
        let normalized = normalize_to_simplex(raw.column(col).as_slice());
        for row in 0..m {
            out[(row, col)] = normalized[row];
        }
    }
    Ok(DistributionMatrix::from_normalized(out))
}

/// Frobenius norm of `a - b`.
pub fn frobenius_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(shape_mismatch("frobenius_distance", a, b));
    }
    Ok((a - b).norm())
}

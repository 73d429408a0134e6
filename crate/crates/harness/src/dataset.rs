//! Dataset I/O. Files are numeric CSV with one instance per row; an optional
//! header row is detected by a non-numeric first line. In memory everything
//! follows the column-instance convention, so loading transposes.

use std::fs;
use std::path::Path;

use bldl_core::types::{DistributionMatrix, FeatureMatrix, MultiLabelMatrix};
use nalgebra::DMatrix;

use crate::error::{HarnessError, Result};

pub const FEATURES_FILE: &str = "features.csv";
pub const DISTRIBUTIONS_FILE: &str = "distributions.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const TRUTH_FILE: &str = "truth.csv";
/// Written next to labels.csv so later stages reuse the same threshold.
pub const DEGRADE_FILE: &str = "degrade.json";

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub x: FeatureMatrix,
    pub d: DistributionMatrix,
}

impl Dataset {
    pub fn new(name: String, x: FeatureMatrix, d: DistributionMatrix) -> Result<Self> {
        if x.len() != d.len() {
            return Err(HarnessError::RowCountMismatch {
                features: x.len(),
                distributions: d.len(),
            });
        }
        Ok(Self { name, x, d })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Rows of numbers from a CSV file. A first line that fails to parse is
/// treated as a header; any later parse failure is an error with its
/// 1-based line number.
fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        let mut failed_field = None;
        for field in line.split(',') {
            match field.trim().parse::<f64>() {
                Ok(v) => row.push(v),
                Err(_) => {
                    failed_field = Some(field.trim().to_string());
                    break;
                }
            }
        }
        if let Some(field) = failed_field {
            if idx == 0 {
                continue; // header row
            }
            return Err(HarnessError::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                field,
            });
        }
        if let Some(w) = width {
            if row.len() != w {
                return Err(HarnessError::Parse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    field: format!("expected {w} fields, found {}", row.len()),
                });
            }
        } else {
            width = Some(row.len());
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(HarnessError::Parse {
            path: path.to_path_buf(),
            line: 1,
            field: "file holds no numeric rows".into(),
        });
    }
    Ok(rows)
}

/// Row-per-instance rows -> column-per-instance matrix.
fn to_columns(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let dim = rows[0].len();
    DMatrix::from_fn(dim, n, |r, c| rows[c][r])
}

pub fn load_features(path: &Path) -> Result<FeatureMatrix> {
    let rows = read_rows(path)?;
    Ok(FeatureMatrix::new(to_columns(&rows))?)
}

/// Load distributions, renormalizing rows whose sums drift from one within
/// the 1e-9 tolerance. Sums already within 1e-12 are left untouched so that
/// a save/load cycle is exact.
pub fn load_distributions(path: &Path) -> Result<DistributionMatrix> {
    let mut rows = read_rows(path)?;
    for (i, row) in rows.iter_mut().enumerate() {
        for v in row.iter_mut() {
            if *v < 0.0 {
                if *v < -1e-12 {
                    return Err(HarnessError::InvalidDistribution {
                        path: path.to_path_buf(),
                        row: i + 1,
                        reason: format!("negative description degree {v}"),
                    });
                }
                *v = 0.0;
            }
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(HarnessError::InvalidDistribution {
                path: path.to_path_buf(),
                row: i + 1,
                reason: format!("row sums to {sum}"),
            });
        }
        if (sum - 1.0).abs() > 1e-12 {
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
    }
    Ok(DistributionMatrix::validate(to_columns(&rows))?)
}

pub fn load_labels(path: &Path) -> Result<MultiLabelMatrix> {
    let rows = read_rows(path)?;
    MultiLabelMatrix::new(to_columns(&rows)).map_err(|e| match e {
        bldl_core::Error::InvalidDistribution { col, reason } => {
            HarnessError::InvalidDistribution {
                path: path.to_path_buf(),
                row: col + 1,
                reason,
            }
        }
        other => other.into(),
    })
}

pub fn load_dataset(features_path: &Path, distributions_path: &Path, name: &str) -> Result<Dataset> {
    let x = load_features(features_path)?;
    let d = load_distributions(distributions_path)?;
    Dataset::new(name.to_string(), x, d)
}

/// Write a column-instance matrix as row-per-instance CSV. Values use the
/// shortest representation that round-trips exactly.
pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut out = String::new();
    for col in 0..m.ncols() {
        let fields: Vec<String> = (0..m.nrows()).map(|row| m[(row, col)].to_string()).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| HarnessError::io(path, e))
}

pub fn save_dataset(dir: &Path, ds: &Dataset) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    write_matrix(&dir.join(FEATURES_FILE), ds.x.matrix())?;
    write_matrix(&dir.join(DISTRIBUTIONS_FILE), ds.d.matrix())
}

/// A dataset directory: `features.csv` and `distributions.csv`, plus the
/// optional `labels.csv` (degraded multi-hot labels), `truth.csv` (pre-bias
/// distributions for recovery tracing), and `degrade.json` (the threshold
/// the labels were built with).
pub struct DatasetDir {
    pub dataset: Dataset,
    pub labels: Option<MultiLabelMatrix>,
    pub truth: Option<DistributionMatrix>,
    pub degrade: Option<bldl_core::bias::DegradeConfig>,
}

pub fn load_dataset_dir(dir: &Path) -> Result<DatasetDir> {
    let name = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    let dataset = load_dataset(&dir.join(FEATURES_FILE), &dir.join(DISTRIBUTIONS_FILE), &name)?;
    let labels_path = dir.join(LABELS_FILE);
    let labels = if labels_path.exists() {
        Some(load_labels(&labels_path)?)
    } else {
        None
    };
    let truth_path = dir.join(TRUTH_FILE);
    let truth = if truth_path.exists() {
        Some(load_distributions(&truth_path)?)
    } else {
        None
    };
    let degrade_path = dir.join(DEGRADE_FILE);
    let degrade = if degrade_path.exists() {
        let text =
            fs::read_to_string(&degrade_path).map_err(|e| HarnessError::io(&degrade_path, e))?;
        Some(
            serde_json::from_str(&text).map_err(|e| HarnessError::Json {
                path: degrade_path,
                message: e.to_string(),
            })?,
        )
    } else {
        None
    };
    Ok(DatasetDir {
        dataset,
        labels,
        truth,
        degrade,
    })
}

pub fn write_degrade_config(dir: &Path, cfg: &bldl_core::bias::DegradeConfig) -> Result<()> {
    let path = dir.join(DEGRADE_FILE);
    let text = serde_json::to_string_pretty(cfg).map_err(|e| HarnessError::Json {
        path: path.clone(),
        message: e.to_string(),
    })?;
    fs::write(&path, text + "\n").map_err(|e| HarnessError::io(&path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;
    use std::path::PathBuf;

    fn tmpdir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("bldl-dataset-{tag}-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn smallest_well_formed_input() {
        let dir = tmpdir("small");
        fs::write(dir.join("f.csv"), "1.0,2.0\n3.0,4.0\n").unwrap();
        fs::write(dir.join("d.csv"), "0.5,0.5\n1.0,0.0\n").unwrap();
        let ds = load_dataset(&dir.join("f.csv"), &dir.join("d.csv"), "t").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.x.dim(), 2);
        assert_eq!(ds.d.labels(), 2);
        // column-instance layout: first instance is the first file row
        assert_eq!(ds.x.matrix()[(0, 0)], 1.0);
        assert_eq!(ds.x.matrix()[(1, 0)], 2.0);
    }

    #[test]
    fn header_row_is_skipped() {
        let dir = tmpdir("header");
        fs::write(dir.join("f.csv"), "x1,x2\n1.0,2.0\n").unwrap();
        let x = load_features(&dir.join("f.csv")).unwrap();
        assert_eq!(x.len(), 1);
    }

    #[test]
    fn bad_number_reports_line() {
        let dir = tmpdir("badnum");
        fs::write(dir.join("f.csv"), "1.0,2.0\n1.0,oops\n").unwrap();
        match load_features(&dir.join("f.csv")) {
            Err(HarnessError::Parse { line, field, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(field, "oops");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_distribution_row_is_reported() {
        let dir = tmpdir("invalid");
        fs::write(dir.join("d.csv"), "0.5,0.6\n").unwrap();
        match load_distributions(&dir.join("d.csv")) {
            Err(HarnessError::InvalidDistribution { row, .. }) => assert_eq!(row, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn row_count_mismatch() {
        let dir = tmpdir("mismatch");
        fs::write(dir.join("f.csv"), "1.0\n2.0\n").unwrap();
        fs::write(dir.join("d.csv"), "1.0\n").unwrap();
        assert!(matches!(
            load_dataset(&dir.join("f.csv"), &dir.join("d.csv"), "t"),
            Err(HarnessError::RowCountMismatch { .. })
        ));
    }

    #[test]
    fn near_one_rows_are_renormalized() {
        let dir = tmpdir("renorm");
        fs::write(dir.join("d.csv"), "0.5000000001,0.5\n").unwrap();
        let d = load_distributions(&dir.join("d.csv")).unwrap();
        let sum: f64 = d.column(0).iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn save_load_round_trip_is_exact() {
        let dir = tmpdir("roundtrip");
        let mut rng = bldl_core::rng::Rng::from_seed(101);
        let x = FeatureMatrix::new(DMatrix::from_fn(3, 5, |_, _| rng.next_normal())).unwrap();
        let mut cols = DMatrix::zeros(4, 5);
        for c in 0..5 {
            let p = rng.next_simplex_point(4);
            for r in 0..4 {
                cols[(r, c)] = p[r];
            }
        }
        let d = DistributionMatrix::validate(cols).unwrap();
        let ds = Dataset::new("rt".into(), x, d).unwrap();
        save_dataset(&dir, &ds).unwrap();
        let loaded = load_dataset_dir(&dir).unwrap().dataset;
        assert_eq!(loaded.x.matrix(), ds.x.matrix());
        assert_eq!(loaded.d.matrix(), ds.d.matrix());
        // a second save is byte-identical
        let first = fs::read(dir.join(DISTRIBUTIONS_FILE)).unwrap();
        save_dataset(&dir, &loaded).unwrap();
        let second = fs::read(dir.join(DISTRIBUTIONS_FILE)).unwrap();
        assert_eq!(first, second);
    }
}

//! Experiment orchestration: seeded k-fold evaluation of solver variants on
//! a dataset with simulated annotation bias, plus parameter-sensitivity runs.
//!
//! Bias is injected into the training portion only; scoring always compares
//! predictions against the clean distributions. Every seed is derived from
//! the spec (bias seed mixed with the fold index), so reports are reproduced
//! byte for byte by any run of the same spec.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use bldl_core::bias::{batch_degrade, inject_bias, BiasConfig, DegradeConfig};
use bldl_core::metrics::{score_report, MetricName};
use bldl_core::rng::derive_seed;
use bldl_core::solver::{fit, write_trace_csv, SolverConfig, SolverVariant};
use bldl_core::types::{frobenius_distance, predict};
use serde::{Deserialize, Serialize};

use crate::dataset::{load_dataset, Dataset};
use crate::error::{HarnessError, Result};
use crate::synth::synth_generate;

/// Where the instances come from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetRef {
    Synth {
        d: usize,
        m: usize,
        n: usize,
        rank: usize,
        seed: u64,
    },
    Files {
        features: PathBuf,
        distributions: PathBuf,
        #[serde(default)]
        name: Option<String>,
    },
}

impl DatasetRef {
    pub fn materialize(&self) -> Result<Dataset> {
        match self {
            DatasetRef::Synth { d, m, n, rank, seed } => synth_generate(*d, *m, *n, *rank, *seed),
            DatasetRef::Files {
                features,
                distributions,
                name,
            } => load_dataset(
                features,
                distributions,
                name.as_deref().unwrap_or("dataset"),
            ),
        }
    }
}

fn default_folds() -> usize {
    5
}

fn default_variants() -> Vec<SolverVariant> {
    vec![SolverVariant::Bldl]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub dataset: DatasetRef,
    pub bias: BiasConfig,
    #[serde(default)]
    pub degrade: DegradeConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_variants")]
    pub variants: Vec<SolverVariant>,
    pub output_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let spec: ExperimentSpec =
            serde_json::from_str(&text).map_err(|e| HarnessError::Json {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        Ok(spec)
    }

    pub fn check(&self, n_instances: usize) -> Result<()> {
        self.bias.check()?;
        self.degrade.check()?;
        self.solver.check()?;
        if self.folds < 2 || self.folds > n_instances {
            return Err(HarnessError::Spec(format!(
                "folds = {} must lie in [2, {n_instances}]",
                self.folds
            )));
        }
        if self.variants.is_empty() {
            return Err(HarnessError::Spec("variants list is empty".into()));
        }
        Ok(())
    }
}

/// Contiguous-block fold assignment: fold f tests instances
/// [f*n/folds, (f+1)*n/folds). Every instance lands in exactly one test fold.
pub fn fold_partition(n: usize, folds: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    (0..folds)
        .map(|f| {
            let lo = f * n / folds;
            let hi = (f + 1) * n / folds;
            let test: Vec<usize> = (lo..hi).collect();
            let train: Vec<usize> = (0..n).filter(|i| *i < lo || *i >= hi).collect();
            (train, test)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoveryRecord {
    pub fold: usize,
    /// `||D_hat - D_true||_F` on the training portion.
    pub biased_error: f64,
    /// `||D_recovered - D_true||_F` on the training portion.
    pub recovered_error: f64,
}

/// Per-variant outcome of one experiment: fold-level metric means reduced to
/// mean and population std across folds, plus the recovery trace. This is
/// the record consumed by the `stats` command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariantReport {
    pub dataset: String,
    pub method: String,
    pub n_instances: usize,
    pub folds: usize,
    pub converged_folds: usize,
    pub per_metric: BTreeMap<MetricName, MetricSummary>,
    pub recovery: Vec<RecoveryRecord>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub reports: Vec<VariantReport>,
}

fn mean_std(values: &[f64]) -> MetricSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    MetricSummary {
        mean,
        std: var.sqrt(),
    }
}

/// Run the full protocol for one spec and write its report files.
///
/// Per fold and variant the solver fits on biased training data and is
/// scored on clean test distributions; traces land in
/// `trace_<variant>_fold<k>.csv`, reports in `report_<variant>.json`,
/// Table-style summaries in `scores.csv`, and recovery errors in
/// `recovery.csv`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let dataset = spec.dataset.materialize()?;
    spec.check(dataset.len())?;
    fs::create_dir_all(&spec.output_dir).map_err(|e| HarnessError::io(&spec.output_dir, e))?;

    let n = dataset.len();
    let partitions = fold_partition(n, spec.folds);
    let mut reports = Vec::new();

    for variant in &spec.variants {
        let mut cfg = spec.solver.clone();
        cfg.variant = *variant;
        let mut fold_values: BTreeMap<MetricName, Vec<f64>> = BTreeMap::new();
        let mut recovery = Vec::new();
        let mut converged_folds = 0;

        for (f, (train, test)) in partitions.iter().enumerate() {
            let x_train = dataset.x.select_columns(train);
            let x_test = dataset.x.select_columns(test);
            let d_train = dataset.d.select_columns(train);
            let d_test = dataset.d.select_columns(test);

            let fold_bias = BiasConfig {
                c: spec.bias.c,
                seed: derive_seed(spec.bias.seed, f as u64),
                scheme: spec.bias.scheme,
            };
            let d_hat = inject_bias(&d_train, &fold_bias)?;
            let l_hat = batch_degrade(&d_hat, &spec.degrade)?;

            let result = fit(&x_train, &d_hat, &l_hat, &cfg, &spec.degrade, Some(&d_train))?;
            converged_folds += result.converged as usize;

            let trace_path = spec
                .output_dir
                .join(format!("trace_{}_fold{}.csv", variant.name(), f));
            let file =
                fs::File::create(&trace_path).map_err(|e| HarnessError::io(&trace_path, e))?;
            write_trace_csv(&result.trace, file).map_err(|e| HarnessError::io(&trace_path, e))?;

            recovery.push(RecoveryRecord {
                fold: f,
                biased_error: frobenius_distance(d_hat.matrix(), d_train.matrix())?,
                recovered_error: frobenius_distance(
                    result.d_recovered.matrix(),
                    d_train.matrix(),
                )?,
            });

            let predictions = predict(&result.w, &x_test)?;
            let report = score_report(&d_test, &predictions)?;
            for name in MetricName::ALL {
                fold_values
                    .entry(name)
                    .or_default()
                    .push(report.per_metric[&name].0);
            }
        }

        let per_metric = fold_values
            .into_iter()
            .map(|(name, values)| (name, mean_std(&values)))
            .collect();
        reports.push(VariantReport {
            dataset: dataset.name.clone(),
            method: variant.name().to_string(),
            n_instances: n,
            folds: spec.folds,
            converged_folds,
            per_metric,
            recovery,
        });
    }

    write_reports(&spec.output_dir, &reports)?;
    Ok(ExperimentOutput { reports })
}

fn write_reports(dir: &Path, reports: &[VariantReport]) -> Result<()> {
    for report in reports {
        let path = dir.join(format!("report_{}.json", report.method));
        let text = serde_json::to_string_pretty(report).map_err(|e| HarnessError::Json {
            path: path.clone(),
            message: e.to_string(),
        })?;
        fs::write(&path, text + "\n").map_err(|e| HarnessError::io(&path, e))?;
    }

    let mut scores = String::from("method,metric,mean,std\n");
    for report in reports {
        for (name, summary) in &report.per_metric {
            scores.push_str(&format!(
                "{},{},{},{}\n",
                report.method,
                name.as_str(),
                summary.mean,
                summary.std
            ));
        }
    }
    let path = dir.join("scores.csv");
    fs::write(&path, scores).map_err(|e| HarnessError::io(&path, e))?;

    let mut recovery = String::from("method,fold,biased_error,recovered_error\n");
    for report in reports {
        for rec in &report.recovery {
            recovery.push_str(&format!(
                "{},{},{},{}\n",
                report.method, rec.fold, rec.biased_error, rec.recovered_error
            ));
        }
    }
    let path = dir.join("recovery.csv");
    fs::write(&path, recovery).map_err(|e| HarnessError::io(&path, e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensitivityParam {
    Alpha,
    Beta,
    Eta,
    Lambda1,
}

impl std::str::FromStr for SensitivityParam {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(SensitivityParam::Alpha),
            "beta" => Ok(SensitivityParam::Beta),
            "eta" => Ok(SensitivityParam::Eta),
            "lambda1" => Ok(SensitivityParam::Lambda1),
            other => Err(HarnessError::Spec(format!(
                "unknown sensitivity parameter '{other}' (alpha, beta, eta, lambda1)"
            ))),
        }
    }
}

impl SensitivityParam {
    pub fn as_str(&self) -> &'static str {
        match self {
            SensitivityParam::Alpha => "alpha",
            SensitivityParam::Beta => "beta",
            SensitivityParam::Eta => "eta",
            SensitivityParam::Lambda1 => "lambda1",
        }
    }

    fn apply(&self, cfg: &mut SolverConfig, value: f64) {
        match self {
            SensitivityParam::Alpha => cfg.alpha = value,
            SensitivityParam::Beta => cfg.beta = value,
            SensitivityParam::Eta => cfg.eta = value,
            SensitivityParam::Lambda1 => cfg.lambda1 = value,
        }
    }
}

/// One `run_experiment` per grid value, everything else held fixed. Emits
/// `sensitivity.csv` (one row per grid value and variant) under the spec's
/// output directory; each grid point keeps its full report set in a
/// `<param>_<value>/` subdirectory.
pub fn run_sensitivity(
    spec: &ExperimentSpec,
    param: SensitivityParam,
    grid: &[f64],
) -> Result<Vec<VariantReport>> {
    if grid.is_empty() {
        return Err(HarnessError::Spec("sensitivity grid is empty".into()));
    }
    fs::create_dir_all(&spec.output_dir).map_err(|e| HarnessError::io(&spec.output_dir, e))?;
    let mut rows = String::from("param,value,method,metric,mean,std,converged_folds\n");
    let mut all_reports = Vec::new();
    for value in grid {
        let mut point = spec.clone();
        param.apply(&mut point.solver, *value);
        point.output_dir = spec.output_dir.join(format!("{}_{}", param.as_str(), value));
        let output = run_experiment(&point)?;
        for report in &output.reports {
            for (name, summary) in &report.per_metric {
                rows.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    param.as_str(),
                    value,
                    report.method,
                    name.as_str(),
                    summary.mean,
                    summary.std,
                    report.converged_folds
                ));
            }
        }
        all_reports.extend(output.reports);
    }
    let path = spec.output_dir.join("sensitivity.csv");
    fs::write(&path, rows).map_err(|e| HarnessError::io(&path, e))?;
    Ok(all_reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_partition_covers_every_instance_once() {
        for (n, folds) in [(10, 2), (11, 3), (200, 5), (7, 7)] {
            let parts = fold_partition(n, folds);
            let mut seen = vec![0usize; n];
            for (train, test) in &parts {
                assert_eq!(train.len() + test.len(), n);
                for &i in test {
                    seen[i] += 1;
                }
            }
            assert!(seen.iter().all(|c| *c == 1), "n={n} folds={folds}");
        }
    }

    #[test]
    fn spec_validation_rejects_bad_folds() {
        let spec = ExperimentSpec {
            name: "t".into(),
            dataset: DatasetRef::Synth {
                d: 3,
                m: 3,
                n: 4,
                rank: 2,
                seed: 1,
            },
            bias: BiasConfig::new(0.1, 1).unwrap(),
            degrade: DegradeConfig::default(),
            solver: SolverConfig::default(),
            folds: 5,
            variants: vec![SolverVariant::Bldl],
            output_dir: std::env::temp_dir().join("bldl-spec-test"),
        };
        assert!(spec.check(4).is_err(), "folds > n must fail");
        let mut ok = spec.clone();
        ok.folds = 2;
        assert!(ok.check(4).is_ok());
        ok.variants.clear();
        assert!(ok.check(4).is_err());
    }
}

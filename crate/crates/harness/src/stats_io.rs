//! Cross-dataset statistics over experiment reports: per-metric rank tables,
//! Friedman test with its critical value, Bonferroni-Dunn critical
//! difference, and Wilcoxon signed-rank comparisons of a control method
//! against every other method.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use bldl_core::metrics::MetricName;
use bldl_core::stats::{
    bonferroni_dunn_cd, bonferroni_dunn_q, f_critical, friedman, wilcoxon_signed_rank, RankTable,
};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::experiment::VariantReport;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub method: String,
    pub w_plus: Option<f64>,
    pub p_value: Option<f64>,
    pub n_eff: usize,
    pub exact: bool,
    /// "win" when the control is significantly better, "loss" when
    /// significantly worse, "tie" otherwise (including all-zero differences).
    pub outcome: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricStats {
    pub metric: MetricName,
    pub higher_is_better: bool,
    pub methods: Vec<String>,
    pub average_ranks: Vec<f64>,
    pub chi2: f64,
    /// None encodes a degenerate (infinite) statistic from a perfect ordering.
    pub f_stat: Option<f64>,
    pub degenerate: bool,
    pub df1: usize,
    pub df2: usize,
    pub f_critical: f64,
    pub reject_null: bool,
    pub q_alpha: f64,
    pub critical_difference: f64,
    pub comparisons: Vec<Comparison>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatsFile {
    pub alpha: f64,
    pub control: String,
    pub datasets: Vec<String>,
    pub n_datasets: usize,
    pub n_methods: usize,
    pub per_metric: Vec<MetricStats>,
}

pub fn load_reports(paths: &[PathBuf]) -> Result<Vec<VariantReport>> {
    let mut reports = Vec::new();
    for path in paths {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let report: VariantReport =
            serde_json::from_str(&text).map_err(|e| HarnessError::Json {
                path: path.clone(),
                message: e.to_string(),
            })?;
        reports.push(report);
    }
    Ok(reports)
}

/// Build the per-metric statistics over a complete dataset × method grid of
/// reports. Rank 1 is the best method on a dataset, respecting each metric's
/// direction; the control method is compared against every other method with
/// the exact Wilcoxon signed-rank test on per-dataset means.
pub fn emit_stats(reports: &[VariantReport], control: &str, alpha: f64) -> Result<StatsFile> {
    let datasets: Vec<String> = reports
        .iter()
        .map(|r| r.dataset.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let methods: Vec<String> = reports
        .iter()
        .map(|r| r.method.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if datasets.len() < 2 || methods.len() < 2 {
        return Err(HarnessError::Spec(format!(
            "stats need at least 2 datasets and 2 methods, found {} and {}",
            datasets.len(),
            methods.len()
        )));
    }
    if !methods.iter().any(|m| m == control) {
        return Err(HarnessError::Spec(format!(
            "control method '{control}' not among {methods:?}"
        )));
    }

    let mut by_key: BTreeMap<(String, String), &VariantReport> = BTreeMap::new();
    for report in reports {
        by_key.insert((report.dataset.clone(), report.method.clone()), report);
    }
    for ds in &datasets {
        for method in &methods {
            if !by_key.contains_key(&(ds.clone(), method.clone())) {
                return Err(HarnessError::Spec(format!(
                    "missing report for dataset '{ds}' and method '{method}'"
                )));
            }
        }
    }

    let k = methods.len();
    let n = datasets.len();
    let q_alpha = bonferroni_dunn_q(k, alpha)?;
    let cd = bonferroni_dunn_cd(k, n, q_alpha)?;

    let mut per_metric = Vec::new();
    for name in MetricName::ALL {
        let scores: Vec<Vec<f64>> = datasets
            .iter()
            .map(|ds| {
                methods
                    .iter()
                    .map(|m| by_key[&(ds.clone(), m.clone())].per_metric[&name].mean)
                    .collect()
            })
            .collect();
        let table = RankTable::from_scores(&scores, methods.clone(), name.higher_is_better())?;
        let test = friedman(&table)?;
        let crit = f_critical(alpha, test.df1, test.df2)?;
        let reject = test.is_degenerate() || test.f_stat > crit;

        let control_idx = methods.iter().position(|m| m == control).expect("checked");
        let control_values: Vec<f64> = scores.iter().map(|row| row[control_idx]).collect();
        let mut comparisons = Vec::new();
        for (j, method) in methods.iter().enumerate() {
            if j == control_idx {
                continue;
            }
            let other_values: Vec<f64> = scores.iter().map(|row| row[j]).collect();
            let comparison = match wilcoxon_signed_rank(&control_values, &other_values) {
                Ok(test) => {
                    let direction = if name.higher_is_better() { 1.0 } else { -1.0 };
                    let advantage: f64 = control_values
                        .iter()
                        .zip(&other_values)
                        .map(|(c, o)| direction * (c - o))
                        .sum();
                    let outcome = if test.p_two_sided < alpha {
                        if advantage > 0.0 {
                            "win"
                        } else {
                            "loss"
                        }
                    } else {
                        "tie"
                    };
                    Comparison {
                        method: method.clone(),
                        w_plus: Some(test.w_plus),
                        p_value: Some(test.p_two_sided),
                        n_eff: test.n_eff,
                        exact: test.exact,
                        outcome: outcome.to_string(),
                    }
                }
                Err(bldl_core::Error::AllZeroDifferences) => Comparison {
                    method: method.clone(),
                    w_plus: None,
                    p_value: None,
                    n_eff: 0,
                    exact: true,
                    outcome: "tie".to_string(),
                },
                Err(other) => return Err(other.into()),
            };
            comparisons.push(comparison);
        }

        per_metric.push(MetricStats {
            metric: name,
            higher_is_better: name.higher_is_better(),
            methods: methods.clone(),
            average_ranks: table.average_ranks(),
            chi2: test.chi2,
            f_stat: (!test.is_degenerate()).then_some(test.f_stat),
            degenerate: test.is_degenerate(),
            df1: test.df1,
            df2: test.df2,
            f_critical: crit,
            reject_null: reject,
            q_alpha,
            critical_difference: cd,
            comparisons,
        });
    }

    Ok(StatsFile {
        alpha,
        control: control.to_string(),
        datasets: datasets.clone(),
        n_datasets: n,
        n_methods: k,
        per_metric,
    })
}

pub fn write_stats(stats: &StatsFile, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(stats).map_err(|e| HarnessError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
}

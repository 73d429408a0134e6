//! The six LDL evaluation metrics and their aggregation over a test set.
//!
//! Chebyshev, Clark, Canberra, and KL measure distance (smaller is better);
//! Cosine and Intersection measure similarity (larger is better). KL uses the
//! natural logarithm, with both operands of the ratio clamped below at 1e-12.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::DistributionMatrix;

/// Log-ratio operands are clamped below at this value.
const KL_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    Chebyshev,
    Clark,
    Canberra,
    Kl,
    Cosine,
    Intersection,
}

impl MetricName {
    pub const ALL: [MetricName; 6] = [
        MetricName::Chebyshev,
        MetricName::Clark,
        MetricName::Canberra,
        MetricName::Kl,
        MetricName::Cosine,
        MetricName::Intersection,
    ];

    /// Whether larger values indicate better predictions.
    pub fn higher_is_better(&self) -> bool {
        matches!(self, MetricName::Cosine | MetricName::Intersection)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            MetricName::Chebyshev => "chebyshev",
            MetricName::Clark => "clark",
            MetricName::Canberra => "canberra",
            MetricName::Kl => "kl",
            MetricName::Cosine => "cosine",
            MetricName::Intersection => "intersection",
        }
    }
}

impl std::str::FromStr for MetricName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricName::ALL
            .iter()
            .find(|m| m.as_str() == s)
            .copied()
            .ok_or_else(|| Error::InvalidConfig(format!("unknown metric '{s}'")))
    }
}

/// Mean and population standard deviation of each metric over a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub per_metric: BTreeMap<MetricName, (f64, f64)>,
    pub n_instances: usize,
}

fn check_pair(d: &[f64], p: &[f64]) -> Result<()> {
    if d.len() != p.len() {
        return Err(Error::ShapeMismatch {
            context: "per_instance_metric",
            expected: format!("{}", d.len()),
            found: format!("{}", p.len()),
        });
    }
    for (col, v) in [d, p].into_iter().enumerate() {
        let sum: f64 = v.iter().sum();
        if v.iter().any(|x| !x.is_finite() || *x < 0.0)
            || (sum - 1.0).abs() > crate::types::SIMPLEX_TOL
        {
            return Err(Error::InvalidDistribution {
                col,
                reason: format!("not a probability vector (sum {sum})"),
            });
        }
    }
    Ok(())
}

/// Evaluate one metric between a target distribution `d` and a prediction `p`.
pub fn per_instance_metric(name: MetricName, d: &[f64], p: &[f64]) -> Result<f64> {
    check_pair(d, p)?;
    let value = match name {
        MetricName::Chebyshev => d
            .iter()
            .zip(p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max),
        MetricName::Clark => d
            .iter()
            .zip(p)
            .map(|(a, b)| {
                let denom = a + b;
                if denom == 0.0 {
                    0.0
                } else {
                    ((a - b) / denom).powi(2)
                }
            })
            .sum::<f64>()
            .sqrt(),
        MetricName::Canberra => d
            .iter()
            .zip(p)
            .map(|(a, b)| {
                let denom = a + b;
                if denom == 0.0 {
                    0.0
                } else {
                    (a - b).abs() / denom
                }
            })
            .sum(),
        MetricName::Kl => d
            .iter()
            .zip(p)
            .map(|(a, b)| a * (a.max(KL_CLAMP) / b.max(KL_CLAMP)).ln())
            .sum(),
        MetricName::Cosine => {
            let dot: f64 = d.iter().zip(p).map(|(a, b)| a * b).sum();
            let na: f64 = d.iter().map(|a| a * a).sum::<f64>().sqrt();
            let nb: f64 = p.iter().map(|b| b * b).sum::<f64>().sqrt();
            dot / (na * nb)
        }
        MetricName::Intersection => d.iter().zip(p).map(|(a, b)| a.min(*b)).sum(),
    };
    Ok(value)
}

/// Per-column metric values, reduced to mean and population standard deviation.
pub fn aggregate(
    name: MetricName,
    d_true: &DistributionMatrix,
    p: &DistributionMatrix,
) -> Result<(f64, f64)> {
    if d_true.labels() != p.labels() || d_true.len() != p.len() {
        return Err(crate::types::shape_mismatch(
            "aggregate",
            d_true.matrix(),
            p.matrix(),
        ));
    }
    let n = d_true.len();
    let mut values = Vec::with_capacity(n);
    for col in 0..n {
        values.push(per_instance_metric(
            name,
            &d_true.column(col),
            &p.column(col),
        )?);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    Ok((mean, var.sqrt()))
}

/// All six metrics between a truth matrix and a prediction matrix.
pub fn score_report(d_true: &DistributionMatrix, p: &DistributionMatrix) -> Result<ScoreReport> {
    let mut per_metric = BTreeMap::new();
    for name in MetricName::ALL {
        per_metric.insert(name, aggregate(name, d_true, p)?);
    }
    Ok(ScoreReport {
        per_metric,
        n_instances: d_true.len(),
    })
}

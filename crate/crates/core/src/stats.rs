//! Nonparametric comparison machinery: Friedman test with its F-statistic,
//! Bonferroni-Dunn critical difference, and the exact Wilcoxon signed-rank
//! test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// N×k table of per-dataset method ranks (1 = best, average ranks on ties).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub ranks: Vec<Vec<f64>>,
    pub method_names: Vec<String>,
}

impl RankTable {
    pub fn new(ranks: Vec<Vec<f64>>, method_names: Vec<String>) -> Result<Self> {
        let k = method_names.len();
        if k < 2 || ranks.is_empty() {
            return Err(Error::InvalidConfig(
                "rank table needs at least 2 methods and 1 dataset".into(),
            ));
        }
        let expected = k as f64 * (k as f64 + 1.0) / 2.0;
        for (i, row) in ranks.iter().enumerate() {
            if row.len() != k {
                return Err(Error::DegenerateRanks(format!(
                    "row {i} has {} entries, expected {k}",
                    row.len()
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - expected).abs() > 1e-9 {
                return Err(Error::DegenerateRanks(format!(
                    "row {i} sums to {sum}, expected {expected}"
                )));
            }
        }
        Ok(Self {
            ranks,
            method_names,
        })
    }

    /// Rank methods per dataset from a score matrix (datasets × methods).
    /// Rank 1 goes to the best score, respecting the metric direction;
    /// tied scores share the average of their ranks.
    pub fn from_scores(
        scores: &[Vec<f64>],
        method_names: Vec<String>,
        higher_is_better: bool,
    ) -> Result<Self> {
        let ranks = scores
            .iter()
            .map(|row| {
                let keyed: Vec<f64> = if higher_is_better {
                    row.iter().map(|v| -v).collect()
                } else {
                    row.clone()
                };
                average_ranks(&keyed)
            })
            .collect();
        Self::new(ranks, method_names)
    }

    pub fn n_datasets(&self) -> usize {
        self.ranks.len()
    }

    pub fn n_methods(&self) -> usize {
        self.method_names.len()
    }

    /// Column means: the average rank of each method.
    pub fn average_ranks(&self) -> Vec<f64> {
        let n = self.n_datasets() as f64;
        let k = self.n_methods();
        let mut means = vec![0.0; k];
        for row in &self.ranks {
            for (j, r) in row.iter().enumerate() {
                means[j] += r;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        means
    }
}

/// Ascending ranks (1 = smallest) with average ranks on ties.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("non-NaN values"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share the average of ranks i+1..=j+1
        let avg = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanTest {
    pub chi2: f64,
    /// Iman-Davenport F statistic; `+inf` when the ordering is perfect
    /// (chi2 reaches its maximum N(k-1)).
    pub f_stat: f64,
    pub df1: usize,
    pub df2: usize,
}

impl FriedmanTest {
    pub fn is_degenerate(&self) -> bool {
        self.f_stat.is_infinite()
    }
}

/// Friedman chi-square and its F-distributed refinement.
///
/// `chi2 = 12N/(k(k+1)) (sum_j R_j^2 - k(k+1)^2/4)` over mean ranks `R_j`,
/// `F = (N-1) chi2 / (N(k-1) - chi2)`, degrees of freedom `(k-1, (k-1)(N-1))`.
pub fn friedman(table: &RankTable) -> Result<FriedmanTest> {
    let n = table.n_datasets();
    let k = table.n_methods();
    if n < 2 || k < 2 {
        return Err(Error::InvalidConfig(
            "friedman test needs N >= 2 datasets and k >= 2 methods".into(),
        ));
    }
    let nf = n as f64;
    let kf = k as f64;
    let mean_ranks = table.average_ranks();
    let sum_sq: f64 = mean_ranks.iter().map(|r| r * r).sum();
    let chi2 = 12.0 * nf / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0).powi(2) / 4.0);
    let denom = nf * (kf - 1.0) - chi2;
    let f_stat = if denom.abs() < 1e-9 {
        f64::INFINITY
    } else {
        (nf - 1.0) * chi2 / denom
    };
    Ok(FriedmanTest {
        chi2,
        f_stat,
        df1: k - 1,
        df2: (k - 1) * (n - 1),
    })
}

/// Regularized incomplete beta function I_x(a, b) via the continued fraction
/// of Lentz's method, with the symmetry flip for fast convergence.
fn beta_inc(a: f64, b: f64, x: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0 && (0.0..=1.0).contains(&x));
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        return 1.0 - beta_inc(b, a, 1.0 - x);
    }
    let ln_beta = statrs::function::gamma::ln_gamma(a) + statrs::function::gamma::ln_gamma(b)
        - statrs::function::gamma::ln_gamma(a + b);
    let prefix = (a * x.ln() + b * (1.0 - x).ln() - ln_beta).exp() / a;

    let tiny = 1e-300;
    let eps = 1e-15;
    let mut c = 1.0;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < tiny {
        d = tiny;
    }
    d = 1.0 / d;
    let mut f = d;
    for m in 1..=300 {
        let mf = m as f64;
        let m2 = 2.0 * mf;
        // even step
        let numer = mf * (b - mf) * x / ((a + m2 - 1.0) * (a + m2));
        d = 1.0 + numer * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + numer / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        f *= d * c;
        // odd step
        let numer = -(a + mf) * (a + b + mf) * x / ((a + m2) * (a + m2 + 1.0));
        d = 1.0 + numer * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + numer / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        f *= delta;
        if (delta - 1.0).abs() < eps {
            break;
        }
    }
    prefix * f
}

/// CDF of the F distribution with `(df1, df2)` degrees of freedom.
fn f_cdf(x: f64, df1: f64, df2: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    beta_inc(df1 / 2.0, df2 / 2.0, df1 * x / (df1 * x + df2))
}

/// Upper-alpha quantile of the F distribution, found by bisecting the
/// incomplete-beta CDF to an absolute tolerance of 1e-6.
pub fn f_critical(alpha: f64, df1: usize, df2: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "alpha = {alpha} must lie strictly between 0 and 1"
        )));
    }
    if df1 == 0 || df2 == 0 {
        return Err(Error::InvalidConfig(
            "degrees of freedom must be positive".into(),
        ));
    }
    let (d1, d2) = (df1 as f64, df2 as f64);
    let target = 1.0 - alpha;
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f_cdf(hi, d1, d2) < target {
        hi *= 2.0;
        if hi > 1e12 {
            break;
        }
    }
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if f_cdf(mid, d1, d2) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Critical difference of the Bonferroni-Dunn test:
/// `CD = q_alpha * sqrt(k (k+1) / (6 N))`.
pub fn bonferroni_dunn_cd(k: usize, n_datasets: usize, q_alpha: f64) -> Result<f64> {
    if k < 2 || n_datasets < 1 {
        return Err(Error::InvalidConfig(
            "bonferroni_dunn_cd needs k >= 2 and at least one dataset".into(),
        ));
    }
    if !(q_alpha > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "q_alpha = {q_alpha} must be positive"
        )));
    }
    let kf = k as f64;
    Ok(q_alpha * (kf * (kf + 1.0) / (6.0 * n_datasets as f64)).sqrt())
}

/// Standard two-tailed Bonferroni-Dunn critical value for `k - 1` comparisons
/// against a control: the normal quantile at `1 - alpha / (2 (k - 1))`.
pub fn bonferroni_dunn_q(k: usize, alpha: f64) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidConfig("need k >= 2 methods".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "alpha = {alpha} must lie strictly between 0 and 1"
        )));
    }
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    Ok(normal.inverse_cdf(1.0 - alpha / (2.0 * (k as f64 - 1.0))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonTest {
    /// Sum of ranks of positive differences.
    pub w_plus: f64,
    pub p_two_sided: f64,
    /// Number of nonzero differences.
    pub n_eff: usize,
    /// Whether the p-value came from full enumeration (true) or the normal
    /// approximation (false).
    pub exact: bool,
}

/// Largest `n_eff` for which all 2^n sign assignments are enumerated.
const WILCOXON_EXACT_LIMIT: usize = 20;

/// Wilcoxon signed-rank test of paired samples, two-sided.
///
/// Zero differences are dropped. Absolute differences are ranked with average
/// ranks on ties. For up to 20 effective pairs the p-value is exact (all sign
/// assignments enumerated); beyond that a normal approximation with
/// tie-corrected variance and continuity correction is used.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonTest> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch {
            context: "wilcoxon_signed_rank",
            expected: format!("{}", a.len()),
            found: format!("{}", b.len()),
        });
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    let n_eff = diffs.len();
    if n_eff == 0 {
        return Err(Error::AllZeroDifferences);
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let w_plus: f64 = ranks
        .iter()
        .zip(&diffs)
        .filter(|(_, d)| **d > 0.0)
        .map(|(r, _)| r)
        .sum();

    if n_eff <= WILCOXON_EXACT_LIMIT {
        let p = exact_two_sided_p(&ranks, w_plus);
        Ok(WilcoxonTest {
            w_plus,
            p_two_sided: p,
            n_eff,
            exact: true,
        })
    } else {
        let p = normal_approx_two_sided_p(&ranks, w_plus);
        Ok(WilcoxonTest {
            w_plus,
            p_two_sided: p,
            n_eff,
            exact: false,
        })
    }
}

/// Enumerate all sign assignments; ranks are multiples of 0.5 so the sums
/// compare exactly in f64.
fn exact_two_sided_p(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len();
    let total = 1u64 << n;
    let mut count_ge = 0u64;
    let mut count_le = 0u64;
    for mask in 0..total {
        let mut t = 0.0;
        for (i, r) in ranks.iter().enumerate() {
            if mask & (1 << i) != 0 {
                t += r;
            }
        }
        if t >= w_plus - 1e-9 {
            count_ge += 1;
        }
        if t <= w_plus + 1e-9 {
            count_le += 1;
        }
    }
    let tail = count_ge.min(count_le) as f64 / total as f64;
    (2.0 * tail).min(1.0)
}

fn normal_approx_two_sided_p(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
    // tie correction: subtract sum(t^3 - t)/48 over groups of tied ranks
    let mut sorted = ranks.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-NaN ranks"));
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        var -= (t.powi(3) - t) / 48.0;
        i = j + 1;
    }
    if var <= 0.0 {
        return 1.0;
    }
    let centered = w_plus - mean;
    let corrected = if centered > 0.5 {
        centered - 0.5
    } else if centered < -0.5 {
        centered + 0.5
    } else {
        0.0
    };
    let z = corrected / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (2.0 * (1.0 - normal.cdf(z.abs()))).min(1.0)
}

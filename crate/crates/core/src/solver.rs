//! Joint recovery of label distributions and training of a low-rank-regularized
//! predictor via ADMM.
//!
//! Model variables, with instances in columns (X is d×n):
//!
//! * `W` (m×d) — linear predictor, `W * X` approximates the recovered
//!   distributions `D`.
//! * `O` (m×m) — degradation map on the label dimension: `O * D` approximates
//!   the observed multi-hot labels `L̂`, and so does `O * D̂`.
//! * `D` (m×n) — recovered label distributions (unconstrained during
//!   iteration, projected onto the simplex only on export).
//! * `Z`, `Λ` — nuclear-norm splitting variable and multiplier for the
//!   constraint `Z = O * W * X` (the degraded predictions, which live in the
//!   multi-label space and are modeled as low-rank).
//!
//! Augmented Lagrangian:
//!
//! ```text
//! ||Z||_* + alpha ||WX - D||_F^2 + beta ||O D_hat - L_hat||_F^2
//!        + gamma ||O D - L_hat||_F^2 + eta ||D - D_hat||_F^2
//!        + lambda1 ||W||_F^2 + lambda2 ||O||_F^2
//!        + <Lambda, Z - OWX> + (rho/2) ||Z - OWX||_F^2
//! ```
//!
//! Each sweep updates W, O, D, Z, Lambda in that order (Gauss-Seidel: the O
//! step sees the new W, the D step the new O), then grows rho by mu up to
//! rho_max. Every update below is the exact stationary point of its
//! subproblem; the test suite checks this against central-difference
//! gradients.
//!
//! Ablation variants:
//!
//! * `BldlA` drops the recovery process: D is frozen at D_hat, the gamma and
//!   eta terms leave the objective, and the surviving data terms carry half
//!   weight (alpha/2, beta/2).
//! * `BldlB` moves the low-rank constraint from the degraded predictions
//!   `OWX` (multi-label space) to the raw predictions `WX` (label
//!   distribution space), which are full-rank; the splitting variable stays
//!   m×n and the O subproblem decouples from the constraint.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::bias::{batch_degrade, DegradeConfig};
use crate::error::{Error, Result};
use crate::svt::{nuclear_norm, svt};
use crate::types::{
    normalize_to_simplex, shape_mismatch, DistributionMatrix, FeatureMatrix, MultiLabelMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SolverVariant {
    #[default]
    Bldl,
    BldlA,
    BldlB,
}

impl SolverVariant {
    pub fn name(&self) -> &'static str {
        match self {
            SolverVariant::Bldl => "bldl",
            SolverVariant::BldlA => "bldl-a",
            SolverVariant::BldlB => "bldl-b",
        }
    }
}

impl std::str::FromStr for SolverVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bldl" => Ok(SolverVariant::Bldl),
            "bldl-a" => Ok(SolverVariant::BldlA),
            "bldl-b" => Ok(SolverVariant::BldlB),
            other => Err(Error::InvalidConfig(format!(
                "unknown variant '{other}' (expected bldl, bldl-a, or bldl-b)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub eta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub rho0: f64,
    pub mu: f64,
    pub rho_max: f64,
    pub max_iters: usize,
    pub tol_primal: f64,
    pub tol_change: f64,
    pub variant: SolverVariant,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            beta: 0.05,
            gamma: 0.05,
            eta: 10.0,
            lambda1: 0.01,
            lambda2: 0.01,
            rho0: 0.1,
            mu: 1.05,
            rho_max: 1e6,
            max_iters: 500,
            tol_primal: 1e-4,
            tol_change: 1e-5,
            variant: SolverVariant::Bldl,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn check(&self) -> Result<()> {
        let weights = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("eta", self.eta),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
        ];
        for (name, v) in weights {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} = {v} must be a nonnegative finite real"
                )));
            }
        }
        if !(self.mu > 1.0) {
            return Err(Error::InvalidConfig(format!("mu = {} must exceed 1", self.mu)));
        }
        if !(self.rho0 > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "rho0 = {} must be positive",
                self.rho0
            )));
        }
        if self.rho_max < self.rho0 {
            return Err(Error::InvalidConfig(format!(
                "rho_max = {} must be at least rho0 = {}",
                self.rho_max, self.rho0
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be positive".into()));
        }
        if !(self.tol_primal > 0.0) || !(self.tol_change > 0.0) {
            return Err(Error::InvalidConfig(
                "tolerances must be positive".into(),
            ));
        }
        Ok(())
    }

    /// (alpha, beta, gamma, eta) as the active variant weights them. BldlA
    /// removes the recovery terms and halves the surviving data terms.
    fn variant_weights(&self) -> (f64, f64, f64, f64) {
        match self.variant {
            SolverVariant::BldlA => (0.5 * self.alpha, 0.5 * self.beta, 0.0, 0.0),
            _ => (self.alpha, self.beta, self.gamma, self.eta),
        }
    }
}

/// Iterates of one ADMM run. `z` and `lambda` are m×n: the splitting target
/// is `OWX` for `Bldl`/`BldlA` and `WX` for `BldlB`.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub w: DMatrix<f64>,
    pub o: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub z: DMatrix<f64>,
    pub lambda: DMatrix<f64>,
    pub rho: f64,
    pub iter: usize,
}

impl SolverState {
    /// Initial point: W = 0, O = I, D = D_hat, Z = 0, Lambda = 0, rho = rho0.
    pub fn init(
        dim: usize,
        labels: usize,
        d_hat: &DMatrix<f64>,
        cfg: &SolverConfig,
    ) -> Self {
        Self {
            w: DMatrix::zeros(labels, dim),
            o: DMatrix::identity(labels, labels),
            d: d_hat.clone(),
            z: DMatrix::zeros(labels, d_hat.ncols()),
            lambda: DMatrix::zeros(labels, d_hat.ncols()),
            rho: cfg.rho0,
            iter: 0,
        }
    }

    fn all_finite(&self) -> bool {
        self.rho.is_finite()
            && [&self.w, &self.o, &self.d, &self.z, &self.lambda]
                .iter()
                .all(|m| m.iter().all(|v| v.is_finite()))
    }
}

/// One convergence-trace sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iter: usize,
    /// Splitting-constraint violation, `||Z - OWX||_F` (`||Z - OW||_F` for BldlB).
    pub primal_residual: f64,
    /// `||D - D_hat||_F`.
    pub delta1: f64,
    /// `||O D - L_hat||_F`.
    pub delta2_soft: f64,
    /// Normalized Hamming distance between `degrade(D)` and `L_hat`.
    pub delta2_hard: f64,
    /// Augmented Lagrangian value of the active variant.
    pub objective: f64,
    /// `||D - D_true||_F` when ground truth is available.
    pub recovery_error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub w: DMatrix<f64>,
    pub o: DMatrix<f64>,
    /// Recovered distributions, simplex-projected column by column.
    pub d_recovered: DistributionMatrix,
    pub trace: Vec<TracePoint>,
    pub converged: bool,
    pub iters_run: usize,
}

/// The matrix the nuclear norm acts on: degraded predictions `O * W * X`
/// for Bldl and BldlA, raw predictions `W * X` for BldlB.
fn operator_product(
    variant: SolverVariant,
    w: &DMatrix<f64>,
    o: &DMatrix<f64>,
    x: &DMatrix<f64>,
) -> DMatrix<f64> {
    match variant {
        SolverVariant::BldlB => w * x,
        _ => o * (w * x),
    }
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (m + m.transpose())
}

/// Solve `S * M * K + c * M = RHS` for M, with S and K symmetric PSD.
///
/// Both sides are diagonalized; in the eigenbases the equation decouples to
/// `(s_i * k_j + c) * M~_ij = RHS~_ij`.
fn solve_bilinear(
    s: &DMatrix<f64>,
    k: &DMatrix<f64>,
    c: f64,
    rhs: &DMatrix<f64>,
    context: &'static str,
) -> Result<DMatrix<f64>> {
    let es = SymmetricEigen::new(symmetrize(s));
    let ek = SymmetricEigen::new(symmetrize(k));
    let rhs_t = es.eigenvectors.transpose() * rhs * &ek.eigenvectors;
    let mut sol = rhs_t;
    let mut max_denom: f64 = 0.0;
    let mut min_denom = f64::INFINITY;
    for i in 0..sol.nrows() {
        for j in 0..sol.ncols() {
            let denom = es.eigenvalues[i] * ek.eigenvalues[j] + c;
            max_denom = max_denom.max(denom.abs());
            min_denom = min_denom.min(denom.abs());
            if denom.abs() < 1e-12 {
                return Err(Error::SingularSystem {
                    context,
                    cond: if min_denom > 0.0 {
                        max_denom / min_denom
                    } else {
                        f64::INFINITY
                    },
                });
            }
            sol[(i, j)] /= denom;
        }
    }
    Ok(&es.eigenvectors * sol * ek.eigenvectors.transpose())
}

/// Solve `M * G = RHS` for M with G symmetric positive definite.
fn solve_right_spd(
    g: &DMatrix<f64>,
    rhs: &DMatrix<f64>,
    context: &'static str,
) -> Result<DMatrix<f64>> {
    let g = symmetrize(g);
    let chol = nalgebra::Cholesky::new(g.clone()).ok_or_else(|| {
        let eig = SymmetricEigen::new(g.clone());
        let max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
        let min = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
        Error::SingularSystem {
            context,
            cond: if min > 0.0 { max / min } else { f64::INFINITY },
        }
    })?;
    Ok(chol.solve(&rhs.transpose()).transpose())
}

/// Solve `H * M = RHS` for M with H symmetric positive definite.
fn solve_left_spd(
    h: &DMatrix<f64>,
    rhs: &DMatrix<f64>,
    context: &'static str,
) -> Result<DMatrix<f64>> {
    let h = symmetrize(h);
    let chol = nalgebra::Cholesky::new(h.clone()).ok_or_else(|| {
        let eig = SymmetricEigen::new(h.clone());
        let max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
        let min = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
        Error::SingularSystem {
            context,
            cond: if min > 0.0 { max / min } else { f64::INFINITY },
        }
    })?;
    Ok(chol.solve(rhs))
}

/// Minimize the W-subproblem
/// `alpha ||WX - D||^2 + lambda1 ||W||^2 + (rho/2) ||Z - OWX + Lambda/rho||^2`
/// (for BldlB the constraint term reads `Z - WX + Lambda/rho`).
///
/// Stationarity gives `(2 alpha I + rho O^T O) W (X X^T) + 2 lambda1 W = RHS`
/// with `RHS = 2 alpha D X^T + O^T (rho Z + Lambda) X^T`. For BldlB the O
/// factors drop out and the normal equations collapse to the one-sided solve
/// `W ((2 alpha + rho) X X^T + 2 lambda1 I) = 2 alpha D X^T + (rho Z + Lambda) X^T`.
pub fn update_w(
    state: &SolverState,
    x: &DMatrix<f64>,
    d: &DMatrix<f64>,
    cfg: &SolverConfig,
) -> Result<DMatrix<f64>> {
    let (alpha, ..) = cfg.variant_weights();
    let scaled_dual = scaled_dual(state);
    match cfg.variant {
        SolverVariant::BldlB => {
            let gram = (2.0 * alpha + state.rho) * x * x.transpose()
                + DMatrix::identity(x.nrows(), x.nrows()) * (2.0 * cfg.lambda1);
            let rhs = (2.0 * alpha * d + &scaled_dual) * x.transpose();
            solve_right_spd(&gram, &rhs, "update_w")
        }
        _ => {
            let s = 2.0 * alpha * DMatrix::identity(state.o.nrows(), state.o.nrows())
                + state.rho * state.o.transpose() * &state.o;
            let k = x * x.transpose();
            let rhs =
                2.0 * alpha * d * x.transpose() + state.o.transpose() * &scaled_dual * x.transpose();
            solve_bilinear(&s, &k, 2.0 * cfg.lambda1, &rhs, "update_w")
        }
    }
}

/// `rho * Z + Lambda`; the scaled form avoids dividing by rho.
fn scaled_dual(state: &SolverState) -> DMatrix<f64> {
    state.rho * &state.z + &state.lambda
}

/// Minimize the O-subproblem
/// `beta ||O D_hat - L_hat||^2 + gamma ||O D - L_hat||^2 + lambda2 ||O||^2
///  + (rho/2) ||Z - OWX + Lambda/rho||^2`.
///
/// Stationarity: `O (2 beta D_hat D_hat^T + 2 gamma D D^T + rho F F^T
/// + 2 lambda2 I) = 2 beta L_hat D_hat^T + 2 gamma L_hat D^T + (rho Z + Lambda) F^T`
/// with `F = WX`. BldlA drops the gamma term and halves beta; for BldlB the
/// constraint does not involve O, so the rho terms vanish.
pub fn update_o(
    state: &SolverState,
    x: &DMatrix<f64>,
    d_hat: &DMatrix<f64>,
    d: &DMatrix<f64>,
    l_hat: &DMatrix<f64>,
    cfg: &SolverConfig,
) -> Result<DMatrix<f64>> {
    let m = d_hat.nrows();
    let (_, beta, gamma, _) = cfg.variant_weights();

    let mut gram =
        2.0 * beta * d_hat * d_hat.transpose() + DMatrix::identity(m, m) * (2.0 * cfg.lambda2);
    let mut rhs = 2.0 * beta * l_hat * d_hat.transpose();
    if gamma > 0.0 {
        gram += 2.0 * gamma * d * d.transpose();
        rhs += 2.0 * gamma * l_hat * d.transpose();
    }
    if cfg.variant != SolverVariant::BldlB {
        let f = &state.w * x;
        gram += state.rho * &f * f.transpose();
        rhs += scaled_dual(state) * f.transpose();
    }
    solve_right_spd(&gram, &rhs, "update_o")
}

/// Minimize the D-subproblem
/// `alpha ||WX - D||^2 + gamma ||O D - L_hat||^2 + eta ||D - D_hat||^2`.
///
/// Stationarity: `(2 (alpha + eta) I + 2 gamma O^T O) D
/// = 2 alpha W X + 2 gamma O^T L_hat + 2 eta D_hat`.
pub fn update_d(
    state: &SolverState,
    x: &DMatrix<f64>,
    d_hat: &DMatrix<f64>,
    l_hat: &DMatrix<f64>,
    cfg: &SolverConfig,
) -> Result<DMatrix<f64>> {
    let m = d_hat.nrows();
    let (alpha, _, gamma, eta) = cfg.variant_weights();
    let h = DMatrix::identity(m, m) * (2.0 * (alpha + eta))
        + 2.0 * gamma * state.o.transpose() * &state.o;
    let rhs =
        2.0 * alpha * &state.w * x + 2.0 * gamma * state.o.transpose() * l_hat + 2.0 * eta * d_hat;
    solve_left_spd(&h, &rhs, "update_d")
}

/// `Z = SVT_{1/rho}(OWX - Lambda/rho)` (OW in place of OWX for BldlB).
pub fn update_z(state: &SolverState, x: &DMatrix<f64>, cfg: &SolverConfig) -> Result<DMatrix<f64>> {
    let op = operator_product(cfg.variant, &state.w, &state.o, x);
    let target = op - &state.lambda / state.rho;
    svt(&target, 1.0 / state.rho)
}

/// `Lambda' = Lambda + rho (Z - OWX)` and `rho' = min(mu rho, rho_max)`.
///
/// When Z was just produced by `update_z`, the update telescopes to
/// `Lambda' = rho (SVT(A) - A)`, which forces `||Lambda'||_F <= sqrt(min
/// dimension of Z)`.
pub fn update_multipliers(
    state: &SolverState,
    x: &DMatrix<f64>,
    cfg: &SolverConfig,
) -> (DMatrix<f64>, f64) {
    let op = operator_product(cfg.variant, &state.w, &state.o, x);
    let lambda = &state.lambda + state.rho * (&state.z - op);
    let rho = (cfg.mu * state.rho).min(cfg.rho_max);
    (lambda, rho)
}

/// Augmented Lagrangian value at the current state.
///
/// Respects the variant: BldlA evaluates with the gamma and eta terms dropped,
/// BldlB with the `Z = OW` constraint.
pub fn evaluate_lagrangian(
    state: &SolverState,
    x: &DMatrix<f64>,
    d_hat: &DMatrix<f64>,
    l_hat: &DMatrix<f64>,
    cfg: &SolverConfig,
) -> f64 {
    let (alpha, beta, gamma, eta) = cfg.variant_weights();
    let op = operator_product(cfg.variant, &state.w, &state.o, x);
    let resid = &state.z - &op;
    let mut value = nuclear_norm(&state.z)
        + alpha * (&state.w * x - &state.d).norm_squared()
        + beta * (&state.o * d_hat - l_hat).norm_squared()
        + cfg.lambda1 * state.w.norm_squared()
        + cfg.lambda2 * state.o.norm_squared()
        + state.lambda.dot(&resid)
        + 0.5 * state.rho * resid.norm_squared();
    if gamma > 0.0 {
        value += gamma * (&state.o * &state.d - l_hat).norm_squared();
    }
    if eta > 0.0 {
        value += eta * (&state.d - d_hat).norm_squared();
    }
    value
}

// Scale floor for relative changes; keeps the ratio meaningful when an
// iterate collapses to zero and only roundoff jitter remains.
const CHANGE_SCALE_FLOOR: f64 = 1e-8;

fn relative_change(new: &DMatrix<f64>, old: &DMatrix<f64>) -> f64 {
    (new - old).norm() / old.norm().max(CHANGE_SCALE_FLOOR)
}

fn project_columns(raw: &DMatrix<f64>) -> DistributionMatrix {
    let mut out = DMatrix::zeros(raw.nrows(), raw.ncols());
    for col in 0..raw.ncols() {
        let p = normalize_to_simplex(raw.column(col).as_slice());
        for row in 0..raw.nrows() {
            out[(row, col)] = p[row];
        }
    }
    DistributionMatrix::from_normalized(out)
}

/// Run the full ADMM procedure.
///
/// Stops once the relative primal residual `||Z - OWX|| / max(1, ||OWX||)`
/// falls below `tol_primal` and the largest relative change across W, O, D
/// falls below `tol_change`, or after `max_iters` sweeps. The degradation
/// threshold is needed to trace the hard multi-label gap of the running
/// recovery.
pub fn fit(
    x: &FeatureMatrix,
    d_hat: &DistributionMatrix,
    l_hat: &MultiLabelMatrix,
    cfg: &SolverConfig,
    degrade: &DegradeConfig,
    d_true: Option<&DistributionMatrix>,
) -> Result<FitResult> {
    cfg.check()?;
    degrade.check()?;
    let n = x.len();
    if d_hat.len() != n || l_hat.len() != n {
        return Err(shape_mismatch("fit instances", x.matrix(), d_hat.matrix()));
    }
    if d_hat.labels() != l_hat.labels() {
        return Err(shape_mismatch("fit labels", d_hat.matrix(), l_hat.matrix()));
    }
    if let Some(t) = d_true {
        if t.labels() != d_hat.labels() || t.len() != n {
            return Err(shape_mismatch("fit ground truth", d_hat.matrix(), t.matrix()));
        }
    }

    let xm = x.matrix();
    let dm_hat = d_hat.matrix();
    let lm_hat = l_hat.matrix();
    let mut state = SolverState::init(x.dim(), d_hat.labels(), dm_hat, cfg);
    let mut trace = Vec::new();
    let mut converged = false;

    for iter in 1..=cfg.max_iters {
        let (w_prev, o_prev, d_prev) = (state.w.clone(), state.o.clone(), state.d.clone());

        let d_target = match cfg.variant {
            SolverVariant::BldlA => dm_hat,
            _ => &d_prev,
        };
        state.w = update_w(&state, xm, d_target, cfg)?;
        state.o = update_o(&state, xm, dm_hat, d_target, lm_hat, cfg)?;
        if cfg.variant != SolverVariant::BldlA {
            state.d = update_d(&state, xm, dm_hat, lm_hat, cfg)?;
        }
        state.z = update_z(&state, xm, cfg)?;
        let (lambda, rho) = update_multipliers(&state, xm, cfg);
        state.lambda = lambda;
        state.iter = iter;

        if !state.all_finite() {
            return Err(Error::NonFinite {
                context: "solver iterate",
                iter,
            });
        }

        let op = operator_product(cfg.variant, &state.w, &state.o, xm);
        let primal_residual = (&state.z - &op).norm();
        let relative_primal = primal_residual / op.norm().max(1.0);
        let max_change = relative_change(&state.w, &w_prev)
            .max(relative_change(&state.o, &o_prev))
            .max(relative_change(&state.d, &d_prev));

        let degraded = batch_degrade(&project_columns(&state.d), degrade)?;
        trace.push(TracePoint {
            iter,
            primal_residual,
            delta1: (&state.d - dm_hat).norm(),
            delta2_soft: (&state.o * &state.d - lm_hat).norm(),
            delta2_hard: degraded.normalized_hamming(l_hat)?,
            objective: evaluate_lagrangian(&state, xm, dm_hat, lm_hat, cfg),
            recovery_error: d_true.map(|t| (&state.d - t.matrix()).norm()),
        });

        // rho grows only after the multiplier step that used it.
        state.rho = rho;

        if relative_primal < cfg.tol_primal && max_change < cfg.tol_change {
            converged = true;
            break;
        }
    }

    let iters_run = state.iter;
    Ok(FitResult {
        d_recovered: project_columns(&state.d),
        w: state.w,
        o: state.o,
        trace,
        converged,
        iters_run,
    })
}

/// Write a trace as CSV with the header
/// `iter,primal_residual,delta1,delta2_soft,delta2_hard,objective,recovery_error`.
/// The last field is left empty when no ground truth was available.
pub fn write_trace_csv<W: Write>(trace: &[TracePoint], mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "iter,primal_residual,delta1,delta2_soft,delta2_hard,objective,recovery_error"
    )?;
    for p in trace {
        let recovery = p
            .recovery_error
            .map(|v| v.to_string())
            .unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            p.iter, p.primal_residual, p.delta1, p.delta2_soft, p.delta2_hard, p.objective, recovery
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn scalar_state(o: f64, z: f64, lambda: f64, rho: f64) -> SolverState {
        SolverState {
            w: dmatrix![0.0],
            o: dmatrix![o],
            d: dmatrix![0.0],
            z: dmatrix![z],
            lambda: dmatrix![lambda],
            rho,
            iter: 0,
        }
    }

    #[test]
    fn update_w_scalar_stationarity() {
        // minimize (w - 3)^2 + w^2 -> w = 1.5
        let mut cfg = SolverConfig::default();
        cfg.alpha = 1.0;
        cfg.lambda1 = 0.0;
        let state = scalar_state(1.0, 0.0, 0.0, 2.0);
        let w = update_w(&state, &dmatrix![1.0], &dmatrix![3.0], &cfg).unwrap();
        assert!((w[(0, 0)] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn update_w_pure_ridge_is_zero() {
        let mut cfg = SolverConfig::default();
        cfg.alpha = 0.0;
        cfg.lambda1 = 1.0;
        let state = scalar_state(1.0, 0.0, 0.0, 1.0);
        // X = 0 contributes nothing; the constraint Z = OWX is 0 = 0.
        let w = update_w(&state, &dmatrix![0.0], &dmatrix![0.0], &cfg).unwrap();
        assert!(w[(0, 0)].abs() < 1e-14);
    }

    #[test]
    fn update_o_scalar_stationarity() {
        // beta = gamma = 1, lambda2 = 0, rho -> 0, D_hat = D = 1, L_hat = 1:
        // O (2 + 2) = (2 + 2) -> O = 1.
        let mut cfg = SolverConfig::default();
        cfg.beta = 1.0;
        cfg.gamma = 1.0;
        cfg.lambda2 = 0.0;
        let mut state = scalar_state(0.0, 0.0, 0.0, 1e-300);
        state.w = dmatrix![0.0];
        let o = update_o(
            &state,
            &dmatrix![1.0],
            &dmatrix![1.0],
            &dmatrix![1.0],
            &dmatrix![1.0],
            &cfg,
        )
        .unwrap();
        assert!((o[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn update_o_zero_targets_pure_ridge() {
        let mut cfg = SolverConfig::default();
        cfg.beta = 1.0;
        cfg.gamma = 1.0;
        cfg.lambda2 = 0.5;
        let state = scalar_state(0.0, 0.0, 0.0, 1e-300);
        let o = update_o(
            &state,
            &dmatrix![1.0],
            &dmatrix![1.0],
            &dmatrix![1.0],
            &dmatrix![0.0],
            &cfg,
        )
        .unwrap();
        assert!(o[(0, 0)].abs() < 1e-12);
    }

    #[test]
    fn update_d_scalar_stationarity() {
        // alpha = gamma = eta = 1, WX = 1, O = 1, L_hat = 0, D_hat = 2:
        // minimizes (1 - D)^2 + D^2 + (D - 2)^2 -> D = 1.
        let mut cfg = SolverConfig::default();
        cfg.alpha = 1.0;
        cfg.gamma = 1.0;
        cfg.eta = 1.0;
        let mut state = scalar_state(1.0, 0.0, 0.0, 1.0);
        state.w = dmatrix![1.0];
        let d = update_d(&state, &dmatrix![1.0], &dmatrix![2.0], &dmatrix![0.0], &cfg).unwrap();
        assert!((d[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn update_d_midpoint_when_gamma_zero() {
        let mut cfg = SolverConfig::default();
        cfg.alpha = 2.0;
        cfg.gamma = 0.0;
        cfg.eta = 2.0;
        let mut state = scalar_state(1.0, 0.0, 0.0, 1.0);
        state.w = dmatrix![4.0];
        // WX = 4, D_hat = 2 -> midpoint 3.
        let d = update_d(&state, &dmatrix![1.0], &dmatrix![2.0], &dmatrix![0.0], &cfg).unwrap();
        assert!((d[(0, 0)] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn update_z_of_zero_operator_is_zero() {
        let cfg = SolverConfig::default();
        let state = SolverState {
            w: DMatrix::zeros(2, 2),
            o: DMatrix::identity(2, 2),
            d: DMatrix::zeros(2, 3),
            z: DMatrix::zeros(2, 3),
            lambda: DMatrix::zeros(2, 3),
            rho: 2.0,
            iter: 0,
        };
        let z = update_z(&state, &DMatrix::zeros(2, 3), &cfg).unwrap();
        assert_eq!(z, DMatrix::zeros(2, 3));
    }

    #[test]
    fn update_z_reuses_svt_diagonal_case() {
        // OWX - Lambda/rho = diag(2, 1), rho = 2 -> SVT_{0.5} -> diag(1.5, 0.5).
        let cfg = SolverConfig::default();
        let state = SolverState {
            w: dmatrix![2.0, 0.0; 0.0, 1.0],
            o: DMatrix::identity(2, 2),
            d: DMatrix::zeros(2, 2),
            z: DMatrix::zeros(2, 2),
            lambda: DMatrix::zeros(2, 2),
            rho: 2.0,
            iter: 0,
        };
        let z = update_z(&state, &DMatrix::identity(2, 2), &cfg).unwrap();
        assert!((z - dmatrix![1.5, 0.0; 0.0, 0.5]).norm() < 1e-12);
    }

    #[test]
    fn multipliers_zero_residual_keeps_lambda() {
        let mut cfg = SolverConfig::default();
        cfg.mu = 2.0;
        cfg.rho_max = 100.0;
        let state = SolverState {
            w: dmatrix![1.0],
            o: dmatrix![1.0],
            d: dmatrix![0.0],
            z: dmatrix![1.0],
            lambda: dmatrix![0.25],
            rho: 3.0,
            iter: 0,
        };
        let (lambda, rho) = update_multipliers(&state, &dmatrix![1.0], &cfg);
        assert!((lambda[(0, 0)] - 0.25).abs() < 1e-15);
        assert!((rho - 6.0).abs() < 1e-15);
    }

    #[test]
    fn multipliers_accumulate_residual() {
        let cfg = SolverConfig::default();
        let state = SolverState {
            w: dmatrix![0.0],
            o: dmatrix![1.0],
            d: dmatrix![0.0],
            z: dmatrix![1.0],
            lambda: dmatrix![0.0],
            rho: 1.0,
            iter: 0,
        };
        let (lambda, _) = update_multipliers(&state, &dmatrix![1.0], &cfg);
        assert!((lambda[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rho_capped_at_rho_max() {
        let mut cfg = SolverConfig::default();
        cfg.mu = 10.0;
        cfg.rho_max = 5.0;
        let state = scalar_state(1.0, 0.0, 0.0, 4.0);
        let (_, rho) = update_multipliers(&state, &dmatrix![1.0], &cfg);
        assert!((rho - 5.0).abs() < 1e-15);
    }

    #[test]
    fn lagrangian_zero_state_is_zero() {
        let mut cfg = SolverConfig::default();
        cfg.variant = SolverVariant::Bldl;
        let state = SolverState {
            w: DMatrix::zeros(2, 2),
            o: DMatrix::zeros(2, 2),
            d: DMatrix::zeros(2, 3),
            z: DMatrix::zeros(2, 3),
            lambda: DMatrix::zeros(2, 3),
            rho: 1.0,
            iter: 0,
        };
        let v = evaluate_lagrangian(
            &state,
            &DMatrix::zeros(2, 3),
            &DMatrix::zeros(2, 3),
            &DMatrix::zeros(2, 3),
            &cfg,
        );
        assert_eq!(v, 0.0);
    }

    #[test]
    fn lagrangian_eta_term_only() {
        // D = D_hat + 1 elementwise with eta = 1 and every other term zeroed
        // contributes eta * m * n.
        let mut cfg = SolverConfig::default();
        cfg.alpha = 0.0;
        cfg.beta = 0.0;
        cfg.gamma = 0.0;
        cfg.eta = 1.0;
        cfg.lambda1 = 0.0;
        cfg.lambda2 = 0.0;
        let (m, n) = (2, 3);
        let state = SolverState {
            w: DMatrix::zeros(m, 2),
            o: DMatrix::zeros(m, m),
            d: DMatrix::from_element(m, n, 1.0),
            z: DMatrix::zeros(m, n),
            lambda: DMatrix::zeros(m, n),
            rho: 1.0,
            iter: 0,
        };
        let v = evaluate_lagrangian(
            &state,
            &DMatrix::zeros(2, n),
            &DMatrix::zeros(m, n),
            &DMatrix::zeros(m, n),
            &cfg,
        );
        assert!((v - (m * n) as f64).abs() < 1e-12);
    }

    #[test]
    fn fit_scalar_problem_converges() {
        let x = FeatureMatrix::new(dmatrix![1.0]).unwrap();
        let d_hat = DistributionMatrix::validate(dmatrix![1.0]).unwrap();
        let l_hat = MultiLabelMatrix::new(dmatrix![1.0]).unwrap();
        let cfg = SolverConfig::default();
        let fit = fit(&x, &d_hat, &l_hat, &cfg, &DegradeConfig::default(), None).unwrap();
        assert!(fit.converged, "scalar problem must converge");
        assert!(fit.trace.last().unwrap().primal_residual < 1e-6);
        assert_eq!(fit.d_recovered.matrix()[(0, 0)], 1.0);
    }

    #[test]
    fn fit_variant_a_freezes_d() {
        let x = FeatureMatrix::new(dmatrix![1.0, -0.5, 0.25; 0.5, 1.0, -1.0]).unwrap();
        let d_hat = DistributionMatrix::validate(dmatrix![
            0.6, 0.2, 0.3;
            0.4, 0.8, 0.7
        ])
        .unwrap();
        let l_hat = batch_degrade(&d_hat, &DegradeConfig::default()).unwrap();
        let mut cfg = SolverConfig::default();
        cfg.variant = SolverVariant::BldlA;
        cfg.max_iters = 40;
        let fit = fit(&x, &d_hat, &l_hat, &cfg, &DegradeConfig::default(), None).unwrap();
        for p in &fit.trace {
            assert_eq!(p.delta1, 0.0, "BldlA must keep D = D_hat");
            assert_eq!(p.delta2_hard, 0.0);
        }
        assert_eq!(fit.d_recovered.matrix(), d_hat.matrix());
    }

    #[test]
    fn fit_is_deterministic() {
        let x = FeatureMatrix::new(dmatrix![0.3, -0.2, 1.0; -0.7, 0.1, 0.4]).unwrap();
        let d_hat = DistributionMatrix::validate(dmatrix![
            0.5, 0.1, 0.25;
            0.5, 0.9, 0.75
        ])
        .unwrap();
        let l_hat = batch_degrade(&d_hat, &DegradeConfig::default()).unwrap();
        let mut cfg = SolverConfig::default();
        cfg.max_iters = 30;
        let a = fit(&x, &d_hat, &l_hat, &cfg, &DegradeConfig::default(), None).unwrap();
        let b = fit(&x, &d_hat, &l_hat, &cfg, &DegradeConfig::default(), None).unwrap();
        assert_eq!(a.trace, b.trace, "traces must be bit-identical");
        assert_eq!(a.w, b.w);
    }

    #[test]
    fn trace_csv_format() {
        let trace = vec![TracePoint {
            iter: 1,
            primal_residual: 0.5,
            delta1: 0.25,
            delta2_soft: 1.0,
            delta2_hard: 0.125,
            objective: 2.0,
            recovery_error: None,
        }];
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "iter,primal_residual,delta1,delta2_soft,delta2_hard,objective,recovery_error"
        );
        assert_eq!(text.lines().nth(1).unwrap(), "1,0.5,0.25,1,0.125,2,");
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig::default();
        cfg.mu = 1.0;
        assert!(cfg.check().is_err());
        cfg = SolverConfig::default();
        cfg.rho0 = 0.0;
        assert!(cfg.check().is_err());
        cfg = SolverConfig::default();
        cfg.rho_max = 1e-9;
        assert!(cfg.check().is_err());
        cfg = SolverConfig::default();
        cfg.alpha = -0.1;
        assert!(cfg.check().is_err());
        assert!(SolverConfig::default().check().is_ok());
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("bldl".parse::<SolverVariant>().unwrap(), SolverVariant::Bldl);
        assert_eq!(
            "bldl-a".parse::<SolverVariant>().unwrap(),
            SolverVariant::BldlA
        );
        assert_eq!(
            "bldl-b".parse::<SolverVariant>().unwrap(),
            SolverVariant::BldlB
        );
        assert!("bldl-c".parse::<SolverVariant>().is_err());
    }
}

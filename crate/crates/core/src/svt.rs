//! Singular value thresholding, the proximal operator of the nuclear norm.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Soft-threshold the singular values of `a` by `tau`.
///
/// Returns `U * diag(max(sigma_i - tau, 0)) * V^T`, the unique minimizer of
/// `tau * ||Z||_* + 0.5 * ||Z - A||_F^2`. The shift is bounded:
/// `||svt(a, tau) - a||_F <= sqrt(min(m, n)) * tau`.
pub fn svt(a: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    if !tau.is_finite() || tau <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "svt threshold tau = {tau} must be positive and finite"
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "svt input",
            iter: 0,
        });
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svt requested U");
    let v_t = svd.v_t.as_ref().expect("svt requested V^T");
    let mut shrunk = svd.singular_values.clone();
    for s in shrunk.iter_mut() {
        *s = (*s - tau).max(0.0);
    }
    let mut scaled = u.clone();
    for (j, s) in shrunk.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*s);
    }
    Ok(scaled * v_t)
}

/// Sum of singular values.
pub fn nuclear_norm(a: &DMatrix<f64>) -> f64 {
    a.clone().singular_values().iter().sum()
}

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::OrthonormalBasis;

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("ridge parameter λ = {lambda} must be positive")))
    }
}

/// `R_λ(U) = ‖y − UUᵀy/(1 + λ)‖² / n`.
pub fn ridge_risk(u: &OrthonormalBasis, y: &DVector<f64>, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if y.len() != u.n() {
        return Err(Error::shape(format!("response of length {}", u.n()), y.len()));
    }
    let m = u.matrix();
    let fitted = m * (m.transpose() * y) / (1.0 + lambda);
    Ok((y - fitted).norm_squared() / y.len() as f64)
}

/// `2‖y‖²·r / (n(1 + λ))`, valid for any `U` within Grassmann distance `r`.
pub fn ridge_risk_bound(y: &DVector<f64>, lambda: f64, r: f64, n: usize) -> Result<f64> {
    check_lambda(lambda)?;
    if !(r >= 0.0) || n == 0 {
        return Err(Error::InvalidInput(format!("radius {r} must be ≥ 0 and n = {n} positive")));
    }
    Ok(2.0 * y.norm_squared() * r / (n as f64 * (1.0 + lambda)))
}

//! Deviation bounds for `‖A − P‖` and the resulting Davis–Kahan radius.
//!
//! `A − P = Σ_{i<j} (A_ij − P_ij)(e_i e_jᵀ + e_j e_iᵀ)` is a sum of independent,
//! centered, symmetric summands with operator norm at most 1 and total
//! variance matrix `diag(Σ_j P_ij(1 − P_ij))`, whose norm is `v(P)`. Matrix
//! Bernstein then gives
//!
//! ```text
//! P(‖A − P‖ ≥ t) ≤ 2n · exp(−(t²/2) / (v + t/3))
//! ```
//!
//! and [`deviation_quantile`] returns the exact root of `tail(t) = α`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::spectral_norm_symmetric;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceProxy {
    /// `max_i Σ_{j≠i} P_ij(1 − P_ij)`.
    pub v: f64,
    /// `max_{i<j} P_ij`.
    pub p_max: f64,
}

pub fn variance_proxy(p: &DMatrix<f64>) -> VarianceProxy {
    let n = p.nrows();
    let mut v = 0.0_f64;
    let mut p_max = 0.0_f64;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            if j != i {
                let x = p[(i, j)];
                row += x * (1.0 - x);
                if j > i {
                    p_max = p_max.max(x);
                }
            }
        }
        v = v.max(row);
    }
    VarianceProxy { v, p_max }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantileMethod {
    BernsteinExplicit,
}

/// An explicit upper `(1 − α)`-quantile for `‖A − P‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationQuantile {
    pub q: f64,
    pub alpha: f64,
    pub v_bound: f64,
    pub n: usize,
    pub method: QuantileMethod,
}

pub fn check_level(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::BadLevel(alpha))
    }
}

/// Matrix-Bernstein tail `2n·exp(−(t²/2)/(v + t/3))` (not clamped to 1).
pub fn bernstein_tail(t: f64, v_bound: f64, n: usize) -> f64 {
    2.0 * n as f64 * (-(t * t / 2.0) / (v_bound + t / 3.0)).exp()
}

/// Positive root of `t²/2 = (v + t/3)·L` with `L = log(2n/α)`:
/// `t = L/3 + sqrt(L²/9 + 2vL)`.
pub fn deviation_quantile(v_bound: f64, n: usize, alpha: f64) -> Result<DeviationQuantile> {
    check_level(alpha)?;
    if n < 2 {
        return Err(Error::TooSmall(format!("deviation quantile needs n ≥ 2, got {n}")));
    }
    if !(v_bound >= 0.0) || !v_bound.is_finite() {
        return Err(Error::InvalidInput(format!("variance bound {v_bound} must be finite and ≥ 0")));
    }
    let l = (2.0 * n as f64 / alpha).ln();
    let q = l / 3.0 + (l * l / 9.0 + 2.0 * v_bound * l).sqrt();
    Ok(DeviationQuantile { q, alpha, v_bound, n, method: QuantileMethod::BernsteinExplicit })
}

/// `‖A − P‖`, the largest absolute eigenvalue of the symmetric difference.
pub fn operator_deviation(a: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != p.shape() {
        return Err(Error::shape(format!("{:?}", p.shape()), format!("{:?}", a.shape())));
    }
    spectral_norm_symmetric(&(a - p))
}

/// Projector-norm radius `2q/gap`; `informative` is false once the radius
/// reaches 1, the diameter of the Grassmannian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DavisKahanRadius {
    pub radius: f64,
    pub informative: bool,
}

pub fn davis_kahan_radius(q: f64, gap: f64) -> Result<DavisKahanRadius> {
    if !(gap > 0.0) {
        return Err(Error::NonpositiveGap(gap));
    }
    if !(q >= 0.0) {
        return Err(Error::InvalidInput(format!("deviation bound {q} must be ≥ 0")));
    }
    let radius = 2.0 * q / gap;
    Ok(DavisKahanRadius { radius, informative: radius < 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_probability_matrix, ModelSpec};

    /// Bisection on the tail bound, independent of the closed form.
    fn invert_tail(v: f64, n: usize, alpha: f64) -> f64 {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while bernstein_tail(hi, v, n) > alpha {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if bernstein_tail(mid, v, n) > alpha {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn variance_proxy_extremes_and_worked_value() {
        let zero = build_probability_matrix(&ModelSpec::two_block(6, 0.0, 0.0)).unwrap();
        assert_eq!(variance_proxy(zero.p()).v, 0.0);
        let ones = build_probability_matrix(&ModelSpec::two_block(6, 1.0, 1.0)).unwrap();
        let vp = variance_proxy(ones.p());
        assert_eq!(vp.v, 0.0);
        assert_eq!(vp.p_max, 1.0);

        let model = build_probability_matrix(&ModelSpec::two_block(200, 0.3, 0.1)).unwrap();
        let direct = 99.0 * 0.3 * 0.7 + 100.0 * 0.1 * 0.9;
        let vp = variance_proxy(model.p());
        assert!((vp.v - direct).abs() < 1e-10);
        assert!((vp.v - 29.79).abs() < 1e-10);
        assert!(vp.v <= crate::graph::expected_degree_bound(&model));
        assert_eq!(vp.p_max, 0.3);
    }

    #[test]
    fn zero_variance_quantile() {
        let q = deviation_quantile(0.0, 200, 0.05).unwrap();
        assert!((q.q - (2.0 / 3.0) * (400.0_f64 / 0.05).ln()).abs() < 1e-12);
    }

    #[test]
    fn quantile_matches_numeric_inversion() {
        let q = deviation_quantile(39.7, 200, 0.05).unwrap();
        let oracle = invert_tail(39.7, 200, 0.05);
        assert!((q.q - oracle).abs() <= 1e-9 * oracle);
        assert!((bernstein_tail(q.q, 39.7, 200) - 0.05).abs() <= 1e-9 * 0.05);
        for &(v, n, a) in &[(0.5, 10, 0.2), (120.0, 1000, 0.01), (3.0, 50, 0.5)] {
            let t = deviation_quantile(v, n, a).unwrap().q;
            assert!((bernstein_tail(t, v, n) - a).abs() <= 1e-9 * a);
        }
    }

    #[test]
    fn quantile_monotonicity_and_levels() {
        let lo = deviation_quantile(10.0, 200, 0.1).unwrap().q;
        let hi = deviation_quantile(40.0, 200, 0.1).unwrap().q;
        assert!(lo < hi);
        let loose = deviation_quantile(40.0, 200, 0.2).unwrap().q;
        assert!(loose < hi);
        assert!(matches!(deviation_quantile(1.0, 10, 0.0), Err(Error::BadLevel(_))));
        assert!(matches!(deviation_quantile(1.0, 10, 1.0), Err(Error::BadLevel(_))));
    }

    #[test]
    fn davis_kahan_cases() {
        let r = davis_kahan_radius(10.0, 20.0).unwrap();
        assert_eq!(r.radius, 1.0);
        assert!(!r.informative);
        assert_eq!(davis_kahan_radius(0.0, 20.0).unwrap().radius, 0.0);
        assert!(matches!(davis_kahan_radius(1.0, 0.0), Err(Error::NonpositiveGap(_))));

        let l = (400.0_f64 / 0.05).ln();
        let hand = 2.0 * (l / 3.0 + (l * l / 9.0 + 2.0 * 39.7 * l).sqrt()) / 20.0;
        let q = deviation_quantile(39.7, 200, 0.05).unwrap();
        assert!((davis_kahan_radius(q.q, 20.0).unwrap().radius - hand).abs() < 1e-12);
    }
}

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_symmetric, spectral_norm_symmetric, symmetric_eigen, TIE_REL_TOL};

/// A centrality functional together with the parameter fixing its modulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CentralityFunctional {
    /// `(I − βM)⁻¹1 − 1` on `{ρ(M) ≤ 1/(2β)}`.
    Katz { beta: f64 },
    /// Top unit eigenvector on `{λ1 − λ2 ≥ γ}`.
    Eigenvector { gamma: f64 },
}

impl CentralityFunctional {
    pub fn modulus(&self) -> Result<f64> {
        match *self {
            Self::Katz { beta } => katz_modulus(beta),
            Self::Eigenvector { gamma } => eigenvector_modulus(gamma),
        }
    }

    pub fn evaluate(&self, m: &DMatrix<f64>) -> Result<DVector<f64>> {
        match *self {
            Self::Katz { beta } => katz_centrality(m, beta),
            Self::Eigenvector { .. } => Ok(eigenvector_centrality(m)?.scores),
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("Katz parameter β = {beta} must be positive")))
    }
}

/// Katz scores `(I − βM)⁻¹1 − 1`, refusing matrices with `ρ(M) > 1/(2β)`.
pub fn katz_centrality(m: &DMatrix<f64>, beta: f64) -> Result<DVector<f64>> {
    check_beta(beta)?;
    check_symmetric(m)?;
    let rho = spectral_norm_symmetric(m)?;
    let limit = 1.0 / (2.0 * beta);
    if rho > limit {
        return Err(Error::OutsideDomain { rho, limit });
    }
    let n = m.nrows();
    let system = DMatrix::identity(n, n) - m * beta;
    let x = system
        .lu()
        .solve(&DVector::from_element(n, 1.0))
        .ok_or_else(|| Error::Numerical("singular Katz system".into()))?;
    Ok(x.add_scalar(-1.0))
}

/// `L = 4β`, the stated sup-norm modulus on the Katz domain.
pub fn katz_modulus(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(4.0 * beta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenvectorCentrality {
    pub scores: DVector<f64>,
    /// `λ1 − λ2` of the input matrix.
    pub gamma_observed: f64,
}

/// Top unit eigenvector, signed so that `⟨v, 1⟩ ≥ 0`.
pub fn eigenvector_centrality(m: &DMatrix<f64>) -> Result<EigenvectorCentrality> {
    let spec = symmetric_eigen(m)?;
    let n = spec.values.len();
    if n < 2 {
        return Err(Error::TooSmall(format!("eigenvector centrality needs n ≥ 2, got {n}")));
    }
    let gamma = spec.values[0] - spec.values[1];
    let scale = spec.values[0].abs().max(spec.values[1].abs()).max(1.0);
    if !(gamma > TIE_REL_TOL * scale) {
        return Err(Error::DegenerateTopEigenvalue(gamma));
    }
    let mut v: DVector<f64> = spec.vectors.column(0).into_owned();
    if v.sum() < 0.0 {
        v.neg_mut();
    }
    Ok(EigenvectorCentrality { scores: v, gamma_observed: gamma })
}

/// `L = 2/γ` for a certified top gap `γ`.
pub fn eigenvector_modulus(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::NonpositiveGap(gamma));
    }
    Ok(2.0 / gamma)
}

/// Simultaneous nodewise intervals `[c_i(A) − Lq, c_i(A) + Lq]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityBand {
    pub point: Vec<f64>,
    pub half_width: f64,
    pub alpha: f64,
    pub functional: CentralityFunctional,
    /// The population matrix was certified to lie in the functional's domain.
    pub domain_certified: bool,
}

impl CentralityBand {
    pub fn lower(&self) -> Vec<f64> {
        self.point.iter().map(|c| c - self.half_width).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.point.iter().map(|c| c + self.half_width).collect()
    }

    /// Every coordinate of `values` lies in its interval.
    pub fn contains_all(&self, values: &[f64]) -> Result<bool> {
        if values.len() != self.point.len() {
            return Err(Error::shape(format!("{} scores", self.point.len()), values.len()));
        }
        Ok(values.iter().zip(&self.point).all(|(v, c)| (v - c).abs() <= self.half_width))
    }

    pub fn with_domain_certified(mut self, certified: bool) -> Self {
        self.domain_certified = certified;
        self
    }
}

pub fn centrality_bands(
    point: &DVector<f64>,
    l: f64,
    q: f64,
    alpha: f64,
    functional: CentralityFunctional,
) -> Result<CentralityBand> {
    if !(l >= 0.0) || !(q >= 0.0) {
        return Err(Error::InvalidInput(format!("modulus {l} and deviation bound {q} must be ≥ 0")));
    }
    Ok(CentralityBand {
        point: point.iter().copied().collect(),
        half_width: l * q,
        alpha,
        functional,
        domain_certified: false,
    })
}

use serde::{Deserialize, Serialize};

use crate::concentration::{davis_kahan_radius, deviation_quantile, DeviationQuantile};
use crate::error::{Error, Result};
use crate::graph::AdjacencyMatrix;
use crate::linalg::{grassmann_distance, top_k_eigens, OrthonormalBasis};

/// Certificates feeding a subspace region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateSet {
    /// Expected-degree envelope `d_max ≥ max_i Σ_j P_ij`.
    pub d_max: f64,
    /// Optional sharper variance bound `≥ v(P)`; `d_max` is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance_bound: Option<f64>,
    /// Certified lower bound on `gap_k(P)`.
    pub gap: f64,
}

impl CertificateSet {
    pub fn new(d_max: f64, gap: f64) -> Self {
        Self { d_max, variance_bound: None, gap }
    }

    pub fn with_variance_bound(mut self, v: f64) -> Self {
        self.variance_bound = Some(v);
        self
    }

    pub fn v_bound(&self) -> f64 {
        self.variance_bound.unwrap_or(self.d_max)
    }
}

/// `{U : d_Gr(U, Û) ≤ r}` around the top-`k` eigenbasis of `A`.
#[derive(Debug, Clone)]
pub struct SubspaceRegion {
    pub center: OrthonormalBasis,
    pub radius: f64,
    pub alpha: f64,
    /// False when the radius is at least 1; the region is then the whole
    /// Grassmannian.
    pub informative: bool,
    pub quantile: DeviationQuantile,
    pub certificates: CertificateSet,
}

pub fn subspace_region(a: &AdjacencyMatrix, k: usize, certificates: CertificateSet, alpha: f64) -> Result<SubspaceRegion> {
    check_certificates(&certificates)?;
    let (center, _) = top_k_eigens(a.matrix(), k)?;
    subspace_region_from(center, certificates, alpha)
}

/// Region around an already computed center basis.
pub fn subspace_region_from(center: OrthonormalBasis, certificates: CertificateSet, alpha: f64) -> Result<SubspaceRegion> {
    check_certificates(&certificates)?;
    let quantile = deviation_quantile(certificates.v_bound(), center.n(), alpha)?;
    let dk = davis_kahan_radius(quantile.q, certificates.gap)?;
    Ok(SubspaceRegion { center, radius: dk.radius, alpha, informative: dk.informative, quantile, certificates })
}

fn check_certificates(c: &CertificateSet) -> Result<()> {
    if !(c.gap > 0.0) {
        return Err(Error::NoGapCertificate(format!("gap certificate {} is not positive", c.gap)));
    }
    if !(c.d_max >= 0.0) || !c.d_max.is_finite() {
        return Err(Error::InvalidInput(format!("d_max = {} must be finite and ≥ 0", c.d_max)));
    }
    if let Some(v) = c.variance_bound {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::InvalidInput(format!("variance bound {v} must be finite and ≥ 0")));
        }
    }
    Ok(())
}

pub fn region_contains(u: &OrthonormalBasis, region: &SubspaceRegion) -> Result<bool> {
    Ok(grassmann_distance(u, &region.center)? <= region.radius)
}

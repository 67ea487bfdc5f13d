use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{build_probability_matrix, two_block_spectrum, AdjacencyMatrix, ModelSpec};
use crate::linalg::{eigengap, symmetric_eigen, symmetric_eigenvalues};

pub const DEFAULT_USVT_SCALE: f64 = 2.02;

/// Empirical `gap_k` of the observed spectrum. Diagnostic only.
pub fn observed_gap_proxy(a: &AdjacencyMatrix, k: usize) -> Result<f64> {
    eigengap(&symmetric_eigenvalues(a.matrix())?, k)
}

/// `(p, q)` when the spec is two equal blocks with `B = [[p, q], [q, p]]`, `q < p`.
fn equal_two_block(spec: &ModelSpec) -> Result<Option<(usize, f64, f64)>> {
    let ModelSpec::Sbm { membership, connectivity } = spec else {
        return Ok(None);
    };
    let labels = membership.labels()?;
    if connectivity.len() != 2 || connectivity.iter().any(|r| r.len() != 2) {
        return Ok(None);
    }
    let (p, q) = (connectivity[0][0], connectivity[0][1]);
    let n1 = labels.iter().filter(|&&l| l == 1).count();
    let n0 = labels.iter().filter(|&&l| l == 0).count();
    let symmetric = connectivity[1][1] == p && connectivity[1][0] == q;
    if n0 == n1 && n0 + n1 == labels.len() && symmetric && (0.0..p).contains(&q) && p <= 1.0 {
        Ok(Some((labels.len(), p, q)))
    } else {
        Ok(None)
    }
}

/// Exact `gap_k(P)` of a declared SBM: closed form for two equal blocks,
/// dense eigendecomposition of the materialized `P` otherwise.
pub fn parametric_gap_certificate(spec: &ModelSpec, k: usize) -> Result<f64> {
    if let Some((n, p, q)) = equal_two_block(spec)? {
        if n >= 4 {
            let s = two_block_spectrum(n, p, q)?;
            let mut values = vec![s.lambda1, s.lambda2];
            values.extend(std::iter::repeat_n(s.lambda_rest, n - 2));
            values.sort_by(|a, b| b.total_cmp(a));
            return eigengap(&values, k);
        }
    }
    match spec {
        ModelSpec::Sbm { .. } => {
            let model = build_probability_matrix(spec)?;
            eigengap(&symmetric_eigenvalues(model.p())?, k)
        }
        ModelSpec::Dcsbm { .. } => Err(Error::UnsupportedSpec("degree-corrected SBM has no parametric gap route".into())),
        ModelSpec::Rdpg { .. } => Err(Error::UnsupportedSpec("RDPG has no parametric gap route".into())),
    }
}

/// Universal singular value thresholding of `A`.
#[derive(Debug, Clone)]
pub struct UsvtEstimate {
    pub p_hat: DMatrix<f64>,
    /// `threshold_scale · sqrt(n · p̄)`.
    pub threshold: f64,
    pub rank: usize,
}

/// Keeps eigencomponents with `|λ| ≥ threshold_scale·sqrt(n·p̄)` (`p̄` the edge
/// density), clips to `[0, 1]` and zeroes the diagonal.
pub fn usvt_denoise(a: &AdjacencyMatrix, threshold_scale: f64) -> Result<UsvtEstimate> {
    if !(threshold_scale > 0.0) {
        return Err(Error::InvalidInput(format!("USVT threshold scale {threshold_scale} must be positive")));
    }
    let n = a.n();
    let threshold = threshold_scale * (n as f64 * a.edge_density()).sqrt();
    let spec = symmetric_eigen(a.matrix())?;
    let mut p_hat = DMatrix::zeros(n, n);
    let mut rank = 0;
    for (j, &lambda) in spec.values.iter().enumerate() {
        if lambda.abs() >= threshold && lambda != 0.0 {
            let v = spec.vectors.column(j);
            p_hat += v * v.transpose() * lambda;
            rank += 1;
        }
    }
    for i in 0..n {
        for j in 0..n {
            p_hat[(i, j)] = if i == j { 0.0 } else { p_hat[(i, j)].clamp(0.0, 1.0) };
        }
    }
    // Symmetrize away rounding asymmetry from the rank-one sums.
    let p_hat = (&p_hat + p_hat.transpose()) * 0.5;
    Ok(UsvtEstimate { p_hat, threshold, rank })
}

//! Dense symmetric spectral toolkit: ordered eigendecompositions, orthonormal
//! bases, Grassmann distance, Procrustes alignment and gap transfer.
//!
//! Eigenvalues are always reported in descending order. Eigenvectors follow a
//! deterministic sign and tie convention (see [`symmetric_eigen`]) so that two
//! runs on the same input produce the same basis.

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Max-abs asymmetry tolerated before a matrix is rejected.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Max-abs deviation of `UᵀU` from the identity tolerated for a basis.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Relative tolerance under which two eigenvalues count as tied.
pub const TIE_REL_TOL: f64 = 1e-12;

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::shape("square matrix", format!("{}x{}", m.nrows(), m.ncols())));
    }
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (m[(i, j)] - m[(j, i)]).abs();
            if d.is_nan() {
                return Err(Error::NotSymmetric(f64::NAN));
            }
            worst = worst.max(d);
        }
    }
    if worst > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(worst));
    }
    Ok(())
}

/// Full eigendecomposition of a symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct SymmetricSpectrum {
    pub values: Vec<f64>,
    /// Column `j` is the unit eigenvector of `values[j]`.
    pub vectors: DMatrix<f64>,
}

/// Index of the first coordinate with the largest magnitude.
fn dominant_coordinate(v: &[f64]) -> usize {
    let mut best = 0;
    let mut best_abs = f64::NEG_INFINITY;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    best
}

/// Dense symmetric eigendecomposition with deterministic ordering.
///
/// Eigenvalues are sorted descending. Among tied eigenvalues (relative
/// tolerance 1e-12), vectors are ordered by the index of their
/// largest-magnitude coordinate. Every vector's largest-magnitude coordinate
/// is made positive.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<SymmetricSpectrum> {
    check_symmetric(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(SymmetricSpectrum { values: vec![], vectors: DMatrix::zeros(0, 0) });
    }
    let eig = SymmetricEigen::new(m.clone());
    if eig.eigenvalues.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("eigendecomposition produced non-finite values".into()));
    }

    let mut cols: Vec<(f64, Vec<f64>, usize)> = (0..n)
        .map(|j| {
            let mut v: Vec<f64> = eig.eigenvectors.column(j).iter().copied().collect();
            let dom = dominant_coordinate(&v);
            if v[dom] < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            (eig.eigenvalues[j], v, dom)
        })
        .collect();
    cols.sort_by(|a, b| b.0.total_cmp(&a.0));

    // Reorder runs of tied eigenvalues by dominant coordinate.
    let scale = cols.iter().fold(1.0_f64, |s, c| s.max(c.0.abs()));
    let tol = TIE_REL_TOL * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (cols[end - 1].0 - cols[end].0).abs() <= tol {
            end += 1;
        }
        if end - start > 1 {
            cols[start..end].sort_by_key(|c| c.2);
        }
        start = end;
    }

    let values = cols.iter().map(|c| c.0).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| cols[j].1[i]);
    Ok(SymmetricSpectrum { values, vectors })
}

/// Eigenvalues only, descending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_symmetric(m)?;
    let mut values: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("eigenvalue computation produced non-finite values".into()));
    }
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Operator norm of a symmetric matrix: its largest absolute eigenvalue.
pub fn spectral_norm_symmetric(m: &DMatrix<f64>) -> Result<f64> {
    let values = symmetric_eigenvalues(m)?;
    Ok(values.iter().fold(0.0_f64, |acc, x| acc.max(x.abs())))
}

/// `gap_k = min(λ_k − λ_{k+1}, λ_{k−1} − λ_k)` with `λ_0 = +∞`, for
/// eigenvalues sorted descending and `1 ≤ k ≤ n − 1`.
pub fn eigengap(values: &[f64], k: usize) -> Result<f64> {
    let n = values.len();
    if k == 0 || k >= n {
        return Err(Error::KOutOfRange { k, max: n.saturating_sub(1) });
    }
    let below = values[k - 1] - values[k];
    let above = if k >= 2 { values[k - 2] - values[k - 1] } else { f64::INFINITY };
    Ok(below.min(above).max(0.0))
}

/// An `n×k` matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis(DMatrix<f64>);

impl OrthonormalBasis {
    pub fn new(u: DMatrix<f64>) -> Result<Self> {
        let k = u.ncols();
        if k == 0 || k > u.nrows() {
            return Err(Error::shape("n×k with 1 ≤ k ≤ n", format!("{}x{}", u.nrows(), k)));
        }
        let gram = u.transpose() * &u;
        let err = max_abs(&(gram - DMatrix::identity(k, k)));
        if !(err <= ORTHONORMAL_TOL) {
            return Err(Error::InvalidInput(format!(
                "columns are not orthonormal (max |UᵀU − I| = {err:e})"
            )));
        }
        Ok(Self(u))
    }

    /// Orthonormalizes the columns of `m` with a thin QR factorization.
    pub fn orthonormalize(m: DMatrix<f64>) -> Result<Self> {
        let k = m.ncols();
        let q = m.qr().q();
        Self::new(q.columns(0, k).into_owned())
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn k(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// `U·Q` for a `k×k` orthogonal `Q`.
    pub fn rotate(&self, q: &DMatrix<f64>) -> Result<Self> {
        if q.nrows() != self.k() || q.ncols() != self.k() {
            return Err(Error::shape(format!("{0}x{0}", self.k()), format!("{}x{}", q.nrows(), q.ncols())));
        }
        Self::new(&self.0 * q)
    }

    pub fn projector(&self) -> DMatrix<f64> {
        &self.0 * self.0.transpose()
    }

    /// Row `i` as a vector of length `k`.
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.0.row(i).iter().copied().collect()
    }
}

/// Eigenvalues of a symmetric matrix together with the `k`-gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub eigenvalues: Vec<f64>,
    pub k: usize,
    pub gap_k: f64,
}

impl SpectrumSummary {
    pub fn new(eigenvalues: Vec<f64>, k: usize) -> Result<Self> {
        let gap_k = eigengap(&eigenvalues, k)?;
        Ok(Self { eigenvalues, k, gap_k })
    }
}

/// Top-`k` eigenvectors of a symmetric matrix and its full spectrum.
pub fn top_k_eigens(m: &DMatrix<f64>, k: usize) -> Result<(OrthonormalBasis, SpectrumSummary)> {
    check_symmetric(m)?;
    let n = m.nrows();
    if k == 0 || k >= n {
        return Err(Error::KOutOfRange { k, max: n.saturating_sub(1) });
    }
    let spec = symmetric_eigen(m)?;
    let basis = OrthonormalBasis::new(spec.vectors.columns(0, k).into_owned())?;
    let summary = SpectrumSummary::new(spec.values, k)?;
    Ok((basis, summary))
}

fn same_shape(u: &OrthonormalBasis, v: &OrthonormalBasis) -> Result<()> {
    if u.n() != v.n() || u.k() != v.k() {
        return Err(Error::shape(
            format!("{}x{}", u.n(), u.k()),
            format!("{}x{}", v.n(), v.k()),
        ));
    }
    Ok(())
}

/// `‖UUᵀ − VVᵀ‖`, the operator norm of the projector difference.
///
/// For equal dimensions this equals `‖(I − UUᵀ)V‖`, the sine of the largest
/// principal angle, which is what we evaluate (an `n×k` problem instead of
/// `n×n`).
pub fn grassmann_distance(u: &OrthonormalBasis, v: &OrthonormalBasis) -> Result<f64> {
    same_shape(u, v)?;
    let (um, vm) = (u.matrix(), v.matrix());
    let residual = vm - um * (um.transpose() * vm);
    let s = residual.singular_values();
    let top = s.iter().fold(0.0_f64, |acc, x| acc.max(*x));
    Ok(top.clamp(0.0, 1.0))
}

/// Orthogonal `Q` minimizing `‖source·Q − target‖_F` for arbitrary `n×k`
/// matrices: with `sourceᵀ·target = W Σ Zᵀ`, `Q = W Zᵀ`.
pub fn procrustes_rotation(source: &DMatrix<f64>, target: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if source.shape() != target.shape() {
        return Err(Error::shape(
            format!("{}x{}", source.nrows(), source.ncols()),
            format!("{}x{}", target.nrows(), target.ncols()),
        ));
    }
    let cross = source.transpose() * target;
    let svd = SVD::new(cross, true, true);
    match (svd.u, svd.v_t) {
        (Some(w), Some(zt)) => Ok(w * zt),
        _ => Err(Error::Numerical("singular value decomposition failed".into())),
    }
}

#[derive(Debug, Clone)]
pub struct Alignment {
    /// The minimizing `k×k` orthogonal matrix `Q°`.
    pub rotation: DMatrix<f64>,
    /// `Û·Q°`.
    pub aligned: OrthonormalBasis,
    /// `‖Û·Q° − U_⋆‖_F`.
    pub residual: f64,
}

pub fn procrustes_align(u_hat: &OrthonormalBasis, u_star: &OrthonormalBasis) -> Result<Alignment> {
    same_shape(u_hat, u_star)?;
    let rotation = procrustes_rotation(u_hat.matrix(), u_star.matrix())?;
    let aligned = u_hat.rotate(&rotation)?;
    let residual = (aligned.matrix() - u_star.matrix()).norm();
    Ok(Alignment { rotation, aligned, residual })
}

/// Certified lower bound on `gap_k(P)` from a denoised estimate with
/// `‖P̂ − P‖ ≤ eps_p`: `(gap_hat − 2·eps_p)₊`.
pub fn weyl_gap_certificate(gap_hat: f64, eps_p: f64) -> f64 {
    (gap_hat - 2.0 * eps_p).max(0.0)
}

/// Bound on `min_Q ‖ÛQ − U_⋆‖_F²` given `d_Gr(Û, U_⋆) ≤ r`.
///
/// `min_Q ‖ÛQ − U_⋆‖_F² ≤ ‖ΔΠ‖_F² ≤ rank(ΔΠ)·‖ΔΠ‖²` and `rank(ΔΠ) ≤ 2k`,
/// so the bound is `2k·r²` (which is `4r²` at `k = 2`).
pub fn frobenius_subspace_bound(r: f64, k: usize) -> f64 {
    2.0 * k as f64 * r * r
}

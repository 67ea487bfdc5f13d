use nalgebra::DMatrix;
use pathfinding::prelude::{kuhn_munkres, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ceil_snapped;
use super::subspace::{subspace_region, CertificateSet, SubspaceRegion};
use crate::error::{Error, Result};
use crate::graph::AdjacencyMatrix;
use crate::linalg::{frobenius_subspace_bound, procrustes_align, procrustes_rotation, OrthonormalBasis};

/// Largest label count handled by exhaustive permutation search.
pub const MAX_EXACT_LABELS: usize = 8;

const KMEANS_RESTARTS: usize = 50;
const KMEANS_MAX_ITER: usize = 100;
const ALIGN_MAX_ITER: usize = 100;

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Assigns every row to its nearest center (Euclidean); ties go to the lowest
/// center index.
pub fn nearest_center_round(rows: &DMatrix<f64>, centers: &DMatrix<f64>) -> Result<Vec<usize>> {
    let kk = centers.nrows();
    if kk < 2 {
        return Err(Error::InvalidInput(format!("need at least two centers, got {kk}")));
    }
    if rows.ncols() != centers.ncols() {
        return Err(Error::shape(format!("rows of width {}", centers.ncols()), rows.ncols()));
    }
    let centers = rows_of(centers);
    for a in 0..kk {
        for b in (a + 1)..kk {
            if squared_distance(&centers[a], &centers[b]) == 0.0 {
                return Err(Error::DuplicateCenters(a, b));
            }
        }
    }
    Ok(rows_of(rows).iter().map(|row| nearest(row, &centers)).collect())
}

fn nearest(row: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (a, c) in centers.iter().enumerate() {
        let d = squared_distance(row, c);
        if d < best_d {
            best_d = d;
            best = a;
        }
    }
    best
}

fn label_count(g: &[usize], h: &[usize]) -> usize {
    g.iter().chain(h).copied().max().map_or(0, |m| m + 1)
}

fn confusion(g: &[usize], h: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut c = vec![vec![0usize; k]; k];
    for (&a, &b) in g.iter().zip(h) {
        c[a][b] += 1;
    }
    c
}

fn check_same_length(g: &[usize], h: &[usize]) -> Result<()> {
    if g.len() != h.len() {
        return Err(Error::shape(format!("{} labels", g.len()), h.len()));
    }
    Ok(())
}

/// Visits every permutation of `0..k` (Heap's algorithm).
fn for_each_permutation(k: usize, mut visit: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..k).collect();
    let mut c = vec![0usize; k];
    visit(&perm);
    let mut i = 0;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// `min_π #{i : g(i) ≠ π(h(i))}` by exhaustive search over label
/// permutations; at most [`MAX_EXACT_LABELS`] labels.
pub fn perm_hamming_distance_exact(g: &[usize], h: &[usize]) -> Result<usize> {
    check_same_length(g, h)?;
    let k = label_count(g, h);
    if k > MAX_EXACT_LABELS {
        return Err(Error::TooManyLabelsForExact(k));
    }
    let c = confusion(g, h, k);
    let mut best = 0usize;
    for_each_permutation(k, |perm| {
        // perm maps h-labels to g-labels.
        let agree: usize = (0..k).map(|b| c[perm[b]][b]).sum();
        best = best.max(agree);
    });
    Ok(g.len() - best)
}

/// Permutation-invariant Hamming distance. Exhaustive for up to eight labels,
/// optimal assignment on the confusion matrix beyond that (same minimum).
pub fn perm_hamming_distance(g: &[usize], h: &[usize]) -> Result<usize> {
    check_same_length(g, h)?;
    let k = label_count(g, h);
    if k <= MAX_EXACT_LABELS {
        return perm_hamming_distance_exact(g, h);
    }
    let c = confusion(g, h, k);
    let weights = Matrix::from_rows(c.iter().map(|row| row.iter().map(|&x| x as i64).collect::<Vec<_>>()))
        .map_err(|e| Error::Numerical(format!("assignment matrix: {e:?}")))?;
    let (agree, _) = kuhn_munkres(&weights);
    Ok(g.len() - agree as usize)
}

/// Outcome of the rounding lemma for a row error `η` and margin `Δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundingBound {
    /// `η < Δ/4`: under a uniform row bound, rounding recovers every label.
    pub exact: bool,
    /// `min(n, ⌈16nη²/Δ²⌉)`: mislabel bound under a mean-square row bound.
    pub hamming_bound: usize,
}

pub fn rounding_error_bound(eta: f64, delta: f64, n: usize) -> Result<RoundingBound> {
    if !(delta > 0.0) {
        return Err(Error::NonpositiveMargin(delta));
    }
    if !(eta >= 0.0) {
        return Err(Error::InvalidInput(format!("row error {eta} must be ≥ 0")));
    }
    let raw = ceil_snapped(16.0 * n as f64 * eta * eta / (delta * delta));
    Ok(RoundingBound { exact: eta < delta / 4.0, hamming_bound: clamp_count(raw, n) })
}

fn clamp_count(x: f64, n: usize) -> usize {
    if x >= n as f64 {
        n
    } else {
        x.max(0.0) as usize
    }
}

#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub labels: Vec<usize>,
    pub centers: DMatrix<f64>,
    pub inertia: f64,
}

/// Lloyd's algorithm with farthest-point initialization, best of 50 seeded
/// restarts (lowest inertia, earliest restart on ties).
pub fn kmeans(rows: &DMatrix<f64>, clusters: usize, seed: u64) -> Result<KMeansFit> {
    let n = rows.nrows();
    if clusters < 2 || clusters > n {
        return Err(Error::InvalidInput(format!("cluster count {clusters} must be in 2..={n}")));
    }
    let data = rows_of(rows);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansFit> = None;
    for _ in 0..KMEANS_RESTARTS {
        let first = rng.random_range(0..n);
        let fit = lloyd(&data, farthest_point_init(&data, clusters, first));
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn farthest_point_init(data: &[Vec<f64>], clusters: usize, first: usize) -> Vec<Vec<f64>> {
    let mut centers = vec![data[first].clone()];
    let mut dist: Vec<f64> = data.iter().map(|x| squared_distance(x, &centers[0])).collect();
    while centers.len() < clusters {
        let (idx, _) = dist
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
        centers.push(data[idx].clone());
        let c = centers.last().unwrap();
        for (d, x) in dist.iter_mut().zip(data) {
            *d = d.min(squared_distance(x, c));
        }
    }
    centers
}

fn lloyd(data: &[Vec<f64>], mut centers: Vec<Vec<f64>>) -> KMeansFit {
    let k = centers.len();
    let dim = data[0].len();
    let mut labels: Vec<usize> = data.iter().map(|x| nearest(x, &centers)).collect();
    for _ in 0..KMEANS_MAX_ITER {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (x, &l) in data.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(x) {
                *s += v;
            }
        }
        for a in 0..k {
            if counts[a] > 0 {
                centers[a] = sums[a].iter().map(|s| s / counts[a] as f64).collect();
            }
        }
        let next: Vec<usize> = data.iter().map(|x| nearest(x, &centers)).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    let inertia = data.iter().zip(&labels).map(|(x, &l)| squared_distance(x, &centers[l])).sum();
    KMeansFit { labels, centers: DMatrix::from_fn(k, dim, |i, j| centers[i][j]), inertia }
}

/// How the estimated labels are produced from the center basis `Û`.
#[derive(Debug, Clone)]
pub enum RoundingTarget {
    /// Population basis and centers known: Procrustes-align `Û` to the basis,
    /// then round against the centers.
    Reference { basis: OrthonormalBasis, centers: DMatrix<f64> },
    /// Only the population centers are declared: alternate nearest-center
    /// labelling and Procrustes alignment of `Û` onto the labelled centers,
    /// starting from a k-means fit matched to the centers.
    DeclaredCenters { centers: DMatrix<f64>, seed: u64 },
    /// No centers: k-means rounding; the margin is a declared assumption.
    KMeans { clusters: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginProvenance {
    /// Margin computed from declared population centers.
    DeclaredCenters,
    /// Margin supplied as a domain assumption without centers.
    DeclaredAssumption,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HammingRoute {
    MeanSquare,
    Rowwise,
}

/// Permutation-invariant Hamming ball `{h : d_H(ĝ, h) ≤ m}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRegion {
    pub labels: Vec<usize>,
    pub hamming_radius: usize,
    pub alpha: f64,
    pub margin_used: f64,
    pub margin_provenance: MarginProvenance,
    pub route: HammingRoute,
    pub subspace_radius: f64,
    /// The radius equals `n`: every assignment is in the ball.
    pub vacuous: bool,
}

impl ClusterRegion {
    pub fn contains(&self, h: &[usize]) -> Result<bool> {
        Ok(perm_hamming_distance(&self.labels, h)? <= self.hamming_radius)
    }
}

pub fn cluster_region(
    a: &AdjacencyMatrix,
    k: usize,
    certificates: CertificateSet,
    alpha: f64,
    delta: f64,
    target: &RoundingTarget,
    c_row: Option<f64>,
) -> Result<ClusterRegion> {
    let region = subspace_region(a, k, certificates, alpha)?;
    cluster_region_from(&region, delta, target, c_row)
}

/// Hamming ball on top of an existing subspace region.
///
/// The radius is `min(n, ⌈16·2k·r²/Δ²⌉)` from the mean-square route; with a
/// rowwise constant `c_row` it is additionally capped by `⌈16n·c_row²r²/Δ²⌉`,
/// which drops to 0 once `c_row·r < Δ/4`.
pub fn cluster_region_from(
    region: &SubspaceRegion,
    delta: f64,
    target: &RoundingTarget,
    c_row: Option<f64>,
) -> Result<ClusterRegion> {
    if !(delta > 0.0) {
        return Err(Error::NonpositiveMargin(delta));
    }
    let n = region.center.n();
    let k = region.center.k();
    let r = region.radius;
    let (labels, provenance) = round_embedding(&region.center, target)?;

    let mean_square = clamp_count(ceil_snapped(16.0 * frobenius_subspace_bound(r, k) / (delta * delta)), n);
    let (hamming_radius, route) = match c_row {
        Some(c) if c > 0.0 => {
            let eta = c * r;
            let rowwise = if eta < delta / 4.0 {
                0
            } else {
                clamp_count(ceil_snapped(16.0 * n as f64 * eta * eta / (delta * delta)), n)
            };
            if rowwise < mean_square {
                (rowwise, HammingRoute::Rowwise)
            } else {
                (mean_square, HammingRoute::MeanSquare)
            }
        }
        Some(c) => return Err(Error::InvalidInput(format!("c_row = {c} must be positive"))),
        None => (mean_square, HammingRoute::MeanSquare),
    };

    Ok(ClusterRegion {
        labels,
        hamming_radius,
        alpha: region.alpha,
        margin_used: delta,
        margin_provenance: provenance,
        route,
        subspace_radius: r,
        vacuous: hamming_radius >= n,
    })
}

fn round_embedding(center: &OrthonormalBasis, target: &RoundingTarget) -> Result<(Vec<usize>, MarginProvenance)> {
    match target {
        RoundingTarget::Reference { basis, centers } => {
            check_center_width(centers, center.k())?;
            let aligned = procrustes_align(center, basis)?.aligned;
            Ok((nearest_center_round(aligned.matrix(), centers)?, MarginProvenance::DeclaredCenters))
        }
        RoundingTarget::DeclaredCenters { centers, seed } => {
            check_center_width(centers, center.k())?;
            Ok((align_to_declared_centers(center.matrix(), centers, *seed)?, MarginProvenance::DeclaredCenters))
        }
        RoundingTarget::KMeans { clusters, seed } => {
            Ok((kmeans(center.matrix(), *clusters, *seed)?.labels, MarginProvenance::DeclaredAssumption))
        }
    }
}

fn check_center_width(centers: &DMatrix<f64>, k: usize) -> Result<()> {
    if centers.ncols() != k {
        return Err(Error::shape(format!("centers with {k} columns"), centers.ncols()));
    }
    Ok(())
}

/// Labels for `Û` against declared centers when the population basis is
/// unknown. The rotation is found by matching k-means cluster means to the
/// centers (all label permutations, size-weighted Procrustes), then refined by
/// alternating nearest-center labelling and Procrustes alignment.
fn align_to_declared_centers(u: &DMatrix<f64>, centers: &DMatrix<f64>, seed: u64) -> Result<Vec<usize>> {
    let kk = centers.nrows();
    if kk > MAX_EXACT_LABELS {
        return Err(Error::TooManyLabelsForExact(kk));
    }
    // Validates center distinctness up front.
    nearest_center_round(&DMatrix::zeros(0, centers.ncols()), centers)?;
    let fit = kmeans(u, kk, seed)?;
    let counts: Vec<f64> = (0..kk).map(|a| fit.labels.iter().filter(|&&l| l == a).count() as f64).collect();

    let mut best: Option<(f64, DMatrix<f64>)> = None;
    for_each_permutation(kk, |perm| {
        let src = DMatrix::from_fn(kk, u.ncols(), |a, j| counts[a].sqrt() * fit.centers[(a, j)]);
        let dst = DMatrix::from_fn(kk, u.ncols(), |a, j| counts[a].sqrt() * centers[(perm[a], j)]);
        if let Ok(q) = procrustes_rotation(&src, &dst) {
            let resid = (&src * &q - &dst).norm_squared();
            if best.as_ref().is_none_or(|b| resid < b.0) {
                best = Some((resid, q));
            }
        }
    });
    let mut q = best.ok_or_else(|| Error::Numerical("center alignment failed".into()))?.1;
    let mut labels = nearest_center_round(&(u * &q), centers)?;
    for _ in 0..ALIGN_MAX_ITER {
        let target = DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| centers[(labels[i], j)]);
        q = procrustes_rotation(u, &target)?;
        let next = nearest_center_round(&(u * &q), centers)?;
        if next == labels {
            break;
        }
        labels = next;
    }
    Ok(labels)
}

//! A permutation-invariant Hamming ball for spectral clustering on a
//! strong-signal two-block model.

use graphcert::concentration::variance_proxy;
use graphcert::inference::{
    cluster_region, perm_hamming_distance, rounding_error_bound, CertificateSet, RoundingTarget,
};
use graphcert::{build_probability_matrix, expected_degree_bound, sample_adjacency, top_k_eigens, ModelSpec};
use nalgebra::DMatrix;

fn main() -> graphcert::Result<()> {
    let n = 600;
    let truth: Vec<usize> = (0..n).map(|i| usize::from(i >= 180)).collect();
    let model = build_probability_matrix(&ModelSpec::sbm(truth.clone(), vec![vec![0.95, 0.01], vec![0.01, 0.95]]))?;
    let (u_star, spectrum) = top_k_eigens(model.p(), 2)?;
    let centers = DMatrix::from_fn(2, 2, |c, j| u_star.matrix()[([0, n - 1][c], j)]);
    let delta = (centers.row(0) - centers.row(1)).norm();

    let certs = CertificateSet::new(expected_degree_bound(&model), spectrum.gap_k)
        .with_variance_bound(variance_proxy(model.p()).v);
    let a = sample_adjacency(&model, 42);
    let target = RoundingTarget::Reference { basis: u_star, centers };
    let region = cluster_region(&a, 2, certs, 0.2, delta, &target, None)?;
    let miss = perm_hamming_distance(&region.labels, &truth)?;
    println!("Δ = {delta:.5}, r = {:.4}", region.subspace_radius);
    println!("Hamming radius {} of n = {n} ({:?} route), observed distance {miss}", region.hamming_radius, region.route);

    let kmeans = RoundingTarget::KMeans { clusters: 2, seed: 0 };
    let blind = cluster_region(&a, 2, certs, 0.2, delta, &kmeans, None)?;
    println!("k-means rounding: distance {} ({:?})", perm_hamming_distance(&blind.labels, &truth)?, blind.margin_provenance);

    for eta in [0.2 * delta, 0.3 * delta] {
        let b = rounding_error_bound(eta, delta, n)?;
        println!("row error η = {eta:.4}: exact = {}, mean-square bound {}", b.exact, b.hamming_bound);
    }
    Ok(())
}

//! A Grassmann ball for the top-k eigenspace, checked against the truth, and
//! the ridge risk bound it implies.

use graphcert::concentration::variance_proxy;
use graphcert::downstream::{ridge_risk, ridge_risk_bound};
use graphcert::inference::{region_contains, subspace_region, CertificateSet};
use graphcert::{
    build_probability_matrix, expected_degree_bound, grassmann_distance, procrustes_align, sample_adjacency, top_k_eigens, ModelSpec,
};
use nalgebra::DVector;

fn main() -> graphcert::Result<()> {
    let n = 600;
    let labels: Vec<usize> = (0..n).map(|i| usize::from(i >= 100) + usize::from(i >= 300)).collect();
    let b = vec![vec![0.95, 0.01, 0.01], vec![0.01, 0.95, 0.01], vec![0.01, 0.01, 0.95]];
    let model = build_probability_matrix(&ModelSpec::sbm(labels, b))?;
    let a = sample_adjacency(&model, 1);

    let (u_star, spectrum) = top_k_eigens(model.p(), 3)?;
    let certs = CertificateSet::new(expected_degree_bound(&model), spectrum.gap_k).with_variance_bound(variance_proxy(model.p()).v);
    let region = subspace_region(&a, 3, certs, 0.05)?;
    let dist = grassmann_distance(&region.center, &u_star)?;
    println!("gap_3(P) = {:.2}, q = {:.2}, r = {:.4}, informative = {}", spectrum.gap_k, region.quantile.q, region.radius, region.informative);
    println!("d_Gr(Û, U⋆) = {dist:.4}, covered = {}", region_contains(&u_star, &region)?);

    let aligned = procrustes_align(&region.center, &u_star)?;
    println!("Procrustes residual ‖ÛQ − U⋆‖_F = {:.4} ≤ √(2k)·r = {:.4}", aligned.residual, (6.0_f64).sqrt() * region.radius);

    let y = DVector::from_fn(n, |i, _| if i % 2 == 0 { 1.0 } else { -0.5 });
    let lambda = 0.5;
    let gap = (ridge_risk(&region.center, &y, lambda)? - ridge_risk(&u_star, &y, lambda)?).abs();
    println!("ridge: |R(Û) − R(U⋆)| = {gap:.2e} ≤ {:.2e}", ridge_risk_bound(&y, lambda, region.radius, n)?);
    Ok(())
}

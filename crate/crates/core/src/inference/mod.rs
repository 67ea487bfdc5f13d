//! Confidence regions built from a single adjacency matrix and a set of
//! certificates: subspace balls on the Grassmannian, permutation-invariant
//! Hamming balls for clusterings, simultaneous centrality bands and top-`m`
//! selection certificates.

mod centrality;
mod cluster;
mod selection;
mod subspace;

pub use centrality::{
    centrality_bands, eigenvector_centrality, eigenvector_modulus, katz_centrality, katz_modulus, CentralityBand,
    CentralityFunctional, EigenvectorCentrality,
};
pub use cluster::{
    cluster_region, cluster_region_from, kmeans, nearest_center_round, perm_hamming_distance,
    perm_hamming_distance_exact, rounding_error_bound, ClusterRegion, HammingRoute, KMeansFit, MarginProvenance,
    RoundingBound, RoundingTarget,
};
pub use selection::{stability_certificate, top_m_selection, StabilityCertificate, TopMSelection, TIE_TOL};
pub use subspace::{region_contains, subspace_region, subspace_region_from, CertificateSet, SubspaceRegion};

/// `⌈x⌉`, except that values within a relative 1e-9 of an integer snap to it.
///
/// Radii such as `⌈64r²/Δ²⌉` are evaluated from floating-point `Δ²`; without
/// the snap a product like `64r²/(4/n)` can land one ulp above the intended
/// integer and round up.
pub(crate) fn ceil_snapped(x: f64) -> f64 {
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) {
        nearest
    } else {
        x.ceil()
    }
}

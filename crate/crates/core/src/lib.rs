//! Finite-sample, certificate-gated confidence regions for the spectral
//! objects of a single observed graph.
//!
//! The crate is organized bottom-up:
//!
//! - [`graph`]: edge-probability models (SBM, DCSBM, RDPG) and exact sampling.
//! - [`linalg`]: ordered symmetric eigendecompositions, Grassmann distance,
//!   Procrustes alignment.
//! - [`concentration`]: variance proxies, explicit matrix-Bernstein quantiles
//!   for `‖A − P‖` and the Davis–Kahan radius.
//! - [`inference`]: subspace regions, clustering Hamming balls, centrality
//!   bands and top-`m` selection certificates.
//! - [`downstream`]: propagation to ridge risk, fairness post-processing and
//!   threshold-graph filtrations.
//! - [`protocol`]: the gated end-to-end pipeline and its JSON report.
//! - [`simulation`]: Monte Carlo coverage experiments and constructive
//!   counterexamples.
//! - [`io`]: edge lists, dense CSV and JSON helpers.
//!
//! Every radius is computed from declared or exactly computed certificates.
//! When a certificate is missing the pipeline refuses instead of guessing.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod concentration;
pub mod downstream;
pub mod error;
pub mod graph;
pub mod inference;
pub mod io;
pub mod linalg;
pub mod protocol;
pub mod simulation;

pub use error::{Error, Result};
pub use graph::{
    build_probability_matrix, expected_degree_bound, sample_adjacency, two_block_spectrum, AdjacencyMatrix,
    Envelope, ModelDocument, ModelSpec, ProbabilityModel,
};
pub use linalg::{grassmann_distance, procrustes_align, top_k_eigens, OrthonormalBasis, SpectrumSummary};

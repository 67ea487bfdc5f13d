//! Guarantees that follow from a certified region by Lipschitz propagation:
//! ridge risk on a spectral embedding, fairness-constrained post-processing of
//! centrality scores, and threshold-graph filtrations of an embedding.

mod fairness;
mod filtration;
mod ridge;

pub use fairness::{
    fair_optimize, feasibility_transfer_check, logistic_decisions, parity_gap, surrogate_loss, tradeoff_bounds,
    FairOptimum, FairnessProblem, TradeoffBounds, TransferCheck, GRID_POINTS, GRID_STAGES,
};
pub use filtration::{
    band_envelope, component_count_at, distance_matrix, edge_count_at, filtration_envelope, threshold_edges,
    BandEnvelope, EnvelopeLevel, FiltrationReport, SandwichCheck,
};
pub use ridge::{ridge_risk, ridge_risk_bound};

/// `L_φ · r`: the image of a radius-`r` region under an `L_φ`-Lipschitz map.
pub fn lipschitz_propagate(r: f64, l_phi: f64) -> crate::Result<f64> {
    if !(r >= 0.0) || !(l_phi >= 0.0) {
        return Err(crate::Error::InvalidInput(format!("radius {r} and modulus {l_phi} must be ≥ 0")));
    }
    Ok(l_phi * r)
}

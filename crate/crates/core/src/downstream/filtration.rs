use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `D(X)_ij = ‖x_i − x_j‖₂`.
pub fn distance_matrix(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (x.row(i) - x.row(j)).norm();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Edges `i < j` of the threshold graph `G_t`: `D_ij ≤ t`. Empty for `t < 0`.
pub fn threshold_edges(d: &DMatrix<f64>, t: f64) -> Vec<(usize, usize)> {
    let n = d.nrows();
    if t < 0.0 {
        return Vec::new();
    }
    (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).filter(|&(i, j)| d[(i, j)] <= t).collect()
}

pub fn edge_count_at(d: &DMatrix<f64>, t: f64) -> usize {
    threshold_edges(d, t).len()
}

/// Connected components of `G_t` (isolated nodes count).
pub fn component_count_at(d: &DMatrix<f64>, t: f64) -> usize {
    let n = d.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut a: usize) -> usize {
        while parent[a] != a {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        a
    }
    let mut components = n;
    for (i, j) in threshold_edges(d, t) {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri] = rj;
            components -= 1;
        }
    }
    components
}

fn is_subset(small: &[(usize, usize)], large: &[(usize, usize)]) -> bool {
    // Both lists come out of threshold_edges in lexicographic order.
    let mut it = large.iter();
    small.iter().all(|e| it.any(|f| f == e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichCheck {
    pub t: f64,
    /// `G_{t−2η}(X) ⊆ G_t(Y)`.
    pub lower_inclusion: bool,
    /// `G_t(Y) ⊆ G_{t+2η}(X)`.
    pub upper_inclusion: bool,
}

/// Comparison of two embeddings' threshold filtrations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiltrationReport {
    /// `max_i ‖x_i − y_i‖₂`.
    pub eta: f64,
    /// `max_ij |D(X)_ij − D(Y)_ij|`.
    pub d_filt: f64,
    pub within_bound: bool,
    pub levels: Vec<SandwichCheck>,
}

impl FiltrationReport {
    pub fn all_hold(&self) -> bool {
        self.within_bound && self.levels.iter().all(|l| l.lower_inclusion && l.upper_inclusion)
    }
}

pub fn filtration_envelope(x: &DMatrix<f64>, y: &DMatrix<f64>, t_grid: &[f64]) -> Result<FiltrationReport> {
    if x.shape() != y.shape() {
        return Err(Error::shape(format!("{:?}", x.shape()), format!("{:?}", y.shape())));
    }
    let eta = (0..x.nrows()).map(|i| (x.row(i) - y.row(i)).norm()).fold(0.0, f64::max);
    let dx = distance_matrix(x);
    let dy = distance_matrix(y);
    let d_filt = (&dx - &dy).amax();
    let levels = t_grid
        .iter()
        .map(|&t| {
            let inner = threshold_edges(&dx, t - 2.0 * eta);
            let mid = threshold_edges(&dy, t);
            let outer = threshold_edges(&dx, t + 2.0 * eta);
            SandwichCheck { t, lower_inclusion: is_subset(&inner, &mid), upper_inclusion: is_subset(&mid, &outer) }
        })
        .collect();
    Ok(FiltrationReport { eta, d_filt, within_bound: d_filt <= 2.0 * eta, levels })
}

/// Range implied for `G_t(Y)` by a rowwise band `max_i ‖x_i − y_i‖ ≤ η`
/// around a known embedding `X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeLevel {
    pub t: f64,
    pub edges_observed: usize,
    pub edges_lower: usize,
    pub edges_upper: usize,
    pub components_observed: usize,
    pub components_lower: usize,
    pub components_upper: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandEnvelope {
    pub eta: f64,
    pub levels: Vec<EnvelopeLevel>,
}

/// For each `t`, edge and component counts of `G_t(Y)` are bracketed by those
/// of `G_{t∓2η}(X)`.
pub fn band_envelope(x: &DMatrix<f64>, eta: f64, t_grid: &[f64]) -> Result<BandEnvelope> {
    if !(eta >= 0.0) {
        return Err(Error::InvalidInput(format!("row band η = {eta} must be ≥ 0")));
    }
    let d = distance_matrix(x);
    let levels = t_grid
        .iter()
        .map(|&t| EnvelopeLevel {
            t,
            edges_observed: edge_count_at(&d, t),
            edges_lower: edge_count_at(&d, t - 2.0 * eta),
            edges_upper: edge_count_at(&d, t + 2.0 * eta),
            components_observed: component_count_at(&d, t),
            components_lower: component_count_at(&d, t + 2.0 * eta),
            components_upper: component_count_at(&d, t - 2.0 * eta),
        })
        .collect();
    Ok(BandEnvelope { eta, levels })
}

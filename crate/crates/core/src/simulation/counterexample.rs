use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{build_probability_matrix, ModelSpec, ProbabilityModel};
use crate::inference::TIE_TOL;
use crate::linalg::OrthonormalBasis;

/// Moves a tied score vector by `eps` in sup-norm so that its top-`m` set
/// becomes unique and drops a member of a previously admissible set.
///
/// With `T` the scores tied at the threshold and `c` the slots `T` must fill,
/// the last `c` members of `T` are raised by `eps` and the rest lowered by
/// `eps`. The lowest-index tied node, which belongs to the lexicographically
/// first admissible set, is always lowered.
pub fn tie_counterexample(x: &[f64], m: usize, eps: f64) -> Result<Vec<f64>> {
    let n = x.len();
    if m == 0 || m >= n {
        return Err(Error::InvalidInput(format!("selection size {m} must be in 1..{n}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("scores must be finite".into()));
    }
    if !(eps > TIE_TOL) || !eps.is_finite() {
        return Err(Error::InvalidInput(format!("perturbation {eps} must exceed the tie tolerance {TIE_TOL}")));
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let threshold = sorted[m - 1];
    let tied: Vec<usize> = (0..n).filter(|&i| (x[i] - threshold).abs() <= TIE_TOL).collect();
    let above = (0..n).filter(|&i| x[i] - threshold > TIE_TOL).count();
    let slots = m - above;
    if tied.len() <= slots {
        return Err(Error::NoTiePresent);
    }
    let mut out = x.to_vec();
    let split = tied.len() - slots;
    for &i in &tied[..split] {
        out[i] -= eps;
    }
    for &i in &tied[split..] {
        out[i] += eps;
    }
    Ok(out)
}

/// A probability matrix whose `k`-th and `(k+1)`-th eigenvalues coincide,
/// with two top-`k` bases at Grassmann distance 1.
#[derive(Debug, Clone)]
pub struct CollisionInstance {
    pub model: ProbabilityModel,
    pub u_a: OrthonormalBasis,
    pub u_b: OrthonormalBasis,
    pub clique_size: usize,
}

const CLIQUE_PROBABILITY: f64 = 0.5;

/// `k + 1` disjoint cliques of `⌊n/(k+1)⌋` nodes, clique `a` with edge
/// probability `1/2 − a·δ`; leftover nodes are isolated.
fn clique_spec(n: usize, k: usize, delta: f64) -> Result<(ModelSpec, usize)> {
    if k == 0 || n < 2 * k + 2 {
        return Err(Error::TooSmall(format!("collision needs k ≥ 1 and n ≥ 2k + 2, got n = {n}, k = {k}")));
    }
    let size = n / (k + 1);
    let blocks = k + 2;
    let labels = (0..n).map(|i| (i / size).min(k + 1)).collect();
    let connectivity = (0..blocks)
        .map(|a| {
            (0..blocks)
                .map(|b| if a == b && a <= k { CLIQUE_PROBABILITY - a as f64 * delta } else { 0.0 })
                .collect()
        })
        .collect();
    Ok((ModelSpec::sbm(labels, connectivity), size))
}

fn indicator_basis(n: usize, size: usize, cliques: &[usize]) -> Result<OrthonormalBasis> {
    let scale = 1.0 / (size as f64).sqrt();
    OrthonormalBasis::new(DMatrix::from_fn(n, cliques.len(), |i, c| if i / size == cliques[c] { scale } else { 0.0 }))
}

/// `k + 1` disjoint cliques with edge probability 1/2. The top eigenvalue
/// `(s − 1)/2` has multiplicity `k + 1`, so `λ_k = λ_{k+1}`. `U_a` spans the
/// first `k` clique indicators and `U_b` the last `k`.
pub fn collision_instance(n: usize, k: usize) -> Result<CollisionInstance> {
    let (spec, size) = clique_spec(n, k, 0.0)?;
    let model = build_probability_matrix(&spec)?;
    let first: Vec<usize> = (0..k).collect();
    let last: Vec<usize> = (1..=k).collect();
    let u_a = indicator_basis(n, size, &first)?;
    let u_b = indicator_basis(n, size, &last)?;
    Ok(CollisionInstance { model, u_a, u_b, clique_size: size })
}

/// The collision instance with clique `a` lowered to probability
/// `1/2 − a·δ`, which opens `gap_k(P) = (s − 1)·δ`.
pub fn perturbed_collision(n: usize, k: usize, delta: f64) -> Result<ProbabilityModel> {
    if !(delta >= 0.0) || k as f64 * delta > CLIQUE_PROBABILITY {
        return Err(Error::InvalidInput(format!("collision breaking δ = {delta} outside [0, 1/(2k)]")));
    }
    let (spec, _) = clique_spec(n, k, delta)?;
    build_probability_matrix(&spec)
}

//! Edge-probability models and adjacency sampling.
//!
//! A [`ProbabilityModel`] carries the materialized matrix `P` together with the
//! generative spec that produced it. Three specs are supported: the
//! stochastic block model, its degree-corrected variant and the (generalized)
//! random dot product graph.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::check_symmetric;

/// Block membership, either as labels in `0..K` or as a one-hot `n×K` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Membership {
    Labels(Vec<usize>),
    OneHot(Vec<Vec<f64>>),
}

impl Membership {
    /// Label vector; fails with `MalformedMembership` on a row that is not one-hot.
    pub fn labels(&self) -> Result<Vec<usize>> {
        match self {
            Membership::Labels(l) => Ok(l.clone()),
            Membership::OneHot(rows) => rows
                .iter()
                .enumerate()
                .map(|(row, z)| {
                    let ones: Vec<usize> = z
                        .iter()
                        .enumerate()
                        .filter(|(_, &x)| x == 1.0)
                        .map(|(a, _)| a)
                        .collect();
                    let zeros = z.iter().filter(|&&x| x == 0.0).count();
                    if ones.len() == 1 && zeros + 1 == z.len() {
                        Ok(ones[0])
                    } else {
                        Err(Error::MalformedMembership { row })
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelSpec {
    /// `P = Z B Zᵀ` with zeroed diagonal.
    Sbm { membership: Membership, connectivity: Vec<Vec<f64>> },
    /// `P_ij = θ_i θ_j B_{g_i g_j}`.
    Dcsbm { theta: Vec<f64>, labels: Vec<usize>, connectivity: Vec<Vec<f64>> },
    /// `P = X I_{p,q} Xᵀ`; `positive + negative` must equal the row length of `X`.
    Rdpg { positions: Vec<Vec<f64>>, positive: usize, negative: usize },
}

impl ModelSpec {
    /// Two equal blocks of size `n/2` with within-block probability `p` and
    /// between-block probability `q`.
    pub fn two_block(n: usize, p: f64, q: f64) -> Self {
        let labels = (0..n).map(|i| usize::from(i >= n / 2)).collect();
        ModelSpec::Sbm { membership: Membership::Labels(labels), connectivity: vec![vec![p, q], vec![q, p]] }
    }

    pub fn sbm(labels: Vec<usize>, connectivity: Vec<Vec<f64>>) -> Self {
        ModelSpec::Sbm { membership: Membership::Labels(labels), connectivity }
    }

    /// Ground-truth block labels, when the spec has them.
    pub fn labels(&self) -> Result<Option<Vec<usize>>> {
        match self {
            ModelSpec::Sbm { membership, .. } => membership.labels().map(Some),
            ModelSpec::Dcsbm { labels, .. } => Ok(Some(labels.clone())),
            ModelSpec::Rdpg { .. } => Ok(None),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            ModelSpec::Sbm { membership: Membership::Labels(l), .. } => l.len(),
            ModelSpec::Sbm { membership: Membership::OneHot(z), .. } => z.len(),
            ModelSpec::Dcsbm { labels, .. } => labels.len(),
            ModelSpec::Rdpg { positions, .. } => positions.len(),
        }
    }
}

/// Declared envelope parameters: an expected-degree bound and a gap certificate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    /// Optional bound on the variance proxy `v(P)`, sharper than `d_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance_bound: Option<f64>,
}

/// JSON form of a model: the spec fields plus an optional envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    #[serde(flatten)]
    pub spec: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<Envelope>,
}

#[derive(Debug, Clone)]
pub struct ProbabilityModel {
    p: DMatrix<f64>,
    spec: ModelSpec,
    envelope: Option<Envelope>,
}

impl ProbabilityModel {
    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn envelope(&self) -> Option<&Envelope> {
        self.envelope.as_ref()
    }

    pub fn with_envelope(mut self, envelope: Envelope) -> Self {
        self.envelope = Some(envelope);
        self
    }

    /// Wraps an explicit, already validated-shape probability matrix with the
    /// spec that describes it (used for constructed instances).
    pub fn from_matrix(p: DMatrix<f64>, spec: ModelSpec) -> Result<Self> {
        validate_probability_matrix(&p)?;
        Ok(Self { p, spec, envelope: None })
    }
}

fn connectivity_matrix(b: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let k = b.len();
    if k == 0 || b.iter().any(|row| row.len() != k) {
        return Err(Error::InvalidInput("connectivity must be a non-empty square matrix".into()));
    }
    let m = DMatrix::from_fn(k, k, |i, j| b[i][j]);
    for i in 0..k {
        for j in 0..k {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 || m[(i, j)].is_nan() {
                return Err(Error::InvalidInput("connectivity must be symmetric".into()));
            }
        }
    }
    Ok(m)
}

fn check_labels(labels: &[usize], k: usize) -> Result<()> {
    if let Some((i, &g)) = labels.iter().enumerate().find(|(_, &g)| g >= k) {
        return Err(Error::InvalidInput(format!("label {g} of node {i} exceeds block count {k}")));
    }
    Ok(())
}

fn validate_probability_matrix(p: &DMatrix<f64>) -> Result<()> {
    check_symmetric(p)?;
    let n = p.nrows();
    for i in 0..n {
        if p[(i, i)] != 0.0 {
            return Err(Error::InvalidInput(format!("P[{i}][{i}] must be zero")));
        }
        for j in (i + 1)..n {
            let v = p[(i, j)];
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfRangeProbability { i, j, value: v });
            }
        }
    }
    Ok(())
}

/// Materializes `P` from a spec. The diagonal is forced to zero; off-diagonal
/// entries outside `[0, 1]` are rejected, never clipped.
pub fn build_probability_matrix(spec: &ModelSpec) -> Result<ProbabilityModel> {
    let mut p = match spec {
        ModelSpec::Sbm { membership, connectivity } => {
            let labels = membership.labels()?;
            let b = connectivity_matrix(connectivity)?;
            if let Membership::OneHot(rows) = membership {
                if let Some(row) = rows.iter().position(|r| r.len() != b.nrows()) {
                    return Err(Error::MalformedMembership { row });
                }
            }
            check_labels(&labels, b.nrows())?;
            let n = labels.len();
            DMatrix::from_fn(n, n, |i, j| b[(labels[i], labels[j])])
        }
        ModelSpec::Dcsbm { theta, labels, connectivity } => {
            let b = connectivity_matrix(connectivity)?;
            check_labels(labels, b.nrows())?;
            if theta.len() != labels.len() {
                return Err(Error::shape(format!("{} weights", labels.len()), theta.len()));
            }
            if let Some(i) = theta.iter().position(|&t| !(t > 0.0) || !t.is_finite()) {
                return Err(Error::InvalidInput(format!("degree weight theta[{i}] must be positive")));
            }
            let n = labels.len();
            DMatrix::from_fn(n, n, |i, j| theta[i] * theta[j] * b[(labels[i], labels[j])])
        }
        ModelSpec::Rdpg { positions, positive, negative } => {
            let d = positive + negative;
            if d == 0 {
                return Err(Error::InvalidInput("latent dimension must be positive".into()));
            }
            if let Some(i) = positions.iter().position(|x| x.len() != d) {
                return Err(Error::shape(format!("latent rows of length {d}"), format!("row {i}")));
            }
            let n = positions.len();
            let sign = |c: usize| if c < *positive { 1.0 } else { -1.0 };
            DMatrix::from_fn(n, n, |i, j| {
                (0..d).map(|c| sign(c) * positions[i][c] * positions[j][c]).sum::<f64>()
            })
        }
    };
    if p.nrows() < 2 {
        return Err(Error::TooSmall("a model needs at least two nodes".into()));
    }
    p.fill_diagonal(0.0);
    validate_probability_matrix(&p)?;
    Ok(ProbabilityModel { p, spec: spec.clone(), envelope: None })
}

/// One observed undirected simple graph.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix {
    a: DMatrix<f64>,
    seed: Option<u64>,
}

impl AdjacencyMatrix {
    /// Validates symmetry, a zero diagonal and 0/1 entries.
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::shape("square adjacency", format!("{}x{}", a.nrows(), a.ncols())));
        }
        let n = a.nrows();
        for i in 0..n {
            if a[(i, i)] != 0.0 {
                return Err(Error::InvalidInput(format!("self-loop at node {i}")));
            }
            for j in 0..n {
                let v = a[(i, j)];
                if v != 0.0 && v != 1.0 {
                    return Err(Error::InvalidInput(format!("A[{i}][{j}] = {v} is not 0/1")));
                }
                if v != a[(j, i)] {
                    return Err(Error::NotSymmetric(1.0));
                }
            }
        }
        Ok(Self { a, seed: None })
    }

    /// Builds a graph from an undirected edge list; rejects self-loops and
    /// out-of-range endpoints. Duplicate pairs collapse.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut a = DMatrix::zeros(n, n);
        for &(u, v) in edges {
            if u == v {
                return Err(Error::InvalidInput(format!("self-loop at node {u}")));
            }
            if u >= n || v >= n {
                return Err(Error::InvalidInput(format!("edge ({u}, {v}) exceeds node count {n}")));
            }
            a[(u, v)] = 1.0;
            a[(v, u)] = 1.0;
        }
        Ok(Self { a, seed: None })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Upper-triangular edge list `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.a[(i, j)] != 0.0 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn edge_density(&self) -> f64 {
        let n = self.n() as f64;
        if n < 2.0 {
            return 0.0;
        }
        self.edges().len() as f64 / (n * (n - 1.0) / 2.0)
    }
}

/// Samples `A` with independent `Bernoulli(P_ij)` upper-triangular entries,
/// mirrored. Deterministic in `seed`.
pub fn sample_adjacency(model: &ProbabilityModel, seed: u64) -> AdjacencyMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = sample_adjacency_with(model, &mut rng);
    out.seed = Some(seed);
    out
}

/// Sampling from a caller-owned generator (used for per-replication streams).
pub fn sample_adjacency_with<R: Rng + ?Sized>(model: &ProbabilityModel, rng: &mut R) -> AdjacencyMatrix {
    let n = model.n();
    let p = &model.p;
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let u: f64 = rng.random();
            if u < p[(i, j)] {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
    }
    AdjacencyMatrix { a, seed: None }
}

/// Closed-form spectrum of the equal two-block SBM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoBlockSpectrum {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Eigenvalue `−p`, multiplicity `n − 2`.
    pub lambda_rest: f64,
    pub gap2: f64,
}

pub fn two_block_spectrum(n: usize, p: f64, q: f64) -> Result<TwoBlockSpectrum> {
    if n % 2 == 1 {
        return Err(Error::OddN(n));
    }
    if n < 4 {
        return Err(Error::TooSmall(format!("two-block spectrum needs n ≥ 4, got {n}")));
    }
    if !(0.0 <= q && q <= p && p <= 1.0) {
        return Err(Error::InvalidInput(format!("need 0 ≤ q ≤ p ≤ 1, got p = {p}, q = {q}")));
    }
    let m = (n / 2) as f64;
    let lambda1 = (m - 1.0) * p + m * q;
    let lambda2 = (m - 1.0) * p - m * q;
    let lambda_rest = -p;
    let gap2 = (lambda1 - lambda2).min(lambda2 - lambda_rest);
    Ok(TwoBlockSpectrum { lambda1, lambda2, lambda_rest, gap2 })
}

/// Maximum expected degree `max_i Σ_{j≠i} P_ij`. A declared envelope value
/// is passed through unchanged.
pub fn expected_degree_bound(model: &ProbabilityModel) -> f64 {
    if let Some(d) = model.envelope.as_ref().and_then(|e| e.d_max) {
        return d;
    }
    max_row_sum(&model.p)
}

/// Largest row sum, each row summed with Neumaier compensation.
pub(crate) fn max_row_sum(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| compensated_sum(r.iter().copied())).fold(0.0_f64, f64::max)
}

fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut carry) = (0.0_f64, 0.0_f64);
    for v in values {
        let t = sum + v;
        carry += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + carry
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::symmetric_eigenvalues;

    fn assert_adjacency_invariants(a: &AdjacencyMatrix) {
        AdjacencyMatrix::new(a.matrix().clone()).expect("invariants");
    }

    #[test]
    fn worked_sbm_entries() {
        let model = build_probability_matrix(&ModelSpec::two_block(200, 0.3, 0.1)).unwrap();
        let p = model.p();
        assert_eq!(p[(0, 1)], 0.3);
        assert_eq!(p[(150, 199)], 0.3);
        assert_eq!(p[(0, 150)], 0.1);
        assert_eq!(p[(7, 7)], 0.0);
    }

    #[test]
    fn zero_connectivity_gives_zero_matrix() {
        let model = build_probability_matrix(&ModelSpec::two_block(10, 0.0, 0.0)).unwrap();
        assert!(model.p().iter().all(|&x| x == 0.0));
        let a = sample_adjacency(&model, 1);
        assert!(a.matrix().iter().all(|&x| x == 0.0));
        assert_eq!(expected_degree_bound(&model), 0.0);
    }

    #[test]
    fn rdpg_rank_one_all_ones() {
        let spec = ModelSpec::Rdpg { positions: vec![vec![1.0, 0.0]; 5], positive: 2, negative: 0 };
        let model = build_probability_matrix(&spec).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(model.p()[(i, j)], if i == j { 0.0 } else { 1.0 });
            }
        }
        let a = sample_adjacency(&model, 9);
        assert_eq!(a.edges().len(), 10);
    }

    #[test]
    fn rdpg_out_of_range_is_rejected() {
        let spec = ModelSpec::Rdpg { positions: vec![vec![1.2], vec![1.0], vec![0.5]], positive: 1, negative: 0 };
        assert!(matches!(
            build_probability_matrix(&spec),
            Err(Error::OutOfRangeProbability { i: 0, j: 1, .. })
        ));
        // Indefinite signature producing negative entries.
        let spec = ModelSpec::Rdpg {
            positions: vec![vec![0.1, 0.5], vec![0.1, 0.5], vec![0.5, 0.1]],
            positive: 1,
            negative: 1,
        };
        assert!(matches!(build_probability_matrix(&spec), Err(Error::OutOfRangeProbability { .. })));
    }

    #[test]
    fn malformed_membership() {
        let spec = ModelSpec::Sbm {
            membership: Membership::OneHot(vec![vec![1.0, 0.0], vec![1.0, 1.0]]),
            connectivity: vec![vec![0.5, 0.1], vec![0.1, 0.5]],
        };
        assert!(matches!(build_probability_matrix(&spec), Err(Error::MalformedMembership { row: 1 })));
        let ok = ModelSpec::Sbm {
            membership: Membership::OneHot(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]]),
            connectivity: vec![vec![0.5, 0.1], vec![0.1, 0.5]],
        };
        let model = build_probability_matrix(&ok).unwrap();
        assert_eq!(model.p()[(1, 2)], 0.5);
        assert_eq!(model.p()[(0, 1)], 0.1);
    }

    #[test]
    fn dcsbm_product_and_rejection() {
        let spec = ModelSpec::Dcsbm {
            theta: vec![1.0, 0.5, 2.0],
            labels: vec![0, 0, 1],
            connectivity: vec![vec![0.4, 0.2], vec![0.2, 0.4]],
        };
        let model = build_probability_matrix(&spec).unwrap();
        assert!((model.p()[(0, 1)] - 0.2).abs() < 1e-15);
        assert!((model.p()[(1, 2)] - 0.2).abs() < 1e-15);
        let bad = ModelSpec::Dcsbm {
            theta: vec![3.0, 1.0, 1.0],
            labels: vec![0, 0, 1],
            connectivity: vec![vec![0.4, 0.2], vec![0.2, 0.4]],
        };
        assert!(matches!(build_probability_matrix(&bad), Err(Error::OutOfRangeProbability { .. })));
    }

    #[test]
    fn complete_graph_and_determinism() {
        let spec = ModelSpec::two_block(8, 1.0, 1.0);
        let model = build_probability_matrix(&spec).unwrap();
        assert_eq!(sample_adjacency(&model, 3).edges().len(), 28);
        let model = build_probability_matrix(&ModelSpec::two_block(30, 0.4, 0.2)).unwrap();
        let a = sample_adjacency(&model, 42);
        let b = sample_adjacency(&model, 42);
        assert_eq!(a, b);
        assert_eq!(a.seed(), Some(42));
        assert_adjacency_invariants(&a);
    }

    #[test]
    fn edge_frequency_converges() {
        let spec = ModelSpec::sbm(vec![0, 0, 1, 1, 1], vec![vec![0.7, 0.2], vec![0.2, 0.45]]);
        let model = build_probability_matrix(&spec).unwrap();
        let reps = 4000;
        let mut counts = DMatrix::<f64>::zeros(5, 5);
        for seed in 0..reps {
            let a = sample_adjacency(&model, seed);
            assert_adjacency_invariants(&a);
            counts += a.matrix();
        }
        for i in 0..5 {
            for j in 0..5 {
                let pij = model.p()[(i, j)];
                let freq = counts[(i, j)] / reps as f64;
                let tol = 4.0 * (pij * (1.0 - pij) / reps as f64).sqrt();
                assert!((freq - pij).abs() <= tol, "({i},{j}) freq {freq} vs {pij}");
            }
        }
    }

    #[test]
    fn two_block_closed_form() {
        let s = two_block_spectrum(200, 0.3, 0.1).unwrap();
        assert!((s.lambda1 - 39.7).abs() < 1e-12);
        assert!((s.lambda2 - 19.7).abs() < 1e-12);
        assert!((s.lambda_rest + 0.3).abs() < 1e-15);
        assert!((s.gap2 - 20.0).abs() < 1e-12);
        assert!(matches!(two_block_spectrum(7, 0.3, 0.1), Err(Error::OddN(7))));
        let tied = two_block_spectrum(4, 0.4, 0.4).unwrap();
        assert!((tied.lambda2 + 0.4).abs() < 1e-15);
        assert!((tied.lambda2 - tied.lambda_rest).abs() < 1e-15);
    }

    #[test]
    fn two_block_matches_dense_eigensolver() {
        for &(n, p, q) in &[(10, 0.9, 0.2), (24, 0.5, 0.05), (60, 0.33, 0.3), (200, 0.3, 0.1)] {
            let s = two_block_spectrum(n, p, q).unwrap();
            let model = build_probability_matrix(&ModelSpec::two_block(n, p, q)).unwrap();
            let vals = symmetric_eigenvalues(model.p()).unwrap();
            assert!((vals[0] - s.lambda1).abs() < 1e-9);
            assert!((vals[1] - s.lambda2).abs() < 1e-9);
            assert!(vals[2..].iter().all(|v| (v - s.lambda_rest).abs() < 1e-9));
        }
    }

    #[test]
    fn degree_bound_matches_brute_force() {
        let model = build_probability_matrix(&ModelSpec::two_block(200, 0.3, 0.1)).unwrap();
        assert_eq!(expected_degree_bound(&model), 39.7);

        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let positions: Vec<Vec<f64>> =
            (0..30).map(|_| vec![rng.random::<f64>() * 0.7, rng.random::<f64>() * 0.7]).collect();
        let model = build_probability_matrix(&ModelSpec::Rdpg { positions, positive: 2, negative: 0 }).unwrap();
        let d = expected_degree_bound(&model);
        let mut brute = 0.0_f64;
        for i in 0..30 {
            let mut s = 0.0;
            for j in 0..30 {
                if j != i {
                    s += model.p()[(i, j)];
                }
            }
            assert!(d >= s - 1e-12);
            brute = brute.max(s);
        }
        assert!((d - brute).abs() < 1e-12);
        let declared = model.with_envelope(Envelope { d_max: Some(50.0), ..Envelope::default() });
        assert_eq!(expected_degree_bound(&declared), 50.0);
    }

    #[test]
    fn adjacency_validation() {
        assert!(AdjacencyMatrix::from_edges(3, &[(0, 0)]).is_err());
        assert!(AdjacencyMatrix::from_edges(3, &[(0, 3)]).is_err());
        let a = AdjacencyMatrix::from_edges(3, &[(0, 1), (1, 0), (1, 2)]).unwrap();
        assert_eq!(a.edges(), vec![(0, 1), (1, 2)]);
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = 1.0;
        assert!(AdjacencyMatrix::new(m).is_err());
    }

    #[test]
    fn model_document_json() {
        let doc: ModelDocument = serde_json::from_str(
            r#"{"type":"sbm","membership":[0,0,1,1],"connectivity":[[0.5,0.1],[0.1,0.5]],"envelope":{"d_max":2.0}}"#,
        )
        .unwrap();
        assert_eq!(doc.envelope.unwrap().d_max, Some(2.0));
        let model = build_probability_matrix(&doc.spec).unwrap();
        assert_eq!(model.n(), 4);
        let onehot: ModelDocument =
            serde_json::from_str(r#"{"type":"sbm","membership":[[1,0],[0,1]],"connectivity":[[0.5,0.1],[0.1,0.5]]}"#)
                .unwrap();
        assert_eq!(onehot.spec.labels().unwrap(), Some(vec![0, 1]));
    }
}

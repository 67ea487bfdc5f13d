use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::concentration::{check_level, deviation_quantile, operator_deviation, variance_proxy};
use crate::downstream::{
    fair_optimize, filtration_envelope, parity_gap, ridge_risk, ridge_risk_bound, tradeoff_bounds, FairnessProblem,
};
use crate::error::{Error, Result};
use crate::graph::{max_row_sum, sample_adjacency_with, Envelope, ProbabilityModel};
use crate::inference::{
    cluster_region_from, nearest_center_round, perm_hamming_distance, subspace_region_from, top_m_selection,
    CentralityFunctional, CertificateSet, RoundingTarget,
};
use crate::linalg::{
    eigengap, frobenius_subspace_bound, grassmann_distance, procrustes_align, symmetric_eigenvalues, top_k_eigens,
    OrthonormalBasis,
};

/// Slack for inequalities that hold exactly in real arithmetic.
pub const AUDIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    /// `‖A − P‖ ≤ q`.
    Deviation,
    /// `U_⋆` lies in the subspace region.
    Subspace,
    /// `g_⋆` lies in the Hamming ball.
    Cluster,
    /// Every `c_i(P)` lies in its band.
    Centrality,
}

impl Claim {
    pub const ALL: [Claim; 4] = [Claim::Deviation, Claim::Subspace, Claim::Cluster, Claim::Centrality];

    pub fn name(self) -> &'static str {
        match self {
            Claim::Deviation => "deviation",
            Claim::Subspace => "subspace",
            Claim::Cluster => "cluster",
            Claim::Centrality => "centrality",
        }
    }
}

impl FromStr for Claim {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Claim::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown claim {s:?}")))
    }
}

/// Where the certificates come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CertificateMode {
    /// Exact values computed from `P`: `d_max`, `v(P)`, `gap_k(P)`, the
    /// center margin and the eigenvector gap.
    Oracle,
    /// Analyst-declared envelope; the truth is still taken from `P`.
    Declared { envelope: Envelope },
}

/// Parity tolerance and temperature for the fairness audits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessAudit {
    pub tau: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageConfig {
    pub k: usize,
    pub alpha: f64,
    pub mode: CertificateMode,
    pub claims: Vec<Claim>,
    /// Required for the centrality claim and the score-based audits. In
    /// oracle mode an eigenvector `gamma` is replaced by `λ1(P) − λ2(P)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centrality: Option<CentralityFunctional>,
    /// Declared center margin; oracle mode computes it from `P`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_row: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection_m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ridge_lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fairness: Option<FairnessAudit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filtration_grid: Option<Vec<f64>>,
}

impl CoverageConfig {
    /// Oracle mode, all claims, no score functional or downstream audits.
    pub fn new(k: usize, alpha: f64) -> Self {
        Self {
            k,
            alpha,
            mode: CertificateMode::Oracle,
            claims: Claim::ALL.to_vec(),
            centrality: None,
            delta: None,
            c_row: None,
            selection_m: None,
            ridge_lambda: None,
            fairness: None,
            filtration_grid: None,
        }
    }

    fn wants(&self, claim: Claim) -> bool {
        self.claims.contains(&claim)
    }
}

/// Violation count for one per-sample inequality.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Audit {
    pub checked: usize,
    pub violations: usize,
}

impl Audit {
    fn record(&mut self, holds: bool) {
        self.checked += 1;
        self.violations += usize::from(!holds);
    }

    fn merge(&mut self, other: Audit) {
        self.checked += other.checked;
        self.violations += other.violations;
    }
}

/// Per-sample audits of the deterministic inequalities behind each claim.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Audits {
    /// `d_Gr(Û, U_⋆) ≤ 2‖A − P‖/gap_k(P)`.
    pub davis_kahan: Audit,
    /// `min_Q ‖ÛQ − U_⋆‖_F² ≤ 2k·d_Gr(Û, U_⋆)²`.
    pub procrustes: Audit,
    /// Mean-square rounding: `#mislabels·Δ²/4 ≤ Σ_i ‖ũ_i − u_i‖²`, and exact
    /// recovery whenever `max_i ‖ũ_i − u_i‖ < Δ/4`.
    pub rounding: Audit,
    /// Top-`m` of `c(A)` equals top-`m` of `c(P)` when `Γ̂ > 2‖c(A) − c(P)‖∞`.
    pub stability: Audit,
    /// `|R(Û) − R(U_⋆)| ≤ 2‖y‖²·d_Gr/(n(1 + λ))`.
    pub ridge: Audit,
    /// Parity at `c(P)` is at most `ε` for thresholds fitted at `c(A)` with
    /// tolerance `ε − ‖c(A) − c(P)‖∞/τ`.
    pub transfer: Audit,
    /// Loss gap within the `ℓ2` and threshold-shift bounds.
    pub tradeoff: Audit,
    /// Threshold-graph sandwich between `c(A)` and `c(P)`.
    pub filtration: Audit,
    /// `‖c(A) − c(P)‖₂ ≤ 4β√n·‖A − P‖` for Katz.
    pub katz_l2: Audit,
}

impl Audits {
    fn merge(&mut self, o: &Audits) {
        self.davis_kahan.merge(o.davis_kahan);
        self.procrustes.merge(o.procrustes);
        self.rounding.merge(o.rounding);
        self.stability.merge(o.stability);
        self.ridge.merge(o.ridge);
        self.transfer.merge(o.transfer);
        self.tradeoff.merge(o.tradeoff);
        self.filtration.merge(o.filtration);
        self.katz_l2.merge(o.katz_l2);
    }

    pub fn total_violations(&self) -> usize {
        self.named().iter().map(|(_, a)| a.violations).sum()
    }

    pub fn named(&self) -> [(&'static str, Audit); 9] {
        [
            ("davis_kahan", self.davis_kahan),
            ("procrustes", self.procrustes),
            ("rounding", self.rounding),
            ("stability", self.stability),
            ("ridge", self.ridge),
            ("transfer", self.transfer),
            ("tradeoff", self.tradeoff),
            ("filtration", self.filtration),
            ("katz_l2", self.katz_l2),
        ]
    }
}

/// Observed Katz perturbation ratios, recorded next to the stated moduli.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KatzRatios {
    /// `max ‖c(A) − c(P)‖∞ / ‖A − P‖`.
    pub max_inf_ratio: f64,
    /// `max ‖c(A) − c(P)‖₂ / ‖A − P‖`.
    pub max_l2_ratio: f64,
    /// `4β`.
    pub stated_modulus: f64,
    /// `4β√n`.
    pub l2_modulus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimCoverage {
    pub claim: Claim,
    pub evaluated: usize,
    pub hits: usize,
    /// `hits / evaluated`; absent when the claim was refused.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub empirical_coverage: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refusal: Option<String>,
}

/// Certificates and radii shared by every replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageCertificates {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantile: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subspace_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub informative: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamming_radius: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band_half_width: Option<f64>,
    /// True values: `d_max(P)`, `v(P)`, `gap_k(P)`.
    pub true_d_max: f64,
    pub true_variance: f64,
    pub true_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub replications: usize,
    /// Replications in which every evaluated claim held.
    pub hits: usize,
    pub empirical_coverage: f64,
    pub target: f64,
    /// `sqrt(α(1 − α)/R)`.
    pub binomial_sd: f64,
    pub alpha: f64,
    pub base_seed: u64,
    pub mode: CertificateMode,
    pub claims: Vec<ClaimCoverage>,
    pub certificates: CoverageCertificates,
    pub audits: Audits,
    /// Replications whose observed matrix fell outside the functional's domain
    /// (counted as centrality misses).
    pub domain_failures: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub katz_ratios: Option<KatzRatios>,
}

impl CoverageResult {
    pub fn claim(&self, claim: Claim) -> Option<&ClaimCoverage> {
        self.claims.iter().find(|c| c.claim == claim)
    }

    /// `target − 3·binomial_sd`, the acceptance floor for each claim.
    pub fn floor(&self) -> f64 {
        self.target - 3.0 * self.binomial_sd
    }

    /// One row per claim plus a joint row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("claim,evaluated,hits,empirical_coverage,target,binomial_sd\n");
        let cov = |c: Option<f64>| c.map_or(String::new(), |v| format!("{v}"));
        for c in &self.claims {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                c.claim.name(),
                c.evaluated,
                c.hits,
                cov(c.empirical_coverage),
                self.target,
                self.binomial_sd
            );
        }
        let _ = writeln!(
            out,
            "joint,{},{},{},{},{}",
            self.replications, self.hits, self.empirical_coverage, self.target, self.binomial_sd
        );
        out
    }
}

/// Ground truth and the certificates derived once per experiment.
struct Setup {
    n: usize,
    k: usize,
    alpha: f64,
    q: Option<f64>,
    true_gap: f64,
    u_star: Option<OrthonormalBasis>,
    certs: Option<CertificateSet>,
    labels: Option<Vec<usize>>,
    centers: Option<DMatrix<f64>>,
    delta: Option<f64>,
    functional: Option<CentralityFunctional>,
    c_true: Option<DVector<f64>>,
    modulus: Option<f64>,
    refusals: [Option<String>; 4],
}

fn claim_index(c: Claim) -> usize {
    match c {
        Claim::Deviation => 0,
        Claim::Subspace => 1,
        Claim::Cluster => 2,
        Claim::Centrality => 3,
    }
}

/// Rows of `U_⋆` at the first member of each block; `None` when blocks are
/// missing or two centers coincide.
fn population_centers(u: &OrthonormalBasis, labels: &[usize]) -> Option<(DMatrix<f64>, f64)> {
    let blocks = labels.iter().max()? + 1;
    let first: Vec<usize> = (0..blocks).map(|a| labels.iter().position(|&l| l == a)).collect::<Option<_>>()?;
    let centers = DMatrix::from_fn(blocks, u.k(), |a, j| u.matrix()[(first[a], j)]);
    let mut delta = f64::INFINITY;
    for a in 0..blocks {
        for b in (a + 1)..blocks {
            delta = delta.min((centers.row(a) - centers.row(b)).norm());
        }
    }
    (delta > 0.0).then_some((centers, delta))
}

fn setup(model: &ProbabilityModel, config: &CoverageConfig) -> Result<Setup> {
    let p = model.p();
    let n = model.n();
    let k = config.k;
    check_level(config.alpha)?;
    if k == 0 || k >= n {
        return Err(Error::KOutOfRange { k, max: n - 1 });
    }
    if config.claims.is_empty() {
        return Err(Error::InvalidInput("no claims selected".into()));
    }

    let true_gap = eigengap(&symmetric_eigenvalues(p)?, k)?;
    let u_star = if true_gap > 0.0 { Some(top_k_eigens(p, k)?.0) } else { None };
    let mut refusals: [Option<String>; 4] = Default::default();

    let (d_max, v_bound, gap) = match &config.mode {
        CertificateMode::Oracle => (Some(max_row_sum(p)), Some(variance_proxy(p).v), Some(true_gap)),
        CertificateMode::Declared { envelope } => (envelope.d_max, envelope.variance_bound.or(envelope.d_max), envelope.gap),
    };
    let q = match v_bound {
        Some(v) => Some(deviation_quantile(v, n, config.alpha)?.q),
        None => {
            refusals[0] = Some("no degree envelope".into());
            None
        }
    };
    let certs = match (d_max, gap) {
        (Some(d), Some(g)) if g > 0.0 => {
            let c = CertificateSet::new(d, g);
            Some(match v_bound {
                Some(v) if v != d => c.with_variance_bound(v),
                _ => c,
            })
        }
        (None, _) => None,
        (Some(_), _) => None,
    };
    if certs.is_none() {
        refusals[1] = Some(match (d_max, gap) {
            (None, _) => "no degree envelope".into(),
            (_, Some(g)) if g <= 0.0 => format!("gap certificate {g} is not positive"),
            _ => "no gap certificate".into(),
        });
    }
    if u_star.is_none() && refusals[1].is_none() {
        refusals[1] = Some("population gap is zero; the target subspace is not identified".into());
    }

    let labels = model.spec().labels()?;
    let pop = match (&u_star, &labels) {
        (Some(u), Some(l)) => population_centers(u, l),
        _ => None,
    };
    let delta = match &config.mode {
        CertificateMode::Oracle => pop.as_ref().map(|(_, d)| *d),
        CertificateMode::Declared { .. } => config.delta,
    };
    refusals[2] = refusals[1].clone().or_else(|| match (&labels, &pop, delta) {
        (None, _, _) => Some("model has no ground-truth labels".into()),
        (_, None, _) => Some("population centers are not distinct".into()),
        (_, _, None) => Some("no center margin".into()),
        (_, _, Some(d)) if d <= 0.0 => Some(format!("margin {d} is not positive")),
        _ => None,
    });

    let mut functional = config.centrality;
    let mut c_true = None;
    let mut modulus = None;
    match functional.as_mut() {
        None => refusals[3] = Some("no centrality functional".into()),
        Some(f) => {
            if let (CentralityFunctional::Eigenvector { gamma }, CertificateMode::Oracle) = (&mut *f, &config.mode) {
                let values = symmetric_eigenvalues(p)?;
                *gamma = values[0] - values[1];
            }
            match (f.evaluate(p), f.modulus()) {
                (Ok(c), Ok(l)) => {
                    c_true = Some(c);
                    modulus = Some(l);
                }
                (Err(e), _) | (_, Err(e)) => refusals[3] = Some(format!("population outside the domain: {e}")),
            }
            if q.is_none() && refusals[3].is_none() {
                refusals[3] = Some("no degree envelope".into());
            }
        }
    }

    Ok(Setup {
        n,
        k,
        alpha: config.alpha,
        q,
        true_gap,
        u_star,
        certs,
        labels,
        centers: pop.map(|(c, _)| c),
        delta,
        functional,
        c_true,
        modulus,
        refusals,
    })
}

#[derive(Debug, Default)]
struct RepOutcome {
    hits: [Option<bool>; 4],
    audits: Audits,
    domain_failure: bool,
    katz_ratio: Option<(f64, f64)>,
    hamming_radius: Option<usize>,
}

fn sup_norm(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax()
}

fn replicate(model: &ProbabilityModel, config: &CoverageConfig, s: &Setup, base_seed: u64, rep: u64) -> Result<RepOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(rep);
    let a = sample_adjacency_with(model, &mut rng);
    let p = model.p();
    let n = s.n;
    let mut out = RepOutcome::default();
    let dev = operator_deviation(a.matrix(), p)?;

    if let Some(q) = s.q.filter(|_| config.wants(Claim::Deviation)) {
        out.hits[0] = Some(dev <= q);
    }

    let need_basis = config.wants(Claim::Subspace) || config.wants(Claim::Cluster) || config.ridge_lambda.is_some();
    if let (true, Some(u_star)) = (need_basis, &s.u_star) {
        let u_hat = top_k_eigens(a.matrix(), s.k)?.0;
        let d_gr = grassmann_distance(&u_hat, u_star)?;
        out.audits.davis_kahan.record(d_gr <= 2.0 * dev / s.true_gap + AUDIT_TOL);
        let alignment = procrustes_align(&u_hat, u_star)?;
        out.audits
            .procrustes
            .record(alignment.residual.powi(2) <= frobenius_subspace_bound(d_gr, s.k) + AUDIT_TOL);

        if let Some(lambda) = config.ridge_lambda {
            let y = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let diff = (ridge_risk(&u_hat, &y, lambda)? - ridge_risk(u_star, &y, lambda)?).abs();
            out.audits.ridge.record(diff <= ridge_risk_bound(&y, lambda, d_gr, n)? + AUDIT_TOL);
        }

        if let (Some(labels), Some(centers), Some(delta)) = (&s.labels, &s.centers, s.delta) {
            let rows = alignment.aligned.matrix();
            let g_hat = nearest_center_round(rows, centers)?;
            let errs: Vec<f64> = (0..n).map(|i| (rows.row(i) - centers.row(labels[i])).norm_squared()).collect();
            let mislabels = g_hat.iter().zip(labels).filter(|(a, b)| a != b).count();
            let mean_square = mislabels as f64 * delta * delta / 4.0 <= errs.iter().sum::<f64>() + AUDIT_TOL;
            let uniform = errs.iter().fold(0.0_f64, |m, &e| m.max(e)).sqrt() >= delta / 4.0 || mislabels == 0;
            out.audits.rounding.record(mean_square && uniform);
        }

        if let Some(certs) = s.certs {
            let region = subspace_region_from(u_hat, certs, s.alpha)?;
            if config.wants(Claim::Subspace) {
                out.hits[1] = Some(grassmann_distance(u_star, &region.center)? <= region.radius);
            }
            if config.wants(Claim::Cluster) && s.refusals[2].is_none() {
                let (labels, centers, delta) = (s.labels.as_ref().unwrap(), s.centers.clone().unwrap(), s.delta.unwrap());
                let target = RoundingTarget::Reference { basis: u_star.clone(), centers };
                let cr = cluster_region_from(&region, delta, &target, config.c_row)?;
                out.hamming_radius = Some(cr.hamming_radius);
                out.hits[2] = Some(perm_hamming_distance(&cr.labels, labels)? <= cr.hamming_radius);
            }
        }
    }

    if let (Some(f), Some(c_true), Some(l), Some(q)) = (s.functional, &s.c_true, s.modulus, s.q) {
        let wanted = config.wants(Claim::Centrality);
        match f.evaluate(a.matrix()) {
            Err(_) => {
                out.domain_failure = true;
                if wanted {
                    out.hits[3] = Some(false);
                }
            }
            Ok(c_hat) => {
                if wanted {
                    out.hits[3] = Some(sup_norm(&c_hat, c_true) <= l * q);
                }
                score_audits(config, s, &c_hat, c_true, &mut rng, &mut out.audits)?;
                if let CentralityFunctional::Katz { beta } = f {
                    if dev > 0.0 {
                        let l2 = (&c_hat - c_true).norm();
                        out.audits.katz_l2.record(l2 <= 4.0 * beta * (n as f64).sqrt() * dev * (1.0 + AUDIT_TOL) + AUDIT_TOL);
                        out.katz_ratio = Some((sup_norm(&c_hat, c_true) / dev, l2 / dev));
                    }
                }
            }
        }
    }
    Ok(out)
}

fn score_audits(
    config: &CoverageConfig,
    s: &Setup,
    c_hat: &DVector<f64>,
    c_true: &DVector<f64>,
    rng: &mut ChaCha8Rng,
    audits: &mut Audits,
) -> Result<()> {
    let n = s.n;
    let eta = sup_norm(c_hat, c_true);
    let x_hat: Vec<f64> = c_hat.iter().copied().collect();
    let x: Vec<f64> = c_true.iter().copied().collect();

    if let Some(m) = config.selection_m {
        let sel = top_m_selection(&x_hat, m)?;
        if sel.margin.is_some_and(|g| g > 2.0 * eta + AUDIT_TOL) {
            let truth = top_m_selection(&x, m)?;
            audits.stability.record(truth.unique_set() == sel.unique_set());
        }
    }

    if let Some(fa) = config.fairness {
        let slack = eta / fa.tau;
        if fa.epsilon >= slack {
            let groups: Vec<u8> = match &s.labels {
                Some(l) if l.iter().any(|&g| g % 2 == 0) && l.iter().any(|&g| g % 2 == 1) => {
                    l.iter().map(|&g| (g % 2) as u8).collect()
                }
                _ => (0..n).map(|i| (i % 2) as u8).collect(),
            };
            let y: Vec<f64> = (0..n).map(|_| f64::from(u8::from(rng.random::<f64>() < 0.5))).collect();
            let problem = FairnessProblem::new(x_hat.clone(), y, groups, fa.tau, fa.epsilon)?;
            let opt = fair_optimize(&problem, fa.epsilon - slack)?;
            let at_truth = parity_gap(&problem.decisions_at(&x, opt.theta_fair), &problem.s)?;
            audits.transfer.record(at_truth <= fa.epsilon + AUDIT_TOL);
            if !opt.used_witness {
                let d_fair = problem.decisions_at(&x_hat, opt.theta_fair);
                let d_un = problem.decisions_at(&x_hat, opt.theta_un);
                let shift = (0..2).map(|g| (opt.theta_fair[g] - opt.theta_un[g]).abs()).fold(0.0, f64::max);
                let t = tradeoff_bounds(&d_fair, &d_un, &problem.y, fa.tau, shift)?;
                let gap = t.loss_gap.abs();
                audits.tradeoff.record(gap <= t.bound_l2 + AUDIT_TOL && gap <= t.bound_shift + AUDIT_TOL);
            }
        }
    }

    let grid = match &config.filtration_grid {
        Some(g) => g.clone(),
        None => {
            let spread = x_hat.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
                - x_hat.iter().fold(f64::INFINITY, |m, &v| m.min(v));
            (0..=10).map(|i| spread * i as f64 / 10.0).collect()
        }
    };
    let xm = DMatrix::from_column_slice(n, 1, &x_hat);
    let ym = DMatrix::from_column_slice(n, 1, &x);
    audits.filtration.record(filtration_envelope(&xm, &ym, &grid)?.all_hold());
    Ok(())
}

/// Samples `replications` graphs from `model` (stream `r` of a ChaCha8
/// generator seeded with `base_seed` for replication `r`) and scores every
/// requested claim against the truth computed from `P`. Results do not
/// depend on the thread count.
pub fn coverage_experiment(
    model: &ProbabilityModel,
    config: &CoverageConfig,
    replications: usize,
    base_seed: u64,
) -> Result<CoverageResult> {
    if replications == 0 {
        return Err(Error::InvalidInput("at least one replication is required".into()));
    }
    let s = setup(model, config)?;
    let outcomes: Vec<RepOutcome> = (0..replications as u64)
        .into_par_iter()
        .map(|rep| replicate(model, config, &s, base_seed, rep))
        .collect::<Result<_>>()?;

    let mut audits = Audits::default();
    let mut evaluated = [0usize; 4];
    let mut hits = [0usize; 4];
    let mut joint = 0;
    let mut domain_failures = 0;
    let mut ratios: Option<(f64, f64)> = None;
    let mut hamming_radius = None;
    for o in &outcomes {
        audits.merge(&o.audits);
        for (i, h) in o.hits.iter().enumerate() {
            if let Some(h) = h {
                evaluated[i] += 1;
                hits[i] += usize::from(*h);
            }
        }
        joint += usize::from(o.hits.iter().all(|h| h.unwrap_or(true)));
        domain_failures += usize::from(o.domain_failure);
        if let Some((inf, l2)) = o.katz_ratio {
            let (a, b) = ratios.unwrap_or((0.0, 0.0));
            ratios = Some((a.max(inf), b.max(l2)));
        }
        hamming_radius = hamming_radius.or(o.hamming_radius);
    }

    let claims = Claim::ALL
        .into_iter()
        .filter(|c| config.wants(*c))
        .map(|c| {
            let i = claim_index(c);
            ClaimCoverage {
                claim: c,
                evaluated: evaluated[i],
                hits: hits[i],
                empirical_coverage: (evaluated[i] > 0).then(|| hits[i] as f64 / evaluated[i] as f64),
                refusal: s.refusals[i].clone(),
            }
        })
        .collect();

    let region = s.certs.map(|c| (c, 2.0 * s.q.unwrap_or(f64::NAN) / c.gap));
    let katz_ratios = match (s.functional, ratios) {
        (Some(CentralityFunctional::Katz { beta }), Some((inf, l2))) => Some(KatzRatios {
            max_inf_ratio: inf,
            max_l2_ratio: l2,
            stated_modulus: 4.0 * beta,
            l2_modulus: 4.0 * beta * (s.n as f64).sqrt(),
        }),
        _ => None,
    };
    let r = replications as f64;
    Ok(CoverageResult {
        replications,
        hits: joint,
        empirical_coverage: joint as f64 / r,
        target: 1.0 - config.alpha,
        binomial_sd: (config.alpha * (1.0 - config.alpha) / r).sqrt(),
        alpha: config.alpha,
        base_seed,
        mode: config.mode.clone(),
        claims,
        certificates: CoverageCertificates {
            quantile: s.q,
            d_max: s.certs.map(|c| c.d_max),
            variance_bound: s.certs.map(|c| c.v_bound()),
            gap: s.certs.map(|c| c.gap),
            subspace_radius: region.map(|(_, r)| r),
            informative: region.map(|(_, r)| r < 1.0),
            margin: s.delta,
            hamming_radius,
            band_half_width: s.modulus.zip(s.q).map(|(l, q)| l * q),
            true_d_max: max_row_sum(model.p()),
            true_variance: variance_proxy(model.p()).v,
            true_gap: s.true_gap,
        },
        audits,
        domain_failures,
        katz_ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_probability_matrix, ModelSpec};

    fn worked_config(alpha: f64) -> CoverageConfig {
        let mut c = CoverageConfig::new(2, alpha);
        c.centrality = Some(CentralityFunctional::Katz { beta: 5.0 / 794.0 });
        c.selection_m = Some(10);
        c.ridge_lambda = Some(0.5);
        c
    }

    #[test]
    fn degenerate_model_covers_trivially() {
        let model = build_probability_matrix(&ModelSpec::two_block(40, 0.0, 0.0)).unwrap();
        let res = coverage_experiment(&model, &worked_config(0.1), 20, 3).unwrap();
        assert_eq!(res.claim(Claim::Deviation).unwrap().empirical_coverage, Some(1.0));
        assert_eq!(res.claim(Claim::Centrality).unwrap().empirical_coverage, Some(1.0));
        assert!(res.claim(Claim::Subspace).unwrap().refusal.is_some());
        assert!(res.claim(Claim::Cluster).unwrap().refusal.is_some());
        assert_eq!(res.empirical_coverage, 1.0);
        assert_eq!(res.audits.total_violations(), 0);
    }

    #[test]
    fn small_run_is_reproducible_and_audited() {
        let model = build_probability_matrix(&ModelSpec::two_block(60, 0.5, 0.1)).unwrap();
        let mut config = worked_config(0.2);
        config.fairness = Some(FairnessAudit { tau: 1.0, epsilon: 0.5 });
        let a = coverage_experiment(&model, &config, 16, 11).unwrap();
        let b = coverage_experiment(&model, &config, 16, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, coverage_experiment(&model, &config, 16, 12).unwrap());
        assert!(a.hits <= a.replications);
        assert_eq!(a.empirical_coverage, a.hits as f64 / a.replications as f64);
        assert_eq!(a.audits.total_violations(), 0);
        assert_eq!(a.audits.davis_kahan.checked, 16);
        assert_eq!(a.audits.filtration.checked, 16);
        assert!(a.audits.transfer.checked > 0);
        assert!(a.katz_ratios.is_some());
        assert!(a.to_csv().lines().count() == 6);
    }

    #[test]
    fn declared_mode_uses_envelope() {
        let model = build_probability_matrix(&ModelSpec::two_block(60, 0.5, 0.1)).unwrap();
        let mut config = CoverageConfig::new(2, 0.1);
        config.mode = CertificateMode::Declared {
            envelope: Envelope { d_max: Some(100.0), gap: Some(10.0), variance_bound: None },
        };
        config.delta = Some(0.1);
        let res = coverage_experiment(&model, &config, 8, 1).unwrap();
        assert_eq!(res.certificates.d_max, Some(100.0));
        assert!(res.claim(Claim::Cluster).unwrap().refusal.is_none());
        assert_eq!(res.claim(Claim::Deviation).unwrap().empirical_coverage, Some(1.0));

        config.mode = CertificateMode::Declared { envelope: Envelope::default() };
        let res = coverage_experiment(&model, &config, 4, 1).unwrap();
        assert!(res.claims.iter().all(|c| c.evaluated == 0 && c.refusal.is_some()));
    }

    #[test]
    fn claim_filter_and_errors() {
        let model = build_probability_matrix(&ModelSpec::two_block(30, 0.5, 0.1)).unwrap();
        let mut config = CoverageConfig::new(2, 0.1);
        config.claims = vec![Claim::Deviation];
        let res = coverage_experiment(&model, &config, 5, 0).unwrap();
        assert_eq!(res.claims.len(), 1);
        assert_eq!(res.audits.davis_kahan.checked, 0);
        assert!(coverage_experiment(&model, &config, 0, 0).is_err());
        config.alpha = 1.5;
        assert!(matches!(coverage_experiment(&model, &config, 5, 0), Err(Error::BadLevel(_))));
        assert_eq!("cluster".parse::<Claim>().unwrap(), Claim::Cluster);
        assert!("bogus".parse::<Claim>().is_err());
    }
}

use nalgebra::DMatrix;

use super::config::{CentralityConfig, ProtocolConfig};
use super::gap::{parametric_gap_certificate, usvt_denoise};
use super::report::{
    DiagnosticReport, Diagnostics, FairnessOutput, FiltrationOutput, Flag, GapProxy, OutputKind, Outputs, Refusal,
    RefusalReason, SubspaceOutput, UsvtDiagnostic, REPORT_SCHEMA,
};
use crate::concentration::{deviation_quantile, DeviationQuantile};
use crate::downstream::{
    band_envelope, fair_optimize, feasibility_transfer_check, logistic_decisions, tradeoff_bounds, FairnessProblem,
};
use crate::error::{Error, Result};
use crate::graph::{build_probability_matrix, AdjacencyMatrix, ProbabilityModel};
use crate::inference::{
    centrality_bands, cluster_region_from, eigenvector_centrality, eigenvector_modulus, katz_centrality, katz_modulus,
    stability_certificate, subspace_region_from, CentralityBand, CentralityFunctional, CertificateSet, RoundingTarget,
    SubspaceRegion,
};
use crate::linalg::{eigengap, spectral_norm_symmetric, symmetric_eigenvalues, top_k_eigens, weyl_gap_certificate};

struct Refusals(Vec<Refusal>);

impl Refusals {
    fn push(&mut self, output: OutputKind, reason: RefusalReason, detail: impl Into<String>) {
        self.0.push(Refusal { output, reason, detail: detail.into() });
    }
}

/// Runs the gated pipeline on one observed graph.
///
/// Steps: spectral objects and the observed gap proxy; the deviation quantile
/// from the degree envelope (D1); a gap certificate (D2) from a parametric
/// spec, a declared value or USVT with a declared `eps_p`, in that order; the
/// subspace region; centrality bands behind the domain certificate (D3) and
/// the stability certificate; fairness; the cluster region behind a declared
/// margin (D4); the filtration envelope. Every output that is not produced is
/// listed as a refusal with its reason.
pub fn run_protocol(a: &AdjacencyMatrix, config: &ProtocolConfig) -> Result<DiagnosticReport> {
    let n = a.n();
    config.validate(n)?;
    let k = config.k;
    let (center, summary) = top_k_eigens(a.matrix(), k)?;
    let proxy = GapProxy { value: summary.gap_k, diagnostic_only: true };
    let parametric = config.parametric_spec.as_ref().map(build_probability_matrix).transpose()?;

    let d1 = degree_flag(config, parametric.as_ref());
    let quantile = match d1.value {
        Some(d_max) if d1.passed => {
            Some(deviation_quantile(config.envelope.variance_bound.unwrap_or(d_max), n, config.alpha)?)
        }
        _ => None,
    };

    let usvt = match &config.usvt {
        Some(u) => {
            let est = usvt_denoise(a, u.threshold_scale)?;
            let gap_hat = eigengap(&symmetric_eigenvalues(&est.p_hat)?, k)?;
            let residual_norm = spectral_norm_symmetric(&(a.matrix() - &est.p_hat))?;
            Some(UsvtDiagnostic {
                threshold_scale: u.threshold_scale,
                threshold: est.threshold,
                rank: est.rank,
                gap_hat,
                residual_norm,
                eps_p: u.eps_p,
            })
        }
        None => None,
    };
    let d2 = gap_flag(config, usvt.as_ref())?;

    let mut refusals = Refusals(Vec::new());
    let mut outputs = Outputs::default();

    let region = match (&quantile, d1.passed, d2.passed) {
        (Some(_), true, true) => {
            let certs = CertificateSet {
                d_max: d1.value.expect("passed D1 carries d_max"),
                variance_bound: config.envelope.variance_bound,
                gap: d2.value.expect("passed D2 carries the gap"),
            };
            Some(subspace_region_from(center.clone(), certs, config.alpha)?)
        }
        _ => None,
    };
    match &region {
        Some(r) => outputs.subspace_region = Some(subspace_output(r)),
        None => refuse_spine(&mut refusals, OutputKind::SubspaceRegion, &d1, &d2),
    }

    let (d3, observed_scores) = domain_flag(config, a, parametric.as_ref(), d1.value)?;
    let bands = match (&quantile, &observed_scores, &config.centrality) {
        (Some(q), Some((functional, scores)), Some(_)) if d3.passed => {
            let l = d3.value.expect("passed D3 carries the modulus");
            Some(centrality_bands(scores, l, q.q, config.alpha, *functional)?.with_domain_certified(true))
        }
        _ => None,
    };
    match &bands {
        Some(b) => outputs.centrality_bands = Some(b.clone()),
        None => refuse_bands(&mut refusals, OutputKind::CentralityBands, config.centrality.is_some(), &d1, &d3),
    }

    match (&bands, &config.selection) {
        (Some(b), Some(sel)) => {
            let l = d3.value.expect("bands imply D3");
            let q = quantile.as_ref().expect("bands imply D1").q;
            outputs.stability = Some(stability_certificate(&b.point, sel.m, l, q)?);
        }
        (None, Some(_)) => refuse_bands(&mut refusals, OutputKind::Stability, config.centrality.is_some(), &d1, &d3),
        (_, None) => refusals.push(OutputKind::Stability, RefusalReason::NotRequested, "no selection size m declared"),
    }

    match (&bands, &config.fairness) {
        (Some(b), Some(f)) => {
            let r = b.half_width;
            let slack = r / f.tau;
            if f.tau > 0.0 && f.epsilon < slack {
                refusals.push(
                    OutputKind::Fairness,
                    RefusalReason::InsufficientTolerance,
                    format!("parity tolerance {} is below the transfer slack r/tau = {}", f.epsilon, slack),
                );
            } else {
                outputs.fairness = Some(fairness_output(b, f.y.clone(), f.s.clone(), f.tau, f.epsilon)?);
            }
        }
        (None, Some(_)) => refuse_bands(&mut refusals, OutputKind::Fairness, config.centrality.is_some(), &d1, &d3),
        (_, None) => refusals.push(OutputKind::Fairness, RefusalReason::NotRequested, "no fairness inputs declared"),
    }

    let d4 = match config.clustering.as_ref().and_then(|c| c.delta) {
        Some(delta) if delta > 0.0 => Flag::pass("declared margin", Some(delta)),
        Some(delta) => Flag::fail(format!("declared margin {delta} is not positive")),
        None => Flag::fail("no cluster margin declared"),
    };
    match (&region, d4.passed) {
        (Some(r), true) => {
            let c = config.clustering.as_ref().expect("D4 implies a clustering block");
            let target = match &c.centers {
                Some(rows) => RoundingTarget::DeclaredCenters { centers: rows_to_matrix(rows, k)?, seed: c.seed },
                None => RoundingTarget::KMeans { clusters: c.clusters.unwrap_or(k), seed: c.seed },
            };
            outputs.cluster_region = Some(cluster_region_from(r, d4.value.expect("D4 value"), &target, c.c_row)?);
        }
        (None, _) => refuse_spine(&mut refusals, OutputKind::ClusterRegion, &d1, &d2),
        (Some(_), false) => refusals.push(OutputKind::ClusterRegion, RefusalReason::NoClusterMargin, d4.provenance.clone()),
    }

    match (&region, &config.filtration, config.c_row_for_filtration()) {
        (_, None, _) => refusals.push(OutputKind::Filtration, RefusalReason::NotRequested, "no threshold grid declared"),
        (None, Some(_), _) => refuse_spine(&mut refusals, OutputKind::Filtration, &d1, &d2),
        (Some(_), Some(_), None) => refusals.push(
            OutputKind::Filtration,
            RefusalReason::MissingRowwiseConstant,
            "a rowwise constant c_row is needed to turn the subspace radius into a row band",
        ),
        (Some(r), Some(f), Some(c_row)) => {
            let eta = c_row * r.radius;
            outputs.filtration =
                Some(FiltrationOutput { c_row, envelope: band_envelope(r.center.matrix(), eta, &f.t_grid)? });
        }
    }

    Ok(DiagnosticReport {
        schema: REPORT_SCHEMA.to_string(),
        n,
        k,
        alpha: config.alpha,
        observed_gap_proxy: proxy,
        diagnostics: Diagnostics {
            d1_degree_envelope: d1,
            d2_gap_certificate: d2,
            d3_centrality_domain: d3,
            d4_cluster_margin: d4,
        },
        outputs,
        refusals: refusals.0,
        usvt,
    })
}

fn degree_flag(config: &ProtocolConfig, parametric: Option<&ProbabilityModel>) -> Flag {
    if let Some(d) = config.envelope.d_max {
        return Flag::pass("declared envelope", Some(d));
    }
    if let Some(model) = parametric {
        return Flag::pass("parametric spec (max expected degree)", Some(crate::graph::max_row_sum(model.p())));
    }
    Flag::fail("no expected-degree envelope declared")
}

fn gap_flag(config: &ProtocolConfig, usvt: Option<&UsvtDiagnostic>) -> Result<Flag> {
    let mut notes = Vec::new();
    if let Some(spec) = &config.parametric_spec {
        match parametric_gap_certificate(spec, config.k) {
            Ok(g) if g > 0.0 => return Ok(Flag::pass("parametric spec", Some(g))),
            Ok(g) => return Ok(Flag::fail(format!("no gap certificate: parametric gap_k(P) = {g} (eigenvalue collision)"))),
            Err(Error::UnsupportedSpec(msg)) => notes.push(msg),
            Err(e) => return Err(e),
        }
    }
    if let Some(g) = config.envelope.gap {
        return Ok(if g > 0.0 {
            Flag::pass("declared envelope", Some(g))
        } else {
            Flag::fail(format!("no gap certificate: declared gap {g} is not positive"))
        });
    }
    if let Some(u) = usvt {
        if let Some(eps) = u.eps_p {
            let g = weyl_gap_certificate(u.gap_hat, eps);
            return Ok(if g > 0.0 {
                Flag::pass(format!("USVT estimate with declared eps_p = {eps}"), Some(g))
            } else {
                Flag::fail(format!("no gap certificate: USVT gap {} minus 2·eps_p is not positive", u.gap_hat))
            });
        }
        notes.push("USVT present but eps_p not declared".into());
    }
    let mut reason = String::from("no gap certificate");
    if !notes.is_empty() {
        reason.push_str(": ");
        reason.push_str(&notes.join("; "));
    }
    Ok(Flag::fail(reason))
}

type ObservedScores = Option<(CentralityFunctional, nalgebra::DVector<f64>)>;

/// D3 and, when it passes, the centrality of the observed graph. The flag's
/// value is the modulus `L`.
fn domain_flag(
    config: &ProtocolConfig,
    a: &AdjacencyMatrix,
    parametric: Option<&ProbabilityModel>,
    d_max: Option<f64>,
) -> Result<(Flag, ObservedScores)> {
    match config.centrality {
        None => Ok((Flag::fail("no centrality functional declared"), None)),
        Some(CentralityConfig::Katz { beta, domain_declared }) => {
            let l = katz_modulus(beta)?;
            let limit = 1.0 / (2.0 * beta);
            let provenance = if domain_declared {
                Some("declared domain".to_string())
            } else if let Some(model) = parametric {
                let rho = spectral_norm_symmetric(model.p())?;
                (rho <= limit).then(|| format!("parametric spectral radius {rho} ≤ 1/(2β)"))
            } else {
                d_max.filter(|&d| d <= limit).map(|d| format!("spectral radius ≤ d_max = {d} ≤ 1/(2β)"))
            };
            let Some(provenance) = provenance else {
                return Ok((Flag::fail("Katz domain ρ(P) ≤ 1/(2β) not certified"), None));
            };
            match katz_centrality(a.matrix(), beta) {
                Ok(scores) => Ok((Flag::pass(provenance, Some(l)), Some((CentralityFunctional::Katz { beta }, scores)))),
                Err(Error::OutsideDomain { rho, limit }) => Ok((
                    Flag::fail(format!("observed graph outside Katz domain: ρ(A) = {rho} > {limit}")),
                    None,
                )),
                Err(e) => Err(e),
            }
        }
        Some(CentralityConfig::Eigenvector { gamma }) => {
            let certified = match (gamma, parametric) {
                (Some(g), _) => Some((g, "declared gap".to_string())),
                (None, Some(model)) => {
                    let values = symmetric_eigenvalues(model.p())?;
                    Some((values[0] - values[1], "parametric top gap".to_string()))
                }
                (None, None) => None,
            };
            let Some((g, provenance)) = certified else {
                return Ok((Flag::fail("no top-eigenvalue gap γ certified"), None));
            };
            if !(g > 0.0) {
                return Ok((Flag::fail(format!("certified top gap γ = {g} is not positive")), None));
            }
            match eigenvector_centrality(a.matrix()) {
                Ok(ev) => Ok((
                    Flag::pass(provenance, Some(eigenvector_modulus(g)?)),
                    Some((CentralityFunctional::Eigenvector { gamma: g }, ev.scores)),
                )),
                Err(Error::DegenerateTopEigenvalue(obs)) => Ok((
                    Flag::fail(format!("observed top eigenvalue not simple (gap {obs})")),
                    None,
                )),
                Err(e) => Err(e),
            }
        }
    }
}

fn refuse_spine(refusals: &mut Refusals, output: OutputKind, d1: &Flag, d2: &Flag) {
    if !d1.passed {
        refusals.push(output, RefusalReason::NoDegreeEnvelope, d1.provenance.clone());
    } else if !d2.passed {
        refusals.push(output, RefusalReason::NoGapCertificate, d2.provenance.clone());
    }
}

fn refuse_bands(refusals: &mut Refusals, output: OutputKind, requested: bool, d1: &Flag, d3: &Flag) {
    if !requested {
        refusals.push(output, RefusalReason::NotRequested, "no centrality functional declared");
    } else if !d1.passed {
        refusals.push(output, RefusalReason::NoDegreeEnvelope, d1.provenance.clone());
    } else if d3.provenance.starts_with("observed") {
        refusals.push(output, RefusalReason::ObservedOutsideDomain, d3.provenance.clone());
    } else {
        refusals.push(output, RefusalReason::NoDomainCertificate, d3.provenance.clone());
    }
}

fn subspace_output(r: &SubspaceRegion) -> SubspaceOutput {
    SubspaceOutput {
        radius: r.radius,
        alpha: r.alpha,
        informative: r.informative,
        quantile: r.quantile,
        certificates: r.certificates,
        center: (0..r.center.n()).map(|i| r.center.row(i)).collect(),
    }
}

fn fairness_output(band: &CentralityBand, y: Vec<f64>, s: Vec<u8>, tau: f64, epsilon: f64) -> Result<FairnessOutput> {
    let r = band.half_width;
    let problem = FairnessProblem::new(band.point.clone(), y, s, tau, epsilon)?;
    let effective_epsilon = epsilon - r / tau;
    let optimum = fair_optimize(&problem, effective_epsilon)?;
    let transfer = feasibility_transfer_check(optimum.theta_fair, &problem.x, &problem.s, r, tau, epsilon)?;
    let d_fair = logistic_decisions(&problem, optimum.theta_fair);
    let d_un = logistic_decisions(&problem, optimum.theta_un);
    let shift = (0..2).map(|g| (optimum.theta_fair[g] - optimum.theta_un[g]).abs()).fold(0.0, f64::max);
    let tradeoff = tradeoff_bounds(&d_fair, &d_un, &problem.y, tau, shift)?;
    Ok(FairnessOutput { band_radius: r, effective_epsilon, optimum, transfer, tradeoff })
}

fn rows_to_matrix(rows: &[Vec<f64>], k: usize) -> Result<DMatrix<f64>> {
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::shape(format!("rows of length {k}"), "ragged rows"));
    }
    Ok(DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]))
}

/// Quantile used by a report, recomputed from its certificates alone.
pub fn recompute_quantile(report: &DiagnosticReport) -> Option<DeviationQuantile> {
    let s = report.outputs.subspace_region.as_ref()?;
    deviation_quantile(s.certificates.v_bound(), report.n, report.alpha).ok()
}

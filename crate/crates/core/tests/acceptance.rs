//! Acceptance criteria, one line per criterion. Run with
//! `cargo test --test acceptance`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use common::{Toggles, BETA, N, P, Q};
use graphcert::concentration::{deviation_quantile, variance_proxy};
use graphcert::downstream::{
    band_envelope, component_count_at, distance_matrix, edge_count_at, feasibility_transfer_check, filtration_envelope,
    parity_gap, ridge_risk, ridge_risk_bound, surrogate_loss, tradeoff_bounds,
};
use graphcert::inference::{
    cluster_region_from, katz_centrality, katz_modulus, nearest_center_round, perm_hamming_distance, stability_certificate,
    top_m_selection, CertificateSet, CentralityFunctional, RoundingTarget, SubspaceRegion,
};
use graphcert::linalg::{spectral_norm_symmetric, symmetric_eigenvalues};
use graphcert::protocol::{run_protocol, OutputKind, ProtocolConfig, RefusalReason};
use graphcert::simulation::{
    collision_instance, coverage_experiment, tie_counterexample, Claim, CoverageConfig, CoverageResult,
};
use graphcert::{
    build_probability_matrix, expected_degree_bound, grassmann_distance, sample_adjacency, top_k_eigens,
    two_block_spectrum, Envelope, ModelSpec, OrthonormalBasis,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn random_basis(n: usize, k: usize, rng: &mut ChaCha8Rng) -> OrthonormalBasis {
    let g = DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(rng));
    OrthonormalBasis::orthonormalize(g).unwrap()
}

fn symmetric_direction(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let e = (&g + g.transpose()) * 0.5;
    let norm = spectral_norm_symmetric(&e).unwrap();
    e * (scale / norm)
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

fn c1_spectrum() -> Outcome {
    let model = common::worked_model();
    let values = symmetric_eigenvalues(model.p()).map_err(|e| e.to_string())?;
    let closed = two_block_spectrum(N, P, Q).map_err(|e| e.to_string())?;
    let mut worst = (values[0] - closed.lambda1).abs().max((values[1] - closed.lambda2).abs());
    for v in &values[2..] {
        worst = worst.max((v - closed.lambda_rest).abs());
    }
    ensure!(worst < 1e-9, "dense spectrum off the closed form by {worst:e}");
    ensure!((closed.lambda1 - 39.7).abs() < 1e-12, "λ1 = {}", closed.lambda1);
    ensure!((closed.lambda2 - 19.7).abs() < 1e-12, "λ2 = {}", closed.lambda2);
    ensure!((closed.lambda_rest + 0.3).abs() < 1e-15, "bulk = {}", closed.lambda_rest);
    ensure!((closed.gap2 - 20.0).abs() < 1e-12, "gap = {}", closed.gap2);
    Ok(format!("λ = (39.7, 19.7, -0.3 ×198), gap 20, dense error {worst:.1e}"))
}

fn c2_margin_and_hamming() -> Outcome {
    let model = common::worked_model();
    let d_max = expected_degree_bound(&model);
    ensure!(d_max == 39.7, "d_max = {d_max:?}");
    let v = variance_proxy(model.p()).v;
    ensure!((v - 29.79).abs() < 1e-9, "v(P) = {v}");

    let (u_star, _) = top_k_eigens(model.p(), 2).map_err(|e| e.to_string())?;
    let labels = model.spec().labels().unwrap().unwrap();
    let mut within = 0.0_f64;
    let mut between = f64::INFINITY;
    for i in [0, 37, 99] {
        for j in [1, 100, 150, 199] {
            let d = u_star.row(i).iter().zip(u_star.row(j)).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if labels[i] == labels[j] {
                within = within.max(d);
            } else {
                between = between.min(d);
            }
        }
    }
    let delta = 2.0 / (N as f64).sqrt();
    ensure!(within < 1e-12, "rows in one block differ by {within}");
    ensure!((between - delta).abs() < 1e-12, "Δ = {between}, expected {delta}");

    let centers = DMatrix::from_fn(2, 2, |c, j| u_star.matrix()[(if c == 0 { 0 } else { N - 1 }, j)]);
    let target = RoundingTarget::Reference { basis: u_star.clone(), centers };
    let quantile = deviation_quantile(v, N, 0.1).map_err(|e| e.to_string())?;
    let mut radii: Vec<f64> = (1..=40).map(|i| i as f64 * 0.0075).collect();
    radii.push(0.125);
    for r in radii {
        let region = SubspaceRegion {
            center: u_star.clone(),
            radius: r,
            alpha: 0.1,
            informative: r < 1.0,
            quantile,
            certificates: CertificateSet::new(d_max, 20.0),
        };
        let cluster = cluster_region_from(&region, delta, &target, None).map_err(|e| e.to_string())?;
        let raw = 3200.0 * r * r;
        let nearest = raw.round();
        let ceil = if (raw - nearest).abs() < 1e-9 { nearest } else { raw.ceil() };
        let expected = (ceil as usize).min(N);
        ensure!(cluster.hamming_radius == expected, "r = {r}: radius {} vs {expected}", cluster.hamming_radius);
        ensure!(cluster.labels.iter().zip(&labels).all(|(a, b)| a == b) || perm_hamming_distance(&cluster.labels, &labels).unwrap() == 0, "rounding at U⋆ mislabels");
    }
    let exact = {
        let region = SubspaceRegion {
            center: u_star.clone(),
            radius: 0.125,
            alpha: 0.1,
            informative: true,
            quantile,
            certificates: CertificateSet::new(d_max, 20.0),
        };
        cluster_region_from(&region, delta, &target, None).map_err(|e| e.to_string())?.hamming_radius
    };
    ensure!(exact == 50, "r = 0.125 gives {exact}");
    Ok("d_max = 39.7 exactly, v(P) = 29.79, Δ = 2/√200, Hamming radius min(200, ⌈3200r²⌉) on 41 radii (r = 0.125 → 50)".into())
}

fn c3_katz() -> Outcome {
    let model = common::worked_model();
    let lambda1 = symmetric_eigenvalues(model.p()).map_err(|e| e.to_string())?[0];
    ensure!((BETA * lambda1 - 0.25).abs() < 1e-12, "βλ1 = {}", BETA * lambda1);
    let l = katz_modulus(BETA).map_err(|e| e.to_string())?;
    ensure!(l == 10.0 / 397.0, "L = {l:?}");

    let c = katz_centrality(model.p(), BETA).map_err(|e| e.to_string())?;
    let mut term = DVector::from_element(N, 1.0);
    let mut series = DVector::zeros(N);
    for _ in 0..200 {
        term = model.p() * term * BETA;
        series += &term;
    }
    let err = (&c - &series).amax();
    ensure!(err < 1e-8, "Katz vs Neumann series: {err:e}");
    Ok(format!("βλ1 = 1/4, L = 10/397, Neumann agreement {err:.1e}"))
}

const REPS: usize = 500;

fn worked_coverage() -> Result<&'static CoverageResult, String> {
    static RUN: OnceLock<Result<CoverageResult, String>> = OnceLock::new();
    RUN.get_or_init(|| {
        let mut config = CoverageConfig::new(2, 0.1);
        config.centrality = Some(CentralityFunctional::Katz { beta: BETA });
        config.selection_m = Some(10);
        config.ridge_lambda = Some(0.5);
        coverage_experiment(&common::worked_model(), &config, REPS, 20_240_601).map_err(|e| e.to_string())
    })
    .as_ref()
    .map_err(Clone::clone)
}

fn coverage_of(result: &CoverageResult, claim: Claim) -> Result<f64, String> {
    let floor = 0.9 - 3.0 * (0.09 / REPS as f64).sqrt();
    let cov = result.claim(claim).and_then(|c| c.empirical_coverage).ok_or(format!("{} not evaluated", claim.name()))?;
    ensure!(cov >= floor, "{} coverage {cov} below {floor}", claim.name());
    Ok(cov)
}

fn c4_deviation() -> Outcome {
    let result = worked_coverage()?;
    let cov = coverage_of(result, Claim::Deviation)?;
    Ok(format!("{REPS} reps at α = 0.1: P(‖A − P‖ ≤ q) ≈ {cov:.3}, q = {:.2}", result.certificates.quantile.unwrap_or(f64::NAN)))
}

fn c5_davis_kahan() -> Outcome {
    let result = worked_coverage()?;
    let dk = result.audits.davis_kahan;
    ensure!(dk.checked == REPS, "DK audit ran {} times", dk.checked);
    ensure!(dk.violations == 0, "DK violations {}", dk.violations);
    ensure!(result.audits.total_violations() == 0, "audit violations {:?}", result.audits.named());
    Ok(format!("{} samples, 0 violations (all {} per-sample audits clean)", dk.checked, result.audits.named().len()))
}

fn c6_subspace_centrality() -> Outcome {
    let result = worked_coverage()?;
    let sub = coverage_of(result, Claim::Subspace)?;
    let cen = coverage_of(result, Claim::Centrality)?;
    ensure!(result.certificates.informative == Some(false), "oracle region flagged informative");

    let mut cfg = ProtocolConfig::new(2);
    cfg.alpha = 0.1;
    cfg.envelope = Envelope { d_max: Some(39.7), gap: Some(20.0), variance_bound: Some(29.79) };
    let report = run_protocol(&common::worked_graph(7), &cfg).map_err(|e| e.to_string())?;
    let region = report.outputs.subspace_region.ok_or("protocol produced no subspace region")?;
    ensure!(!region.informative, "protocol flagged r = {} informative", region.radius);
    Ok(format!("subspace {sub:.3}, Katz bands {cen:.3}; r = {:.2} flagged informative = false", region.radius))
}

fn c7_cluster() -> Outcome {
    let n = 600;
    let labels: Vec<usize> = (0..n).map(|i| usize::from(i >= 180)).collect();
    let model = build_probability_matrix(&ModelSpec::sbm(labels, vec![vec![0.95, 0.01], vec![0.01, 0.95]]))
        .map_err(|e| e.to_string())?;
    let reps = 40;
    let mut config = CoverageConfig::new(2, 0.2);
    config.claims = vec![Claim::Cluster];
    let result = coverage_experiment(&model, &config, reps, 600).map_err(|e| e.to_string())?;
    let radius = result.certificates.hamming_radius.ok_or("no Hamming radius")?;
    ensure!(radius < n, "Hamming radius {radius} is vacuous");
    let cov = result.claim(Claim::Cluster).and_then(|c| c.empirical_coverage).ok_or("cluster claim not evaluated")?;
    ensure!(cov >= 0.8, "cluster coverage {cov}");

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..10_000 {
        let k = rng.random_range(2..5);
        let dim = rng.random_range(1..4);
        let pts = rng.random_range(k..40);
        let centers = DMatrix::from_fn(k, dim, |_, _| rng.random::<f64>() * 4.0 - 2.0);
        let mut delta = f64::INFINITY;
        for a in 0..k {
            for b in (a + 1)..k {
                delta = delta.min((centers.row(a) - centers.row(b)).norm());
            }
        }
        let truth: Vec<usize> = (0..pts).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
        let rows = DMatrix::from_fn(pts, dim, |i, j| centers[(truth[i], j)]);
        let mut noisy = rows.clone();
        for i in 0..pts {
            let dir = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
            let len = rng.random::<f64>() * 0.999 * delta / 4.0;
            let step = dir.normalize() * len;
            for j in 0..dim {
                noisy[(i, j)] += step[j];
            }
        }
        let got = nearest_center_round(&noisy, &centers).map_err(|e| e.to_string())?;
        ensure!(got == truth, "uniform-branch trial {trial} mislabels");
    }
    Ok(format!("n = 600, {reps} reps: coverage {cov:.3}, Hamming radius {radius} < 600; 10⁴ uniform-branch trials exact"))
}

fn c8_stability() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut instances = 0;
    let mut perturbations = 0;
    let mut worst_ratio = 0.0_f64;
    while instances < 20 {
        let n = rng.random_range(8..25);
        let mut m = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>());
        m = (&m + m.transpose()) * 0.5;
        m.fill_diagonal(0.0);
        let beta = 0.05;
        let rho = spectral_norm_symmetric(&m).unwrap();
        m *= 0.6 / (2.0 * beta * rho);
        let rho = spectral_norm_symmetric(&m).unwrap();
        let c = katz_centrality(&m, beta).map_err(|e| e.to_string())?;
        let sel_m = rng.random_range(1..n);
        let sel = top_m_selection(c.as_slice(), sel_m).map_err(|e| e.to_string())?;
        let Some(margin) = sel.margin else { continue };
        let q = (0.99 * margin / (8.0 * beta)).min(1.0 / (2.0 * beta) - rho);
        let cert = stability_certificate(c.as_slice(), sel_m, 4.0 * beta, q).map_err(|e| e.to_string())?;
        ensure!(cert.certified, "margin {margin} not certified at q = {q}");
        let chosen = cert.selected_set.clone().unwrap();
        for _ in 0..1000 {
            let scale = q * rng.random::<f64>();
            let moved = &m + symmetric_direction(n, scale, &mut rng);
            let c2 = katz_centrality(&moved, beta).map_err(|e| e.to_string())?;
            worst_ratio = worst_ratio.max((&c2 - &c).amax() / scale / (4.0 * beta));
            let after = top_m_selection(c2.as_slice(), sel_m).map_err(|e| e.to_string())?;
            ensure!(after.unique_set() == Some(&chosen[..]), "top-{sel_m} set moved at ‖E‖ = {scale}");
            perturbations += 1;
        }
        instances += 1;
    }

    let model = common::worked_model();
    let c = katz_centrality(model.p(), BETA).map_err(|e| e.to_string())?;
    let x: Vec<f64> = c.iter().copied().collect();
    let tied = top_m_selection(&x, 10).map_err(|e| e.to_string())?;
    ensure!(!tied.is_unique(), "c(P) has a unique top-10 set");
    ensure!(!stability_certificate(&x, 10, katz_modulus(BETA).unwrap(), 1e-9).unwrap().certified, "tied scores certified");
    for eps in [1e-1, 1e-3, 1e-6] {
        let moved = tie_counterexample(&x, 10, eps).map_err(|e| e.to_string())?;
        let sup = x.iter().zip(&moved).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        ensure!((sup - eps).abs() < 1e-12, "moved by {sup}, not {eps}");
        let after = top_m_selection(&moved, 10).map_err(|e| e.to_string())?;
        let set = after.unique_set().ok_or("still tied after the move")?;
        ensure!(!set.contains(&0), "node 0 survived the move at ε = {eps}");
    }
    Ok(format!(
        "{instances} certified Katz instances, {perturbations} perturbations, top-m set never moved (max sup ratio {worst_ratio:.2}·4β); tie broken at ε = 1e-1, 1e-3, 1e-6"
    ))
}

fn c9_downstream() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for trial in 0..1000 {
        let n = rng.random_range(3..15);
        let k = rng.random_range(1..n);
        let u = random_basis(n, k, &mut rng);
        let w = random_basis(n, k, &mut rng);
        let r = grassmann_distance(&u, &w).unwrap();
        let y = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let lambda = rng.random::<f64>() * 2.0 + 0.01;
        let diff = (ridge_risk(&u, &y, lambda).unwrap() - ridge_risk(&w, &y, lambda).unwrap()).abs();
        let bound = ridge_risk_bound(&y, lambda, r, n).unwrap();
        ensure!(diff <= bound + 1e-12, "ridge trial {trial}: {diff} > {bound}");
    }

    let mut trial = 0;
    while trial < 1000 {
        let n = rng.random_range(4..30);
        let mut s: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        s[0] = 0;
        s[1] = 1;
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let theta = [rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0];
        let tau = rng.random::<f64>() * 2.0 + 0.05;
        let r = rng.random::<f64>() * 0.5;
        let d: Vec<f64> = x.iter().zip(&s).map(|(&xi, &g)| sigmoid((xi - theta[usize::from(g)]) / tau)).collect();
        let epsilon = parity_gap(&d, &s).unwrap() + r / tau + rng.random::<f64>() * 0.05;
        if epsilon > 1.0 {
            continue;
        }
        let check = feasibility_transfer_check(theta, &x, &s, r, tau, epsilon).map_err(|e| e.to_string())?;
        ensure!(check.passed, "transfer trial {trial} failed at x̂");
        let corner = |up: u8, rng: &mut ChaCha8Rng, random: bool| -> Vec<f64> {
            x.iter()
                .zip(&s)
                .map(|(&xi, &g)| {
                    let sign = if random { if rng.random::<bool>() { 1.0 } else { -1.0 } } else if g == up { 1.0 } else { -1.0 };
                    xi + sign * r
                })
                .collect()
        };
        let mut probes = vec![corner(0, &mut rng, false), corner(1, &mut rng, false)];
        probes.extend((0..8).map(|_| corner(0, &mut rng, true)));
        for xp in probes {
            let dp: Vec<f64> = xp.iter().zip(&s).map(|(&xi, &g)| sigmoid((xi - theta[usize::from(g)]) / tau)).collect();
            let gap = parity_gap(&dp, &s).unwrap();
            ensure!(gap <= epsilon + 1e-12, "transfer trial {trial}: corner parity {gap} > {epsilon}");
        }
        trial += 1;
    }

    for trial in 0..1000 {
        let n = rng.random_range(2..40);
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let s: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let tau = rng.random::<f64>() + 0.05;
        let t1 = [rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0];
        let t2 = [rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0];
        let dec = |t: [f64; 2]| -> Vec<f64> { x.iter().zip(&s).map(|(&xi, &g)| sigmoid((xi - t[g]) / tau)).collect() };
        let (d1, d2) = (dec(t1), dec(t2));
        let shift = (t1[0] - t2[0]).abs().max((t1[1] - t2[1]).abs());
        let b = tradeoff_bounds(&d1, &d2, &y, tau, shift).map_err(|e| e.to_string())?;
        let direct = surrogate_loss(&d1, &y) - surrogate_loss(&d2, &y);
        ensure!((b.loss_gap - direct).abs() < 1e-15, "tradeoff trial {trial}: loss gap mismatch");
        ensure!(b.within_l2 && b.within_shift, "tradeoff trial {trial}: {b:?}");
    }

    for trial in 0..1000 {
        let n = rng.random_range(2..20);
        let dim = rng.random_range(1..4);
        let x = DMatrix::from_fn(n, dim, |_, _| rng.random::<f64>());
        let noise = rng.random::<f64>() * 0.2;
        let y = DMatrix::from_fn(n, dim, |_, _| rng.random::<f64>() * noise) + &x;
        let grid: Vec<f64> = (0..12).map(|i| i as f64 * 0.15).collect();
        let report = filtration_envelope(&x, &y, &grid).map_err(|e| e.to_string())?;
        ensure!(report.all_hold(), "filtration trial {trial}: sandwich fails");
        let env = band_envelope(&x, report.eta, &grid).map_err(|e| e.to_string())?;
        let dy = distance_matrix(&y);
        for level in &env.levels {
            let edges = edge_count_at(&dy, level.t);
            let comps = component_count_at(&dy, level.t);
            ensure!(level.edges_lower <= edges && edges <= level.edges_upper, "trial {trial}: edges {edges} outside {level:?}");
            ensure!(
                level.components_lower <= comps && comps <= level.components_upper,
                "trial {trial}: components {comps} outside {level:?}"
            );
        }
    }
    Ok("ridge, transfer (adversarial corners), tradeoff and filtration hold on 1000 trials each".into())
}

fn c10_gating() -> Outcome {
    let a = common::worked_graph(3);
    for t in Toggles::all() {
        common::check_gating(&a, t)?;
    }

    let collision = collision_instance(N, 2).map_err(|e| e.to_string())?;
    let mut cfg = ProtocolConfig::new(2);
    cfg.envelope.d_max = Some(60.0);
    cfg.parametric_spec = Some(collision.model.spec().clone());
    let report = run_protocol(&sample_adjacency(&collision.model, 4), &cfg).map_err(|e| e.to_string())?;
    ensure!(report.outputs.subspace_region.is_none(), "collision instance produced a region");
    ensure!(
        report.refusals.iter().any(|r| r.output == OutputKind::SubspaceRegion && r.reason == RefusalReason::NoGapCertificate),
        "no NoGapCertificate refusal: {:?}",
        report.refusals
    );

    let every = common::gating_config(Toggles { d_max: true, gap: true, gamma: true, delta: true });
    let first = run_protocol(&a, &every).and_then(|r| r.to_json()).map_err(|e| e.to_string())?;
    let second = run_protocol(&a, &every).and_then(|r| r.to_json()).map_err(|e| e.to_string())?;
    ensure!(first == second, "reports differ between runs");
    Ok(format!("16 certificate combinations gate correctly, collision refused, report JSON identical ({} bytes)", first.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1", c1_spectrum),
        ("2", c2_margin_and_hamming),
        ("3", c3_katz),
        ("4", c4_deviation),
        ("5", c5_davis_kahan),
        ("6", c6_subspace_centrality),
        ("7", c7_cluster),
        ("8", c8_stability),
        ("9", c9_downstream),
        ("10", c10_gating),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {name}: PASS ({secs:.1}s) {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {name}: FAIL ({secs:.1}s) {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

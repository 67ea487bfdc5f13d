//! Demographic-parity post-processing on Katz scores whose certified band
//! transfers feasibility to the population scores.

use graphcert::concentration::{deviation_quantile, variance_proxy};
use graphcert::downstream::{
    fair_optimize, feasibility_transfer_check, logistic_decisions, parity_gap, tradeoff_bounds, FairnessProblem,
};
use graphcert::inference::{katz_centrality, katz_modulus};
use graphcert::{build_probability_matrix, sample_adjacency, ModelSpec};

fn main() -> graphcert::Result<()> {
    let n = 1000;
    let theta: Vec<f64> = (0..n).map(|i| 0.1 + 0.9 * i as f64 / n as f64).collect();
    let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let spec = ModelSpec::Dcsbm { theta: theta.clone(), labels, connectivity: vec![vec![0.8, 0.3], vec![0.3, 0.8]] };
    let model = build_probability_matrix(&spec)?;
    let a = sample_adjacency(&model, 9);
    let beta = 0.002;
    let q = deviation_quantile(variance_proxy(model.p()).v, n, 0.05)?.q;
    let r = katz_modulus(beta)? * q;

    let x: Vec<f64> = katz_centrality(a.matrix(), beta)?.iter().copied().collect();
    let y: Vec<f64> = theta.iter().map(|&t| f64::from(u8::from(t > 0.55))).collect();
    let s: Vec<u8> = theta.iter().enumerate().map(|(i, &t)| u8::from(t > 0.7 || i % 4 == 0)).collect();
    let (tau, epsilon) = (2.5, 0.3);
    let problem = FairnessProblem::new(x.clone(), y, s.clone(), tau, epsilon)?;

    let opt = fair_optimize(&problem, epsilon - r / tau)?;
    println!("band r = {r:.4}, enforced ε − r/τ = {:.4}", opt.effective_epsilon);
    println!("fair θ = {:?}: loss {:.4}, parity {:.4}", opt.theta_fair, opt.loss_fair, opt.gap_fair);
    println!("unconstrained θ = {:?}: loss {:.4}, parity {:.4}", opt.theta_un, opt.loss_un, opt.gap_un);

    let transfer = feasibility_transfer_check(opt.theta_fair, &x, &s, r, tau, epsilon)?;
    println!("transfer: observed {:.4} ≤ required {:.4}: {}", transfer.observed_gap, transfer.required, transfer.passed);
    let truth: Vec<f64> = katz_centrality(model.p(), beta)?.iter().copied().collect();
    println!("parity at c(P): {:.4}", parity_gap(&problem.decisions_at(&truth, opt.theta_fair), &s)?);

    let shift = (0..2).map(|g| (opt.theta_fair[g] - opt.theta_un[g]).abs()).fold(0.0, f64::max);
    let t = tradeoff_bounds(
        &logistic_decisions(&problem, opt.theta_fair),
        &logistic_decisions(&problem, opt.theta_un),
        &problem.y,
        tau,
        shift,
    )?;
    println!("price of fairness {:.4}: ≤ {:.4} (2/√n·‖Δd‖), ≤ {:.4} (Δθ/2τ)", t.loss_gap, t.bound_l2, t.bound_shift);
    Ok(())
}

//! Threshold-graph filtrations of a spectral embedding: the sandwich between
//! two embeddings and the envelope implied by a rowwise band.

use graphcert::downstream::{band_envelope, filtration_envelope};
use graphcert::{build_probability_matrix, procrustes_align, sample_adjacency, top_k_eigens, ModelSpec};

fn main() -> graphcert::Result<()> {
    let n = 120;
    let labels: Vec<usize> = (0..n).map(|i| i * 3 / n).collect();
    let b = vec![vec![0.7, 0.1, 0.1], vec![0.1, 0.7, 0.1], vec![0.1, 0.1, 0.7]];
    let model = build_probability_matrix(&ModelSpec::sbm(labels, b))?;
    let (u_star, _) = top_k_eigens(model.p(), 3)?;
    let (u_hat, _) = top_k_eigens(sample_adjacency(&model, 2).matrix(), 3)?;
    let aligned = procrustes_align(&u_hat, &u_star)?.aligned;

    let grid: Vec<f64> = (0..8).map(|i| i as f64 * 0.02).collect();
    let report = filtration_envelope(aligned.matrix(), u_star.matrix(), &grid)?;
    println!("η = {:.4}, d_filt = {:.4} ≤ 2η: {}, all inclusions hold: {}", report.eta, report.d_filt, report.within_bound, report.all_hold());

    let env = band_envelope(aligned.matrix(), report.eta, &grid)?;
    println!("{:>6} {:>18} {:>18}", "t", "edges [lo, hi]", "components [lo, hi]");
    for l in &env.levels {
        println!(
            "{:>6.2} {:>6} [{:>4}, {:>4}] {:>6} [{:>3}, {:>3}]",
            l.t, l.edges_observed, l.edges_lower, l.edges_upper, l.components_observed, l.components_lower, l.components_upper
        );
    }
    Ok(())
}

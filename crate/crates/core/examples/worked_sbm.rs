//! The two-block instance n = 200, p = 0.3, q = 0.1 and every constant
//! derived from it.

use graphcert::concentration::{davis_kahan_radius, deviation_quantile, variance_proxy};
use graphcert::inference::katz_modulus;
use graphcert::linalg::symmetric_eigenvalues;
use graphcert::{build_probability_matrix, expected_degree_bound, two_block_spectrum, ModelSpec};

fn main() -> graphcert::Result<()> {
    let (n, p, q) = (200, 0.3, 0.1);
    let model = build_probability_matrix(&ModelSpec::two_block(n, p, q))?;

    let closed = two_block_spectrum(n, p, q)?;
    let dense = symmetric_eigenvalues(model.p())?;
    println!("closed form: λ1 = {}, λ2 = {}, bulk = {}, gap = {}", closed.lambda1, closed.lambda2, closed.lambda_rest, closed.gap2);
    println!("dense:       λ1 = {:.12}, λ2 = {:.12}, λ3 = {:.12}", dense[0], dense[1], dense[2]);

    let d_max = expected_degree_bound(&model);
    let v = variance_proxy(model.p()).v;
    println!("d_max = {d_max}, v(P) = {v:.4}, Δ = 2/√n = {:.6}", 2.0 / (n as f64).sqrt());

    for alpha in [0.1, 0.05] {
        let quantile = deviation_quantile(v, n, alpha)?;
        let dk = davis_kahan_radius(quantile.q, closed.gap2)?;
        println!(
            "α = {alpha}: q = {:.3}, r = {:.3} (informative: {}), Hamming radius min(n, ⌈3200r²⌉) = {}",
            quantile.q,
            dk.radius,
            dk.informative,
            ((3200.0 * dk.radius * dk.radius).ceil() as usize).min(n)
        );
    }

    let beta = 5.0 / 794.0;
    println!("Katz β = 5/794: βλ1 = {:.15}, L = 4β = {} = 10/397", beta * dense[0], katz_modulus(beta)?);
    Ok(())
}

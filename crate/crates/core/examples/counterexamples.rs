//! Why certificates are mandatory: tied scores flip under any perturbation,
//! and an eigenvalue collision leaves the top-k eigenspace unidentified.

use graphcert::inference::top_m_selection;
use graphcert::linalg::{eigengap, symmetric_eigenvalues};
use graphcert::simulation::{collision_instance, perturbed_collision, tie_counterexample};
use graphcert::grassmann_distance;

fn main() -> graphcert::Result<()> {
    let x = [3.0, 2.0, 2.0, 2.0, 1.0];
    println!("admissible top-2 sets of {x:?}: {:?}", top_m_selection(&x, 2)?.sets);
    for eps in [1e-1, 1e-3, 1e-6] {
        let moved = tie_counterexample(&x, 2, eps)?;
        println!("ε = {eps:e}: unique set {:?}", top_m_selection(&moved, 2)?.unique_set());
    }

    let c = collision_instance(60, 2)?;
    let values = symmetric_eigenvalues(c.model.p())?;
    println!(
        "collision: λ2 = {:.3}, λ3 = {:.3}, d_Gr(U_a, U_b) = {}",
        values[1],
        values[2],
        grassmann_distance(&c.u_a, &c.u_b)?
    );
    for delta in [0.0, 0.01, 0.05, 0.1] {
        let m = perturbed_collision(60, 2, delta)?;
        println!("δ = {delta}: gap_2 = {:.3}", eigengap(&symmetric_eigenvalues(m.p())?, 2)?);
    }
    Ok(())
}

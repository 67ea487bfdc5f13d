use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{eigenvector_centrality, katz_centrality, CentralityFunctional};
use crate::linalg::{spectral_norm_symmetric, symmetric_eigenvalues};

/// Largest observed `‖c(M) − c(M')‖ / ‖M − M'‖` over random pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusAudit {
    pub functional: CentralityFunctional,
    pub trials: usize,
    /// Perturbed matrices that left the domain and were skipped.
    pub skipped: usize,
    pub max_ratio_l2: f64,
    pub max_ratio_inf: f64,
    /// The stated modulus `L` (`4β` or `2/γ`).
    pub stated_modulus: f64,
    /// Reference for the 2-norm ratio: `4β√n` for Katz, `2/γ` for the
    /// eigenvector.
    pub l2_reference: f64,
    pub l2_violations: usize,
}

fn check_domain(functional: &CentralityFunctional, m: &DMatrix<f64>) -> Result<()> {
    match *functional {
        CentralityFunctional::Katz { beta } => {
            let rho = spectral_norm_symmetric(m)?;
            let limit = 1.0 / (2.0 * beta);
            if rho > limit {
                return Err(Error::OutsideDomain { rho, limit });
            }
        }
        CentralityFunctional::Eigenvector { gamma } => {
            let values = symmetric_eigenvalues(m)?;
            let observed = values[0] - values[1];
            if observed < gamma {
                return Err(Error::OutsideDomain { rho: observed, limit: gamma });
            }
        }
    }
    Ok(())
}

fn scores(functional: &CentralityFunctional, m: &DMatrix<f64>) -> Result<DVector<f64>> {
    match *functional {
        CentralityFunctional::Katz { beta } => katz_centrality(m, beta),
        CentralityFunctional::Eigenvector { .. } => Ok(eigenvector_centrality(m)?.scores),
    }
}

/// For each domain sample `M` and trial, draws a symmetric Gaussian direction
/// `E` with `‖E‖ = perturbation_scale` and records the ratios for the pair
/// `(M, M + E)` when both lie in the domain. Eigenvector scores are compared
/// up to sign.
pub fn modulus_audit(
    functional: CentralityFunctional,
    domain_samples: &[DMatrix<f64>],
    perturbation_scale: f64,
    trials: usize,
    seed: u64,
) -> Result<ModulusAudit> {
    if !(perturbation_scale > 0.0) || !perturbation_scale.is_finite() {
        return Err(Error::InvalidInput(format!("perturbation scale {perturbation_scale} must be positive")));
    }
    let stated_modulus = functional.modulus()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut audit = ModulusAudit {
        functional,
        trials: 0,
        skipped: 0,
        max_ratio_l2: 0.0,
        max_ratio_inf: 0.0,
        stated_modulus,
        l2_reference: 0.0,
        l2_violations: 0,
    };
    for m in domain_samples {
        check_domain(&functional, m)?;
        let n = m.nrows();
        let reference = match functional {
            CentralityFunctional::Katz { beta } => 4.0 * beta * (n as f64).sqrt(),
            CentralityFunctional::Eigenvector { .. } => stated_modulus,
        };
        audit.l2_reference = audit.l2_reference.max(reference);
        let base = scores(&functional, m)?;
        for _ in 0..trials {
            let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
            let e = (&g + g.transpose()) * 0.5;
            let norm = spectral_norm_symmetric(&e)?;
            if norm == 0.0 {
                continue;
            }
            let e = e * (perturbation_scale / norm);
            let moved = m + &e;
            if check_domain(&functional, &moved).is_err() {
                audit.skipped += 1;
                continue;
            }
            let other = scores(&functional, &moved)?;
            let diff = match functional {
                CentralityFunctional::Katz { .. } => &other - &base,
                CentralityFunctional::Eigenvector { .. } => {
                    let plus = &other - &base;
                    let minus = &other + &base;
                    if minus.norm() < plus.norm() { minus } else { plus }
                }
            };
            let r2 = diff.norm() / perturbation_scale;
            let rinf = diff.amax() / perturbation_scale;
            audit.trials += 1;
            audit.max_ratio_l2 = audit.max_ratio_l2.max(r2);
            audit.max_ratio_inf = audit.max_ratio_inf.max(rinf);
            audit.l2_violations += usize::from(r2 > reference * (1.0 + 1e-9));
        }
    }
    Ok(audit)
}

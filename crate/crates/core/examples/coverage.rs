//! A Monte Carlo coverage run in oracle-certificate mode with the per-sample
//! inequality audits.

use graphcert::inference::CentralityFunctional;
use graphcert::simulation::{coverage_experiment, CoverageConfig, FairnessAudit};
use graphcert::{build_probability_matrix, ModelSpec};

fn main() -> graphcert::Result<()> {
    let model = build_probability_matrix(&ModelSpec::two_block(100, 0.6, 0.05))?;
    let mut config = CoverageConfig::new(2, 0.1);
    config.centrality = Some(CentralityFunctional::Katz { beta: 0.01 });
    config.delta = None;
    config.selection_m = Some(5);
    config.ridge_lambda = Some(1.0);
    config.fairness = Some(FairnessAudit { tau: 1.0, epsilon: 0.3 });
    config.filtration_grid = None;

    let result = coverage_experiment(&model, &config, 100, 7)?;
    println!("joint coverage {:.3} (target {}, floor {:.3})", result.empirical_coverage, result.target, result.floor());
    for c in &result.claims {
        match (&c.empirical_coverage, &c.refusal) {
            (Some(cov), _) => println!("{:>10}: {cov:.3} over {}", c.claim.name(), c.evaluated),
            (None, Some(why)) => println!("{:>10}: refused, {why}", c.claim.name()),
            _ => {}
        }
    }
    for (name, audit) in result.audits.named() {
        if audit.checked > 0 {
            println!("audit {name}: {} violations of {}", audit.violations, audit.checked);
        }
    }
    print!("{}", result.to_csv());
    Ok(())
}

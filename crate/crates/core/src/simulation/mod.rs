//! Monte Carlo coverage experiments, per-sample inequality audits and the
//! constructive counterexamples: a score tie that no margin can certify and
//! an eigenvalue collision that no finite radius can resolve.

mod counterexample;
mod coverage;
mod modulus;

pub use counterexample::{collision_instance, perturbed_collision, tie_counterexample, CollisionInstance};
pub use coverage::{
    coverage_experiment, Audit, Audits, CertificateMode, Claim, ClaimCoverage, CoverageCertificates, CoverageConfig,
    CoverageResult, FairnessAudit, KatzRatios, AUDIT_TOL,
};
pub use modulus::{modulus_audit, ModulusAudit};

//! The gated end-to-end pipeline.
//!
//! A run declares `k` and an envelope, computes the spectral objects of the
//! observed graph, and then emits each output only when every certificate it
//! depends on is present. The observed spectral gap is always reported but
//! never used to size a region.

mod config;
mod gap;
mod report;
mod run;

pub use config::{
    CentralityConfig, ClusteringConfig, FairnessConfig, FiltrationConfig, ProtocolConfig, SelectionConfig, UsvtConfig,
};
pub use gap::{observed_gap_proxy, parametric_gap_certificate, usvt_denoise, UsvtEstimate, DEFAULT_USVT_SCALE};
pub use report::{
    format_sig17, to_json_string, DiagnosticReport, Diagnostics, FairnessOutput, FiltrationOutput, Flag, GapProxy,
    OutputKind, Outputs, Refusal, RefusalReason, SubspaceOutput, UsvtDiagnostic, REPORT_SCHEMA,
};
pub use run::{recompute_quantile, run_protocol};

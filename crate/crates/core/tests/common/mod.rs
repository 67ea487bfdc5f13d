#![allow(dead_code)]

use graphcert::protocol::{
    run_protocol, CentralityConfig, ClusteringConfig, DiagnosticReport, FairnessConfig, FiltrationConfig, OutputKind,
    ProtocolConfig, SelectionConfig,
};
use graphcert::{build_probability_matrix, sample_adjacency, AdjacencyMatrix, ModelSpec, ProbabilityModel};

pub const N: usize = 200;
pub const P: f64 = 0.3;
pub const Q: f64 = 0.1;
pub const BETA: f64 = 5.0 / 794.0;

pub fn worked_model() -> ProbabilityModel {
    build_probability_matrix(&ModelSpec::two_block(N, P, Q)).unwrap()
}

pub fn worked_graph(seed: u64) -> AdjacencyMatrix {
    sample_adjacency(&worked_model(), seed)
}

/// Which certificates a gating run declares.
#[derive(Debug, Clone, Copy)]
pub struct Toggles {
    pub d_max: bool,
    pub gap: bool,
    pub gamma: bool,
    pub delta: bool,
}

impl Toggles {
    pub fn all() -> impl Iterator<Item = Toggles> {
        (0..16_u8).map(|b| Toggles { d_max: b & 1 != 0, gap: b & 2 != 0, gamma: b & 4 != 0, delta: b & 8 != 0 })
    }

    pub fn expected(&self, kind: OutputKind) -> bool {
        let spine = self.d_max && self.gap;
        let bands = self.d_max && self.gamma;
        match kind {
            OutputKind::SubspaceRegion => spine,
            OutputKind::CentralityBands | OutputKind::Stability | OutputKind::Fairness => bands,
            OutputKind::ClusterRegion => spine && self.delta,
            OutputKind::Filtration => spine,
        }
    }
}

pub const KINDS: [OutputKind; 6] = [
    OutputKind::SubspaceRegion,
    OutputKind::CentralityBands,
    OutputKind::Stability,
    OutputKind::Fairness,
    OutputKind::ClusterRegion,
    OutputKind::Filtration,
];

/// Every optional block present; the four certificates follow `t`.
pub fn gating_config(t: Toggles) -> ProtocolConfig {
    let mut c = ProtocolConfig::new(2);
    c.envelope.d_max = t.d_max.then_some(39.7);
    c.envelope.gap = t.gap.then_some(20.0);
    c.centrality = Some(CentralityConfig::Eigenvector { gamma: t.gamma.then_some(20.0) });
    c.clustering = Some(ClusteringConfig {
        delta: t.delta.then_some(2.0 / (N as f64).sqrt()),
        centers: None,
        clusters: None,
        c_row: None,
        seed: 0,
    });
    c.selection = Some(SelectionConfig { m: 10 });
    c.fairness = Some(FairnessConfig {
        y: (0..N).map(|i| f64::from(u8::from(i % 3 == 0))).collect(),
        s: (0..N).map(|i| u8::from(i % 2 == 1)).collect(),
        tau: 100.0,
        epsilon: 0.5,
    });
    c.filtration = Some(FiltrationConfig { t_grid: vec![0.0, 0.05, 0.1, 0.2], c_row: Some(1.0) });
    c
}

/// Outputs present exactly when expected, and a refusal for every absent one.
pub fn check_gating(a: &AdjacencyMatrix, t: Toggles) -> Result<DiagnosticReport, String> {
    let report = run_protocol(a, &gating_config(t)).map_err(|e| e.to_string())?;
    let d = &report.diagnostics;
    let flags = [
        (d.d1_degree_envelope.passed, t.d_max),
        (d.d2_gap_certificate.passed, t.gap),
        (d.d3_centrality_domain.passed, t.gamma),
        (d.d4_cluster_margin.passed, t.delta),
    ];
    if flags.iter().any(|(got, want)| got != want) {
        return Err(format!("{t:?}: diagnostic flags {flags:?}"));
    }
    for kind in KINDS {
        let present = report.outputs.has(kind);
        let refused = report.refusals.iter().filter(|r| r.output == kind).count();
        if present != t.expected(kind) {
            return Err(format!("{t:?}: {kind:?} present = {present}"));
        }
        if present == (refused == 1) || refused > 1 {
            return Err(format!("{t:?}: {kind:?} present = {present} with {refused} refusals"));
        }
    }
    Ok(report)
}

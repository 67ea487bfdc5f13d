//! The full protocol on one observed graph: diagnostics, gated outputs and
//! refusals, serialized as the JSON report.

use graphcert::protocol::{run_protocol, CentralityConfig, ClusteringConfig, ProtocolConfig, SelectionConfig};
use graphcert::{build_probability_matrix, sample_adjacency, ModelSpec};

fn main() -> graphcert::Result<()> {
    let spec = ModelSpec::two_block(200, 0.3, 0.1);
    let a = sample_adjacency(&build_probability_matrix(&spec)?, 0);

    let mut config = ProtocolConfig::new(2);
    config.parametric_spec = Some(spec);
    config.centrality = Some(CentralityConfig::Katz { beta: 5.0 / 794.0, domain_declared: false });
    config.selection = Some(SelectionConfig { m: 10 });
    config.clustering = Some(ClusteringConfig { delta: None, centers: None, clusters: None, c_row: None, seed: 0 });

    let report = run_protocol(&a, &config)?;
    let d = &report.diagnostics;
    for (name, flag) in [
        ("D1", &d.d1_degree_envelope),
        ("D2", &d.d2_gap_certificate),
        ("D3", &d.d3_centrality_domain),
        ("D4", &d.d4_cluster_margin),
    ] {
        println!("{name} {:5} {}", flag.passed, flag.provenance);
    }
    for r in &report.refusals {
        println!("refused {:?}: {:?} ({})", r.output, r.reason, r.detail);
    }
    let json = report.to_json()?;
    println!("report: {} bytes, starts {}", json.len(), &json[..json.find('\n').unwrap_or(json.len())]);
    Ok(())
}

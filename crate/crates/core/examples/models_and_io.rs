//! Model families, sampling and the file formats.

use graphcert::io::{format_dense_csv, format_edge_list, parse_edge_list, parse_model};
use graphcert::{build_probability_matrix, sample_adjacency, ModelSpec};

fn main() -> graphcert::Result<()> {
    let rdpg = ModelSpec::Rdpg {
        positions: (0..6).map(|i| vec![0.5 + 0.05 * i as f64, 0.2]).collect(),
        positive: 1,
        negative: 1,
    };
    let model = build_probability_matrix(&rdpg)?;
    print!("RDPG with signature (1, 1):\n{}", format_dense_csv(model.p()));

    let doc = parse_model(r#"{"type":"sbm","membership":[0,0,1,1,1],"connectivity":[[0.9,0.2],[0.2,0.8]],"envelope":{"d_max":3.0}}"#)?;
    let a = sample_adjacency(&build_probability_matrix(&doc.spec)?, 12);
    let text = format_edge_list(&a);
    print!("sampled edge list:\n{text}");
    let back = parse_edge_list(&text)?;
    println!("round trip: {} nodes, {} edges, identical = {}", back.n(), back.edges().len(), back.matrix() == a.matrix());

    let bad = ModelSpec::Rdpg { positions: vec![vec![2.0], vec![2.0]], positive: 1, negative: 0 };
    println!("out-of-range RDPG: {}", build_probability_matrix(&bad).unwrap_err());
    Ok(())
}

//! File formats.
//!
//! - Edge list: UTF-8, one `u<TAB>v` pair per line, 0-based ids, each
//!   undirected pair listed once. Blank lines and `#` comments are ignored;
//!   a `# nodes: N` comment fixes the node count (isolated trailing nodes),
//!   otherwise it is one more than the largest id.
//! - Dense CSV: one matrix row per line, comma-separated decimals.
//! - JSON: model documents ([`ModelDocument`]) and protocol configs
//!   ([`ProtocolConfig`]).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{build_probability_matrix, AdjacencyMatrix, ModelDocument, ProbabilityModel};
use crate::protocol::ProtocolConfig;

pub fn read_text(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn nodes_directive(line: &str) -> Option<&str> {
    line.strip_prefix('#')?.trim().strip_prefix("nodes:").map(str::trim)
}

pub fn parse_edge_list(text: &str) -> Result<AdjacencyMatrix> {
    let mut declared = None;
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if let Some(value) = nodes_directive(line) {
                let n = value
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidInput(format!("line {}: bad node count {value:?}", lineno + 1)))?;
                declared = Some(n);
            }
            continue;
        }
        let fields: Vec<&str> = raw.trim_end_matches('\r').split('\t').collect();
        let [u, v] = fields.as_slice() else {
            return Err(Error::InvalidInput(format!("line {}: expected \"u<TAB>v\", got {raw:?}", lineno + 1)));
        };
        let id = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidInput(format!("line {}: bad node id {s:?}", lineno + 1)))
        };
        edges.push((id(u)?, id(v)?));
    }
    let inferred = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
    let n = declared.unwrap_or(inferred);
    if n < 2 {
        return Err(Error::TooSmall(format!("a graph needs at least two nodes, got {n}")));
    }
    AdjacencyMatrix::from_edges(n, &edges)
}

pub fn read_edge_list(path: impl AsRef<Path>) -> Result<AdjacencyMatrix> {
    parse_edge_list(&read_text(path)?)
}

/// Edge list with a `# nodes: N` header, pairs `i < j` in lexicographic order.
pub fn format_edge_list(a: &AdjacencyMatrix) -> String {
    let mut out = format!("# nodes: {}\n", a.n());
    for (i, j) in a.edges() {
        let _ = writeln!(out, "{i}\t{j}");
    }
    out
}

pub fn parse_dense_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("line {}: bad number {s:?}", lineno + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::shape(format!("{} columns", first.len()), format!("{} on line {}", row.len(), lineno + 1)));
            }
        }
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// Shortest round-trip decimals.
pub fn format_dense_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_model(text: &str) -> Result<ModelDocument> {
    serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("model: {e}")))
}

/// Reads a model document and materializes `P`, carrying its envelope.
pub fn read_model(path: impl AsRef<Path>) -> Result<ProbabilityModel> {
    let doc = parse_model(&read_text(path)?)?;
    let model = build_probability_matrix(&doc.spec)?;
    Ok(match doc.envelope {
        Some(e) => model.with_envelope(e),
        None => model,
    })
}

pub fn read_config(path: impl AsRef<Path>) -> Result<ProtocolConfig> {
    ProtocolConfig::from_json(&read_text(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{sample_adjacency, ModelSpec};

    #[test]
    fn edge_list_round_trip() {
        let model = build_probability_matrix(&ModelSpec::two_block(30, 0.4, 0.05)).unwrap();
        let a = sample_adjacency(&model, 2);
        let back = parse_edge_list(&format_edge_list(&a)).unwrap();
        assert_eq!(back.matrix(), a.matrix());
    }

    #[test]
    fn edge_list_parsing() {
        let a = parse_edge_list("0\t1\n\n# comment\n2\t1\n").unwrap();
        assert_eq!(a.n(), 3);
        assert_eq!(a.edges(), vec![(0, 1), (1, 2)]);
        assert_eq!(a.matrix()[(1, 2)], 1.0);

        let padded = parse_edge_list("# nodes: 6\n0\t1\n").unwrap();
        assert_eq!(padded.n(), 6);

        assert!(parse_edge_list("1\t1\n").is_err());
        assert!(parse_edge_list("0 1\n").is_err());
        assert!(parse_edge_list("0\t-1\n").is_err());
        assert!(parse_edge_list("# nodes: 2\n0\t5\n").is_err());
        assert!(parse_edge_list("").is_err());
    }

    #[test]
    fn dense_csv_round_trip() {
        let m = DMatrix::from_row_slice(2, 3, &[0.1, -2.5, 1e-300, 39.7, 0.0, 1.0 / 3.0]);
        let text = format_dense_csv(&m);
        assert_eq!(text.lines().next().unwrap(), "0.1,-2.5,1e-300");
        assert_eq!(parse_dense_csv(&text).unwrap(), m);
        assert!(parse_dense_csv("1,2\n3\n").is_err());
        assert!(parse_dense_csv("1,x\n").is_err());
    }

    #[test]
    fn files_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        write_text(&path, r#"{"type":"sbm","membership":[0,0,1,1],"connectivity":[[0.5,0.1],[0.1,0.5]],"envelope":{"d_max":2.0}}"#)
            .unwrap();
        let model = read_model(&path).unwrap();
        assert_eq!(model.n(), 4);
        assert_eq!(model.envelope().unwrap().d_max, Some(2.0));
        assert!(read_model(dir.path().join("missing.json")).is_err());

        let cfg = dir.path().join("config.json");
        write_text(&cfg, r#"{"k": 2}"#).unwrap();
        assert_eq!(read_config(&cfg).unwrap().k, 2);
    }
}

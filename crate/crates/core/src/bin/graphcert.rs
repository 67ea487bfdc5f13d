use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use graphcert::inference::CentralityFunctional;
use graphcert::io::{format_edge_list, read_config, read_edge_list, read_model, write_text};
use graphcert::protocol::{run_protocol, to_json_string, CentralityConfig, DiagnosticReport, OutputKind, ProtocolConfig};
use graphcert::simulation::{coverage_experiment, CertificateMode, Claim, CoverageConfig};
use graphcert::{build_probability_matrix, sample_adjacency, Error, ModelDocument, ModelSpec, Result};

#[derive(Parser)]
#[command(name = "graphcert", version, about = "Certificate-gated confidence regions for a single observed graph")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClaimArg {
    All,
    Deviation,
    Subspace,
    Cluster,
    Centrality,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Oracle,
    Declared,
}

#[derive(clap::Args)]
struct GraphArgs {
    /// Edge list, one "u<TAB>v" pair per line.
    #[arg(long)]
    graph: PathBuf,
    /// Protocol config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's alpha.
    #[arg(long)]
    alpha: Option<f64>,
    /// Overrides the clustering seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Full diagnostic report.
    Certify(GraphArgs),
    /// Simultaneous centrality bands.
    Bands(GraphArgs),
    /// Permutation-invariant Hamming ball for the clustering.
    Cluster(GraphArgs),
    /// Top-m stability certificate.
    Stability(GraphArgs),
    /// Fairness post-processing with transfer and trade-off checks.
    Fairness(GraphArgs),
    /// Threshold-graph filtration envelope.
    Filtration(GraphArgs),
    /// Monte Carlo coverage experiment.
    Simulate {
        /// Model document JSON.
        #[arg(long)]
        model: PathBuf,
        /// Coverage config JSON; defaults to all claims in oracle mode.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Target dimension when no config is given; defaults to the block count.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 500)]
        reps: u32,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "all")]
        claims: ClaimArg,
        /// Declared mode uses the model document's envelope.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// The two-block worked instance (n = 200, p = 0.3, q = 0.1) and its certificates.
    ExampleSbm {
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write a sampled graph as an edge list.
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Also write a protocol config for `certify`.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => write_text(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(args: &GraphArgs) -> Result<DiagnosticReport> {
    let a = read_edge_list(&args.graph)?;
    let mut config = read_config(&args.config)?;
    if let Some(alpha) = args.alpha {
        config.alpha = alpha;
    }
    if let (Some(seed), Some(c)) = (args.seed, config.clustering.as_mut()) {
        c.seed = seed;
    }
    run_protocol(&a, &config)
}

fn section(report: &DiagnosticReport, kind: OutputKind) -> Result<Value> {
    let outputs = serde_json::to_value(&report.outputs).map_err(|e| Error::Numerical(e.to_string()))?;
    let key = serde_json::to_value(kind).map_err(|e| Error::Numerical(e.to_string()))?;
    let key = key.as_str().unwrap_or_default();
    Ok(json!({
        "schema": report.schema,
        "output": key,
        "diagnostics": report.diagnostics,
        "result": outputs.get(key).cloned().unwrap_or(Value::Null),
        "refusals": report.refusals.iter().filter(|r| r.output == kind).collect::<Vec<_>>(),
    }))
}

fn csv_line(fields: &[String]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}

fn refusal_csv(report: &DiagnosticReport, kind: Option<OutputKind>) -> String {
    let mut out = String::from("output,reason,detail\n");
    for r in report.refusals.iter().filter(|r| kind.is_none_or(|k| r.output == k)) {
        out.push_str(&csv_line(&[
            serde_json::to_value(r.output).unwrap_or_default().as_str().unwrap_or_default().to_string(),
            serde_json::to_value(r.reason).unwrap_or_default().as_str().unwrap_or_default().to_string(),
            format!("\"{}\"", r.detail.replace('"', "'")),
        ]));
    }
    out
}

fn section_csv(report: &DiagnosticReport, kind: OutputKind) -> String {
    let o = &report.outputs;
    let mut out = String::new();
    match kind {
        OutputKind::CentralityBands => {
            if let Some(b) = &o.centrality_bands {
                out.push_str("node,point,lower,upper\n");
                for (i, ((c, lo), hi)) in b.point.iter().zip(b.lower()).zip(b.upper()).enumerate() {
                    let _ = writeln!(out, "{i},{c:?},{lo:?},{hi:?}");
                }
            }
        }
        OutputKind::ClusterRegion => {
            if let Some(c) = &o.cluster_region {
                let _ = writeln!(out, "# hamming_radius: {}", c.hamming_radius);
                out.push_str("node,label\n");
                for (i, l) in c.labels.iter().enumerate() {
                    let _ = writeln!(out, "{i},{l}");
                }
            }
        }
        OutputKind::Stability => {
            if let Some(s) = &o.stability {
                out.push_str("m,observed_margin,threshold,certified,selected_set\n");
                let margin = s.observed_margin.map_or(String::new(), |g| format!("{g:?}"));
                let set = s.selected_set.as_ref().map_or(String::new(), |v| {
                    v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
                });
                let _ = writeln!(out, "{},{margin},{:?},{},{set}", s.m, s.threshold, s.certified);
            }
        }
        OutputKind::Fairness => {
            if let Some(f) = &o.fairness {
                out.push_str("quantity,value\n");
                let rows = [
                    ("band_radius", f.band_radius),
                    ("effective_epsilon", f.effective_epsilon),
                    ("theta_fair_0", f.optimum.theta_fair[0]),
                    ("theta_fair_1", f.optimum.theta_fair[1]),
                    ("loss_fair", f.optimum.loss_fair),
                    ("gap_fair", f.optimum.gap_fair),
                    ("loss_un", f.optimum.loss_un),
                    ("transfer_passed", f64::from(u8::from(f.transfer.passed))),
                    ("loss_gap", f.tradeoff.loss_gap),
                    ("bound_l2", f.tradeoff.bound_l2),
                    ("bound_shift", f.tradeoff.bound_shift),
                ];
                for (name, v) in rows {
                    let _ = writeln!(out, "{name},{v:?}");
                }
            }
        }
        OutputKind::Filtration => {
            if let Some(f) = &o.filtration {
                out.push_str("t,edges_observed,edges_lower,edges_upper,components_observed,components_lower,components_upper\n");
                for l in &f.envelope.levels {
                    let _ = writeln!(
                        out,
                        "{:?},{},{},{},{},{},{}",
                        l.t,
                        l.edges_observed,
                        l.edges_lower,
                        l.edges_upper,
                        l.components_observed,
                        l.components_lower,
                        l.components_upper
                    );
                }
            }
        }
        OutputKind::SubspaceRegion => {}
    }
    if out.is_empty() {
        out = refusal_csv(report, Some(kind));
    }
    out
}

fn diagnostics_csv(report: &DiagnosticReport) -> String {
    let d = &report.diagnostics;
    let mut out = String::from("diagnostic,passed,value,provenance\n");
    for (name, f) in [
        ("d1_degree_envelope", &d.d1_degree_envelope),
        ("d2_gap_certificate", &d.d2_gap_certificate),
        ("d3_centrality_domain", &d.d3_centrality_domain),
        ("d4_cluster_margin", &d.d4_cluster_margin),
    ] {
        let value = f.value.map_or(String::new(), |v| format!("{v:?}"));
        let _ = writeln!(out, "{name},{},{value},\"{}\"", f.passed, f.provenance.replace('"', "'"));
    }
    out
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    to_json_string(v)
}

fn graph_command(args: &GraphArgs, kind: Option<OutputKind>) -> Result<()> {
    let report = load(args)?;
    let text = match (kind, args.format) {
        (None, Format::Json) => report.to_json()?,
        (None, Format::Csv) => diagnostics_csv(&report),
        (Some(k), Format::Json) => to_json(&section(&report, k)?)?,
        (Some(k), Format::Csv) => section_csv(&report, k),
    };
    emit(&text, args.out.as_ref())
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    model_path: &PathBuf,
    config_path: Option<&PathBuf>,
    k: Option<usize>,
    reps: u32,
    alpha: Option<f64>,
    seed: u64,
    claims: ClaimArg,
    mode: Option<ModeArg>,
    out: Option<&PathBuf>,
    format: Format,
) -> Result<()> {
    let model = read_model(model_path)?;
    let mut config: CoverageConfig = match config_path {
        Some(p) => serde_json::from_str(&graphcert::io::read_text(p)?)
            .map_err(|e| Error::InvalidInput(format!("coverage config: {e}")))?,
        None => {
            let k = match k {
                Some(k) => k,
                None => {
                    let labels = model.spec().labels()?.ok_or_else(|| {
                        Error::InvalidInput("--k is required for models without block labels".into())
                    })?;
                    labels.iter().max().map_or(0, |m| m + 1)
                }
            };
            CoverageConfig::new(k, 0.05)
        }
    };
    if let Some(a) = alpha {
        config.alpha = a;
    }
    config.claims = match claims {
        ClaimArg::All => config.claims,
        ClaimArg::Deviation => vec![Claim::Deviation],
        ClaimArg::Subspace => vec![Claim::Subspace],
        ClaimArg::Cluster => vec![Claim::Cluster],
        ClaimArg::Centrality => vec![Claim::Centrality],
    };
    match mode {
        Some(ModeArg::Oracle) => config.mode = CertificateMode::Oracle,
        Some(ModeArg::Declared) => {
            let envelope = model
                .envelope()
                .cloned()
                .ok_or_else(|| Error::InvalidInput("declared mode needs an envelope in the model document".into()))?;
            config.mode = CertificateMode::Declared { envelope };
        }
        None => {}
    }
    let result = coverage_experiment(&model, &config, reps as usize, seed)?;
    let text = match format {
        Format::Json => to_json(&result)?,
        Format::Csv => result.to_csv(),
    };
    emit(&text, out)
}

fn example_sbm(alpha: f64, seed: u64, graph: Option<&PathBuf>, config: Option<&PathBuf>, out: Option<&PathBuf>) -> Result<()> {
    let (n, p, q) = (200, 0.3, 0.1);
    let spec = ModelSpec::two_block(n, p, q);
    let model = build_probability_matrix(&spec)?;
    let spectrum = graphcert::two_block_spectrum(n, p, q)?;
    let d_max = graphcert::expected_degree_bound(&model);
    let variance = graphcert::concentration::variance_proxy(model.p()).v;
    let beta = 5.0 / 794.0;
    let quantile = graphcert::concentration::deviation_quantile(d_max, n, alpha)?;
    let radius = 2.0 * quantile.q / spectrum.gap2;
    let (u_star, _) = graphcert::top_k_eigens(model.p(), 2)?;
    let delta = (u_star.matrix().row(0) - u_star.matrix().row(n - 1)).norm();

    let mut protocol = ProtocolConfig::new(2);
    protocol.alpha = alpha;
    protocol.parametric_spec = Some(spec.clone());
    protocol.centrality = Some(CentralityConfig::Katz { beta, domain_declared: false });
    protocol.clustering = Some(graphcert::protocol::ClusteringConfig {
        delta: Some(delta),
        centers: None,
        clusters: None,
        c_row: None,
        seed,
    });
    protocol.selection = Some(graphcert::protocol::SelectionConfig { m: 10 });

    let doc = ModelDocument { spec, envelope: Some(graphcert::Envelope { d_max: Some(d_max), gap: Some(spectrum.gap2), variance_bound: None }) };
    let summary = json!({
        "model": doc,
        "spectrum": {
            "lambda1": spectrum.lambda1,
            "lambda2": spectrum.lambda2,
            "lambda_rest": spectrum.lambda_rest,
            "gap": spectrum.gap2,
        },
        "d_max": d_max,
        "variance_proxy": variance,
        "margin": delta,
        "katz": {
            "functional": CentralityFunctional::Katz { beta },
            "beta_times_rho": beta * spectrum.lambda1,
            "modulus": 4.0 * beta,
        },
        "alpha": alpha,
        "quantile": quantile.q,
        "subspace_radius": radius,
        "informative": radius < 1.0,
        "hamming_radius_formula": "ceil(3200 r^2)",
        "protocol_config": protocol,
    });
    if let Some(path) = graph {
        write_text(path, &format_edge_list(&sample_adjacency(&model, seed)))?;
    }
    if let Some(path) = config {
        write_text(path, &to_json(&protocol)?)?;
    }
    emit(&to_json(&summary)?, out)
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Certify(a) => graph_command(a, None),
        Command::Bands(a) => graph_command(a, Some(OutputKind::CentralityBands)),
        Command::Cluster(a) => graph_command(a, Some(OutputKind::ClusterRegion)),
        Command::Stability(a) => graph_command(a, Some(OutputKind::Stability)),
        Command::Fairness(a) => graph_command(a, Some(OutputKind::Fairness)),
        Command::Filtration(a) => graph_command(a, Some(OutputKind::Filtration)),
        Command::Simulate { model, config, k, reps, alpha, seed, claims, mode, out, format } => {
            simulate(model, config.as_ref(), *k, *reps, *alpha, *seed, *claims, *mode, out.as_ref(), *format)
        }
        Command::ExampleSbm { alpha, seed, graph, config, out } => {
            example_sbm(*alpha, *seed, graph.as_ref(), config.as_ref(), out.as_ref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}

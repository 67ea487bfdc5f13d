use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::concentration::DeviationQuantile;
use crate::downstream::{BandEnvelope, FairOptimum, TradeoffBounds, TransferCheck};
use crate::error::{Error, Result};
use crate::inference::{CentralityBand, CertificateSet, ClusterRegion, StabilityCertificate};

pub const REPORT_SCHEMA: &str = "graphcert.report/1";

/// Pass/fail state of one diagnostic with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub passed: bool,
    /// Where the certificate came from, or why it is missing.
    pub provenance: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

impl Flag {
    pub(crate) fn pass(provenance: impl Into<String>, value: Option<f64>) -> Self {
        Self { passed: true, provenance: provenance.into(), value }
    }

    pub(crate) fn fail(provenance: impl Into<String>) -> Self {
        Self { passed: false, provenance: provenance.into(), value: None }
    }
}

/// D1: degree envelope; D2: gap certificate; D3: centrality domain;
/// D4: clustering margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub d1_degree_envelope: Flag,
    pub d2_gap_certificate: Flag,
    pub d3_centrality_domain: Flag,
    pub d4_cluster_margin: Flag,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapProxy {
    pub value: f64,
    /// Always true: the observed gap never enters a radius.
    pub diagnostic_only: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    SubspaceRegion,
    CentralityBands,
    Stability,
    Fairness,
    ClusterRegion,
    Filtration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefusalReason {
    NoDegreeEnvelope,
    NoGapCertificate,
    NoDomainCertificate,
    ObservedOutsideDomain,
    NoClusterMargin,
    NotRequested,
    InsufficientTolerance,
    MissingRowwiseConstant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refusal {
    pub output: OutputKind,
    pub reason: RefusalReason,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceOutput {
    pub radius: f64,
    pub alpha: f64,
    pub informative: bool,
    pub quantile: DeviationQuantile,
    pub certificates: CertificateSet,
    /// Rows of the center basis `Û`.
    pub center: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessOutput {
    /// Score band radius `r = Lq`.
    pub band_radius: f64,
    /// `ε − r/τ`, the tolerance enforced at the observed scores.
    pub effective_epsilon: f64,
    pub optimum: FairOptimum,
    pub transfer: TransferCheck,
    pub tradeoff: TradeoffBounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiltrationOutput {
    pub c_row: f64,
    pub envelope: BandEnvelope,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subspace_region: Option<SubspaceOutput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centrality_bands: Option<CentralityBand>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilityCertificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fairness: Option<FairnessOutput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_region: Option<ClusterRegion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filtration: Option<FiltrationOutput>,
}

impl Outputs {
    pub fn has(&self, kind: OutputKind) -> bool {
        match kind {
            OutputKind::SubspaceRegion => self.subspace_region.is_some(),
            OutputKind::CentralityBands => self.centrality_bands.is_some(),
            OutputKind::Stability => self.stability.is_some(),
            OutputKind::Fairness => self.fairness.is_some(),
            OutputKind::ClusterRegion => self.cluster_region.is_some(),
            OutputKind::Filtration => self.filtration.is_some(),
        }
    }
}

/// Uncertified USVT diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsvtDiagnostic {
    pub threshold_scale: f64,
    pub threshold: f64,
    pub rank: usize,
    pub gap_hat: f64,
    /// `‖A − P̂‖`; plus a certified `eps_p` this would bound `‖A − P‖`, which
    /// is not used for gating.
    pub residual_norm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub schema: String,
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    pub observed_gap_proxy: GapProxy,
    pub diagnostics: Diagnostics,
    pub outputs: Outputs,
    pub refusals: Vec<Refusal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usvt: Option<UsvtDiagnostic>,
}

impl DiagnosticReport {
    pub fn to_json(&self) -> Result<String> {
        to_json_string(self)
    }
}

/// Pretty JSON with every float written to 17 significant digits.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17Formatter::default());
    value.serialize(&mut ser).map_err(|e| Error::Numerical(format!("serialization: {e}")))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Numerical(format!("serialization: {e}")))
}

/// `x` with 17 significant digits, positional when the exponent is moderate.
pub fn format_sig17(x: f64) -> String {
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..17).contains(&exp) {
        return sci;
    }
    let (sign, mantissa) = mantissa.strip_prefix('-').map_or(("", mantissa), |m| ("-", m));
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let point = exp + 1;
    let body = if point <= 0 {
        format!("0.{}{}", "0".repeat((-point) as usize), digits)
    } else {
        let (int, frac) = digits.split_at(point as usize);
        if frac.is_empty() {
            format!("{int}.0")
        } else {
            format!("{int}.{frac}")
        }
    };
    format!("{sign}{body}")
}

#[derive(Default)]
struct Sig17Formatter<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17Formatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_sig17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

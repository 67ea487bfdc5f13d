use serde::{Deserialize, Serialize};

use super::gap::DEFAULT_USVT_SCALE;
use crate::error::{Error, Result};
use crate::graph::{Envelope, ModelSpec};

fn default_alpha() -> f64 {
    0.05
}

fn default_usvt_scale() -> f64 {
    DEFAULT_USVT_SCALE
}

/// Everything the analyst declares before looking at the graph. Only `k` is
/// mandatory; each optional block unlocks the outputs that depend on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub k: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub envelope: Envelope,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parametric_spec: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usvt: Option<UsvtConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centrality: Option<CentralityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clustering: Option<ClusteringConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fairness: Option<FairnessConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filtration: Option<FiltrationConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UsvtConfig {
    #[serde(default = "default_usvt_scale")]
    pub threshold_scale: f64,
    /// Declared bound `‖P̂ − P‖ ≤ eps_p`; without it USVT is diagnostic only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_p: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "functional", rename_all = "snake_case", deny_unknown_fields)]
pub enum CentralityConfig {
    Katz {
        beta: f64,
        /// The analyst certifies `ρ(P) ≤ 1/(2β)`.
        #[serde(default)]
        domain_declared: bool,
    },
    Eigenvector {
        /// Certified lower bound on `λ1(P) − λ2(P)`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusteringConfig {
    /// Minimum separation of the population centers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Population center rows (`K × k`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centers: Option<Vec<Vec<f64>>>,
    /// Number of clusters for k-means rounding when no centers are declared;
    /// defaults to `k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clusters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_row: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionConfig {
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FairnessConfig {
    pub y: Vec<f64>,
    pub s: Vec<u8>,
    pub tau: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiltrationConfig {
    pub t_grid: Vec<f64>,
    /// Rowwise constant; falls back to the clustering block's `c_row`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_row: Option<f64>,
}

impl ProtocolConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            alpha: default_alpha(),
            envelope: Envelope::default(),
            parametric_spec: None,
            usvt: None,
            centrality: None,
            clustering: None,
            selection: None,
            fairness: None,
            filtration: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))
    }

    /// Structural checks that do not depend on the graph.
    pub fn validate(&self, n: usize) -> Result<()> {
        crate::concentration::check_level(self.alpha)?;
        if self.k == 0 || self.k >= n {
            return Err(Error::KOutOfRange { k: self.k, max: n.saturating_sub(1) });
        }
        let nonneg = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x >= 0.0) || !x.is_finite() => {
                Err(Error::InvalidInput(format!("{name} = {x} must be finite and ≥ 0")))
            }
            _ => Ok(()),
        };
        nonneg("envelope.d_max", self.envelope.d_max)?;
        nonneg("envelope.variance_bound", self.envelope.variance_bound)?;
        if let Some(spec) = &self.parametric_spec {
            if spec.node_count() != n {
                return Err(Error::shape(format!("parametric spec with {n} nodes"), spec.node_count()));
            }
        }
        if let Some(u) = &self.usvt {
            nonneg("usvt.eps_p", u.eps_p)?;
        }
        if let Some(c) = &self.clustering {
            nonneg("clustering.c_row", c.c_row)?;
            if let Some(centers) = &c.centers {
                if centers.iter().any(|r| r.len() != self.k) {
                    return Err(Error::shape(format!("centers with {} columns", self.k), "ragged rows"));
                }
            }
        }
        if let Some(s) = &self.selection {
            if s.m == 0 || s.m >= n {
                return Err(Error::InvalidInput(format!("selection size {} must be in 1..={}", s.m, n - 1)));
            }
        }
        if let Some(f) = &self.fairness {
            if f.y.len() != n || f.s.len() != n {
                return Err(Error::shape(format!("fairness vectors of length {n}"), format!("{} and {}", f.y.len(), f.s.len())));
            }
        }
        if let Some(f) = &self.filtration {
            nonneg("filtration.c_row", f.c_row)?;
        }
        Ok(())
    }

    pub(crate) fn c_row_for_filtration(&self) -> Option<f64> {
        self.filtration
            .as_ref()
            .and_then(|f| f.c_row)
            .or_else(|| self.clustering.as_ref().and_then(|c| c.c_row))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_is_required() {
        assert!(ProtocolConfig::from_json(r#"{"alpha": 0.1}"#).is_err());
        let c = ProtocolConfig::from_json(r#"{"k": 2}"#).unwrap();
        assert_eq!(c.alpha, 0.05);
        assert_eq!(c, ProtocolConfig::new(2));
        assert!(ProtocolConfig::from_json(r#"{"k": 2, "bogus": 1}"#).is_err());
    }

    #[test]
    fn full_document_round_trips() {
        let text = r#"{
            "k": 2, "alpha": 0.05,
            "envelope": {"d_max": 39.7, "gap": 20.0},
            "usvt": {"eps_p": 1.5},
            "centrality": {"functional": "katz", "beta": 0.006297229219143577},
            "clustering": {"delta": 0.1414213562373095},
            "selection": {"m": 5},
            "filtration": {"t_grid": [0.0, 0.1]}
        }"#;
        let c = ProtocolConfig::from_json(text).unwrap();
        assert_eq!(c.usvt.unwrap().threshold_scale, DEFAULT_USVT_SCALE);
        let back = ProtocolConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(c.validate(200).is_ok());
        assert!(matches!(c.validate(2), Err(Error::KOutOfRange { .. })));
    }
}

//! Run reports: what was done to which input, and the numbers that back it.

use locc_core::numerics::ComplexMatrix;
use locc_core::tree::{width_report, Node, ProtocolTree, WidthReport};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TOOL: &str = concat!("locc-slim ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WidthStats {
    pub max_outdegree: usize,
    pub max_nonzero_outdegree: usize,
    pub per_depth_max: Vec<usize>,
    pub leaves: usize,
    pub depth: usize,
    /// Largest local dimension any measurement acts on.
    pub d_loc: usize,
}

impl WidthStats {
    pub fn of(tree: &ProtocolTree) -> Self {
        let WidthReport {
            max_outdegree,
            max_nonzero_outdegree,
            per_depth_max,
            leaves,
            depth,
            ..
        } = width_report(tree);
        Self {
            max_outdegree,
            max_nonzero_outdegree,
            per_depth_max,
            leaves,
            depth,
            d_loc: max_local_dim(tree),
        }
    }
}

pub fn max_local_dim(tree: &ProtocolTree) -> usize {
    tree.vertices()
        .iter()
        .filter_map(|v| match v.node {
            Node::Measure { party, .. } => v.dims.get(*party).copied(),
            Node::Leaf { .. } => None,
        })
        .max()
        .unwrap_or(0)
}

/// max over measurement vertices of ‖Σ K†K − I‖_F.
pub fn completeness_residual(tree: &ProtocolTree) -> f64 {
    let mut worst: f64 = 0.0;
    for v in tree.vertices() {
        let Node::Measure { party, edges } = v.node else {
            continue;
        };
        let Some(&d) = v.dims.get(*party) else {
            return f64::INFINITY;
        };
        let mut sum = ComplexMatrix::zeros(d, d);
        for e in edges {
            if e.map.in_dim() != d {
                return f64::INFINITY;
            }
            sum = &sum + &e.map.effect();
        }
        worst = worst.max(sum.distance(&ComplexMatrix::identity(d)));
    }
    worst
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    /// 2·d_loc², the per-measurement outcome bound after compress-m1.
    pub two_d_loc_sq: usize,
    /// d_loc², the nonzero-outcome bound of slim components.
    pub d_loc_sq: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shared_randomness: Option<usize>,
}

impl Bounds {
    pub fn for_dim(d: usize) -> Self {
        Self {
            two_d_loc_sq: 2 * d * d,
            d_loc_sq: d * d,
            shared_randomness: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completeness: Option<f64>,
    /// Edge-wise |Σ λ_i s_i(e) − 1|.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recombination: Option<f64>,
    /// Per-outcome Choi distance of a reduced mixture.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choi: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SlimSummary {
    pub components: u128,
    pub emitted: usize,
    pub exhaustive: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_success: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub best_choices: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invalid_components: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retained: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub operation: String,
    pub status: String,
    /// sha256 over the input bytes, in argument order.
    pub input_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success_before: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success_after: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width_before: Option<WidthStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width_after: Option<WidthStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
    pub residuals: Residuals,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slim: Option<SlimSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl RunReport {
    pub fn new(operation: &str, inputs: &[&[u8]]) -> Self {
        Self {
            tool: TOOL.to_string(),
            operation: operation.to_string(),
            status: "ok".to_string(),
            input_digest: digest(inputs),
            ..Self::default()
        }
    }
}

pub fn digest(inputs: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for i in inputs {
        h.update(i);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

//! JSON encodings of matrices, ensembles, measurements and protocol trees.
//!
//! Complex matrices are `{rows, cols, data: [[re, im], …]}` in row-major
//! order. Trees carry a `"version": "locc-tree/1"` stamp; a vertex is either
//! `{label}` (leaf) or `{party, edges: [{kraus: [matrix…], child}]}`.

use locc_core::numerics::ComplexMatrix;
use locc_core::quantum::{CpMap, Ensemble, EnsembleMember, Instrument, InstrumentBranch, MultipartiteSpace, Povm};
use locc_core::tree::{Edge, Node, ProtocolTree};
use locc_core::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const TREE_VERSION: &str = "locc-tree/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            data: m.data().iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TryFrom<&MatrixJson> for ComplexMatrix {
    type Error = CliError;

    fn try_from(m: &MatrixJson) -> Result<Self, CliError> {
        let data = m.data.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        Ok(ComplexMatrix::from_vec(m.rows, m.cols, data)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberJson {
    pub weight: f64,
    pub state: MatrixJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleJson {
    pub space: Vec<usize>,
    pub members: Vec<MemberJson>,
}

impl From<&Ensemble> for EnsembleJson {
    fn from(e: &Ensemble) -> Self {
        Self {
            space: e.space().party_dims().to_vec(),
            members: e
                .members()
                .iter()
                .map(|m| MemberJson {
                    weight: m.weight,
                    state: (&m.state).into(),
                })
                .collect(),
        }
    }
}

impl TryFrom<&EnsembleJson> for Ensemble {
    type Error = CliError;

    fn try_from(e: &EnsembleJson) -> Result<Self, CliError> {
        let space = MultipartiteSpace::new(e.space.clone())?;
        let members = e
            .members
            .iter()
            .map(|m| {
                Ok(EnsembleMember {
                    weight: m.weight,
                    state: (&m.state).try_into()?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(Ensemble::new(space, members)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PovmJson {
    pub dim: usize,
    pub elements: Vec<MatrixJson>,
}

impl From<&Povm> for PovmJson {
    fn from(p: &Povm) -> Self {
        Self {
            dim: p.dim(),
            elements: p.elements().iter().map(Into::into).collect(),
        }
    }
}

impl TryFrom<&PovmJson> for Povm {
    type Error = CliError;

    fn try_from(p: &PovmJson) -> Result<Self, CliError> {
        let elements = p.elements.iter().map(TryInto::try_into).collect::<Result<Vec<_>, _>>()?;
        Ok(Povm::new(p.dim, elements)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchJson {
    pub label: usize,
    pub kraus: Vec<MatrixJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstrumentJson {
    pub in_dim: usize,
    pub branches: Vec<BranchJson>,
}

impl From<&Instrument> for InstrumentJson {
    fn from(i: &Instrument) -> Self {
        Self {
            in_dim: i.in_dim(),
            branches: i
                .branches()
                .iter()
                .map(|b| BranchJson {
                    label: b.label,
                    kraus: b.map.kraus().iter().map(Into::into).collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<&InstrumentJson> for Instrument {
    type Error = CliError;

    fn try_from(i: &InstrumentJson) -> Result<Self, CliError> {
        let branches = i
            .branches
            .iter()
            .map(|b| {
                let map = cp_map(i.in_dim, &b.kraus)?;
                Ok(InstrumentBranch { label: b.label, map })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(Instrument::new(i.in_dim, branches)?)
    }
}

fn cp_map(in_dim: usize, kraus: &[MatrixJson]) -> Result<CpMap, CliError> {
    let kraus = kraus.iter().map(TryInto::try_into).collect::<Result<Vec<ComplexMatrix>, _>>()?;
    let out_dim = kraus.first().map_or(in_dim, |k| k.rows());
    Ok(CpMap::new(in_dim, out_dim, kraus)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub kraus: Vec<MatrixJson>,
    pub child: NodeJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeJson {
    Leaf { label: usize },
    Measure { party: usize, edges: Vec<EdgeJson> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeJson {
    pub version: String,
    pub space: Vec<usize>,
    pub root: NodeJson,
}

impl From<&ProtocolTree> for TreeJson {
    fn from(t: &ProtocolTree) -> Self {
        fn node(n: &Node) -> NodeJson {
            match n {
                Node::Leaf { label } => NodeJson::Leaf { label: *label },
                Node::Measure { party, edges } => NodeJson::Measure {
                    party: *party,
                    edges: edges
                        .iter()
                        .map(|e| EdgeJson {
                            kraus: e.map.kraus().iter().map(Into::into).collect(),
                            child: node(&e.child),
                        })
                        .collect(),
                },
            }
        }
        Self {
            version: TREE_VERSION.to_string(),
            space: t.space().party_dims().to_vec(),
            root: node(t.root()),
        }
    }
}

impl TryFrom<&TreeJson> for ProtocolTree {
    type Error = CliError;

    /// Edge input dimensions follow the acting party's dimension on the
    /// path; a malformed edge is caught by `validate_tree`, not here.
    fn try_from(t: &TreeJson) -> Result<Self, CliError> {
        if t.version != TREE_VERSION {
            return Err(CliError::Format(format!("unsupported tree version {:?}", t.version)));
        }
        fn node(n: &NodeJson, dims: &[usize]) -> Result<Node, CliError> {
            match n {
                NodeJson::Leaf { label } => Ok(Node::leaf(*label)),
                NodeJson::Measure { party, edges } => {
                    let d = *dims
                        .get(*party)
                        .ok_or(CliError::Core(locc_core::Error::PartyOutOfRange {
                            party: *party,
                            parties: dims.len(),
                        }))?;
                    let edges = edges
                        .iter()
                        .map(|e| {
                            let kraus = e.kraus.iter().map(TryInto::try_into).collect::<Result<Vec<_>, _>>()?;
                            let in_dim = kraus.first().map_or(d, ComplexMatrix::cols);
                            let out_dim = kraus.first().map_or(d, ComplexMatrix::rows);
                            let map = CpMap::new(in_dim, out_dim, kraus)?;
                            let mut child_dims = dims.to_vec();
                            child_dims[*party] = out_dim;
                            Ok(Edge::new(map, node(&e.child, &child_dims)?))
                        })
                        .collect::<Result<Vec<_>, CliError>>()?;
                    Ok(Node::measure(*party, edges))
                }
            }
        }
        let space = MultipartiteSpace::new(t.space.clone())?;
        let root = node(&t.root, &t.space)?;
        Ok(ProtocolTree::new(space, root))
    }
}

pub fn tree_from_str(s: &str) -> Result<ProtocolTree, CliError> {
    let json: TreeJson = serde_json::from_str(s)?;
    (&json).try_into()
}

pub fn tree_to_string(t: &ProtocolTree) -> String {
    serde_json::to_string(&TreeJson::from(t)).expect("tree serializes")
}

pub fn ensemble_from_str(s: &str) -> Result<Ensemble, CliError> {
    let json: EnsembleJson = serde_json::from_str(s)?;
    (&json).try_into()
}

pub fn ensemble_to_string(e: &Ensemble) -> String {
    serde_json::to_string(&EnsembleJson::from(e)).expect("ensemble serializes")
}

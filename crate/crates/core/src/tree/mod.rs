//! LOCC protocols as finite rooted trees.
//!
//! A non-leaf vertex names the party that acts there; each outgoing edge
//! carries the CP map applied to that party's local system when the edge is
//! taken. The path from the root is the full classical transcript, so every
//! party can condition on it. Leaves carry the coarse-grained outcome label.
//!
//! Vertices are numbered in preorder (root = 0), and the per-party local
//! dimensions at a vertex follow from the edge maps on its root path.

pub(crate) mod eval;

use alloc::vec;
use alloc::vec::Vec;

pub use eval::{
    cumulative_map, evaluate_success, extract_instrument, relabel_leaves, CumulativeMap, Evaluation,
};

use crate::quantum::{CpMap, MultipartiteSpace, COMPLETENESS_TOL};
use crate::numerics::ComplexMatrix;

/// Preorder index of a vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub usize);

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub map: CpMap,
    pub child: Node,
}

impl Edge {
    pub fn new(map: CpMap, child: Node) -> Self {
        Self { map, child }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Leaf { label: usize },
    Measure { party: usize, edges: Vec<Edge> },
}

impl Node {
    pub fn leaf(label: usize) -> Self {
        Node::Leaf { label }
    }

    pub fn measure(party: usize, edges: Vec<Edge>) -> Self {
        Node::Measure { party, edges }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf { .. })
    }

    pub fn edges(&self) -> &[Edge] {
        match self {
            Node::Leaf { .. } => &[],
            Node::Measure { edges, .. } => edges,
        }
    }

    /// Number of vertices in this subtree.
    pub fn size(&self) -> usize {
        1 + self.edges().iter().map(|e| e.child.size()).sum::<usize>()
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Measure { edges, .. } => edges.iter().map(|e| e.child.leaf_count()).sum(),
        }
    }

    /// Number of measurement rounds on the longest path.
    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Measure { edges, .. } => 1 + edges.iter().map(|e| e.child.depth()).max().unwrap_or(0),
        }
    }
}

/// What a traversal sees at one vertex.
#[derive(Clone, Debug)]
pub struct VertexInfo<'a> {
    pub id: VertexId,
    pub depth: usize,
    pub dims: Vec<usize>,
    pub node: &'a Node,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolTree {
    space: MultipartiteSpace,
    root: Node,
}

impl ProtocolTree {
    pub fn new(space: MultipartiteSpace, root: Node) -> Self {
        Self { space, root }
    }

    /// A protocol that does nothing and always reports `label`.
    pub fn trivial(space: MultipartiteSpace, label: usize) -> Self {
        Self::new(space, Node::leaf(label))
    }

    pub fn space(&self) -> &MultipartiteSpace {
        &self.space
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn into_root(self) -> Node {
        self.root
    }

    pub fn vertex_count(&self) -> usize {
        self.root.size()
    }

    pub fn leaf_count(&self) -> usize {
        self.root.leaf_count()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Preorder walk with the local dimensions in force at each vertex.
    pub fn vertices(&self) -> Vec<VertexInfo<'_>> {
        let mut out = Vec::with_capacity(self.vertex_count());
        collect_vertices(&self.root, 0, self.space.party_dims().to_vec(), &mut out);
        out
    }

    pub fn is_fine_grained(&self) -> bool {
        fn fine(node: &Node) -> bool {
            node.edges()
                .iter()
                .all(|e| e.map.kraus().len() == 1 && fine(&e.child))
        }
        fine(&self.root)
    }

    /// Root path to vertex `id` as (acting party, dims before the edge, edge).
    pub fn path_to(&self, id: VertexId) -> Option<Vec<(usize, Vec<usize>, &Edge)>> {
        let mut path = Vec::new();
        let mut node = &self.root;
        let mut dims = self.space.party_dims().to_vec();
        let mut next = 0usize;
        loop {
            if next == id.0 {
                return Some(path);
            }
            let Node::Measure { party, edges } = node else {
                return None;
            };
            next += 1;
            let mut found = None;
            for e in edges {
                let size = e.child.size();
                if id.0 < next + size {
                    found = Some(e);
                    break;
                }
                next += size;
            }
            let e = found?;
            path.push((*party, dims.clone(), e));
            if *party < dims.len() {
                dims[*party] = e.map.out_dim();
            }
            node = &e.child;
        }
    }

    /// Subtree rooted at `id` together with the dims in force there.
    pub fn subtree(&self, id: VertexId) -> Option<(&Node, Vec<usize>)> {
        let path = self.path_to(id)?;
        let mut dims = self.space.party_dims().to_vec();
        let mut node = &self.root;
        for (party, _, e) in &path {
            dims[*party] = e.map.out_dim();
            node = &e.child;
        }
        Some((node, dims))
    }
}

fn collect_vertices<'a>(node: &'a Node, depth: usize, dims: Vec<usize>, out: &mut Vec<VertexInfo<'a>>) {
    let id = VertexId(out.len());
    out.push(VertexInfo {
        id,
        depth,
        dims: dims.clone(),
        node,
    });
    if let Node::Measure { party, edges } = node {
        for e in edges {
            let mut child_dims = dims.clone();
            if *party < child_dims.len() {
                child_dims[*party] = e.map.out_dim();
            }
            collect_vertices(&e.child, depth + 1, child_dims, out);
        }
    }
}

/// One violated invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    PartyOutOfRange { party: usize, parties: usize },
    EmptyMeasurement,
    /// Edge map input dimension differs from the acting party's local dim.
    EdgeDimension { edge: usize, expected: usize, found: usize },
    /// ‖Σ K†K − I‖_F over the vertex exceeds the tolerance.
    Incomplete { defect: f64 },
    NonFinite { edge: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub vertex: VertexId,
    pub violation: Violation,
}

pub fn validate_tree(tree: &ProtocolTree) -> Vec<Diagnostic> {
    validate_tree_with(tree, COMPLETENESS_TOL)
}

/// Lists every violated invariant; an empty list means the tree is valid.
pub fn validate_tree_with(tree: &ProtocolTree, completeness_tol: f64) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for info in tree.vertices() {
        let Node::Measure { party, edges } = info.node else {
            continue;
        };
        let mut report = |violation| {
            out.push(Diagnostic {
                vertex: info.id,
                violation,
            })
        };
        let Some(&d) = info.dims.get(*party) else {
            report(Violation::PartyOutOfRange {
                party: *party,
                parties: info.dims.len(),
            });
            continue;
        };
        if edges.is_empty() {
            report(Violation::EmptyMeasurement);
            continue;
        }
        let mut dims_ok = true;
        for (k, e) in edges.iter().enumerate() {
            if e.map.in_dim() != d {
                report(Violation::EdgeDimension {
                    edge: k,
                    expected: d,
                    found: e.map.in_dim(),
                });
                dims_ok = false;
            }
            if e.map
                .kraus()
                .iter()
                .any(|m| m.data().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()))
            {
                report(Violation::NonFinite { edge: k });
                dims_ok = false;
            }
        }
        if !dims_ok {
            continue;
        }
        let mut total = ComplexMatrix::zeros(d, d);
        for e in edges {
            total = &total + &e.map.effect();
        }
        let defect = total.distance(&ComplexMatrix::identity(d));
        if defect > completeness_tol {
            report(Violation::Incomplete { defect });
        }
    }
    out
}

/// Splits every edge into one edge per Kraus operator, copying the subtree
/// below it. Leaf labels are kept, so the implemented instrument is unchanged.
pub fn fine_grain(tree: &ProtocolTree) -> ProtocolTree {
    fn split(node: &Node) -> Node {
        match node {
            Node::Leaf { label } => Node::leaf(*label),
            Node::Measure { party, edges } => {
                let mut out = Vec::new();
                for e in edges {
                    let child = split(&e.child);
                    let (din, dout) = (e.map.in_dim(), e.map.out_dim());
                    if e.map.kraus().is_empty() {
                        out.push(Edge::new(CpMap::from_kraus(ComplexMatrix::zeros(dout, din)), child));
                        continue;
                    }
                    for k in e.map.kraus() {
                        out.push(Edge::new(CpMap::from_kraus(k.clone()), child.clone()));
                    }
                }
                Node::measure(*party, out)
            }
        }
    }
    ProtocolTree::new(tree.space.clone(), split(&tree.root))
}

/// Structural width statistics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WidthReport {
    /// (vertex, outdegree, outdegree counting nonzero edge maps) per non-leaf vertex.
    pub outdegrees: Vec<(VertexId, usize, usize)>,
    /// Largest outdegree among vertices at each depth.
    pub per_depth_max: Vec<usize>,
    pub max_outdegree: usize,
    pub max_nonzero_outdegree: usize,
    pub leaves: usize,
    pub depth: usize,
}

impl WidthReport {
    /// Does every vertex satisfy `outdegree ≤ bound(local dim)`?
    pub fn within(&self, tree: &ProtocolTree, nonzero_only: bool, bound: impl Fn(usize) -> usize) -> bool {
        let verts = tree.vertices();
        self.outdegrees.iter().all(|&(id, all, nz)| {
            let info = &verts[id.0];
            let Node::Measure { party, .. } = info.node else {
                return true;
            };
            let d = info.dims[*party];
            (if nonzero_only { nz } else { all }) <= bound(d)
        })
    }
}

pub fn width_report(tree: &ProtocolTree) -> WidthReport {
    let mut outdegrees = Vec::new();
    let mut per_depth_max: Vec<usize> = vec![];
    for info in tree.vertices() {
        if let Node::Measure { edges, .. } = info.node {
            let nz = edges.iter().filter(|e| !e.map.is_zero()).count();
            outdegrees.push((info.id, edges.len(), nz));
            if per_depth_max.len() <= info.depth {
                per_depth_max.resize(info.depth + 1, 0);
            }
            per_depth_max[info.depth] = per_depth_max[info.depth].max(edges.len());
        }
    }
    WidthReport {
        max_outdegree: outdegrees.iter().map(|o| o.1).max().unwrap_or(0),
        max_nonzero_outdegree: outdegrees.iter().map(|o| o.2).max().unwrap_or(0),
        outdegrees,
        per_depth_max,
        leaves: tree.leaf_count(),
        depth: tree.depth(),
    }
}

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{Node, ProtocolTree, VertexId};
use crate::error::Error;
use crate::numerics::ComplexMatrix;
use crate::quantum::{embed_local, CpMap, Ensemble, Instrument, InstrumentBranch, COMPLETENESS_TOL};

/// The composition 𝒩_v of embedded edge maps along the root path of `v`,
/// acting on the global input space.
#[derive(Clone, Debug, PartialEq)]
pub struct CumulativeMap {
    pub vertex: VertexId,
    pub map: CpMap,
    /// Per-party dimensions after the path.
    pub dims: Vec<usize>,
}

pub fn cumulative_map(tree: &ProtocolTree, v: VertexId) -> Result<CumulativeMap, Error> {
    let path = tree
        .path_to(v)
        .ok_or(Error::InvalidTree("vertex not in tree"))?;
    let total = tree.space().total_dim();
    let mut map = CpMap::identity(total);
    let mut dims = tree.space().party_dims().to_vec();
    for (party, before, edge) in path {
        let kraus = edge
            .map
            .kraus()
            .iter()
            .map(|k| embed_local(k, party, &before))
            .collect::<Result<Vec<_>, _>>()?;
        dims[party] = edge.map.out_dim();
        let out: usize = dims.iter().product();
        let step = CpMap::new(map.out_dim(), out, kraus)?;
        map = map.then(&step)?;
    }
    Ok(CumulativeMap { vertex: v, map, dims })
}

/// Success probability and the label used at every leaf (preorder).
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub success: f64,
    pub labels: Vec<(VertexId, usize)>,
}

/// Σ_leaves p_{f(v)} tr 𝒩_v(ρ_{f(v)}).
///
/// With `relabel` every leaf instead guesses the state with the largest
/// posterior weight p_k tr 𝒩_v(ρ_k), lowest index on ties.
pub fn evaluate_success(tree: &ProtocolTree, ensemble: &Ensemble, relabel: bool) -> Result<Evaluation, Error> {
    if ensemble.space().party_dims() != tree.space().party_dims() {
        return Err(Error::DimensionMismatch {
            expected: tree.space().total_dim(),
            found: ensemble.space().total_dim(),
        });
    }
    if !ensemble.is_normalized() {
        return Err(Error::InvalidEnsemble("success is defined for normalized ensembles"));
    }
    let mut labels = Vec::new();
    let sigmas = ensemble.weighted_states();
    let mut counter = 0;
    let success = walk(
        tree.root(),
        tree.space().party_dims(),
        &sigmas,
        relabel,
        &mut counter,
        &mut labels,
    )?;
    Ok(Evaluation { success, labels })
}

/// Success of a subtree on unnormalized operators σ_k, labels fixed.
pub(crate) fn node_success(node: &Node, dims: &[usize], sigmas: &[ComplexMatrix]) -> Result<f64, Error> {
    let mut counter = 0;
    let mut labels = Vec::new();
    walk(node, dims, sigmas, false, &mut counter, &mut labels)
}

/// Applies one edge map at `party` to every σ_k.
pub(crate) fn push_through(
    map: &CpMap,
    party: usize,
    dims: &[usize],
    sigmas: &[ComplexMatrix],
) -> Result<(Vec<usize>, Vec<ComplexMatrix>), Error> {
    let kraus = map
        .kraus()
        .iter()
        .map(|k| embed_local(k, party, dims))
        .collect::<Result<Vec<_>, _>>()?;
    let mut child_dims = dims.to_vec();
    child_dims[party] = map.out_dim();
    let out: usize = child_dims.iter().product();
    let next = sigmas
        .iter()
        .map(|s| {
            let mut acc = ComplexMatrix::zeros(out, out);
            for k in &kraus {
                acc = &acc + &k.sandwich(s);
            }
            acc
        })
        .collect();
    Ok((child_dims, next))
}

fn walk(
    node: &Node,
    dims: &[usize],
    sigmas: &[ComplexMatrix],
    relabel: bool,
    counter: &mut usize,
    labels: &mut Vec<(VertexId, usize)>,
) -> Result<f64, Error> {
    let id = VertexId(*counter);
    *counter += 1;
    match node {
        Node::Leaf { label } => {
            if relabel {
                let mut best = 0;
                let mut best_val = f64::NEG_INFINITY;
                for (k, s) in sigmas.iter().enumerate() {
                    let v = s.trace_re();
                    if v > best_val {
                        best_val = v;
                        best = k;
                    }
                }
                labels.push((id, best));
                Ok(best_val.max(0.0))
            } else {
                let s = sigmas.get(*label).ok_or(Error::LabelOutOfRange {
                    label: *label,
                    members: sigmas.len(),
                })?;
                labels.push((id, *label));
                Ok(s.trace_re())
            }
        }
        Node::Measure { party, edges } => {
            if *party >= dims.len() {
                return Err(Error::PartyOutOfRange {
                    party: *party,
                    parties: dims.len(),
                });
            }
            let mut total = 0.0;
            for e in edges {
                let (child_dims, next) = push_through(&e.map, *party, dims, sigmas)?;
                total += walk(&e.child, &child_dims, &next, relabel, counter, labels)?;
            }
            Ok(total)
        }
    }
}

/// Copy of the tree with every leaf label replaced by the maximum-posterior guess.
pub fn relabel_leaves(tree: &ProtocolTree, ensemble: &Ensemble) -> Result<ProtocolTree, Error> {
    let eval = evaluate_success(tree, ensemble, true)?;
    let mut labels = eval.labels.into_iter().map(|(_, l)| l);
    fn apply(node: &Node, labels: &mut impl Iterator<Item = usize>) -> Node {
        match node {
            Node::Leaf { .. } => Node::leaf(labels.next().unwrap_or(0)),
            Node::Measure { party, edges } => Node::measure(
                *party,
                edges
                    .iter()
                    .map(|e| super::Edge::new(e.map.clone(), apply(&e.child, labels)))
                    .collect(),
            ),
        }
    }
    let root = apply(tree.root(), &mut labels);
    Ok(ProtocolTree::new(tree.space().clone(), root))
}

/// ℐ_o = Σ_{v ∈ f⁻¹(o)} 𝒩_v, one branch per distinct leaf label (ascending).
pub fn extract_instrument(tree: &ProtocolTree) -> Result<Instrument, Error> {
    let mut by_label: BTreeMap<usize, CpMap> = BTreeMap::new();
    for info in tree.vertices() {
        let Node::Leaf { label } = info.node else {
            continue;
        };
        let cm = cumulative_map(tree, info.id)?;
        let merged = match by_label.remove(label) {
            Some(prev) => prev.union(&cm.map)?,
            None => cm.map,
        };
        by_label.insert(*label, merged);
    }
    let branches = by_label
        .into_iter()
        .map(|(label, map)| InstrumentBranch { label, map })
        .collect();
    Instrument::with_tolerance(tree.space().total_dim(), branches, COMPLETENESS_TOL)
}

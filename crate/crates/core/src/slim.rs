//! Convex decomposition of a protocol into slim protocols, whose measurements
//! on a `d`-dimensional local system have at most `d²` nonzero outcomes.
//!
//! Each vertex POVM {A_e†A_e} splits into components with per-edge scalars;
//! a component tree picks one component per vertex and scales every edge map
//! by its scalar. Edge maps stay proportional to the source maps and average
//! back to them, so anything linear in the instrument is an average over
//! components and the best component is at least as good as the source.

use alloc::vec;
use alloc::vec::Vec;

use crate::caratheodory::{self, WeightedPointSet};
use crate::error::Error;
use crate::numerics::{vec_norm, ComplexMatrix, RANK_TOL};
use crate::quantum::{choi_of, Ensemble, Instrument, Povm};
use crate::tree::{self, Edge, Node, ProtocolTree, VertexId};

/// Default limit on materialized or exhaustively searched components.
pub const DEFAULT_CAP: usize = 100_000;

/// One component of a POVM: weight λ and a nonnegative scalar per element.
///
/// The scaled elements scalars[i]·E_i already sum to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct PovmComponent {
    pub lambda: f64,
    pub scalars: Vec<f64>,
}

impl PovmComponent {
    pub fn nonzero(&self) -> usize {
        self.scalars.iter().filter(|&&s| s > 0.0).count()
    }
}

/// Splits a POVM into components with at most `d²` nonzero elements each.
///
/// Elements become points E_i/tr E_i with weights tr E_i / d around I/d, and
/// the weight vector is peeled into small-support pieces.
pub fn decompose_povm_slim(povm: &Povm) -> Result<Vec<PovmComponent>, Error> {
    decompose_povm_slim_with(povm, RANK_TOL)
}

pub fn decompose_povm_slim_with(povm: &Povm, rank_tol: f64) -> Result<Vec<PovmComponent>, Error> {
    decompose_elements(povm.elements(), povm.dim(), rank_tol)
}

fn decompose_elements(elements: &[ComplexMatrix], d: usize, rank_tol: f64) -> Result<Vec<PovmComponent>, Error> {
    let traces: Vec<f64> = elements.iter().map(|e| e.trace_re()).collect();
    let live: Vec<usize> = (0..elements.len()).filter(|&i| traces[i] > 0.0).collect();
    if live.len() <= d * d {
        return Ok(vec![PovmComponent {
            lambda: 1.0,
            scalars: vec![1.0; elements.len()],
        }]);
    }
    let points: Vec<Vec<f64>> = live
        .iter()
        .map(|&i| {
            let mut v = caratheodory::hermitian_coordinates(&elements[i].scale(1.0 / traces[i]));
            v.remove(d - 1);
            v
        })
        .collect();
    let total: f64 = live.iter().map(|&i| traces[i]).sum();
    let weights: Vec<f64> = live.iter().map(|&i| traces[i] / total).collect();
    let set = WeightedPointSet::new(d * d - 1, points, weights.clone())?;
    let pieces = caratheodory::peel_decompose_with(&set, rank_tol)?;
    Ok(pieces
        .into_iter()
        .map(|(lambda, sub)| {
            // Zero elements are kept with scalar 1 in every component.
            let mut scalars = vec![1.0; elements.len()];
            for (slot, &i) in live.iter().enumerate() {
                scalars[i] = sub.weights()[slot] / weights[slot];
            }
            PovmComponent { lambda, scalars }
        })
        .collect())
}

/// One slim component tree.
#[derive(Clone, Debug, PartialEq)]
pub struct SlimComponent {
    pub lambda: f64,
    /// Component index chosen at each measurement vertex (preorder).
    pub choices: Vec<usize>,
    pub tree: ProtocolTree,
}

/// Per-vertex decompositions of a fine-grained protocol; components are
/// their products and are produced on demand.
#[derive(Clone, Debug)]
pub struct SlimDecomposition {
    source: ProtocolTree,
    vertices: Vec<VertexId>,
    local_dims: Vec<usize>,
    components: Vec<Vec<PovmComponent>>,
}

/// Decomposes every measurement vertex; the tree is fine-grained first if needed.
pub fn slim_decompose_tree(tree: &ProtocolTree) -> Result<SlimDecomposition, Error> {
    slim_decompose_tree_with(tree, RANK_TOL)
}

pub fn slim_decompose_tree_with(tree: &ProtocolTree, rank_tol: f64) -> Result<SlimDecomposition, Error> {
    let source = if tree.is_fine_grained() {
        tree.clone()
    } else {
        tree::fine_grain(tree)
    };
    let mut vertices = Vec::new();
    let mut local_dims = Vec::new();
    let mut components = Vec::new();
    for info in source.vertices() {
        let Node::Measure { party, edges } = info.node else {
            continue;
        };
        let d = *info.dims.get(*party).ok_or(Error::PartyOutOfRange {
            party: *party,
            parties: info.dims.len(),
        })?;
        let elements: Vec<ComplexMatrix> = edges
            .iter()
            .map(|e| e.map.kraus().first().map_or_else(|| ComplexMatrix::zeros(d, d), |k| k.gram()))
            .collect();
        vertices.push(info.id);
        local_dims.push(d);
        components.push(decompose_elements(&elements, d, rank_tol)?);
    }
    Ok(SlimDecomposition {
        source,
        vertices,
        local_dims,
        components,
    })
}

impl SlimDecomposition {
    /// The fine-grained tree the components are built from.
    pub fn source(&self) -> &ProtocolTree {
        &self.source
    }

    /// Measurement vertices in preorder with their local dimension and components.
    pub fn vertex_components(&self) -> impl Iterator<Item = (VertexId, usize, &[PovmComponent])> {
        self.vertices
            .iter()
            .zip(&self.local_dims)
            .zip(&self.components)
            .map(|((&v, &d), c)| (v, d, c.as_slice()))
    }

    /// Number of component trees, saturating at `u128::MAX`.
    pub fn count(&self) -> u128 {
        self.components
            .iter()
            .fold(1u128, |acc, c| acc.saturating_mul(c.len() as u128))
    }

    /// Lazily enumerates all components in lexicographic choice order.
    pub fn iter(&self) -> SlimComponents<'_> {
        SlimComponents {
            decomposition: self,
            next: Some(vec![0; self.components.len()]),
        }
    }

    /// All components, or `CapExceeded` if there are more than `cap`.
    pub fn materialize(&self, cap: usize) -> Result<Vec<SlimComponent>, Error> {
        let count = self.count();
        if count > cap as u128 {
            return Err(Error::CapExceeded { count, cap });
        }
        Ok(self.iter().collect())
    }

    /// The component with the given per-vertex choices.
    pub fn component(&self, choices: &[usize]) -> Result<SlimComponent, Error> {
        if choices.len() != self.components.len() {
            return Err(Error::DimensionMismatch {
                expected: self.components.len(),
                found: choices.len(),
            });
        }
        let mut lambda = 1.0;
        for (c, &j) in self.components.iter().zip(choices) {
            lambda *= c
                .get(j)
                .ok_or(Error::InvalidMeasurement("component choice out of range"))?
                .lambda;
        }
        let partial: Vec<Option<usize>> = choices.iter().map(|&j| Some(j)).collect();
        Ok(SlimComponent {
            lambda,
            choices: choices.to_vec(),
            tree: self.build(&partial),
        })
    }

    /// Source tree with chosen vertices scaled and `None` vertices left whole.
    fn build(&self, choices: &[Option<usize>]) -> ProtocolTree {
        let mut next = 0;
        let root = self.build_node(self.source.root(), choices, &mut next);
        ProtocolTree::new(self.source.space().clone(), root)
    }

    fn build_node(&self, node: &Node, choices: &[Option<usize>], next: &mut usize) -> Node {
        let Node::Measure { party, edges } = node else {
            return node.clone();
        };
        let k = *next;
        *next += 1;
        let scalars = choices[k].map(|j| &self.components[k][j].scalars);
        let edges = edges
            .iter()
            .enumerate()
            .map(|(e, edge)| {
                let map = match scalars {
                    Some(s) if s[e] != 1.0 => edge.map.scaled(s[e]),
                    _ => edge.map.clone(),
                };
                Edge::new(map, self.build_node(&edge.child, choices, next))
            })
            .collect();
        Node::measure(*party, edges)
    }

    /// max over edges of |Σ_i λ_i·scalar_i(e) − 1| for the given components.
    pub fn edge_residual(&self, components: &[SlimComponent]) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, comps) in self.components.iter().enumerate() {
            let edges = comps[0].scalars.len();
            for e in 0..edges {
                let sum: f64 = components
                    .iter()
                    .map(|c| c.lambda * comps[c.choices[k]].scalars[e])
                    .sum();
                worst = worst.max((sum - 1.0).abs());
            }
        }
        let total: f64 = components.iter().map(|c| c.lambda).sum();
        worst.max((total - 1.0).abs())
    }
}

/// Streaming enumeration of [`SlimDecomposition`] components.
pub struct SlimComponents<'a> {
    decomposition: &'a SlimDecomposition,
    next: Option<Vec<usize>>,
}

impl Iterator for SlimComponents<'_> {
    type Item = SlimComponent;

    fn next(&mut self) -> Option<SlimComponent> {
        let choices = self.next.take()?;
        let item = self.decomposition.component(&choices).ok();
        let mut succ = choices;
        let mut carry = true;
        for k in (0..succ.len()).rev() {
            succ[k] += 1;
            if succ[k] < self.decomposition.components[k].len() {
                carry = false;
                break;
            }
            succ[k] = 0;
        }
        if !carry {
            self.next = Some(succ);
        }
        item
    }
}

/// Per-edge scalars s_e ≥ 0 (preorder) with component edge map = s_e · source
/// edge map, or `None` if the trees differ in structure or some edge is not
/// proportional within `tol` (Frobenius, relative to the source Kraus).
pub fn edge_scalars(source: &ProtocolTree, component: &ProtocolTree, tol: f64) -> Option<Vec<f64>> {
    fn walk(a: &Node, b: &Node, tol: f64, out: &mut Vec<f64>) -> bool {
        match (a, b) {
            (Node::Leaf { label: x }, Node::Leaf { label: y }) => x == y,
            (Node::Measure { party: p, edges: ea }, Node::Measure { party: q, edges: eb }) => {
                if p != q || ea.len() != eb.len() {
                    return false;
                }
                for (x, y) in ea.iter().zip(eb) {
                    let (ka, kb) = (x.map.kraus(), y.map.kraus());
                    if ka.len() != kb.len() || x.map.out_dim() != y.map.out_dim() {
                        return false;
                    }
                    let na: f64 = ka.iter().map(|k| k.frobenius_norm().powi(2)).sum();
                    let nb: f64 = kb.iter().map(|k| k.frobenius_norm().powi(2)).sum();
                    let s = if na > 0.0 { nb / na } else { 0.0 };
                    let r = libm::sqrt(s);
                    let err: f64 = ka
                        .iter()
                        .zip(kb)
                        .map(|(u, v)| u.scale(r).distance(v).powi(2))
                        .sum();
                    if libm::sqrt(err) > tol * libm::sqrt(na).max(1.0) {
                        return false;
                    }
                    out.push(s);
                    if !walk(&x.child, &y.child, tol, out) {
                        return false;
                    }
                }
                true
            }
            _ => false,
        }
    }
    if source.space() != component.space() {
        return None;
    }
    let mut out = Vec::new();
    walk(source.root(), component.root(), tol, &mut out).then_some(out)
}

/// Copy of the tree without edges whose map is zero.
pub fn prune_zero_edges(tree: &ProtocolTree) -> ProtocolTree {
    fn prune(node: &Node) -> Node {
        match node {
            Node::Leaf { .. } => node.clone(),
            Node::Measure { party, edges } => Node::measure(
                *party,
                edges
                    .iter()
                    .filter(|e| !e.map.is_zero())
                    .map(|e| Edge::new(e.map.clone(), prune(&e.child)))
                    .collect(),
            ),
        }
    }
    ProtocolTree::new(tree.space().clone(), prune(tree.root()))
}

/// Result of [`best_slim`].
#[derive(Clone, Debug, PartialEq)]
pub struct BestSlim {
    pub component: SlimComponent,
    pub success: f64,
    /// Success of the (fine-grained) source protocol.
    pub source_success: f64,
    /// Whether every component was evaluated.
    pub exhaustive: bool,
    pub evaluated: usize,
}

/// The slim component with the highest success probability.
///
/// With at most `cap` components all are evaluated (first maximum wins).
/// Otherwise vertices are fixed one at a time in preorder, each to the
/// component that maximizes success with the later vertices still whole;
/// success is linear in each vertex's scalars, so this never drops below the
/// source success. The result is then flagged non-exhaustive.
pub fn best_slim(tree: &ProtocolTree, ensemble: &Ensemble, cap: usize) -> Result<BestSlim, Error> {
    let decomposition = slim_decompose_tree(tree)?;
    best_slim_of(&decomposition, ensemble, cap)
}

pub fn best_slim_of(decomposition: &SlimDecomposition, ensemble: &Ensemble, cap: usize) -> Result<BestSlim, Error> {
    let source_success = tree::evaluate_success(decomposition.source(), ensemble, false)?.success;
    if decomposition.count() <= cap as u128 {
        let mut best: Option<(f64, SlimComponent)> = None;
        let mut evaluated = 0;
        for comp in decomposition.iter() {
            let t = tree::evaluate_success(&comp.tree, ensemble, false)?.success;
            evaluated += 1;
            if best.as_ref().is_none_or(|(b, _)| t > *b) {
                best = Some((t, comp));
            }
        }
        let (success, component) = best.ok_or(Error::InvalidTree("no components"))?;
        return Ok(BestSlim {
            component,
            success,
            source_success,
            exhaustive: true,
            evaluated,
        });
    }

    let n = decomposition.components.len();
    let mut partial: Vec<Option<usize>> = vec![None; n];
    let mut evaluated = 0;
    let mut success = source_success;
    for k in 0..n {
        let mut best_j = 0;
        let mut best_t = f64::NEG_INFINITY;
        for j in 0..decomposition.components[k].len() {
            partial[k] = Some(j);
            let t = tree::evaluate_success(&decomposition.build(&partial), ensemble, false)?.success;
            evaluated += 1;
            if t > best_t {
                best_t = t;
                best_j = j;
            }
        }
        partial[k] = Some(best_j);
        success = best_t;
    }
    let choices: Vec<usize> = partial.into_iter().map(|j| j.unwrap_or(0)).collect();
    Ok(BestSlim {
        component: decomposition.component(&choices)?,
        success,
        source_success,
        exhaustive: false,
        evaluated,
    })
}

/// R = Σ_i D₀²·D_i² − D₀² + 1.
pub fn shared_randomness_bound(d0: usize, out_dims: &[usize]) -> usize {
    out_dims.iter().map(|&di| d0 * d0 * di * di).sum::<usize>() + 1 - d0 * d0
}

/// Outcome of [`reduce_shared_randomness`].
#[derive(Clone, Debug, PartialEq)]
pub struct SharedRandomness {
    /// (index into the input list, new weight μ).
    pub retained: Vec<(usize, f64)>,
    pub bound: usize,
    /// Affine dimension of the instrument Choi vectors.
    pub affine_dim: usize,
}

/// Keeps at most R of the weighted instruments with new weights such that
/// every outcome's Choi mixture is unchanged.
///
/// All instruments must have input dimension `d0` and the same labels, with
/// the i-th label's branch mapping into dimension `out_dims[i]`.
pub fn reduce_shared_randomness(
    components: &[(f64, Instrument)],
    d0: usize,
    out_dims: &[usize],
) -> Result<SharedRandomness, Error> {
    reduce_shared_randomness_with(components, d0, out_dims, RANK_TOL)
}

pub fn reduce_shared_randomness_with(
    components: &[(f64, Instrument)],
    d0: usize,
    out_dims: &[usize],
    rank_tol: f64,
) -> Result<SharedRandomness, Error> {
    let bound = shared_randomness_bound(d0, out_dims);
    let Some((_, first)) = components.first() else {
        return Err(Error::InvalidWeights("no components"));
    };
    let labels = first.labels();
    if labels.len() != out_dims.len() {
        return Err(Error::DimensionMismatch {
            expected: out_dims.len(),
            found: labels.len(),
        });
    }
    let mut vectors = Vec::with_capacity(components.len());
    for (_, inst) in components {
        if inst.in_dim() != d0 || inst.labels() != labels {
            return Err(Error::InvalidMeasurement("instruments differ in input dimension or labels"));
        }
        let mut v = Vec::new();
        for (b, &di) in inst.branches().iter().zip(out_dims) {
            if b.map.out_dim() != di {
                return Err(Error::DimensionMismatch {
                    expected: di,
                    found: b.map.out_dim(),
                });
            }
            v.extend(caratheodory::hermitian_coordinates(&choi_of(&b.map).matrix));
        }
        vectors.push(v);
    }
    let weights: Vec<f64> = components.iter().map(|(w, _)| *w).collect();
    let (coords, affine_dim) = affine_coordinates(&vectors, rank_tol);
    let set = WeightedPointSet::new(affine_dim, coords, weights)?;
    let reduced = caratheodory::reduce_support_with(&set, rank_tol)?;
    let retained: Vec<(usize, f64)> = reduced
        .weights()
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(i, &w)| (i, w))
        .collect();
    if retained.len() > bound {
        return Err(Error::CapExceeded {
            count: retained.len() as u128,
            cap: bound,
        });
    }
    Ok(SharedRandomness {
        retained,
        bound,
        affine_dim,
    })
}

/// Coordinates of the points in an orthonormal basis of their affine hull
/// (relative to the first point); directions below `rank_tol` of the spread
/// are dropped.
fn affine_coordinates(points: &[Vec<f64>], rank_tol: f64) -> (Vec<Vec<f64>>, usize) {
    let origin = &points[0];
    let centred: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().zip(origin).map(|(a, b)| a - b).collect())
        .collect();
    let scale = centred.iter().map(|v| vec_norm(v)).fold(0.0, f64::max);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in &centred {
        let mut r = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = r.iter().zip(b).map(|(x, y)| x * y).sum();
                r.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
            }
        }
        let norm = vec_norm(&r);
        if norm > rank_tol * scale && norm > 0.0 {
            basis.push(r.into_iter().map(|x| x / norm).collect());
        }
    }
    let coords = centred
        .iter()
        .map(|v| {
            basis
                .iter()
                .map(|b| v.iter().zip(b).map(|(x, y)| x * y).sum())
                .collect()
        })
        .collect();
    let dim = basis.len();
    (coords, dim)
}

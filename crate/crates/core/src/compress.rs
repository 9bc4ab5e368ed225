//! Width compression that keeps the success probability: every measurement on
//! a `d`-dimensional local system ends up with at most `2·d²` outcomes.
//!
//! Per vertex, top-down:
//!
//! 1. Each outcome `i` gets its reach probability `q_i` and the success `t_i`
//!    of its subtree on the normalized post-measurement ensemble; the vertex
//!    success is `T = Σ q_i t_i`.
//! 2. [`equalize`] merges an outcome above `T` with one below into
//!    `B = √(A_i†A_i + s·A_k†A_k)` (or the mirrored form when `s > 1`) so that
//!    every outcome's conditional success becomes `T`. A binary second stage
//!    ([`matrix_sum_split`]) recovers the original pieces.
//! 3. [`caratheodory_stage`] keeps at most `d²` of the equalized elements,
//!    rescaled to stay complete.
//! 4. Each kept outcome composed with its second stage is one local
//!    measurement whose outcomes are positive multiples of original outcomes,
//!    so the subtrees below are reused (compressed recursively).
//!
//! Vertices that already have at most `2·d²` outcomes are kept as they are;
//! only their subtrees are visited.
//!
//! The construction does not assume the input protocol is optimal: `t_i` is
//! whatever the given subtree achieves, and the merged continuation is the
//! binary split followed by the original subtrees.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::caratheodory::{self, WeightedPointSet};
use crate::error::Error;
use crate::numerics::{hermitian_eig, inv_sqrt_on_support, sqrt_psd, ComplexMatrix, RANK_TOL};
use crate::quantum::Ensemble;
use crate::tree::{self, Edge, Node, ProtocolTree, VertexId};

/// Numerical knobs for the compressor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// |t_i − T| at or below this counts as equalized.
    pub equalize: f64,
    /// Outcomes reached with probability at or below this are not equalized.
    pub prob_cutoff: f64,
    /// Relative rank tolerance for supports and affine dependencies.
    pub rank: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            equalize: 1e-8,
            prob_cutoff: 1e-12,
            rank: RANK_TOL,
        }
    }
}

/// Matrices C, D with C·√(X†X+Y†Y) = X, D·√(X†X+Y†Y) = Y and C†C + D†D = I.
///
/// On a singular X†X+Y†Y the inverse square root is taken on the support and C
/// additionally maps the kernel isometrically onto directions orthogonal to
/// the range of X·(X†X+Y†Y)^{-1/2}. If X has too few rows for that, the kernel
/// is spread over C and D together, which needs rows(X) + rows(Y) ≥ cols.
pub fn matrix_sum_split(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix), Error> {
    matrix_sum_split_with(x, y, RANK_TOL)
}

pub fn matrix_sum_split_with(
    x: &ComplexMatrix,
    y: &ComplexMatrix,
    rank_tol: f64,
) -> Result<(ComplexMatrix, ComplexMatrix), Error> {
    if x.cols() != y.cols() {
        return Err(Error::DimensionMismatch {
            expected: x.cols(),
            found: y.cols(),
        });
    }
    let m = &x.gram() + &y.gram();
    let (pinv_sqrt, null_proj) = inv_sqrt_on_support(&m, rank_tol)?;
    let mut cm = x.matmul(&pinv_sqrt);
    let dm = y.matmul(&pinv_sqrt);
    let null_basis = eigvecs_for(&null_proj, true)?;
    if null_basis.is_empty() {
        return Ok((cm, dm));
    }
    let k = null_basis.len();
    if x.rows() >= k + rank_of(&cm) {
        complete_kernel(&mut cm, &null_basis)?;
        return Ok((cm, dm));
    }
    if x.rows() + y.rows() < x.cols() {
        return Err(Error::NumericalDegeneracy("X and Y together have fewer rows than columns"));
    }
    // Not enough room in C alone: complete [C; D] jointly and split the rows.
    let mut stacked = ComplexMatrix::from_fn(x.rows() + y.rows(), x.cols(), |i, j| {
        if i < x.rows() {
            cm[(i, j)]
        } else {
            dm[(i - x.rows(), j)]
        }
    });
    complete_kernel(&mut stacked, &null_basis)?;
    let cm = ComplexMatrix::from_fn(x.rows(), x.cols(), |i, j| stacked[(i, j)]);
    let dm = ComplexMatrix::from_fn(y.rows(), y.cols(), |i, j| stacked[(x.rows() + i, j)]);
    Ok((cm, dm))
}

/// Adds Σ_j |f_j⟩⟨n_j| where the f_j are orthonormal and orthogonal to the
/// range of `target` (eigenvectors of target·target† with the smallest
/// eigenvalues).
fn complete_kernel(target: &mut ComplexMatrix, null_basis: &[Vec<crate::Complex64>]) -> Result<(), Error> {
    let eig = hermitian_eig(&target.matmul(&target.adjoint()))?;
    for (j, n) in null_basis.iter().enumerate() {
        let f = eig.eigenvectors.column(j);
        *target = &*target + &ComplexMatrix::outer(&f, n);
    }
    Ok(())
}

fn rank_of(m: &ComplexMatrix) -> usize {
    crate::numerics::psd_rank(&m.gram(), 1e-20).unwrap_or(m.cols())
}

/// Eigenvectors of a projector with eigenvalue ≈ 1 (`ones`) or ≈ 0.
fn eigvecs_for(p: &ComplexMatrix, ones: bool) -> Result<Vec<Vec<crate::Complex64>>, Error> {
    let eig = hermitian_eig(p)?;
    Ok(eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| if ones { l > 0.5 } else { l <= 0.5 })
        .map(|(j, _)| eig.eigenvectors.column(j))
        .collect())
}

/// Reach probability and conditional success of a vertex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conditional {
    pub prob: f64,
    /// `None` when the vertex is reached with probability ≤ the cutoff.
    pub success: Option<f64>,
}

/// q_v = Σ_k p_k tr 𝒩_v(ρ_k) and the success of the subtree at `v` on the
/// normalized post-measurement ensemble.
pub fn conditional_success(tree: &ProtocolTree, v: VertexId, ensemble: &Ensemble) -> Result<Conditional, Error> {
    if !ensemble.is_normalized() {
        return Err(Error::InvalidEnsemble("conditional success needs a normalized ensemble"));
    }
    let cm = tree::cumulative_map(tree, v)?;
    let (node, dims) = tree
        .subtree(v)
        .ok_or(Error::InvalidTree("vertex not in tree"))?;
    let sigmas: Vec<ComplexMatrix> = ensemble.weighted_states().iter().map(|s| cm.map.apply(s)).collect();
    let prob: f64 = sigmas.iter().map(|s| s.trace_re()).sum();
    if prob <= Tolerances::default().prob_cutoff {
        return Ok(Conditional { prob: prob.max(0.0), success: None });
    }
    let normalized: Vec<ComplexMatrix> = sigmas.iter().map(|s| s.scale(1.0 / prob)).collect();
    let t = tree::eval::node_success(node, &dims, &normalized)?;
    Ok(Conditional { prob, success: Some(t) })
}

/// Statistics of one outcome of a vertex measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeStats {
    /// The (single) Kraus operator A_i of the outcome.
    pub kraus: ComplexMatrix,
    pub prob: f64,
    /// Conditional success of the outcome's subtree; `None` if unreachable.
    pub success: Option<f64>,
}

/// Recovery of one original outcome: the second stage maps the equalized
/// outcome onto √scale · A_outcome.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StagePiece {
    pub outcome: usize,
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EqualizedOutcome {
    /// First-stage Kraus operator B.
    pub kraus: ComplexMatrix,
    pub prob: f64,
    pub success: Option<f64>,
    /// One or two pieces with Σ scale·A†A = B†B.
    pub second_stage: Vec<StagePiece>,
}

impl EqualizedOutcome {
    fn scaled(&self, alpha: f64) -> Self {
        Self {
            kraus: self.kraus.scale(libm::sqrt(alpha)),
            prob: self.prob * alpha,
            success: self.success,
            second_stage: self
                .second_stage
                .iter()
                .map(|p| StagePiece {
                    outcome: p.outcome,
                    scale: p.scale * alpha,
                })
                .collect(),
        }
    }

    /// Binary second-stage measurement (C, D) for a merged outcome, built with
    /// X = √c₁·A₁ and Y = √c₂·A₂ from the original Kraus operators.
    pub fn second_stage_split(&self, originals: &[ComplexMatrix]) -> Result<Option<(ComplexMatrix, ComplexMatrix)>, Error> {
        let [p1, p2] = self.second_stage.as_slice() else {
            return Ok(None);
        };
        let x = originals[p1.outcome].scale(libm::sqrt(p1.scale));
        let y = originals[p2.outcome].scale(libm::sqrt(p2.scale));
        matrix_sum_split(&x, &y).map(Some)
    }
}

/// Merges outcomes until every reachable one has conditional success equal to
/// `target` (within `tol.equalize`).
///
/// Partner choice: the largest `t_i` above the target with the smallest `t_k`
/// below it, lowest index on ties. A pair is merged whole when that already
/// lands within tolerance of the target. Merged outcomes are never merged again;
/// unreachable outcomes and residuals at or below the probability cutoff pass
/// through.
pub fn equalize(outcomes: &[OutcomeStats], target: f64, tol: &Tolerances) -> Result<Vec<EqualizedOutcome>, Error> {
    let weighted: f64 = outcomes
        .iter()
        .filter_map(|o| o.success.map(|t| o.prob * t))
        .sum();
    if (weighted - target).abs() > 1e-9 {
        return Err(Error::InvalidMeasurement("target differs from Σ q_i t_i"));
    }
    let mut live: Vec<Option<EqualizedOutcome>> = outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let reachable = o.prob > tol.prob_cutoff;
            Some(EqualizedOutcome {
                kraus: o.kraus.clone(),
                prob: o.prob,
                success: if reachable { o.success } else { None },
                second_stage: vec![StagePiece { outcome: i, scale: 1.0 }],
            })
        })
        .collect();
    let off = |o: &EqualizedOutcome| {
        o.prob > tol.prob_cutoff && o.success.is_some_and(|t| (t - target).abs() > tol.equalize)
    };

    for _ in 0..outcomes.len() {
        let mut hi: Option<(usize, f64)> = None;
        let mut lo: Option<(usize, f64)> = None;
        for (idx, o) in live.iter().enumerate() {
            let Some(o) = o else { continue };
            if !off(o) || o.second_stage.len() != 1 {
                continue;
            }
            let t = o.success.unwrap_or(target);
            if t > target && hi.is_none_or(|(_, b)| t > b) {
                hi = Some((idx, t));
            }
            if t < target && lo.is_none_or(|(_, b)| t < b) {
                lo = Some((idx, t));
            }
        }
        let (Some((i, ti)), Some((k, tk))) = (hi, lo) else {
            break;
        };
        let oi = live[i].take().expect("live outcome");
        let ok = live[k].take().expect("live outcome");
        let lambda = (ti - target) / (ti - tk);
        let s = lambda * oi.prob / ((1.0 - lambda) * ok.prob);
        let full = merge(&oi, 1.0, &ok, 1.0)?;
        let (merged, residual, residual_slot, merged_slot) = if !off(&full) {
            (full, None, k, i)
        } else if s < 1.0 {
            (merge(&oi, 1.0, &ok, s)?, Some(ok.scaled(1.0 - s)), k, i)
        } else {
            (merge(&oi, 1.0 / s, &ok, 1.0)?, Some(oi.scaled(1.0 - 1.0 / s)), i, k)
        };
        live[merged_slot] = Some(merged);
        live[residual_slot] = residual;
    }

    let result: Vec<EqualizedOutcome> = live.into_iter().flatten().collect();
    let remaining = result.iter().filter(|o| off(o)).count();
    if remaining > 0 {
        return Err(Error::ConvergenceFailure { remaining });
    }
    Ok(result)
}

/// √(a·B_i†B_i + b·B_k†B_k) with the pieces of both outcomes.
fn merge(oi: &EqualizedOutcome, a: f64, ok: &EqualizedOutcome, b: f64) -> Result<EqualizedOutcome, Error> {
    debug_assert!(oi.second_stage.len() == 1 && ok.second_stage.len() == 1);
    let element = &oi.kraus.gram().scale(a) + &ok.kraus.gram().scale(b);
    let kraus = sqrt_psd(&element.hermitian_part())?;
    let prob = a * oi.prob + b * ok.prob;
    let weighted = a * oi.prob * oi.success.unwrap_or(0.0) + b * ok.prob * ok.success.unwrap_or(0.0);
    let mut second_stage = Vec::with_capacity(2);
    second_stage.extend(oi.second_stage.iter().map(|p| StagePiece { outcome: p.outcome, scale: p.scale * a }));
    second_stage.extend(ok.second_stage.iter().map(|p| StagePiece { outcome: p.outcome, scale: p.scale * b }));
    Ok(EqualizedOutcome {
        kraus,
        prob,
        success: Some(weighted / prob),
        second_stage,
    })
}

/// Keeps at most `d²` equalized outcomes, positively rescaled so the POVM
/// stays complete.
///
/// Points are the trace-normalized elements B_i†B_i / tr(B_i†B_i) with weights
/// tr(B_i†B_i)/d and barycentre I/d; support reduction picks the survivors.
pub fn caratheodory_stage(
    equalized: Vec<EqualizedOutcome>,
    d: usize,
    tol: &Tolerances,
) -> Result<Vec<EqualizedOutcome>, Error> {
    if equalized.len() <= d * d {
        return Ok(equalized);
    }
    let elements: Vec<ComplexMatrix> = equalized.iter().map(|o| o.kraus.gram()).collect();
    let traces: Vec<f64> = elements.iter().map(|e| e.trace_re()).collect();
    let keep: Vec<usize> = (0..elements.len()).filter(|&i| traces[i] > 0.0).collect();
    let points: Vec<Vec<f64>> = keep
        .iter()
        .map(|&i| trace_one_coordinates(&elements[i].scale(1.0 / traces[i])))
        .collect();
    let total: f64 = keep.iter().map(|&i| traces[i]).sum();
    let weights: Vec<f64> = keep.iter().map(|&i| traces[i] / total).collect();
    let set = WeightedPointSet::new(d * d - 1, points, weights.clone())?;
    let reduced = caratheodory::reduce_support_with(&set, tol.rank)?;
    let mut out = Vec::new();
    for (slot, &i) in keep.iter().enumerate() {
        let w_new = reduced.weights()[slot];
        if w_new > 0.0 {
            out.push(equalized[i].scaled(w_new / weights[slot]));
        }
    }
    Ok(out)
}

/// Affine coordinates of a unit-trace hermitian matrix: the isometric vector
/// with the last diagonal entry dropped (it is fixed by the trace).
fn trace_one_coordinates(m: &ComplexMatrix) -> Vec<f64> {
    let d = m.rows();
    let mut v = caratheodory::hermitian_coordinates(m);
    v.remove(d - 1);
    v
}

/// Compresses every measurement of the protocol to at most `2·d²` outcomes,
/// top-down, keeping the success probability on `ensemble` with the given
/// leaf labels. The tree is fine-grained first if needed.
pub fn compress_protocol_m1(tree: &ProtocolTree, ensemble: &Ensemble) -> Result<ProtocolTree, Error> {
    compress_protocol_m1_with(tree, ensemble, &Tolerances::default())
}

pub fn compress_protocol_m1_with(
    tree: &ProtocolTree,
    ensemble: &Ensemble,
    tol: &Tolerances,
) -> Result<ProtocolTree, Error> {
    if ensemble.space().party_dims() != tree.space().party_dims() {
        return Err(Error::DimensionMismatch {
            expected: tree.space().total_dim(),
            found: ensemble.space().total_dim(),
        });
    }
    if !ensemble.is_normalized() {
        return Err(Error::InvalidEnsemble("compression needs a normalized ensemble"));
    }
    let fine;
    let tree = if tree.is_fine_grained() {
        tree
    } else {
        fine = tree::fine_grain(tree);
        &fine
    };
    let root = compress_node(tree.root(), tree.space().party_dims(), &ensemble.weighted_states(), tol)?;
    Ok(ProtocolTree::new(tree.space().clone(), root))
}

fn compress_node(node: &Node, dims: &[usize], sigmas: &[ComplexMatrix], tol: &Tolerances) -> Result<Node, Error> {
    let Node::Measure { party, edges } = node else {
        return Ok(node.clone());
    };
    let party = *party;
    let d = *dims.get(party).ok_or(Error::PartyOutOfRange {
        party,
        parties: dims.len(),
    })?;

    if edges.len() <= 2 * d * d {
        let mut kept = Vec::with_capacity(edges.len());
        for e in edges {
            let (child_dims, next) = tree::eval::push_through(&e.map, party, dims, sigmas)?;
            let q: f64 = next.iter().map(|s| s.trace_re()).sum();
            let cond = if q > tol.prob_cutoff {
                next.iter().map(|s| s.scale(1.0 / q)).collect()
            } else {
                placeholder_ensemble(&child_dims, sigmas.len())
            };
            kept.push(Edge::new(e.map.clone(), compress_node(&e.child, &child_dims, &cond, tol)?));
        }
        return Ok(Node::measure(party, kept));
    }

    let mut stats = Vec::with_capacity(edges.len());
    let mut conditionals = Vec::with_capacity(edges.len());
    for e in edges {
        let kraus = e.map.kraus().first().cloned().ok_or(Error::NotFineGrained)?;
        let (child_dims, next) = tree::eval::push_through(&e.map, party, dims, sigmas)?;
        let q: f64 = next.iter().map(|s| s.trace_re()).sum();
        let (success, cond) = if q > tol.prob_cutoff {
            let cond: Vec<ComplexMatrix> = next.iter().map(|s| s.scale(1.0 / q)).collect();
            let t = tree::eval::node_success(&e.child, &child_dims, &cond)?;
            (Some(t), cond)
        } else {
            (None, placeholder_ensemble(&child_dims, sigmas.len()))
        };
        stats.push(OutcomeStats { kraus, prob: q, success });
        conditionals.push((child_dims, cond));
    }
    let target: f64 = stats.iter().filter_map(|o| o.success.map(|t| o.prob * t)).sum();
    let equalized = equalize(&stats, target, tol)?;
    let kept = caratheodory_stage(equalized, d, tol)?;

    let mut memo: BTreeMap<usize, Node> = BTreeMap::new();
    let mut new_edges = Vec::new();
    for outcome in &kept {
        for piece in &outcome.second_stage {
            let o = piece.outcome;
            if let alloc::collections::btree_map::Entry::Vacant(e) = memo.entry(o) {
                let (child_dims, cond) = &conditionals[o];
                let child = compress_node(&edges[o].child, child_dims, cond, tol)?;
                e.insert(child);
            }
            // C·B = √scale·A_o by construction of the second stage.
            let map = edges[o].map.scaled(piece.scale);
            new_edges.push(Edge::new(map, memo[&o].clone()));
        }
    }
    Ok(Node::measure(party, new_edges))
}

/// Maximally mixed stand-in for a subtree that is never reached, so its
/// width still gets compressed.
fn placeholder_ensemble(dims: &[usize], members: usize) -> Vec<ComplexMatrix> {
    let total: usize = dims.iter().product();
    let w = 1.0 / (members as f64 * total as f64);
    (0..members).map(|_| ComplexMatrix::identity(total).scale(w)).collect()
}

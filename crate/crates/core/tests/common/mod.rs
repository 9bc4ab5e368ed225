#![allow(dead_code)]

use locc_core::generate::{random_ensemble, random_tree, RandomTreeConfig};
use locc_core::numerics::ComplexMatrix;
use locc_core::quantum::{CpMap, Ensemble, EnsembleMember, MultipartiteSpace};
use locc_core::tree::{Edge, Node, ProtocolTree};
use locc_core::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn basis(d: usize, k: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |i, j| {
        if i == k && j == k {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

pub fn z_measure(party: usize, a: Node, b: Node) -> Node {
    Node::measure(
        party,
        vec![
            Edge::new(CpMap::from_kraus(basis(2, 0)), a),
            Edge::new(CpMap::from_kraus(basis(2, 1)), b),
        ],
    )
}

/// Φ⁺ vs Ψ⁺ with equal priors and the Z-parity protocol.
pub fn bell_instance() -> (ProtocolTree, Ensemble) {
    let space = MultipartiteSpace::new(vec![2, 2]).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = Complex64::new(0.0, 0.0);
    let r = Complex64::new(h, 0.0);
    let phi = [r, z, z, r];
    let psi = [z, r, r, z];
    let ens = Ensemble::new(
        space.clone(),
        vec![
            EnsembleMember { weight: 0.5, state: ComplexMatrix::projector(&phi) },
            EnsembleMember { weight: 0.5, state: ComplexMatrix::projector(&psi) },
        ],
    )
    .unwrap();
    let bob = |l0, l1| z_measure(1, Node::leaf(l0), Node::leaf(l1));
    let tree = ProtocolTree::new(space, z_measure(0, bob(0, 1), bob(1, 0)));
    (tree, ens)
}

pub fn random_instance(
    seed: u64,
    dims: Vec<usize>,
    config: &RandomTreeConfig,
    members: usize,
) -> (ProtocolTree, Ensemble) {
    let mut r = rng(seed);
    let space = MultipartiteSpace::new(dims).unwrap();
    let ens = random_ensemble(&mut r, &space, members).unwrap();
    let config = RandomTreeConfig { labels: members, ..config.clone() };
    let tree = random_tree(&mut r, &space, &config);
    (tree, ens)
}

/// Success by enumerating leaves and composing embedded Kraus operators
/// along each root path, independent of the library's recursive walk.
pub fn leaf_enumeration_success(tree: &ProtocolTree, ens: &Ensemble) -> f64 {
    fn embed(k: &ComplexMatrix, party: usize, dims: &[usize]) -> ComplexMatrix {
        let before: usize = dims[..party].iter().product();
        let after: usize = dims[party + 1..].iter().product();
        ComplexMatrix::identity(before)
            .kron(k)
            .kron(&ComplexMatrix::identity(after))
    }
    fn go(node: &Node, dims: Vec<usize>, ops: Vec<ComplexMatrix>, ens: &Ensemble, acc: &mut f64) {
        match node {
            Node::Leaf { label } => {
                let m = &ens.members()[*label];
                for k in &ops {
                    *acc += m.weight * k.matmul(&m.state).matmul(&k.adjoint()).trace().re;
                }
            }
            Node::Measure { party, edges } => {
                for e in edges {
                    let mut next_dims = dims.clone();
                    next_dims[*party] = e.map.out_dim();
                    let mut next = Vec::new();
                    for k in e.map.kraus() {
                        let big = embed(k, *party, &dims);
                        for o in &ops {
                            next.push(big.matmul(o));
                        }
                    }
                    go(&e.child, next_dims, next, ens, acc);
                }
            }
        }
    }
    let dims = tree.space().party_dims().to_vec();
    let mut acc = 0.0;
    go(tree.root(), dims, vec![ComplexMatrix::identity(tree.space().total_dim())], ens, &mut acc);
    acc
}

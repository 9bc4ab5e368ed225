//! Built-in instances: Bell-pair parity, an orthogonal product basis, and
//! seeded random protocols.
//!
//! Random demos draw everything from one `ChaCha8Rng` seeded with
//! `seed_from_u64(seed)`: first the ensemble, then the tree.

use locc_core::generate::{random_ensemble, random_tree, RandomTreeConfig};
use locc_core::numerics::ComplexMatrix;
use locc_core::quantum::{CpMap, Ensemble, EnsembleMember, MultipartiteSpace};
use locc_core::tree::{Edge, Node, ProtocolTree};
use locc_core::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;

/// Members of a random demo ensemble.
pub const RANDOM_MEMBERS: usize = 3;

fn unit(d: usize, k: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |i, j| Complex64::new(if i == k && j == k { 1.0 } else { 0.0 }, 0.0))
}

fn z_measure(party: usize, children: [Node; 2]) -> Node {
    let [a, b] = children;
    Node::measure(
        party,
        vec![
            Edge::new(CpMap::from_kraus(unit(2, 0)), a),
            Edge::new(CpMap::from_kraus(unit(2, 1)), b),
        ],
    )
}

/// Φ⁺ vs Ψ⁺ with equal priors; both parties measure Z and the parity names the state.
pub fn bell() -> (ProtocolTree, Ensemble) {
    let space = MultipartiteSpace::new(vec![2, 2]).expect("valid space");
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (o, r) = (Complex64::new(0.0, 0.0), Complex64::new(h, 0.0));
    let members = vec![
        EnsembleMember { weight: 0.5, state: ComplexMatrix::projector(&[r, o, o, r]) },
        EnsembleMember { weight: 0.5, state: ComplexMatrix::projector(&[o, r, r, o]) },
    ];
    let ens = Ensemble::new(space.clone(), members).expect("valid ensemble");
    let bob = |l0, l1| z_measure(1, [Node::leaf(l0), Node::leaf(l1)]);
    (ProtocolTree::new(space, z_measure(0, [bob(0, 1), bob(1, 0)])), ens)
}

/// |00⟩, |01⟩, |10⟩, |11⟩ with equal priors; A then B measure Z.
pub fn product_basis() -> (ProtocolTree, Ensemble) {
    let space = MultipartiteSpace::new(vec![2, 2]).expect("valid space");
    let members = (0..4)
        .map(|k| EnsembleMember { weight: 0.25, state: unit(4, k) })
        .collect();
    let ens = Ensemble::new(space.clone(), members).expect("valid ensemble");
    let bob = |a: usize| z_measure(1, [Node::leaf(2 * a), Node::leaf(2 * a + 1)]);
    (ProtocolTree::new(space, z_measure(0, [bob(0), bob(1)])), ens)
}

/// Shape of the random demo protocols.
pub fn random_config(rounds: usize) -> RandomTreeConfig {
    RandomTreeConfig {
        rounds,
        root_outcomes: (10, 16),
        outcomes: (2, 6),
        labels: RANDOM_MEMBERS,
        first_party: Some(0),
    }
}

pub fn random(seed: u64, rounds: usize, dims: &[usize]) -> Result<(ProtocolTree, Ensemble), CliError> {
    if rounds == 0 || rounds > 4 {
        return Err(CliError::Usage("random demo supports 1 to 4 rounds".into()));
    }
    if dims.is_empty() || dims.iter().any(|&d| !(2..=4).contains(&d)) || dims.iter().product::<usize>() > 16 {
        return Err(CliError::Usage("random demo supports local dims 2..=4 and total dim ≤ 16".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = MultipartiteSpace::new(dims.to_vec())?;
    let ens = random_ensemble(&mut rng, &space, RANDOM_MEMBERS)?;
    let tree = random_tree(&mut rng, &space, &random_config(rounds));
    Ok((tree, ens))
}

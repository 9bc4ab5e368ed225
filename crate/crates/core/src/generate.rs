//! Seeded random instances: Haar unitaries, instruments, states, ensembles and
//! protocol trees.
//!
//! Only `rand_core::RngCore` is used, so a given generator and seed yields the
//! same instance on every platform. Uniform doubles take the top 53 bits of
//! `next_u64`; normals come from Box–Muller.

use alloc::vec::Vec;

use rand_core::RngCore;

use crate::error::Error;
use crate::numerics::{c, ComplexMatrix};
use crate::quantum::{CpMap, Ensemble, EnsembleMember, MultipartiteSpace};
use crate::tree::{Edge, Node, ProtocolTree};

/// Uniform in [0, 1).
pub fn uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform integer in `lo..=hi`.
pub fn uniform_int<R: RngCore + ?Sized>(rng: &mut R, lo: usize, hi: usize) -> usize {
    assert!(lo <= hi);
    lo + (rng.next_u64() % (hi - lo + 1) as u64) as usize
}

pub fn standard_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    let u1 = 1.0 - uniform(rng); // (0, 1]
    let u2 = uniform(rng);
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
}

/// Entries i.i.d. standard complex normal (real and imaginary parts N(0, 1/2)).
pub fn ginibre<R: RngCore + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(rows, cols, |_, _| c(s * standard_normal(rng), s * standard_normal(rng)))
}

/// Haar-distributed n×n unitary: Gram–Schmidt on a Ginibre matrix.
pub fn haar_unitary<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    loop {
        let g = ginibre(rng, n, n);
        if let Some(q) = orthonormalize_columns(&g) {
            return q;
        }
    }
}

fn orthonormalize_columns(g: &ComplexMatrix) -> Option<ComplexMatrix> {
    let (n, m) = g.shape();
    let mut q = g.clone();
    for j in 0..m {
        for _ in 0..2 {
            for k in 0..j {
                let mut dot = c(0.0, 0.0);
                for i in 0..n {
                    dot += q[(i, k)].conj() * q[(i, j)];
                }
                for i in 0..n {
                    let qik = q[(i, k)];
                    q[(i, j)] -= dot * qik;
                }
            }
        }
        let norm = libm::sqrt((0..n).map(|i| q[(i, j)].norm_sqr()).sum::<f64>());
        if norm < 1e-8 {
            return None;
        }
        for i in 0..n {
            q[(i, j)] /= norm;
        }
    }
    Some(q)
}

/// Kraus operators K_1..K_n (d_out × d_in) of a random instrument, sliced
/// from the first `d_in` columns of a Haar unitary on ℂ^{n·d_out}.
pub fn random_instrument_kraus<R: RngCore + ?Sized>(
    rng: &mut R,
    d_in: usize,
    d_out: usize,
    outcomes: usize,
) -> Vec<ComplexMatrix> {
    assert!(outcomes * d_out >= d_in, "dilation too small for an isometry");
    let u = haar_unitary(rng, outcomes * d_out);
    (0..outcomes)
        .map(|o| ComplexMatrix::from_fn(d_out, d_in, |i, j| u[(o * d_out + i, j)]))
        .collect()
}

/// Random density matrix G G† / tr with G of shape d × rank.
pub fn random_state<R: RngCore + ?Sized>(rng: &mut R, d: usize, rank: usize) -> ComplexMatrix {
    let g = ginibre(rng, d, rank.max(1));
    let rho = g.matmul(&g.adjoint());
    let t = rho.trace_re();
    rho.scale(1.0 / t).hermitian_part()
}

pub fn random_hermitian<R: RngCore + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    ginibre(rng, d, d).hermitian_part()
}

/// Random probability vector (normalized exponentials, i.e. flat Dirichlet).
pub fn random_distribution<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -libm::log(1.0 - uniform(rng))).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// `members` random states of random rank with flat-Dirichlet priors.
pub fn random_ensemble<R: RngCore + ?Sized>(
    rng: &mut R,
    space: &MultipartiteSpace,
    members: usize,
) -> Result<Ensemble, Error> {
    let d = space.total_dim();
    let weights = random_distribution(rng, members);
    let members = weights
        .into_iter()
        .map(|weight| {
            let rank = uniform_int(rng, 1, d);
            EnsembleMember {
                weight,
                state: random_state(rng, d, rank),
            }
        })
        .collect();
    Ensemble::new(space.clone(), members)
}

/// Shape of a random protocol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomTreeConfig {
    /// Measurement rounds along every path.
    pub rounds: usize,
    /// Outcome count range (inclusive) at the root.
    pub root_outcomes: (usize, usize),
    /// Outcome count range (inclusive) at later vertices.
    pub outcomes: (usize, usize),
    /// Leaf labels are drawn from `0..labels`.
    pub labels: usize,
    /// Party acting at the root; `None` draws it. Later rounds cycle through the parties.
    pub first_party: Option<usize>,
}

impl Default for RandomTreeConfig {
    fn default() -> Self {
        Self {
            rounds: 2,
            root_outcomes: (2, 4),
            outcomes: (2, 4),
            labels: 2,
            first_party: None,
        }
    }
}

/// Random fine-grained protocol with dimension-preserving rank-1 edges; every
/// vertex is a random instrument from [`random_instrument_kraus`].
pub fn random_tree<R: RngCore + ?Sized>(
    rng: &mut R,
    space: &MultipartiteSpace,
    config: &RandomTreeConfig,
) -> ProtocolTree {
    let parties = space.parties();
    let first = config
        .first_party
        .unwrap_or_else(|| uniform_int(rng, 0, parties - 1));
    let root = random_node(rng, space.party_dims(), config, 0, first);
    ProtocolTree::new(space.clone(), root)
}

fn random_node<R: RngCore + ?Sized>(
    rng: &mut R,
    dims: &[usize],
    config: &RandomTreeConfig,
    round: usize,
    party: usize,
) -> Node {
    if round == config.rounds {
        return Node::leaf(uniform_int(rng, 0, config.labels.max(1) - 1));
    }
    let (lo, hi) = if round == 0 {
        config.root_outcomes
    } else {
        config.outcomes
    };
    let n = uniform_int(rng, lo, hi);
    let d = dims[party];
    let next_party = (party + 1) % dims.len();
    let kraus = random_instrument_kraus(rng, d, d, n);
    let edges = kraus
        .into_iter()
        .map(|k| {
            let child = random_node(rng, dims, config, round + 1, next_party);
            Edge::new(CpMap::from_kraus(k), child)
        })
        .collect();
    Node::measure(party, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::validate_tree;

    struct SplitMix(u64);

    impl RngCore for SplitMix {
        fn next_u32(&mut self) -> u32 {
            self.next_u64() as u32
        }
        fn next_u64(&mut self) -> u64 {
            self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = self.0;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^ (z >> 31)
        }
        fn fill_bytes(&mut self, dest: &mut [u8]) {
            rand_core::impls::fill_bytes_via_next(self, dest)
        }
        fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand_core::Error> {
            self.fill_bytes(dest);
            Ok(())
        }
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = SplitMix(1);
        let u = haar_unitary(&mut rng, 5);
        assert!(u.gram().distance(&ComplexMatrix::identity(5)) < 1e-12);
    }

    #[test]
    fn sliced_kraus_are_complete() {
        let mut rng = SplitMix(2);
        let ks = random_instrument_kraus(&mut rng, 3, 3, 4);
        let mut total = ComplexMatrix::zeros(3, 3);
        for k in &ks {
            total = &total + &k.gram();
        }
        assert!(total.distance(&ComplexMatrix::identity(3)) < 1e-12);
    }

    #[test]
    fn random_tree_is_valid() {
        let mut rng = SplitMix(3);
        let space = MultipartiteSpace::new(alloc::vec![2, 3]).unwrap();
        let cfg = RandomTreeConfig {
            rounds: 3,
            ..RandomTreeConfig::default()
        };
        let t = random_tree(&mut rng, &space, &cfg);
        assert!(validate_tree(&t).is_empty());
        assert!(t.is_fine_grained());
        assert_eq!(t.depth(), 3);
    }
}

use alloc::vec::Vec;

use crate::error::Error;
use crate::numerics::{is_psd, ComplexMatrix, PSD_CLAMP};

/// Tensor product of local spaces with the given dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultipartiteSpace {
    party_dims: Vec<usize>,
}

impl MultipartiteSpace {
    pub fn new(party_dims: Vec<usize>) -> Result<Self, Error> {
        if party_dims.is_empty() || party_dims.contains(&0) {
            return Err(Error::InvalidEnsemble("party dimensions must be positive"));
        }
        Ok(Self { party_dims })
    }

    pub fn party_dims(&self) -> &[usize] {
        &self.party_dims
    }

    pub fn parties(&self) -> usize {
        self.party_dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.party_dims.iter().product()
    }

    pub fn local_dim(&self, party: usize) -> Option<usize> {
        self.party_dims.get(party).copied()
    }

    /// Same space with one party's dimension replaced.
    pub fn with_local_dim(&self, party: usize, dim: usize) -> Self {
        let mut party_dims = self.party_dims.clone();
        party_dims[party] = dim;
        Self { party_dims }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleMember {
    pub weight: f64,
    pub state: ComplexMatrix,
}

/// Weighted family {p_k ρ_k} of states on a multipartite space.
///
/// Unnormalized ensembles (Σ p_k < 1 or sub-unit traces) are accepted and
/// reported through [`Ensemble::is_normalized`]; use [`Ensemble::normalize`]
/// to split off the total probability.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    space: MultipartiteSpace,
    members: Vec<EnsembleMember>,
    normalized: bool,
}

const WEIGHT_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-9;

impl Ensemble {
    pub fn new(space: MultipartiteSpace, members: Vec<EnsembleMember>) -> Result<Self, Error> {
        let d = space.total_dim();
        if members.is_empty() {
            return Err(Error::InvalidEnsemble("ensemble has no members"));
        }
        for m in &members {
            if m.state.shape() != (d, d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: m.state.rows(),
                });
            }
            if !m.weight.is_finite() || m.weight < 0.0 {
                return Err(Error::InvalidEnsemble("weights must be nonnegative"));
            }
            if !is_psd(&m.state, PSD_CLAMP) {
                return Err(Error::InvalidEnsemble("states must be hermitian PSD"));
            }
        }
        let total: f64 = members.iter().map(|m| m.weight).sum();
        if total > 1.0 + WEIGHT_TOL {
            return Err(Error::InvalidEnsemble("weights sum above one"));
        }
        let normalized = (total - 1.0).abs() <= WEIGHT_TOL
            && members
                .iter()
                .all(|m| (m.state.trace_re() - 1.0).abs() <= TRACE_TOL);
        Ok(Self {
            space,
            members,
            normalized,
        })
    }

    /// Builds an ensemble from unnormalized operators σ_k = p_k ρ_k without
    /// re-validating positivity.
    pub fn from_weighted_states(space: MultipartiteSpace, sigmas: Vec<ComplexMatrix>) -> Self {
        let members: Vec<EnsembleMember> = sigmas
            .into_iter()
            .map(|s| {
                let p = s.trace_re().max(0.0);
                let state = if p > 0.0 { s.scale(1.0 / p) } else { s };
                EnsembleMember { weight: p, state }
            })
            .collect();
        let total: f64 = members.iter().map(|m| m.weight).sum();
        let normalized = (total - 1.0).abs() <= WEIGHT_TOL;
        Self {
            space,
            members,
            normalized,
        }
    }

    pub fn space(&self) -> &MultipartiteSpace {
        &self.space
    }

    pub fn members(&self) -> &[EnsembleMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Σ_k p_k tr ρ_k.
    pub fn probability(&self) -> f64 {
        self.members
            .iter()
            .map(|m| m.weight * m.state.trace_re())
            .sum()
    }

    /// The operators σ_k = p_k ρ_k.
    pub fn weighted_states(&self) -> Vec<ComplexMatrix> {
        self.members.iter().map(|m| m.state.scale(m.weight)).collect()
    }

    /// Splits off the total probability q and returns (q, S/q).
    pub fn normalize(&self) -> Result<(f64, Ensemble), Error> {
        let q = self.probability();
        if q <= 0.0 {
            return Err(Error::InvalidEnsemble("zero-probability ensemble"));
        }
        let sigmas = self.weighted_states().iter().map(|s| s.scale(1.0 / q)).collect();
        Ok((q, Self::from_weighted_states(self.space.clone(), sigmas)))
    }
}

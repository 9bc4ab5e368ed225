use alloc::vec::Vec;

use super::{COMPLETENESS_TOL, POVM_TOL};
use crate::error::Error;
use crate::numerics::{c, hermitian_eig, is_psd, max_eigenvalue, sum_matrices, ComplexMatrix, PSD_CLAMP};

/// POVM {E_i} on a d-dimensional space.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    dim: usize,
    elements: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(dim: usize, elements: Vec<ComplexMatrix>) -> Result<Self, Error> {
        for e in &elements {
            if e.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: e.rows(),
                });
            }
            if !is_psd(e, PSD_CLAMP) {
                return Err(Error::InvalidMeasurement("POVM element is not PSD"));
            }
        }
        let total = sum_matrices(dim, dim, &elements);
        if total.distance(&ComplexMatrix::identity(dim)) > POVM_TOL {
            return Err(Error::InvalidMeasurement("POVM elements do not sum to the identity"));
        }
        Ok(Self { dim, elements })
    }

    /// The POVM {A_i†A_i} of a list of Kraus operators.
    pub fn from_kraus(kraus: &[ComplexMatrix]) -> Result<Self, Error> {
        let dim = kraus.first().map(|k| k.cols()).ok_or(Error::InvalidMeasurement("no outcomes"))?;
        Self::new(dim, kraus.iter().map(|k| k.gram()).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Completely positive map given by Kraus operators (out_dim × in_dim).
#[derive(Clone, Debug, PartialEq)]
pub struct CpMap {
    in_dim: usize,
    out_dim: usize,
    kraus: Vec<ComplexMatrix>,
}

impl CpMap {
    /// Checks shapes only; see [`CpMap::is_trace_nonincreasing`].
    pub fn new(in_dim: usize, out_dim: usize, kraus: Vec<ComplexMatrix>) -> Result<Self, Error> {
        if let Some(k) = kraus.iter().find(|k| k.shape() != (out_dim, in_dim)) {
            return Err(Error::DimensionMismatch {
                expected: out_dim * in_dim,
                found: k.rows() * k.cols(),
            });
        }
        Ok(Self {
            in_dim,
            out_dim,
            kraus,
        })
    }

    pub fn from_kraus(k: ComplexMatrix) -> Self {
        Self {
            in_dim: k.cols(),
            out_dim: k.rows(),
            kraus: alloc::vec![k],
        }
    }

    pub fn identity(d: usize) -> Self {
        Self::from_kraus(ComplexMatrix::identity(d))
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn into_kraus(self) -> Vec<ComplexMatrix> {
        self.kraus
    }

    /// Σ_j K_j†K_j.
    pub fn effect(&self) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.in_dim, self.in_dim);
        for k in &self.kraus {
            acc = &acc + &k.gram();
        }
        acc
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.out_dim, self.out_dim);
        for k in &self.kraus {
            acc = &acc + &k.sandwich(rho);
        }
        acc
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &CpMap) -> Result<CpMap, Error> {
        if next.in_dim != self.out_dim {
            return Err(Error::DimensionMismatch {
                expected: self.out_dim,
                found: next.in_dim,
            });
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * next.kraus.len());
        for b in &next.kraus {
            for a in &self.kraus {
                kraus.push(b.matmul(a));
            }
        }
        Ok(CpMap {
            in_dim: self.in_dim,
            out_dim: next.out_dim,
            kraus,
        })
    }

    /// The map s·ℰ for s ≥ 0 (Kraus operators scaled by √s).
    pub fn scaled(&self, s: f64) -> CpMap {
        let r = libm::sqrt(s.max(0.0));
        CpMap {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            kraus: self.kraus.iter().map(|k| k.scale(r)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.kraus.iter().all(|k| k.is_zero())
    }

    pub fn is_trace_nonincreasing(&self, tol: f64) -> bool {
        max_eigenvalue(&self.effect()).is_ok_and(|l| l <= 1.0 + tol)
    }

    /// Kraus-union of two maps with equal dimensions.
    pub fn union(&self, other: &CpMap) -> Result<CpMap, Error> {
        if (self.in_dim, self.out_dim) != (other.in_dim, other.out_dim) {
            return Err(Error::DimensionMismatch {
                expected: self.out_dim,
                found: other.out_dim,
            });
        }
        let mut kraus = self.kraus.clone();
        kraus.extend(other.kraus.iter().cloned());
        Ok(CpMap {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            kraus,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstrumentBranch {
    pub label: usize,
    pub map: CpMap,
}

/// Labelled CP maps whose sum is trace preserving.
#[derive(Clone, Debug, PartialEq)]
pub struct Instrument {
    in_dim: usize,
    branches: Vec<InstrumentBranch>,
}

impl Instrument {
    pub fn new(in_dim: usize, branches: Vec<InstrumentBranch>) -> Result<Self, Error> {
        Self::with_tolerance(in_dim, branches, COMPLETENESS_TOL)
    }

    pub fn with_tolerance(in_dim: usize, branches: Vec<InstrumentBranch>, tol: f64) -> Result<Self, Error> {
        let mut total = ComplexMatrix::zeros(in_dim, in_dim);
        for b in &branches {
            if b.map.in_dim() != in_dim {
                return Err(Error::DimensionMismatch {
                    expected: in_dim,
                    found: b.map.in_dim(),
                });
            }
            total = &total + &b.map.effect();
        }
        if total.distance(&ComplexMatrix::identity(in_dim)) > tol {
            return Err(Error::InvalidMeasurement("instrument is not trace preserving"));
        }
        Ok(Self { in_dim, branches })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn branches(&self) -> &[InstrumentBranch] {
        &self.branches
    }

    pub fn branch(&self, label: usize) -> Option<&CpMap> {
        self.branches.iter().find(|b| b.label == label).map(|b| &b.map)
    }

    pub fn labels(&self) -> Vec<usize> {
        self.branches.iter().map(|b| b.label).collect()
    }
}

/// Choi matrix C = Σ_ij E_ij ⊗ ℰ(E_ij), input index first.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    pub in_dim: usize,
    pub out_dim: usize,
    pub matrix: ComplexMatrix,
}

impl ChoiMatrix {
    pub fn new(in_dim: usize, out_dim: usize, matrix: ComplexMatrix) -> Result<Self, Error> {
        let n = in_dim * out_dim;
        if matrix.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: matrix.rows(),
            });
        }
        Ok(Self {
            in_dim,
            out_dim,
            matrix,
        })
    }

    pub fn distance(&self, other: &ChoiMatrix) -> f64 {
        self.matrix.distance(&other.matrix)
    }
}

/// Choi matrix of a CP map, accumulated as Σ_K |K⟩⟩⟨⟨K| with
/// |K⟩⟩ = Σ_i |i⟩ ⊗ K|i⟩.
pub fn choi_of(map: &CpMap) -> ChoiMatrix {
    let (din, dout) = (map.in_dim(), map.out_dim());
    let n = din * dout;
    let mut m = ComplexMatrix::zeros(n, n);
    for k in map.kraus() {
        let v: Vec<_> = (0..n).map(|idx| k[(idx % dout, idx / dout)]).collect();
        for (i, vi) in v.iter().enumerate() {
            if vi.re == 0.0 && vi.im == 0.0 {
                continue;
            }
            for (j, vj) in v.iter().enumerate() {
                m[(i, j)] += vi * vj.conj();
            }
        }
    }
    ChoiMatrix {
        in_dim: din,
        out_dim: dout,
        matrix: m,
    }
}

/// Kraus form of a Choi matrix from its eigendecomposition; eigenvalues at or
/// below `kraus_tol · λ_max` are discarded.
pub fn map_of_choi(choi: &ChoiMatrix, kraus_tol: f64) -> Result<CpMap, Error> {
    let eig = hermitian_eig(&choi.matrix)?;
    let lmax = eig.max_abs_eigenvalue();
    if let Some(&l) = eig.eigenvalues.first() {
        if l < -PSD_CLAMP * lmax.max(1.0) {
            return Err(Error::NotPsd { eigenvalue: l });
        }
    }
    let (din, dout) = (choi.in_dim, choi.out_dim);
    let mut kraus = Vec::new();
    for (col, &l) in eig.eigenvalues.iter().enumerate() {
        if lmax == 0.0 || l <= kraus_tol * lmax {
            continue;
        }
        let s = libm::sqrt(l);
        let mut k = ComplexMatrix::zeros(dout, din);
        for idx in 0..din * dout {
            k[(idx % dout, idx / dout)] = eig.eigenvectors[(idx, col)] * s;
        }
        kraus.push(k);
    }
    if kraus.is_empty() {
        kraus.push(ComplexMatrix::zeros(dout, din));
    }
    CpMap::new(din, dout, kraus)
}

#[allow(dead_code)]
pub(crate) fn unit(d: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    m[(i, j)] = c(1.0, 0.0);
    m
}

//! Barycentre-preserving support reduction for finite point sets in ℝⁿ.
//!
//! [`reduce_support`] repeatedly finds an affine dependency among the
//! supported points and slides weight along it until one weight reaches zero.
//! The result keeps the barycentre and has affinely independent support, hence
//! at most `dim + 1` points. [`peel_decompose`] writes a distribution as a
//! convex combination of such small-support distributions with the same
//! barycentre.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::numerics::{c, real_null_vector, ComplexMatrix, RealMatrix, RANK_TOL};

/// Σ weights must be 1 within this.
pub const WEIGHT_SUM_TOL: f64 = 1e-10;
/// Weights in (−NEGATIVE_CLAMP, 0) are roundoff.
pub const NEGATIVE_CLAMP: f64 = 1e-12;
/// Once the support is within the Carathéodory bound, only dependencies this
/// tight are eliminated.
const EXACT_DEPENDENCY_TOL: f64 = 1e-12;
const TIE_TOL: f64 = 1e-15;

/// Points in ℝⁿ with a probability distribution over them.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedPointSet {
    dim: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl WeightedPointSet {
    pub fn new(dim: usize, points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self, Error> {
        if points.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                found: weights.len(),
            });
        }
        if points.is_empty() {
            return Err(Error::InvalidWeights("empty point set"));
        }
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidWeights("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidWeights("weights must sum to 1"));
        }
        Ok(Self {
            dim,
            points,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices carrying strictly positive weight.
    pub fn support(&self) -> Vec<usize> {
        support_of(&self.weights)
    }

    fn with_weights(&self, weights: Vec<f64>) -> Self {
        Self {
            dim: self.dim,
            points: self.points.clone(),
            weights,
        }
    }
}

fn support_of(weights: &[f64]) -> Vec<usize> {
    weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(i, _)| i)
        .collect()
}

/// Σ_i p_i v_i.
pub fn barycentre(s: &WeightedPointSet) -> Vec<f64> {
    weighted_sum(s.dim, &s.points, &s.weights)
}

fn weighted_sum(dim: usize, points: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; dim];
    for (p, &w) in points.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for (a, x) in acc.iter_mut().zip(p) {
            *a += w * x;
        }
    }
    acc
}

pub fn reduce_support(s: &WeightedPointSet) -> Result<WeightedPointSet, Error> {
    reduce_support_with(s, RANK_TOL)
}

/// Support reduction with an explicit rank tolerance for the dependency search.
pub fn reduce_support_with(s: &WeightedPointSet, rank_tol: f64) -> Result<WeightedPointSet, Error> {
    let mut w = s.weights.clone();
    reduce_weights(s.dim, &s.points, &mut w, rank_tol)?;
    Ok(s.with_weights(w))
}

fn dependency_matrix(dim: usize, points: &[Vec<f64>], cols: &[usize]) -> RealMatrix {
    let reference = &points[cols[0]];
    let mut a = RealMatrix::zeros(dim + 1, cols.len());
    for (k, &i) in cols.iter().enumerate() {
        for r in 0..dim {
            a[(r, k)] = points[i][r] - reference[r];
        }
        a[(dim, k)] = 1.0;
    }
    a
}

/// In-place elimination on a weight vector summing to one.
fn reduce_weights(
    dim: usize,
    points: &[Vec<f64>],
    w: &mut [f64],
    rank_tol: f64,
) -> Result<(), Error> {
    // Each productive step zeroes at least one weight.
    for _ in 0..=w.len() {
        let support = support_of(w);
        if support.len() <= 1 {
            return Ok(());
        }
        let mandatory = support.len() > dim + 1;
        let cols: &[usize] = if mandatory {
            &support[..dim + 2]
        } else {
            &support
        };
        let a = dependency_matrix(dim, points, cols);
        let tol = if mandatory {
            rank_tol
        } else {
            EXACT_DEPENDENCY_TOL.min(rank_tol)
        };
        let Some(mut z) = real_null_vector(&a, tol) else {
            if mandatory {
                return Err(Error::NumericalDegeneracy(
                    "no affine dependency found above the Carathéodory bound",
                ));
            }
            return Ok(());
        };
        if !z.iter().any(|&x| x > 0.0) {
            z.iter_mut().for_each(|x| *x = -*x);
        }
        let mut step = f64::INFINITY;
        let mut hit = usize::MAX;
        for (k, &i) in cols.iter().enumerate() {
            if z[k] > 0.0 {
                let ratio = w[i] / z[k];
                if ratio < step {
                    step = ratio;
                    hit = k;
                }
            }
        }
        if hit == usize::MAX {
            return Err(Error::NumericalDegeneracy("degenerate dependency vector"));
        }
        for (k, &i) in cols.iter().enumerate() {
            w[i] -= step * z[k];
            if k == hit || (z[k] > 0.0 && w[i] <= TIE_TOL) {
                w[i] = 0.0;
            }
        }
        clean_weights(w)?;
    }
    if support_of(w).len() > dim + 1 {
        return Err(Error::NumericalDegeneracy("support reduction did not terminate"));
    }
    Ok(())
}

fn clean_weights(w: &mut [f64]) -> Result<(), Error> {
    for x in w.iter_mut() {
        if *x < 0.0 {
            if *x > -NEGATIVE_CLAMP {
                *x = 0.0;
            } else {
                return Err(Error::NumericalDegeneracy("elimination produced a negative weight"));
            }
        }
    }
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(Error::NumericalDegeneracy("all weight eliminated"));
    }
    w.iter_mut().for_each(|x| *x /= total);
    Ok(())
}

/// Writes `s` as Σ_j c_j · sub_j where every `sub_j` shares the barycentre of
/// `s` and has affinely independent support.
///
/// Each round reduces the current residual, then removes the largest multiple
/// of the reduced distribution that keeps the residual nonnegative; at least
/// one residual weight reaches zero per round.
pub fn peel_decompose(s: &WeightedPointSet) -> Result<Vec<(f64, WeightedPointSet)>, Error> {
    peel_decompose_with(s, RANK_TOL)
}

pub fn peel_decompose_with(
    s: &WeightedPointSet,
    rank_tol: f64,
) -> Result<Vec<(f64, WeightedPointSet)>, Error> {
    let mut residual = s.weights.clone();
    let mut components: Vec<(f64, Vec<f64>)> = Vec::new();
    let rounds = s.support().len();
    for _ in 0..rounds {
        let mass: f64 = residual.iter().sum();
        if mass <= 1e-14 || support_of(&residual).is_empty() {
            break;
        }
        let mut r: Vec<f64> = residual.iter().map(|x| x / mass).collect();
        reduce_weights(s.dim, &s.points, &mut r, rank_tol)?;
        let mut coef = f64::INFINITY;
        let mut hit = usize::MAX;
        for (i, &ri) in r.iter().enumerate() {
            if ri > 0.0 && residual[i] / ri < coef {
                coef = residual[i] / ri;
                hit = i;
            }
        }
        if hit == usize::MAX {
            return Err(Error::NumericalDegeneracy("reduced distribution is empty"));
        }
        coef = coef.min(mass);
        for (i, &ri) in r.iter().enumerate() {
            if ri > 0.0 {
                residual[i] -= coef * ri;
                if i == hit || residual[i] <= TIE_TOL {
                    residual[i] = 0.0;
                }
            }
        }
        if residual.iter().any(|&x| x < -NEGATIVE_CLAMP) {
            return Err(Error::NumericalDegeneracy("peeling overshot the residual"));
        }
        residual.iter_mut().for_each(|x| *x = x.max(0.0));
        components.push((coef, r));
    }
    let leftover: f64 = residual.iter().sum();
    if leftover > 1e-12 {
        return Err(Error::NumericalDegeneracy("peeling left residual mass"));
    }
    let total: f64 = components.iter().map(|(c, _)| c).sum();
    Ok(components
        .into_iter()
        .map(|(coef, w)| (coef / total, s.with_weights(w)))
        .collect())
}

/// Isometric real coordinates of a d×d hermitian matrix: the diagonal, then
/// √2·Re and √2·Im of each strict upper-triangle entry in row-major order.
pub fn hermitian_to_vector(m: &ComplexMatrix, d: usize) -> Result<Vec<f64>, Error> {
    if m.shape() != (d, d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: m.rows(),
        });
    }
    if !m.is_hermitian(crate::numerics::HERMITIAN_TOL) {
        return Err(Error::NotHermitian {
            defect: m.hermitian_defect(),
        });
    }
    Ok(hermitian_coordinates(m))
}

/// Coordinates without the hermiticity check; the anti-hermitian part is dropped.
pub(crate) fn hermitian_coordinates(m: &ComplexMatrix) -> Vec<f64> {
    let d = m.rows();
    let s2 = core::f64::consts::SQRT_2;
    let mut v = Vec::with_capacity(d * d);
    for i in 0..d {
        v.push(m[(i, i)].re);
    }
    for i in 0..d {
        for j in i + 1..d {
            // average with the mirrored entry so tiny asymmetries do not bias
            let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            v.push(s2 * z.re);
            v.push(s2 * z.im);
        }
    }
    v
}

pub fn vector_to_hermitian(v: &[f64], d: usize) -> Result<ComplexMatrix, Error> {
    if v.len() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            found: v.len(),
        });
    }
    let s2 = core::f64::consts::SQRT_2;
    let mut m = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        m[(i, i)] = c(v[i], 0.0);
    }
    let mut k = d;
    for i in 0..d {
        for j in i + 1..d {
            let z = c(v[k] / s2, v[k + 1] / s2);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    Ok(m)
}

use alloc::vec::Vec;

use super::matrix::{c, ComplexMatrix};
use crate::error::Error;

/// Hermitian input check: ‖M − M†‖_F ≤ this · max(1, ‖M‖_F).
pub const HERMITIAN_TOL: f64 = 1e-9;
/// Off-diagonal Frobenius threshold, relative to ‖M‖_F.
pub const JACOBI_TOL: f64 = 1e-14;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Spectral decomposition M = V·diag(λ)·V† with λ ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in eigenvalue order.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// V·diag(f(λ))·V†.
    pub fn map_spectrum(&self, mut f: impl FnMut(f64) -> f64) -> ComplexMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &w) in fl.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = v[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vik * v[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_spectrum(|l| l)
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max)
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)].norm_sqr();
            }
        }
    }
    libm::sqrt(acc)
}

/// Cyclic Jacobi eigensolver for hermitian matrices.
///
/// Each rotation first removes the phase of the pivot `a_pq` with a diagonal
/// unitary and then applies the classical real Jacobi rotation, so the pair
/// acts as one 2×2 unitary `G` with `A ← G†AG` and `V ← VG`.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEigen, Error> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            found: m.cols(),
        });
    }
    let scale = m.frobenius_norm();
    let defect = m.hermitian_defect();
    if defect > HERMITIAN_TOL * scale.max(1.0) {
        return Err(Error::NotHermitian { defect });
    }
    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let threshold = JACOBI_TOL * scale;

    let mut converged = off_diagonal_norm(&a) <= threshold;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        converged = off_diagonal_norm(&a) <= threshold;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors,
    })
}

fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // Skip pivots below roundoff relative to the diagonal.
    if r <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[(p, q)] = c(0.0, 0.0);
        a[(q, p)] = c(0.0, 0.0);
        return;
    }
    let phase = apq / r;
    let theta = (aqq - app) / (2.0 * r);
    let t = if theta >= 0.0 {
        1.0 / (theta + libm::sqrt(theta * theta + 1.0))
    } else {
        -1.0 / (-theta + libm::sqrt(theta * theta + 1.0))
    };
    let cs = 1.0 / libm::sqrt(t * t + 1.0);
    let sn = t * cs;
    // G = diag(1, e^{-iφ}) · [[c, s], [-s, c]]
    let e = phase.conj();
    let g_pp = c(cs, 0.0);
    let g_pq = c(sn, 0.0);
    let g_qp = e * (-sn);
    let g_qq = e * cs;

    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * g_pp + akq * g_qp;
        a[(k, q)] = akp * g_pq + akq * g_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
        a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    a[(p, q)] = c(0.0, 0.0);
    a[(q, p)] = c(0.0, 0.0);
    a[(p, p)] = c(a[(p, p)].re, 0.0);
    a[(q, q)] = c(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * g_pp + vkq * g_qp;
        v[(k, q)] = vkp * g_pq + vkq * g_qq;
    }
}

/// Largest eigenvalue of a hermitian matrix.
pub fn max_eigenvalue(m: &ComplexMatrix) -> Result<f64, Error> {
    let eig = hermitian_eig(m)?;
    Ok(eig.eigenvalues.last().copied().unwrap_or(0.0))
}

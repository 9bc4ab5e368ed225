use alloc::vec;
use alloc::vec::Vec;

use super::matrix::{vec_norm, RealMatrix};

fn frobenius(a: &RealMatrix) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            acc += a[(i, j)] * a[(i, j)];
        }
    }
    libm::sqrt(acc)
}

/// Finds a unit vector `z` with `‖A·z‖ ≤ tol·‖A‖_F`, or `None` when `A` has
/// full column rank at that tolerance.
///
/// Gauss–Jordan elimination with complete pivoting; a pivot below
/// `tol · max|a_ij|` ends the elimination and the first free column seeds the
/// kernel vector.
pub fn real_null_vector(a: &RealMatrix, tol: f64) -> Option<Vec<f64>> {
    let (m, n) = (a.rows(), a.cols());
    if n == 0 {
        return None;
    }
    let scale = a.max_abs();
    if scale == 0.0 {
        let mut z = vec![0.0; n];
        z[0] = 1.0;
        return Some(z);
    }
    let mut r = a.clone();
    let mut col_perm: Vec<usize> = (0..n).collect();
    let mut rank = 0;
    while rank < m.min(n) {
        let (mut pi, mut pj, mut best) = (rank, rank, 0.0);
        for i in rank..m {
            for j in rank..n {
                let v = r[(i, j)].abs();
                if v > best {
                    best = v;
                    pi = i;
                    pj = j;
                }
            }
        }
        if best <= tol * scale {
            break;
        }
        if pi != rank {
            for j in 0..n {
                let t = r[(rank, j)];
                r[(rank, j)] = r[(pi, j)];
                r[(pi, j)] = t;
            }
        }
        if pj != rank {
            for i in 0..m {
                let t = r[(i, rank)];
                r[(i, rank)] = r[(i, pj)];
                r[(i, pj)] = t;
            }
            col_perm.swap(rank, pj);
        }
        let pivot = r[(rank, rank)];
        for j in rank..n {
            r[(rank, j)] /= pivot;
        }
        for i in 0..m {
            if i == rank {
                continue;
            }
            let f = r[(i, rank)];
            if f == 0.0 {
                continue;
            }
            for j in rank..n {
                r[(i, j)] -= f * r[(rank, j)];
            }
        }
        rank += 1;
    }
    if rank == n {
        return None;
    }
    // Permuted coordinates: z_free = 1, z_pivot_i = −R[i, free].
    let free = rank;
    let mut zp = vec![0.0; n];
    zp[free] = 1.0;
    for i in 0..rank {
        zp[i] = -r[(i, free)];
    }
    let mut z = vec![0.0; n];
    for (k, &orig) in col_perm.iter().enumerate() {
        z[orig] = zp[k];
    }
    let norm = vec_norm(&z);
    for x in z.iter_mut() {
        *x /= norm;
    }
    let residual = vec_norm(&a.mul_vec(&z));
    if residual <= tol * frobenius(a) {
        Some(z)
    } else {
        None
    }
}

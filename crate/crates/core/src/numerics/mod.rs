//! Dense complex linear algebra sized for small local and global dimensions.

mod eigen;
mod functions;
mod matrix;
mod nullspace;

pub use eigen::{
    hermitian_eig, max_eigenvalue, HermitianEigen, HERMITIAN_TOL, JACOBI_MAX_SWEEPS, JACOBI_TOL,
};
pub use functions::{
    inv_sqrt_on_support, is_psd, psd_rank, sqrt_psd, support_projector, PSD_CLAMP, RANK_TOL,
};
pub use matrix::{sum_matrices, vec_norm, ComplexMatrix, RealMatrix};
pub use nullspace::real_null_vector;

pub(crate) use matrix::c;

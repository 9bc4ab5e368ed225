use super::eigen::hermitian_eig;
use super::matrix::ComplexMatrix;
use crate::error::Error;

/// Eigenvalues down to −PSD_CLAMP·max(1, ‖M‖) are treated as roundoff and clamped to zero.
pub const PSD_CLAMP: f64 = 1e-9;
/// Default relative rank tolerance for support projections.
pub const RANK_TOL: f64 = 1e-10;

fn check_psd(eigenvalues: &[f64], scale: f64) -> Result<(), Error> {
    let floor = -PSD_CLAMP * scale.max(1.0);
    match eigenvalues.first() {
        Some(&l) if l < floor => Err(Error::NotPsd { eigenvalue: l }),
        _ => Ok(()),
    }
}

/// Principal square root of a positive semidefinite matrix.
pub fn sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix, Error> {
    let eig = hermitian_eig(m)?;
    check_psd(&eig.eigenvalues, eig.max_abs_eigenvalue())?;
    Ok(eig.map_spectrum(|l| libm::sqrt(l.max(0.0))))
}

/// Is `m` hermitian PSD up to the clamping window?
pub fn is_psd(m: &ComplexMatrix, tol: f64) -> bool {
    if !m.is_hermitian(tol) {
        return false;
    }
    match hermitian_eig(m) {
        Ok(eig) => eig.eigenvalues.first().is_none_or(|&l| l >= -tol * eig.max_abs_eigenvalue().max(1.0)),
        Err(_) => false,
    }
}

/// Pseudo-inverse square root restricted to the support of `m`, together with
/// the projector onto the kernel.
///
/// Eigenvalues at or below `rank_tol · λ_max` are treated as the kernel.
pub fn inv_sqrt_on_support(
    m: &ComplexMatrix,
    rank_tol: f64,
) -> Result<(ComplexMatrix, ComplexMatrix), Error> {
    let eig = hermitian_eig(m)?;
    let lmax = eig.max_abs_eigenvalue();
    check_psd(&eig.eigenvalues, lmax)?;
    let cutoff = rank_tol * lmax;
    let in_support = |l: f64| lmax > 0.0 && l > cutoff;
    let pinv_sqrt = eig.map_spectrum(|l| if in_support(l) { 1.0 / libm::sqrt(l) } else { 0.0 });
    let null_proj = eig.map_spectrum(|l| if in_support(l) { 0.0 } else { 1.0 });
    Ok((pinv_sqrt, null_proj))
}

/// Projector onto the support of a PSD matrix.
pub fn support_projector(m: &ComplexMatrix, rank_tol: f64) -> Result<ComplexMatrix, Error> {
    let eig = hermitian_eig(m)?;
    let lmax = eig.max_abs_eigenvalue();
    let cutoff = rank_tol * lmax;
    Ok(eig.map_spectrum(|l| if lmax > 0.0 && l > cutoff { 1.0 } else { 0.0 }))
}

/// Number of eigenvalues above `rank_tol · λ_max`.
pub fn psd_rank(m: &ComplexMatrix, rank_tol: f64) -> Result<usize, Error> {
    let eig = hermitian_eig(m)?;
    let lmax = eig.max_abs_eigenvalue();
    if lmax == 0.0 {
        return Ok(0);
    }
    Ok(eig.eigenvalues.iter().filter(|&&l| l > rank_tol * lmax).count())
}

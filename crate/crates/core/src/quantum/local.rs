use crate::error::Error;
use crate::numerics::{inv_sqrt_on_support, sqrt_psd, ComplexMatrix, RANK_TOL};

/// I ⊗ … ⊗ K ⊗ … ⊗ I with `k` in slot `party`.
///
/// `k` must take the party's current dimension as input; its output dimension
/// is free, and the caller tracks the updated space.
pub fn embed_local(k: &ComplexMatrix, party: usize, party_dims: &[usize]) -> Result<ComplexMatrix, Error> {
    let Some(&d) = party_dims.get(party) else {
        return Err(Error::PartyOutOfRange {
            party,
            parties: party_dims.len(),
        });
    };
    if k.cols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: k.cols(),
        });
    }
    let before: usize = party_dims[..party].iter().product();
    let after: usize = party_dims[party + 1..].iter().product();
    let mut out = k.clone();
    if before > 1 {
        out = ComplexMatrix::identity(before).kron(&out);
    }
    if after > 1 {
        out = out.kron(&ComplexMatrix::identity(after));
    }
    Ok(out)
}

/// Polar split A = U·|A| with |A| = √(A†A) and U = A·|A|⁺.
///
/// `U` is an isometry on the support of A†A (U†U is the support projector)
/// and vanishes on its kernel.
pub fn canonicalize_kraus(a: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix), Error> {
    let gram = a.gram();
    let p = sqrt_psd(&gram)?;
    // |A|⁺ = (A†A)^{-1/2} on the support
    let (pinv_abs, _) = inv_sqrt_on_support(&gram, RANK_TOL)?;
    let u = a.matmul(&pinv_abs);
    Ok((p, u))
}

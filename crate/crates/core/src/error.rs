use thiserror::Error;

/// Errors raised by the numerical kernel and the protocol transformations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:.3e})")]
    NotPsd { eigenvalue: f64 },

    #[error("Jacobi iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(&'static str),

    #[error("invalid weights: {0}")]
    InvalidWeights(&'static str),

    #[error("party index {party} out of range for {parties} parties")]
    PartyOutOfRange { party: usize, parties: usize },

    #[error("leaf label {label} out of range for an ensemble of {members} states")]
    LabelOutOfRange { label: usize, members: usize },

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(&'static str),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(&'static str),

    #[error("invalid protocol tree: {0}")]
    InvalidTree(&'static str),

    #[error("protocol tree is not fine-grained")]
    NotFineGrained,

    #[error("equalization left {remaining} outcomes off target")]
    ConvergenceFailure { remaining: usize },

    #[error("component count {count} exceeds cap {cap}")]
    CapExceeded { count: u128, cap: usize },
}

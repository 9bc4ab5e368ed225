//! States, ensembles, measurements and CP maps on multipartite spaces.

mod channel;
mod ensemble;
mod local;

pub use channel::{choi_of, map_of_choi, ChoiMatrix, CpMap, Instrument, InstrumentBranch, Povm};
pub use ensemble::{Ensemble, EnsembleMember, MultipartiteSpace};
pub use local::{canonicalize_kraus, embed_local};

/// Completeness tolerance for POVMs (Frobenius norm of ΣE − I).
pub const POVM_TOL: f64 = 1e-9;
/// Completeness tolerance for instruments and tree vertices.
pub const COMPLETENESS_TOL: f64 = 1e-8;
/// Default relative cut for Kraus extraction from a Choi matrix.
pub const KRAUS_TOL: f64 = 1e-9;

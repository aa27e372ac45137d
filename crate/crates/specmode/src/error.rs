use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are grouped by how a front end should treat them: configuration
/// and usage errors are caller mistakes, budget and truncation errors mean a
/// computation was refused because it would exceed a declared resource limit.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid construction parameters (bad grid bounds, non-positive width, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// API misuse: mismatched grids, non-normalized inputs, wrong partitions.
    #[error("usage error: {0}")]
    Usage(String),

    /// A factorial or tensor-size budget would be exceeded.
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// An amplitude would exceed the occupation-state photon truncation.
    #[error("truncation overflow: {photons} photons exceeds limit {limit}")]
    Truncation { photons: usize, limit: usize },

    /// Gram-Schmidt dropped every seed.
    #[error("empty basis: all seeds were linearly dependent")]
    EmptyBasis,

    /// A basis of the requested size cannot be built from the given family.
    #[error(
        "dimension error: requested {requested} basis functions, only {achievable} achievable"
    )]
    Dimension { requested: usize, achievable: usize },

    /// The symmetric part of a tensor vanished; it cannot be renormalized.
    #[error("unnormalizable: symmetric part is numerically zero")]
    Unnormalizable,

    /// A conditioning step has zero success probability.
    #[error("zero-probability condition: {0}")]
    ZeroProbability(String),

    /// The Fock-input path was given a tensor that does not factorize.
    #[error("not a Fock state (residual {residual:.3e}); use the occupation-state path")]
    NotFock { residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

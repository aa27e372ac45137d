//! Numerical tolerances used across the library, pinned in one place.
//!
//! Grouped by what they protect: input validation, linear-algebra cleanup,
//! and physics verdicts. Tests assert against these same constants so a
//! change here is visible as a deliberate act.

/// Maximum deviation of `⟨f,f⟩` from 1 for an input that claims to be
/// normalized.
pub const NORMALIZATION_CHECK: f64 = 1e-9;

/// Norm below which a Gram–Schmidt candidate is dropped as linearly dependent.
pub const GRAM_SCHMIDT_DROP: f64 = 1e-10;

/// Squared-norm below which the symmetric part of a tensor counts as zero.
pub const SYMMETRIC_PART_FLOOR: f64 = 1e-12;

/// Residual above which a state is not accepted as a single-mode photon-number
/// (Fock) state.
pub const FOCK_RESIDUAL: f64 = 1e-9;

/// Probability below which a conditional outcome is reported as impossible.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Relative weight in the highest retained photon-number sector above which a
/// truncated expansion is flagged as unconverged.
pub const TRUNCATION_WEIGHT: f64 = 1e-3;

/// Tolerance for eigenvalues of a density operator to be accepted as
/// non-negative after floating-point noise.
pub const DENSITY_EIGENVALUE: f64 = 1e-9;

/// λ0 below this means the split function coincides with the reference mode
/// (the complement is undefined and flagged, not used).
pub const PERFECT_OVERLAP: f64 = 1e-6;

/// Decomposition residual above which an incomplete basis is warned about.
pub const INCOMPLETE_BASIS_WARN: f64 = 1e-6;

/// Decomposition coefficients with |λ| at or below this are dropped from the
/// coefficient map (far below quadrature accuracy; keeps maps sparse).
pub const COEFFICIENT_PRUNE: f64 = 1e-12;

/// Largest |ρ[i,j] − conj(ρ[j,i])| a density operator may carry.
pub const DENSITY_HERMITICITY: f64 = 1e-12;

/// Largest |trace − 1| a density operator may carry.
pub const DENSITY_TRACE: f64 = 1e-9;

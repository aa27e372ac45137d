//! Spectral-mode decompositions and linear-optics simulation of pulsed
//! multi-photon states.
//!
//! Photons produced by pulsed sources carry a spectral wavepacket, and
//! multi-photon states carry a joint spectral amplitude over all photons.
//! This crate represents those amplitudes on frequency grids and provides:
//!
//! * single-photon spectral functions and their overlaps ([`spectral`]),
//! * joint spectral amplitudes of multi-photon states, their exchange
//!   symmetry, and the symmetry-dependent normalization factor ([`sdf`],
//!   [`states`]),
//! * discrete eigenmode decompositions that turn a continuous joint
//!   amplitude into occupation amplitudes over an orthonormal mode basis
//!   ([`eigenmode`]),
//! * linear-optics transformations, heralding, filtering, detection and
//!   homodyne observation in the occupation picture ([`optics`]),
//! * ready-made experiments: Hong–Ou–Mandel interference, four-photon
//!   interference, parametric down-conversion sources, heralded kitten-state
//!   preparation and conditional photon-number preparation
//!   ([`experiments`]).
//!
//! Frequencies are in arbitrary angular units; nothing depends on an
//! absolute scale.

pub mod eigenmode;
pub mod error;
pub mod experiments;
pub mod optics;
pub mod sdf;
pub mod spectral;
pub mod states;
pub mod tolerances;

pub use error::{Error, Result};
pub use spectral::{
    gaussian_pulse, inner_product, overlap_gamma, rect_window, FrequencyGrid, SpectralFunction,
};

//! Spectral tracking for families of self-adjoint operators.
//!
//! Spectra are stored as index-anchored windows of an ordered spectral
//! function `j -> lambda_j`. Two windows are compared with the arsinh metric,
//! either directly or modulo the integer shift of indices. Along a path of
//! Hermitian matrices the shifts between consecutive samples are recovered by
//! window matching, which yields a continuous enumeration of the eigenvalues
//! and the spectral flow. Flat spin tori provide closed-form test spectra.

pub mod growth_bounds;
pub mod lifting;
pub mod matching;
pub mod operator_families;
pub mod spectrum_core;
pub mod torus_dirac;

pub use growth_bounds::{family_constants, growth_envelope, safe_step, FamilyConstants};
pub use lifting::{
    negative_index_flow_oracle, spectral_flow, track_path, Controller, TrackOptions, TrackedPath,
};
pub use matching::{
    even_cover_radius, match_complete, match_windows, monotone_rearrange, Edges, ShiftMatch,
};
pub use operator_families::{eigh, eigvalsh, HermitianMatrix, LinearFamily, OperatorFamily};
pub use spectrum_core::{canonical_window, d_a, quotient_distance, ConfDistance, SpectrumWindow};
pub use torus_dirac::{pullback, torus_spectrum, FlatTorus};

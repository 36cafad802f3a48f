//! Semiclassical Schrödinger propagation on the periodic unit interval by
//! Gaussian beams launched from a Gabor frame expansion, with a split-step
//! spectral solver as reference.

// Negated comparisons reject NaN; grids and lattices are never empty.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::len_without_is_empty)]

pub mod beam;
pub mod datum;
pub mod error;
pub mod gabor;
pub mod grid;
pub mod hamiltonian;
pub mod ode;
pub mod propagator;
pub mod reference;
pub mod scenario;
pub mod synthesis;

pub use error::{Error, Result};

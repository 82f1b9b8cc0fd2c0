//! Long-range Ising chains with random boundary conditions.
//!
//! The crate computes couplings and boundary energies, exact and sampled
//! finite-volume Gibbs measures, the triangle and contour encoding of spin
//! configurations with the associated diagnostics, and empirical metastates
//! for both the full model and its zero-temperature toy version.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contour;
pub mod error;
pub mod gibbs;
pub mod lattice;
pub mod metastate;
pub mod registry;
pub mod rng;
pub mod stats;
pub mod toy;

pub use error::{Error, Result};

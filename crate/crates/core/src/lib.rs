//! Emitter-centered mode quantization of the electromagnetic field for
//! multi-emitter nanophotonics.
//!
//! Starting from projected imaginary parts of the dyadic Green's function
//! between emitter (and observation) points, the crate builds at every
//! frequency the minimal set of N orthonormal photon continua that couple to
//! N emitters, assembles the single-excitation Hamiltonian on a discretized
//! frequency grid, propagates it, and reconstructs emitter populations,
//! continuum populations and electric fields.
//!
//! Modules:
//! - [`greens`]: Green's function providers (free space, Lorentzian model,
//!   tabulated solver output)
//! - [`modes`]: couplings, overlap, orthogonalization per frequency
//! - [`grid`]: frequency discretization
//! - [`dynamics`]: Hamiltonian assembly, propagation and observables
//! - [`drive`]: classical pulses acting on the emitters

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod drive;
pub mod dynamics;
pub mod error;
pub mod format;
pub mod greens;
pub mod grid;
pub mod modes;
pub mod par;
pub mod units;

pub use error::{Error, Result};

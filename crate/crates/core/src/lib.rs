//! Remote state preparation between two spin ensembles.
//!
//! Each ensemble of `N` two-level atoms lives in the `(N+1)`-dimensional
//! Fock space. The crate builds the entangled resource (the spin-EPR state or
//! a two-axis two-spin squeezed state), runs Alice's rotation, Fock-basis
//! measurement and Bob's one-bit correction, and evaluates the spin averages,
//! errors and spin Wigner functions of Bob's conditional states.

// `!(x > 0.0)` style checks are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod collective_spin;
pub mod error;
mod lnfact;
pub mod rsp_protocol;
pub mod squeezing;
pub mod wigner;

pub use collective_spin::{EnsembleState, RotationSpec, SpinOperatorSet, C64};
pub use error::{Result, RspError};
pub use squeezing::DiagonalPairState;

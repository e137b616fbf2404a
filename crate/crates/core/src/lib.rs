//! Gradient-variance analysis for layered variational quantum circuits.
//!
//! The crate is organised around five pieces:
//!
//! - [`pauli`]: sparse Pauli strings, their products and commutation, and
//!   Hamiltonians written as real combinations of strings.
//! - [`ansatz`]: block/layer layouts, validation and causal cones.
//! - [`design`]: exact gradient variances when every block is a local
//!   2-design, computed by propagating support patterns, together with the
//!   closed-form lower bound.
//! - [`sim`]: a dense statevector simulator used as a Monte-Carlo oracle for
//!   the exact engine, with concrete two-qubit gate families.
//! - [`tpe`]: distance of gate families to an exact 2-design, measured on
//!   the second-moment operator.
//!
//! [`experiment`] ties these together into reproducible, config-driven runs.

pub mod ansatz;
pub mod design;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod pauli;
pub mod sim;
pub mod stats;
pub mod tpe;

pub use error::{Error, Result};

//! Simulation of NOON-state generation in two microwave resonators coupled
//! through a superconducting transmon qutrit.
//!
//! The crate builds the interaction-picture Hamiltonians of the protocol
//! stages, integrates the Lindblad master equation over the pulse schedule
//! and reports the fidelity of the final state against the target
//! `(|N,0⟩ + |0,N⟩)/√2`.

// `!(x > 0.0)` is used on purpose so NaN fails parameter checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod device;
pub mod error;
pub mod experiments;
pub mod hamiltonian;
pub mod lindblad;
pub mod protocol;
pub mod qspace;

pub use error::{Error, Result};

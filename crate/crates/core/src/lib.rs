//! Alternative LCU circuit with Hadamard index mixing and a single rotation
//! qubit, modeled with explicit dense matrices.
//!
//! Every ancilla outcome of the circuit is kept: the `2K x N` output matrix
//! factors as `Phi = C X`, which the [`recovery`] module exploits for
//! low-rank completion and the [`trapdoor`] module for coefficient hiding.

pub mod circuit;
pub mod error;
pub mod io;
pub mod linalg;
pub mod output;
pub mod recovery;
pub mod rng;
pub mod spectral;
pub mod trapdoor;
pub mod verify;

pub use error::{LcuError, Result};

//! Exact simulation of measurement-only topological qubits.
//!
//! The crate is layered bottom-up:
//!
//! * [`pauli`], [`operator`] and [`state`]: Pauli strings, dense operators,
//!   transfer matrices and the sparse Pauli-coefficient state.
//! * [`channels`]: the physical noise model and the instrument channels.
//! * [`sim`]: measurement circuits, detectors and the branch-resolved
//!   instrument simulator.
//! * [`mbqb`], [`braiding`], [`qed`]: the experiments built on top.

pub mod braiding;
pub mod channels;
pub mod error;
pub mod mbqb;
pub mod operator;
pub mod pauli;
pub mod qed;
pub mod sim;
pub mod state;
pub mod tomography;

pub use error::{Error, Result};

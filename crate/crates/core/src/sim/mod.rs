//! Branch-resolved simulation of noisy measurement circuits.
//!
//! A circuit is a list of steps; each step measures Pauli operators on
//! disjoint qubits and every untouched qubit idles. The simulator keeps one
//! unnormalised state per outcome record, so outcome statistics, detector
//! post-selection and Pauli-frame corrections are all exact.

mod circuit;
mod ensemble;
mod runner;
mod stabilizer;
mod text;

pub use circuit::{Circuit, CircuitBuilder, CircuitStep, Detector, DetectorParity, Operation, ResolvedDetector, SlotId};
pub use ensemble::{init_ensemble, OutcomeRecord, TrajectoryEnsemble};
pub use runner::{run_circuit, RunOptions, Runner};
pub use stabilizer::{derive_detectors, stabilizer_generators, StabilizerTracker, TrackedMeasurement};

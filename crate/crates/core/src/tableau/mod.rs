//! Stabilizer simulation: exact tableau (reference runs, conjugation) and
//! bit-parallel Pauli frames (sampling, fault propagation).

mod clifford;
mod frame;
mod pauli;
mod sim;

use thiserror::Error;

use crate::circuit::Gate;

pub use clifford::CliffordImage;
pub use frame::{split_seed, FOpView, Fault, FaultEffect, FrameProgram, Samples, CHUNK_SHOTS};
pub use pauli::PauliString;
pub use sim::{conjugate, simulate_reference, Tableau};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("non-Clifford gate {} in a stabilizer simulation", .0.name())]
    NonClifford(Gate),
    #[error("conjugation requires a purely unitary circuit")]
    NotUnitary,
    #[error("MERR on qubit {0} before any measurement")]
    DanglingMErr(u32),
}

//! Magic-state cultivation workbench.
//!
//! * [`circuit`]: instruction IR, text format, noise and lowering passes.
//! * [`geometry`]: rotated/unrotated surface-code patches, fold structure,
//!   mid-cycle code and expansion maps.
//! * [`protocol`]: circuit builders for H, H_XY and CX cultivation, both
//!   Clifford proxies and true non-Clifford circuits.
//! * [`tableau`]: stabilizer tableau and Pauli-frame sampler.
//! * [`densesim`]: state-vector trajectories, fidelity, exhaustive fault scans.
//! * [`dem`]: detector error models, matching and complementary-gap decoding.
//! * [`harness`]: experiment runner, sweeps and result tables.

pub mod circuit;
pub mod dem;
pub mod densesim;
pub mod geometry;
pub mod gf2;
pub mod harness;
pub mod protocol;
pub mod scan;
pub mod tableau;

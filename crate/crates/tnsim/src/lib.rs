//! Tensor-network quantum circuit simulation with fidelity-targeted
//! bond truncation.
//!
//! Pure states are held as matrix product states (MPS) and mixed states as
//! matrix product operators (MPO). Instead of capping bond dimensions at a
//! fixed maximum, every truncation is driven by a per-truncation fidelity
//! target derived from a global minimum fidelity `f_min`: the running product
//! of per-truncation fidelities certifies a bound on the fidelity of the
//! final state without ever constructing the exact state.

pub mod budget;
mod chain;
pub mod circuit;
pub mod mpo;
pub mod mps;
pub mod oracle;
pub mod runner;
pub mod tensor;

pub use budget::{Certificate, FidelityLedger, Strategy, TruncationRecord};
pub use chain::SimError;
pub use circuit::{Circuit, GateOp};
pub use mpo::{MpoState, NoiseModel};
pub use mps::MpsState;
pub use runner::{CircuitKind, ComparisonReport, Mode, RunConfig, RunError, RunReport};
pub use tensor::{DenseTensor, SvdResult};

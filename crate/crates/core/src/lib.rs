//! Global quantum discord (entropic and geometric) for multi-qubit states,
//! computed through the generalized Bloch tensor `n_a = Tr(ρ O_a)`.
//!
//! The crate is organised bottom-up:
//!
//! * [`qstate`]: density matrices, Bloch tensors, measurement frames, entropies.
//! * [`decompose`]: signed 3×3 SVD with proper rotations and HOSVD of `3^N` tensors.
//! * [`tensor_norm`]: the injective norm `max C({Θ_i})` via damped mean-field sweeps,
//!   a grid oracle and the exact two-qubit route.
//! * [`discord`]: GGQD and GQD on the restricted (maximally mixed marginal) subspace.
//! * [`maxsat`]: the MAX-k-SAT to multilinear-energy encoding and its solvers.
//! * [`dynamics`]: phase-flip decoherence trajectories and kink detection.
//! * [`montecarlo`]: Haar sampling and near-crossing probability estimates.
//! * [`cli`]: the command-line front end used by the `bloch-discord` binary.

pub mod cli;
pub mod decompose;
pub mod discord;
pub mod dynamics;
mod error;
pub mod io;
pub mod maxsat;
pub mod montecarlo;
pub mod qstate;
pub mod tensor_norm;

pub use error::{Error, Result};

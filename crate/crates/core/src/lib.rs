//! Entanglement of bipartite pure states measured through the correlations
//! between local measurement outcomes in the Schmidt bases.
//!
//! For a state `Σᵢ √λᵢ |i_A⟩|i_B⟩` the deviation of each joint outcome
//! probability from the product of its marginals,
//! `Δ(i, j) = |P(i_A, j_B) − P(i_A) P(j_B)|`, vanishes for product states.
//! Summing the Δ's gives the squared concurrence for qubits and the
//! I-concurrence, rescaled to `[0, 1]`, in general.
//!
//! Modules:
//! - [`qstate`]: pure states, density matrices and their text formats
//! - [`schmidt`]: Schmidt decomposition
//! - [`correlations`]: outcome probabilities and the Δ table
//! - [`measures`]: `E₂`, `E_N` and the three-qubit residual tangle
//! - [`convexroof`]: mixed-state extension by ensemble minimization
//! - [`bell`]: joint polarization expectations and CHSH
//! - [`expsim`]: seeded measurement simulation and estimation

pub mod bell;
pub mod convexroof;
pub mod correlations;
pub mod error;
pub mod expsim;
pub mod linalg;
pub mod measures;
pub mod qstate;
pub mod schmidt;

pub use error::{Error, Result};

//! Direct measurement of a d-dimensional wavefunction with a qubit pointer.
//!
//! A position-controlled rotation couples the system to the pointer, the
//! system is post-selected on zero momentum, and the pointer is read out in
//! three bases. The resulting *joint* probabilities map linearly onto the
//! complex amplitudes `ψ_x`, up to one global constant fixed by normalization.
//!
//! - [`state`]: system, pointer and joint state vectors.
//! - [`protocol`]: coupling, unnormalized pointer state and exact probabilities.
//! - [`reconstruction`]: inversion of probabilities into amplitudes.
//! - [`sampler`]: finite-shot simulation of the measurement scan.
//! - [`metrics`]: fidelity, phase-aligned errors and the trial harness.
//! - [`cli`]: configuration, commands and result files behind the binary.

pub mod cli;
pub mod error;
pub mod metrics;
pub mod par;
pub mod protocol;
pub mod reconstruction;
pub mod sampler;
pub mod state;

pub use error::{Error, Result};
pub use metrics::{TrialStatistics, fidelity, phase_aligned_l2, run_trials, theta_sweep};
pub use par::Execution;
pub use protocol::{
    CouplingStrength, ProbabilitySet, apply_coupling, conditional_probabilities,
    joint_probabilities, pointer_collapse, postselection_probability,
};
pub use reconstruction::{ReconstructionResult, raw_amplitude, reconstruct, reconstruct_exact};
pub use sampler::{CountTable, PointerBasis, ShotBudget, estimate_probset, sample_counts};
pub use state::{
    JointState, PointerLabel, PointerState, StateVector, SystemState, UnnormalizedPointerState,
    fourier_basis, inner, pointer_basis,
};

//! Inversion of joint probabilities into wavefunction amplitudes.
//!
//! For each coupled position the bracket
//! `P_+ − P_- + 2 P_1 tan(θ/2) + i (P_L − P_R)` equals
//! `(2 ψ̃* sin θ / d) ψ_x`. The common prefactor is fixed afterwards by
//! normalizing the vector of brackets, so unnormalized joint probabilities
//! are all that is needed. The leftover global phase is chosen so that the
//! estimate's amplitude sum is real and nonnegative.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::protocol::{self, CouplingStrength, ProbabilitySet};
use crate::state::{StateVector, SystemState};

/// `‖raw‖` floor for exact (noise-free) probabilities.
pub const EXACT_RAW_NORM_FLOOR: f64 = 1e-9;

/// Brackets for every position, before normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEstimate {
    pub per_x: Vec<Complex64>,
    pub theta: CouplingStrength,
}

impl RawEstimate {
    pub fn dim(&self) -> usize {
        self.per_x.len()
    }

    pub fn norm(&self) -> f64 {
        self.per_x.norm_sqr().sqrt()
    }
}

/// How many shots went into a reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotsUsed {
    Exact,
    /// Shots per measurement setting, indexed `3x + basis` with bases
    /// ordered X, Y, Z.
    Sampled(Vec<u64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub estimate: SystemState,
    pub raw: RawEstimate,
    /// `|ψ̃| = |Σ_x ψ_x|` recovered from the normalization.
    pub tilde_psi_magnitude: f64,
    /// `P_+ + P_-` for each coupled position.
    pub postselection: Vec<f64>,
    pub shots_used: ShotsUsed,
}

/// The Eq.-7 bracket for one position, without the `d / (2 ψ̃ sin θ)` prefactor.
pub fn raw_amplitude(probs: &ProbabilitySet, strength: CouplingStrength) -> Result<Complex64> {
    strength.check_invertible()?;
    let half_tan = (strength.theta() / 2.0).tan();
    Ok(Complex64::new(
        probs.p_plus - probs.p_minus + 2.0 * probs.p_one * half_tan,
        probs.p_l - probs.p_r,
    ))
}

/// Reconstructs from exact probabilities (raw-norm floor [`EXACT_RAW_NORM_FLOOR`]).
pub fn reconstruct(
    probsets: &[ProbabilitySet],
    strength: CouplingStrength,
) -> Result<ReconstructionResult> {
    reconstruct_with_floor(probsets, strength, EXACT_RAW_NORM_FLOOR, ShotsUsed::Exact)
}

/// Reconstructs, reporting `VanishingTildePsi` whenever `‖raw‖ <= floor`.
pub fn reconstruct_with_floor(
    probsets: &[ProbabilitySet],
    strength: CouplingStrength,
    floor: f64,
    shots_used: ShotsUsed,
) -> Result<ReconstructionResult> {
    let d = probsets.len();
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    strength.check_invertible()?;
    let per_x = probsets
        .iter()
        .map(|p| raw_amplitude(p, strength))
        .collect::<Result<Vec<_>>>()?;
    let raw = RawEstimate {
        per_x,
        theta: strength,
    };
    let norm = raw.norm();
    if norm.is_nan() || norm <= floor {
        return Err(Error::VanishingTildePsi { norm, floor });
    }
    let estimate = SystemState::new(raw.per_x.clone())?.with_real_sum();
    let tilde_psi_magnitude = d as f64 * norm / (2.0 * strength.theta().sin());
    Ok(ReconstructionResult {
        estimate,
        raw,
        tilde_psi_magnitude,
        postselection: probsets.iter().map(ProbabilitySet::postselection).collect(),
        shots_used,
    })
}

/// Runs the exact protocol for every position and reconstructs.
pub fn reconstruct_exact(
    psi: &SystemState,
    strength: CouplingStrength,
) -> Result<ReconstructionResult> {
    reconstruct_exact_with(psi, strength, Execution::Sequential)
}

pub fn reconstruct_exact_with(
    psi: &SystemState,
    strength: CouplingStrength,
    exec: Execution,
) -> Result<ReconstructionResult> {
    strength.check_invertible()?;
    let probsets = par::map_indexed(psi.dim(), exec, |x| {
        let joint = protocol::apply_coupling(psi, x, strength).expect("x < d");
        protocol::joint_probabilities(&joint)
    });
    reconstruct(&probsets, strength)
}

/// Noise-aware raw-norm floor for sampled probabilities, `3 √(6 / (N d))`
/// with `N` the shots per setting.
pub fn sampled_raw_norm_floor(shots_per_setting: u64, d: usize) -> f64 {
    3.0 * (6.0 / (shots_per_setting as f64 * d as f64)).sqrt()
}

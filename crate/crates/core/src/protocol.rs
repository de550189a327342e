//! Pointer coupling and the exact probabilities it produces.
//!
//! The coupling `U_x(θ) = |x><x| ⊗ R(θ) + (I − |x><x|) ⊗ I` rotates the
//! pointer by `θ` only when the system sits at position `x`, with
//! `R(θ)|0> = cos θ|0> + sin θ|1>` and `R(θ)|1> = −sin θ|0> + cos θ|1>`.
//! It is applied as an update of the two amplitudes in the `x` block.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{
    JointState, PointerLabel, PointerState, StateVector, SystemState, UnnormalizedPointerState,
    inner,
};

/// Angles closer than this to a zero of `sin θ` (or to the `tan(θ/2)` pole at
/// π) cannot be inverted.
pub const DEGENERATE_ANGLE_TOL: f64 = 1e-9;

/// Underflow guard for Bayes' rule.
pub const ZERO_POSTSELECTION_TOL: f64 = 1e-300;

/// Pointer rotation angle θ in radians, `0 <= θ <= π`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CouplingStrength(f64);

impl CouplingStrength {
    pub fn new(theta: f64) -> Result<Self> {
        if !theta.is_finite() || !(0.0..=PI).contains(&theta) {
            return Err(Error::AngleOutOfRange(theta));
        }
        Ok(Self(theta))
    }

    pub fn theta(self) -> f64 {
        self.0
    }

    /// Errors with `DegenerateAngle` when the inversion formula is singular.
    pub fn check_invertible(self) -> Result<()> {
        if self.0.sin() <= DEGENERATE_ANGLE_TOL || (self.0 - PI).abs() <= DEGENERATE_ANGLE_TOL {
            Err(Error::DegenerateAngle(self.0))
        } else {
            Ok(())
        }
    }
}

/// The six pointer-outcome probabilities for one coupled position.
///
/// Values are joint probabilities `Prob(j, p0)` unless produced by
/// [`conditional_probabilities`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ProbabilitySet {
    pub p_plus: f64,
    pub p_minus: f64,
    pub p_zero: f64,
    pub p_one: f64,
    #[serde(rename = "p_L")]
    pub p_l: f64,
    #[serde(rename = "p_R")]
    pub p_r: f64,
}

impl ProbabilitySet {
    pub fn get(&self, label: PointerLabel) -> f64 {
        match label {
            PointerLabel::Plus => self.p_plus,
            PointerLabel::Minus => self.p_minus,
            PointerLabel::Zero => self.p_zero,
            PointerLabel::One => self.p_one,
            PointerLabel::L => self.p_l,
            PointerLabel::R => self.p_r,
        }
    }

    fn from_fn(mut f: impl FnMut(PointerLabel) -> f64) -> Self {
        Self {
            p_plus: f(PointerLabel::Plus),
            p_minus: f(PointerLabel::Minus),
            p_zero: f(PointerLabel::Zero),
            p_one: f(PointerLabel::One),
            p_l: f(PointerLabel::L),
            p_r: f(PointerLabel::R),
        }
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self::from_fn(|label| f(self.get(label)))
    }

    /// `P_+ + P_-`, which for exact joint probabilities is `<φ|φ>`.
    pub fn postselection(&self) -> f64 {
        self.p_plus + self.p_minus
    }
}

/// `|Ψ'> = U_x(θ) (|ψ> ⊗ |0>_P)`.
pub fn apply_coupling(
    psi: &SystemState,
    x: usize,
    strength: CouplingStrength,
) -> Result<JointState> {
    let d = psi.dim();
    if x >= d {
        return Err(Error::IndexOutOfRange { index: x, dim: d });
    }
    let mut joint = JointState::product_with_ready_pointer(psi);
    let (s, c) = strength.theta().sin_cos();
    let block = joint.block_mut(x);
    let (a0, a1) = (block[0], block[1]);
    block[0] = a0 * c - a1 * s;
    block[1] = a0 * s + a1 * c;
    Ok(joint)
}

/// `|φ>_P = (<p0| ⊗ I) |Ψ'>`, i.e. `φ_p = (1/√d) Σ_x Ψ'(x, p)`.
pub fn pointer_collapse(joint: &JointState) -> UnnormalizedPointerState {
    let d = joint.dim();
    let (mut s0, mut s1) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for x in 0..d {
        let [a0, a1] = joint.block(x);
        s0 += a0;
        s1 += a1;
    }
    let scale = 1.0 / (d as f64).sqrt();
    UnnormalizedPointerState::new(s0 * scale, s1 * scale)
}

/// `P_j = |<j|φ>|²` evaluated on an unnormalized pointer state.
pub fn probabilities_from_pointer(phi: &UnnormalizedPointerState) -> ProbabilitySet {
    ProbabilitySet::from_fn(|label| {
        // both operands have two components, so inner cannot fail
        inner(&PointerState::basis(label), phi)
            .map(|a| a.norm_sqr())
            .unwrap_or(f64::NAN)
    })
}

/// Joint probabilities `Prob(j, p0)` for every pointer label, through the
/// unnormalized pointer state.
pub fn joint_probabilities(joint: &JointState) -> ProbabilitySet {
    probabilities_from_pointer(&pointer_collapse(joint))
}

/// Joint probabilities computed as `|(<p0| ⊗ <j|) |Ψ'>|²` directly on the
/// joint state, with the product bra built explicitly over all 2d entries.
pub fn joint_probabilities_direct(joint: &JointState) -> ProbabilitySet {
    let d = joint.dim();
    let p0 = 1.0 / (d as f64).sqrt();
    ProbabilitySet::from_fn(|label| {
        let j = PointerState::basis(label).components();
        let bra: Vec<Complex64> = (0..2 * d).map(|i| j[i % 2] * p0).collect();
        inner(&bra, joint)
            .map(|a| a.norm_sqr())
            .unwrap_or(f64::NAN)
    })
}

/// Bayes' rule: `Prob(j | p0) = Prob(j, p0) / <φ|φ>`.
pub fn conditional_probabilities(probs: &ProbabilitySet) -> Result<ProbabilitySet> {
    let post = probs.postselection();
    if post.is_nan() || post < ZERO_POSTSELECTION_TOL {
        return Err(Error::ZeroPostSelection(post));
    }
    Ok(probs.map(|p| p / post))
}

/// `<φ|φ>`, the probability that post-selection on `|p0>` succeeds.
pub fn postselection_probability(joint: &JointState) -> f64 {
    pointer_collapse(joint).norm_sqr()
}

/// `<p0| Tr_P[|Ψ'><Ψ'|] |p0>`, going through the reduced system density
/// matrix. O(d²); kept as an independent route to [`postselection_probability`].
pub fn postselection_probability_traced(joint: &JointState) -> f64 {
    let d = joint.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for x in 0..d {
        let bx = joint.block(x);
        for y in 0..d {
            let by = joint.block(y);
            // ρ_X[x][y] = Σ_p Ψ'(x,p) conj(Ψ'(y,p))
            acc += bx[0] * by[0].conj() + bx[1] * by[1].conj();
        }
    }
    acc.re / d as f64
}

/// Exact joint probabilities for every coupled position `x = 0..d`.
pub fn exact_probsets(psi: &SystemState, strength: CouplingStrength) -> Vec<ProbabilitySet> {
    (0..psi.dim())
        .map(|x| {
            let joint = apply_coupling(psi, x, strength).expect("x < d");
            joint_probabilities(&joint)
        })
        .collect()
}

//! State vectors for the d-dimensional system and the qubit pointer.
//!
//! Every state is an immutable vector of `Complex64` amplitudes. The joint
//! system⊗pointer space is stored with the pointer index fastest-varying, so
//! amplitude `(x, p)` lives at `2 * x + p` and each position owns a contiguous
//! two-element block.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Anything that exposes a flat amplitude vector.
pub trait StateVector {
    fn amplitudes(&self) -> &[Complex64];

    fn len(&self) -> usize {
        self.amplitudes().len()
    }

    fn is_empty(&self) -> bool {
        self.amplitudes().is_empty()
    }

    fn norm_sqr(&self) -> f64 {
        self.amplitudes().iter().map(|a| a.norm_sqr()).sum()
    }
}

/// `<a|b> = Σ conj(a_i) b_i`, conjugate-linear in the first argument.
pub fn inner<A, B>(a: &A, b: &B) -> Result<Complex64>
where
    A: StateVector + ?Sized,
    B: StateVector + ?Sized,
{
    let (a, b) = (a.amplitudes(), b.amplitudes());
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(ai, bi)| ai.conj() * bi).sum())
}

impl StateVector for [Complex64] {
    fn amplitudes(&self) -> &[Complex64] {
        self
    }
}

impl StateVector for Vec<Complex64> {
    fn amplitudes(&self) -> &[Complex64] {
        self
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        Err(Error::DimensionTooSmall(d))
    } else {
        Ok(())
    }
}

/// Normalized pure state of the d-level system (`d >= 2`).
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    amps: Vec<Complex64>,
}

impl SystemState {
    /// Normalizes `raw` to unit L2 norm.
    pub fn new(raw: Vec<Complex64>) -> Result<Self> {
        check_dim(raw.len())?;
        if raw.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm = raw.norm_sqr().sqrt();
        if norm < 1e-150 {
            return Err(Error::ZeroVector);
        }
        if norm == 1.0 {
            return Ok(Self { amps: raw });
        }
        let amps = raw.into_iter().map(|a| a / norm).collect();
        Ok(Self { amps })
    }

    /// Convenience constructor from real amplitudes.
    pub fn from_real(raw: &[f64]) -> Result<Self> {
        Self::new(raw.iter().map(|&r| Complex64::new(r, 0.0)).collect())
    }

    /// `|p0> = (1/√d) Σ_x |x>`.
    pub fn momentum_zero(d: usize) -> Result<Self> {
        check_dim(d)?;
        let a = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
        Ok(Self { amps: vec![a; d] })
    }

    /// Computational basis state `|k>`.
    pub fn basis(d: usize, k: usize) -> Result<Self> {
        check_dim(d)?;
        if k >= d {
            return Err(Error::IndexOutOfRange { index: k, dim: d });
        }
        let mut amps = vec![ZERO; d];
        amps[k] = ONE;
        Ok(Self { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// `ψ̃ = Σ_x ψ_x`.
    pub fn amplitude_sum(&self) -> Complex64 {
        self.amps.iter().sum()
    }

    /// Multiplies every amplitude by the unit phase `e^{iα}`.
    pub fn with_global_phase(&self, alpha: f64) -> Self {
        let phase = Complex64::from_polar(1.0, alpha);
        Self {
            amps: self.amps.iter().map(|a| a * phase).collect(),
        }
    }

    /// Rotates the global phase so the amplitude sum is real and nonnegative.
    /// States whose sum vanishes are returned unchanged.
    pub fn with_real_sum(&self) -> Self {
        let sum = self.amplitude_sum();
        if sum.norm() == 0.0 {
            return self.clone();
        }
        self.with_global_phase(-sum.arg())
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }
}

impl StateVector for SystemState {
    fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }
}

/// Discrete Fourier (momentum) basis: state `k` has amplitudes
/// `exp(2πi·k·x/d)/√d`. State 0 is the zero-momentum state.
pub fn fourier_basis(d: usize) -> Result<Vec<SystemState>> {
    check_dim(d)?;
    let scale = 1.0 / (d as f64).sqrt();
    Ok((0..d)
        .map(|k| {
            let amps = (0..d)
                .map(|x| {
                    // reduce k*x mod d first so the phase stays accurate for large d
                    let m = (k * x) % d;
                    Complex64::from_polar(scale, TAU * m as f64 / d as f64)
                })
                .collect();
            SystemState { amps }
        })
        .collect())
}

/// Pointer basis labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointerLabel {
    Plus,
    Minus,
    L,
    R,
    Zero,
    One,
}

impl PointerLabel {
    pub const ALL: [PointerLabel; 6] = [
        PointerLabel::Plus,
        PointerLabel::Minus,
        PointerLabel::Zero,
        PointerLabel::One,
        PointerLabel::L,
        PointerLabel::R,
    ];
}

impl FromStr for PointerLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" => Ok(Self::Plus),
            "minus" | "-" => Ok(Self::Minus),
            "L" | "l" => Ok(Self::L),
            "R" | "r" => Ok(Self::R),
            "zero" | "0" => Ok(Self::Zero),
            "one" | "1" => Ok(Self::One),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}

impl fmt::Display for PointerLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Plus => "plus",
            Self::Minus => "minus",
            Self::L => "L",
            Self::R => "R",
            Self::Zero => "zero",
            Self::One => "one",
        };
        f.write_str(s)
    }
}

/// Normalized qubit pointer state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointerState {
    amps: [Complex64; 2],
}

impl PointerState {
    /// `|±> = (|0> ± |1>)/√2`, `|L> = (|0> + i|1>)/√2`, `|R> = (|0> − i|1>)/√2`.
    pub fn basis(label: PointerLabel) -> Self {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let ih = Complex64::new(0.0, FRAC_1_SQRT_2);
        let amps = match label {
            PointerLabel::Plus => [h, h],
            PointerLabel::Minus => [h, -h],
            PointerLabel::L => [h, ih],
            PointerLabel::R => [h, -ih],
            PointerLabel::Zero => [ONE, ZERO],
            PointerLabel::One => [ZERO, ONE],
        };
        Self { amps }
    }

    pub fn components(&self) -> [Complex64; 2] {
        self.amps
    }
}

/// Parses a label such as `plus` or `R` into its pointer state.
pub fn pointer_basis(label: &str) -> Result<PointerState> {
    label.parse().map(PointerState::basis)
}

impl StateVector for PointerState {
    fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }
}

/// System⊗pointer state, amplitude `(x, p)` at index `2x + p`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    amps: Vec<Complex64>,
}

impl JointState {
    /// `ψ ⊗ |0>_P`.
    pub fn product_with_ready_pointer(psi: &SystemState) -> Self {
        let mut amps = Vec::with_capacity(2 * psi.dim());
        for &a in psi.amplitudes() {
            amps.push(a);
            amps.push(ZERO);
        }
        Self { amps }
    }

    /// System dimension d.
    pub fn dim(&self) -> usize {
        self.amps.len() / 2
    }

    pub fn get(&self, x: usize, p: usize) -> Complex64 {
        self.amps[2 * x + p]
    }

    /// The two pointer amplitudes attached to position `x`.
    pub fn block(&self, x: usize) -> [Complex64; 2] {
        [self.amps[2 * x], self.amps[2 * x + 1]]
    }

    pub(crate) fn block_mut(&mut self, x: usize) -> &mut [Complex64] {
        &mut self.amps[2 * x..2 * x + 2]
    }
}

impl StateVector for JointState {
    fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }
}

/// Pointer amplitudes left after projecting the system onto `|p0>`; the
/// squared norm is the post-selection probability and is generally < 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnnormalizedPointerState {
    amps: [Complex64; 2],
}

impl UnnormalizedPointerState {
    pub fn new(c0: Complex64, c1: Complex64) -> Self {
        Self { amps: [c0, c1] }
    }

    pub fn components(&self) -> [Complex64; 2] {
        self.amps
    }
}

impl StateVector for UnnormalizedPointerState {
    fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_amps(actual: &[Complex64], expected: &[Complex64], tol: f64) {
        assert_eq!(actual.len(), expected.len());
        for (a, e) in actual.iter().zip(expected) {
            assert!((a - e).norm() <= tol, "{a} != {e}");
        }
    }

    #[test]
    fn normalizes_inputs() {
        let s = SystemState::new(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(s.amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0)]);

        let s = SystemState::new(vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_amps(s.amplitudes(), &[c(FRAC_1_SQRT_2, 0.0); 2], 1e-15);

        let s = SystemState::new(vec![c(3.0, 0.0), c(0.0, 4.0)]).unwrap();
        assert_amps(s.amplitudes(), &[c(0.6, 0.0), c(0.0, 0.8)], 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(SystemState::new(vec![ZERO, ZERO]), Err(Error::ZeroVector));
        assert_eq!(SystemState::new(vec![ONE]), Err(Error::DimensionTooSmall(1)));
        assert_eq!(SystemState::new(vec![]), Err(Error::DimensionTooSmall(0)));
        assert_eq!(
            SystemState::new(vec![c(f64::NAN, 0.0), ONE]),
            Err(Error::NonFinite)
        );
        assert_eq!(SystemState::momentum_zero(1), Err(Error::DimensionTooSmall(1)));
        assert!(fourier_basis(0).is_err());
    }

    #[test]
    fn momentum_zero_is_uniform() {
        let s = SystemState::momentum_zero(4).unwrap();
        assert_amps(s.amplitudes(), &[c(0.5, 0.0); 4], 0.0);
        let s = SystemState::momentum_zero(2).unwrap();
        assert_amps(s.amplitudes(), &[c(FRAC_1_SQRT_2, 0.0); 2], 1e-15);
        for d in 2..40 {
            let s = SystemState::momentum_zero(d).unwrap();
            assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn fourier_columns() {
        let b = fourier_basis(2).unwrap();
        assert_amps(
            b[1].amplitudes(),
            &[c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)],
            1e-15,
        );
        let b = fourier_basis(3).unwrap();
        let w = Complex64::from_polar(1.0, TAU / 3.0);
        let s = 1.0 / 3f64.sqrt();
        assert_amps(b[1].amplitudes(), &[c(s, 0.0), w * s, w * w * s], 1e-15);
        let b = fourier_basis(7).unwrap();
        assert_eq!(b[0], SystemState::momentum_zero(7).unwrap());
    }

    fn max_gram_deviation(d: usize) -> f64 {
        let b = fourier_basis(d).unwrap();
        let mut worst = 0.0f64;
        for (i, u) in b.iter().enumerate() {
            for (j, v) in b.iter().enumerate() {
                let g = inner(u, v).unwrap();
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }

    #[test]
    fn fourier_basis_is_orthonormal() {
        for d in [2, 3, 4, 5, 8, 16, 33, 64] {
            assert!(max_gram_deviation(d) < 1e-12, "d = {d}");
        }
    }

    #[test]
    #[ignore = "O(d^3) stress check, run with --ignored"]
    fn fourier_basis_is_orthonormal_at_1024() {
        assert!(max_gram_deviation(1024) < 1e-12);
    }

    #[test]
    fn pointer_states() {
        let p = pointer_basis("plus").unwrap();
        assert_amps(p.amplitudes(), &[c(FRAC_1_SQRT_2, 0.0); 2], 0.0);
        let r = pointer_basis("R").unwrap();
        assert_amps(
            r.amplitudes(),
            &[c(FRAC_1_SQRT_2, 0.0), c(0.0, -FRAC_1_SQRT_2)],
            0.0,
        );
        assert_eq!(pointer_basis("zero").unwrap().components(), [ONE, ZERO]);
        assert_eq!(pointer_basis("one").unwrap().components(), [ZERO, ONE]);
        assert!(matches!(pointer_basis("up"), Err(Error::UnknownLabel(_))));

        let plus = PointerState::basis(PointerLabel::Plus);
        let minus = PointerState::basis(PointerLabel::Minus);
        let l = PointerState::basis(PointerLabel::L);
        let rr = PointerState::basis(PointerLabel::R);
        assert!(inner(&plus, &minus).unwrap().norm() < 1e-15);
        assert!(inner(&l, &rr).unwrap().norm() < 1e-15);
        for label in PointerLabel::ALL {
            assert_abs_diff_eq!(PointerState::basis(label).norm_sqr(), 1.0, epsilon = 1e-15);
            assert_eq!(label.to_string().parse::<PointerLabel>().unwrap(), label);
        }
    }

    #[test]
    fn inner_products() {
        let s = SystemState::new(vec![c(0.3, 0.1), c(-0.2, 0.9), c(0.5, 0.0)]).unwrap();
        assert_abs_diff_eq!(inner(&s, &s).unwrap().re, 1.0, epsilon = 1e-15);
        let e0 = vec![ONE, ZERO];
        let e1 = vec![ZERO, ONE];
        assert_eq!(inner(&e0, &e1).unwrap(), ZERO);
        let l = vec![c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2)];
        let r = vec![c(FRAC_1_SQRT_2, 0.0), c(0.0, -FRAC_1_SQRT_2)];
        assert!(inner(&l, &r).unwrap().norm() < 1e-16);
        // conjugate-linear in the first slot
        let i_e0 = vec![c(0.0, 1.0), ZERO];
        assert_eq!(inner(&i_e0, &e0).unwrap(), c(0.0, -1.0));
        assert_eq!(
            inner(&e0, &s),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 3
            })
        );
    }

    #[test]
    fn real_sum_convention() {
        let s = SystemState::new(vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let r = s.with_real_sum();
        let sum = r.amplitude_sum();
        assert!(sum.im.abs() < 1e-15 && sum.re > 0.0);
        assert_abs_diff_eq!(sum.re, s.amplitude_sum().norm(), epsilon = 1e-15);
    }
}

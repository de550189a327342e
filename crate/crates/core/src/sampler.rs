//! Finite-statistics simulation of the measurement scan.
//!
//! Every setting `(x, basis)` is an independent experiment: couple at `x`,
//! measure the system in the full Fourier (momentum) basis and the pointer in
//! one of the X / Y / Z bases, repeat `N` times. Only the zero-momentum cells
//! enter the reconstruction; the others are kept so a count table describes
//! the complete outcome space.
//!
//! Randomness comes from `ChaCha8Rng`. Each setting draws from its own stream
//! whose seed is `derive_seed(run_seed, 3x + basis_index)`.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_distr::{Binomial, Distribution};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::protocol::{self, CouplingStrength, ProbabilitySet};
use crate::reconstruction::{self, ReconstructionResult, ShotsUsed};
use crate::state::{JointState, PointerLabel, PointerState, SystemState};

/// Pointer measurement basis; each has two outcomes (first, second).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PointerBasis {
    /// outcomes `+` / `-`
    X,
    /// outcomes `L` / `R`
    Y,
    /// outcomes `0` / `1`
    Z,
}

impl PointerBasis {
    pub const ALL: [PointerBasis; 3] = [PointerBasis::X, PointerBasis::Y, PointerBasis::Z];

    pub fn outcomes(self) -> [PointerLabel; 2] {
        match self {
            Self::X => [PointerLabel::Plus, PointerLabel::Minus],
            Self::Y => [PointerLabel::L, PointerLabel::R],
            Self::Z => [PointerLabel::Zero, PointerLabel::One],
        }
    }

    pub fn index(self) -> usize {
        match self {
            Self::X => 0,
            Self::Y => 1,
            Self::Z => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasurementSetting {
    pub x: usize,
    pub basis: PointerBasis,
    pub shots: u64,
}

impl MeasurementSetting {
    pub fn new(x: usize, basis: PointerBasis, shots: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::InvalidArgument("a setting needs at least one shot".into()));
        }
        Ok(Self { x, basis, shots })
    }

    /// Position of this setting in the scan, `3x + basis`.
    pub fn index(&self) -> usize {
        3 * self.x + self.basis.index()
    }
}

/// Outcome counts for one setting, cell `(k, b)` at index `2k + b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTable {
    counts: Vec<u64>,
    total: u64,
}

impl CountTable {
    /// Momentum dimension d.
    pub fn dim(&self) -> usize {
        self.counts.len() / 2
    }

    pub fn get(&self, k: usize, b: usize) -> u64 {
        self.counts[2 * k + b]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

/// `Prob(p_k, b) = |(<p_k| ⊗ <b|) |Ψ'>|²` over all d momenta and both
/// outcomes of `basis`, at index `2k + b`.
pub fn outcome_distribution(joint: &JointState, basis: PointerBasis) -> Vec<f64> {
    let d = joint.dim();
    let scale = 1.0 / (d as f64).sqrt();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(d);
    let mut out = vec![0.0; 2 * d];
    for (b, label) in basis.outcomes().into_iter().enumerate() {
        let [c0, c1] = PointerState::basis(label).components();
        let (c0, c1) = (c0.conj(), c1.conj());
        let mut column: Vec<Complex64> = (0..d)
            .map(|x| {
                let [a0, a1] = joint.block(x);
                c0 * a0 + c1 * a1
            })
            .collect();
        // forward transform: Σ_x e^{-2πi kx/d} v_x = √d <p_k|v>
        fft.process(&mut column);
        for (k, v) in column.iter().enumerate() {
            out[2 * k + b] = (v * scale).norm_sqr();
        }
    }
    out
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for sub-stream `stream` of a run seeded with `base`.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    mix64(base ^ mix64(stream.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

/// One multinomial draw of `shots` outcomes from `dist`.
pub fn sample_counts(dist: &[f64], shots: u64, seed: u64) -> Result<CountTable> {
    if dist.len() < 2 || !dist.len().is_multiple_of(2) {
        return Err(Error::InvalidDistribution(format!(
            "expected an even number of cells, got {}",
            dist.len()
        )));
    }
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    if let Some(bad) = dist.iter().find(|p| !p.is_finite() || **p < -1e-12) {
        return Err(Error::InvalidDistribution(format!("bad cell probability {bad}")));
    }
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!("cells sum to {sum}")));
    }

    let probs: Vec<f64> = dist.iter().map(|p| p.max(0.0)).collect();
    // tail mass computed from the back, so the last nonzero cell sees p = 1
    let mut tail = vec![0.0; probs.len()];
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate().rev() {
        acc += p;
        tail[i] = acc;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    for (i, p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let q = if tail[i] > 0.0 {
            (p / tail[i]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let k = if q >= 1.0 {
            remaining
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(remaining, q)
                .map_err(|e| Error::InvalidDistribution(e.to_string()))?
                .sample(&mut rng)
        };
        counts[i] = k;
        remaining -= k;
    }
    // only reachable if every tail mass is zero, which the sum check excludes
    if remaining > 0 {
        *counts.last_mut().expect("nonempty") += remaining;
    }
    Ok(CountTable {
        counts,
        total: shots,
    })
}

/// Relative frequencies of the zero-momentum cells of the X, Y and Z tables.
pub fn estimate_probset(
    x_table: &CountTable,
    y_table: &CountTable,
    z_table: &CountTable,
) -> Result<ProbabilitySet> {
    let d = x_table.dim();
    for t in [y_table, z_table] {
        if t.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: t.dim(),
            });
        }
    }
    let freq = |t: &CountTable, b: usize| t.get(0, b) as f64 / t.total() as f64;
    Ok(ProbabilitySet {
        p_plus: freq(x_table, 0),
        p_minus: freq(x_table, 1),
        p_l: freq(y_table, 0),
        p_r: freq(y_table, 1),
        p_zero: freq(z_table, 0),
        p_one: freq(z_table, 1),
    })
}

/// Shot allocation across the `3d` settings of a scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotBudget {
    /// Infinite statistics: exact probabilities, no sampling.
    Exact,
    /// Total shots split evenly over `3d` settings, remainder to the lowest
    /// setting indices.
    Total(u64),
    PerSetting(u64),
}

impl ShotBudget {
    /// Shots per setting, or `None` in exact mode.
    pub fn allocate(&self, d: usize) -> Result<Option<Vec<u64>>> {
        let settings = 3 * d as u64;
        let shots = match *self {
            ShotBudget::Exact => return Ok(None),
            ShotBudget::PerSetting(n) => vec![n; 3 * d],
            ShotBudget::Total(n) => {
                let (base, rem) = (n / settings, n % settings);
                (0..settings).map(|i| base + u64::from(i < rem)).collect()
            }
        };
        if shots.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "shot budget {self:?} leaves a setting without shots (d = {d})"
            )));
        }
        Ok(Some(shots))
    }

    pub fn total(&self, d: usize) -> Option<u64> {
        match *self {
            ShotBudget::Exact => None,
            ShotBudget::Total(n) => Some(n),
            ShotBudget::PerSetting(n) => Some(n * 3 * d as u64),
        }
    }
}

/// Count tables for every setting of a scan, indexed `3x + basis`.
pub fn sample_scan(
    psi: &SystemState,
    strength: CouplingStrength,
    shots: &[u64],
    seed: u64,
    exec: Execution,
) -> Result<Vec<CountTable>> {
    let d = psi.dim();
    if shots.len() != 3 * d {
        return Err(Error::DimensionMismatch {
            expected: 3 * d,
            found: shots.len(),
        });
    }
    let per_x = par::map_indexed(d, exec, |x| -> Result<Vec<CountTable>> {
        let joint = protocol::apply_coupling(psi, x, strength)?;
        PointerBasis::ALL
            .iter()
            .map(|&basis| {
                let idx = 3 * x + basis.index();
                let dist = outcome_distribution(&joint, basis);
                sample_counts(&dist, shots[idx], derive_seed(seed, idx as u64))
            })
            .collect()
    });
    let mut tables = Vec::with_capacity(3 * d);
    for t in per_x {
        tables.extend(t?);
    }
    Ok(tables)
}

/// Estimated probability sets for every position, one sampled scan.
pub fn sample_probsets(
    psi: &SystemState,
    strength: CouplingStrength,
    shots: &[u64],
    seed: u64,
    exec: Execution,
) -> Result<Vec<ProbabilitySet>> {
    let tables = sample_scan(psi, strength, shots, seed, exec)?;
    tables
        .chunks_exact(3)
        .map(|t| estimate_probset(&t[0], &t[1], &t[2]))
        .collect()
}

/// Samples a full scan and reconstructs it with the noise-aware
/// `VanishingTildePsi` floor.
pub fn reconstruct_sampled(
    psi: &SystemState,
    strength: CouplingStrength,
    shots: &[u64],
    seed: u64,
    exec: Execution,
) -> Result<ReconstructionResult> {
    strength.check_invertible()?;
    let probsets = sample_probsets(psi, strength, shots, seed, exec)?;
    let min_shots = shots.iter().copied().min().unwrap_or(1);
    let floor = reconstruction::sampled_raw_norm_floor(min_shots, psi.dim());
    reconstruction::reconstruct_with_floor(
        &probsets,
        strength,
        floor,
        ShotsUsed::Sampled(shots.to_vec()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{StateVector, fourier_basis, inner};
    use std::f64::consts::FRAC_PI_2;

    fn theta(t: f64) -> CouplingStrength {
        CouplingStrength::new(t).unwrap()
    }

    fn sample_state() -> SystemState {
        SystemState::new(vec![
            Complex64::new(0.3, 0.2),
            Complex64::new(0.5, -0.1),
            Complex64::new(0.4, 0.4),
            Complex64::new(-0.1, 0.3),
            Complex64::new(0.2, 0.0),
        ])
        .unwrap()
    }

    /// Projection onto explicit Fourier⊗pointer product vectors.
    fn distribution_oracle(joint: &JointState, basis: PointerBasis) -> Vec<f64> {
        let d = joint.dim();
        let fb = fourier_basis(d).unwrap();
        let mut out = vec![0.0; 2 * d];
        for (k, pk) in fb.iter().enumerate() {
            for (b, label) in basis.outcomes().into_iter().enumerate() {
                let j = PointerState::basis(label).components();
                let bra: Vec<Complex64> = (0..2 * d)
                    .map(|i| pk.amplitudes()[i / 2] * j[i % 2])
                    .collect();
                out[2 * k + b] = inner(&bra, joint).unwrap().norm_sqr();
            }
        }
        out
    }

    #[test]
    fn distribution_matches_projection_oracle() {
        let psi = sample_state();
        for x in 0..5 {
            let joint = protocol::apply_coupling(&psi, x, theta(0.9)).unwrap();
            for basis in PointerBasis::ALL {
                let fast = outcome_distribution(&joint, basis);
                let slow = distribution_oracle(&joint, basis);
                for (a, b) in fast.iter().zip(&slow) {
                    assert!((a - b).abs() < 1e-14);
                }
                assert!((fast.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_momentum_cells_are_the_joint_probabilities() {
        let psi = sample_state();
        let joint = protocol::apply_coupling(&psi, 2, theta(1.3)).unwrap();
        let p = protocol::joint_probabilities(&joint);
        for basis in PointerBasis::ALL {
            let dist = outcome_distribution(&joint, basis);
            let [first, second] = basis.outcomes();
            assert!((dist[0] - p.get(first)).abs() < 1e-14);
            assert!((dist[1] - p.get(second)).abs() < 1e-14);
        }
    }

    #[test]
    fn strong_coupling_x_basis_example() {
        let psi = SystemState::basis(2, 0).unwrap();
        let joint = protocol::apply_coupling(&psi, 0, theta(FRAC_PI_2)).unwrap();
        let dist = outcome_distribution(&joint, PointerBasis::X);
        assert!((dist[0] - 0.25).abs() < 1e-15);
        assert!((dist[1] - 0.25).abs() < 1e-15);
        assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn no_coupling_never_flips_pointer() {
        let psi = sample_state();
        let joint = protocol::apply_coupling(&psi, 1, theta(0.0)).unwrap();
        let dist = outcome_distribution(&joint, PointerBasis::Z);
        for k in 0..5 {
            assert!(dist[2 * k + 1] < 1e-30);
        }
        assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_distribution() {
        let mut dist = vec![0.0; 8];
        dist[0] = 1.0;
        for seed in 0..5 {
            let t = sample_counts(&dist, 777, seed).unwrap();
            assert_eq!(t.get(0, 0), 777);
            assert_eq!(t.counts().iter().sum::<u64>(), 777);
        }
        dist[0] = 0.0;
        dist[5] = 1.0;
        let t = sample_counts(&dist, 10, 3).unwrap();
        assert_eq!(t.get(2, 1), 10);
    }

    #[test]
    fn sampling_is_deterministic() {
        let dist = [0.1, 0.2, 0.05, 0.15, 0.3, 0.2];
        let a = sample_counts(&dist, 1000, 42).unwrap();
        let b = sample_counts(&dist, 1000, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total(), 1000);
        assert_eq!(a.counts().iter().sum::<u64>(), 1000);
        assert_ne!(a, sample_counts(&dist, 1000, 43).unwrap());
    }

    #[test]
    fn uniform_cells_within_five_sigma() {
        let n = 1_000_000u64;
        let dist = [0.25; 4];
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        for seed in [1, 2, 3] {
            let t = sample_counts(&dist, n, seed).unwrap();
            for &c in t.counts() {
                assert!((c as f64 - 250_000.0).abs() < 5.0 * sigma, "{c}");
            }
        }
    }

    #[test]
    fn rejects_invalid_distributions() {
        assert!(matches!(
            sample_counts(&[0.5, 0.6], 10, 0),
            Err(Error::InvalidDistribution(_))
        ));
        assert!(matches!(
            sample_counts(&[1.1, -0.1], 10, 0),
            Err(Error::InvalidDistribution(_))
        ));
        assert!(matches!(
            sample_counts(&[1.0, 0.0, 0.0], 10, 0),
            Err(Error::InvalidDistribution(_))
        ));
        assert!(sample_counts(&[1.0, 0.0], 0, 0).is_err());
        // tiny negative rounding noise is tolerated
        assert!(sample_counts(&[1.0, -1e-13], 10, 0).is_ok());
    }

    #[test]
    fn frequency_estimates() {
        let table = |c: Vec<u64>| CountTable {
            total: c.iter().sum(),
            counts: c,
        };
        let x = table(vec![250, 100, 300, 350]);
        let y = table(vec![10, 20, 30, 40]);
        let z = table(vec![0, 5, 5, 0]);
        let p = estimate_probset(&x, &y, &z).unwrap();
        assert_eq!(p.p_plus, 0.25);
        assert_eq!(p.p_minus, 0.1);
        assert_eq!(p.p_l, 0.1);
        assert_eq!(p.p_r, 0.2);
        assert_eq!(p.p_zero, 0.0);
        assert_eq!(p.p_one, 0.5);

        let empty = table(vec![0, 0, 7, 3]);
        let p = estimate_probset(&empty, &empty, &empty).unwrap();
        assert_eq!(p, ProbabilitySet::default());

        let small = table(vec![1, 1]);
        assert!(matches!(
            estimate_probset(&x, &small, &z),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn budget_allocation() {
        assert_eq!(ShotBudget::Exact.allocate(4).unwrap(), None);
        assert_eq!(
            ShotBudget::Total(14).allocate(2).unwrap().unwrap(),
            vec![3, 3, 2, 2, 2, 2]
        );
        assert_eq!(
            ShotBudget::PerSetting(5).allocate(2).unwrap().unwrap(),
            vec![5; 6]
        );
        assert!(ShotBudget::Total(5).allocate(2).is_err());
        assert_eq!(ShotBudget::PerSetting(5).total(2), Some(30));
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: std::collections::HashSet<u64> =
            (0..1000).map(|i| derive_seed(7, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(derive_seed(7, 0), derive_seed(8, 0));
    }

    #[test]
    fn sequential_and_parallel_scans_agree() {
        let psi = sample_state();
        let shots = ShotBudget::PerSetting(5000).allocate(5).unwrap().unwrap();
        let a = sample_scan(&psi, theta(1.0), &shots, 11, Execution::Sequential).unwrap();
        let b = sample_scan(&psi, theta(1.0), &shots, 11, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}

//! Reconstruction quality and the Monte Carlo trial harness.
//!
//! Errors are measured after removing the unobservable global phase: each
//! estimate is rotated onto the true state before differences are taken.
//! Precision is reported as `std_l2` and accuracy as `bias_l2`; with the
//! population variance used throughout, `rmse_l2² = bias_l2² + std_l2²`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::protocol::CouplingStrength;
use crate::reconstruction::{self, ReconstructionResult};
use crate::sampler::{self, ShotBudget};
use crate::state::{StateVector, SystemState, inner};

/// `|<a|b>|²`.
pub fn fidelity(a: &SystemState, b: &SystemState) -> Result<f64> {
    Ok(inner(a, b)?.norm_sqr().min(1.0))
}

/// `min_α ‖a − e^{iα} b‖`, which equals `√(2 − 2|<a|b>|)`.
///
/// Evaluated on the aligned difference rather than the closed form, which
/// loses everything below ~1e-8 to cancellation.
pub fn phase_aligned_l2(a: &SystemState, b: &SystemState) -> Result<f64> {
    let aligned = align_phase(b, a)?;
    Ok(a.amplitudes()
        .iter()
        .zip(&aligned)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// `estimate` rotated by the global phase that brings it closest to `truth`.
pub fn align_phase(estimate: &SystemState, truth: &SystemState) -> Result<Vec<Complex64>> {
    let overlap = inner(estimate, truth)?;
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    Ok(estimate.amplitudes().iter().map(|a| a * phase).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStatistics {
    pub theta: f64,
    /// `None` for exact (infinite-statistics) runs.
    pub shots_total: Option<u64>,
    /// Successful trials that enter the statistics.
    pub trials: usize,
    /// Trials rejected with `VanishingTildePsi`.
    pub failed_trials: usize,
    pub mean_fidelity: f64,
    pub rmse_l2: f64,
    pub bias_l2: f64,
    pub std_l2: f64,
    /// Standard error of `rmse_l2` over trials (delta method on the mean
    /// squared error).
    pub rmse_se: f64,
}

struct TrialOutcome {
    error: Vec<Complex64>,
    fidelity: f64,
}

fn score(result: &ReconstructionResult, truth: &SystemState) -> Result<TrialOutcome> {
    let aligned = align_phase(&result.estimate, truth)?;
    let error = aligned
        .iter()
        .zip(truth.amplitudes())
        .map(|(a, t)| a - t)
        .collect();
    Ok(TrialOutcome {
        error,
        fidelity: fidelity(&result.estimate, truth)?,
    })
}

/// One sampled (or exact) reconstruction of `psi` for trial `trial`.
pub fn single_trial(
    psi: &SystemState,
    strength: CouplingStrength,
    budget: ShotBudget,
    trial: u64,
    seed: u64,
) -> Result<ReconstructionResult> {
    match budget.allocate(psi.dim())? {
        None => reconstruction::reconstruct_exact(psi, strength),
        Some(shots) => sampler::reconstruct_sampled(
            psi,
            strength,
            &shots,
            sampler::derive_seed(seed, trial),
            Execution::Sequential,
        ),
    }
}

pub fn run_trials(
    psi: &SystemState,
    strength: CouplingStrength,
    budget: ShotBudget,
    trials: usize,
    seed: u64,
) -> Result<TrialStatistics> {
    run_trials_with(psi, strength, budget, trials, seed, Execution::default())
}

/// Runs `trials` independent reconstructions and aggregates them in trial
/// order, so the result does not depend on `exec`.
pub fn run_trials_with(
    psi: &SystemState,
    strength: CouplingStrength,
    budget: ShotBudget,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<TrialStatistics> {
    if trials < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 trials, got {trials}"
        )));
    }
    strength.check_invertible()?;
    let shots = budget.allocate(psi.dim())?;

    let outcomes: Vec<Result<TrialOutcome>> = match shots {
        // no noise: every trial is the same exact reconstruction
        None => {
            let one = reconstruction::reconstruct_exact(psi, strength)
                .and_then(|r| score(&r, psi))?;
            (0..trials)
                .map(|_| {
                    Ok(TrialOutcome {
                        error: one.error.clone(),
                        fidelity: one.fidelity,
                    })
                })
                .collect()
        }
        Some(_) => par::map_indexed(trials, exec, |t| {
            single_trial(psi, strength, budget, t as u64, seed).and_then(|r| score(&r, psi))
        }),
    };

    let mut ok = Vec::with_capacity(trials);
    let mut failed = 0;
    let mut first_failure = None;
    for outcome in outcomes {
        match outcome {
            Ok(o) => ok.push(o),
            Err(e @ Error::VanishingTildePsi { .. }) => {
                failed += 1;
                first_failure.get_or_insert(e);
            }
            Err(e) => return Err(e),
        }
    }
    if ok.is_empty() {
        return Err(first_failure.expect("all trials failed"));
    }

    let n = ok.len() as f64;
    let d = psi.dim();
    let mut mean_error = vec![Complex64::new(0.0, 0.0); d];
    let mut sq = Vec::with_capacity(ok.len());
    let mut fid_sum = 0.0;
    for o in &ok {
        for (m, e) in mean_error.iter_mut().zip(&o.error) {
            *m += e;
        }
        sq.push(o.error.norm_sqr());
        fid_sum += o.fidelity;
    }
    for m in &mut mean_error {
        *m /= n;
    }
    let mse = sq.iter().sum::<f64>() / n;
    let bias_sq = mean_error.norm_sqr();
    let var = ok
        .iter()
        .map(|o| {
            o.error
                .iter()
                .zip(&mean_error)
                .map(|(e, m)| (e - m).norm_sqr())
                .sum::<f64>()
        })
        .sum::<f64>()
        / n;
    let rmse = mse.sqrt();
    let rmse_se = if ok.len() > 1 && rmse > 0.0 {
        let sq_var = sq.iter().map(|s| (s - mse).powi(2)).sum::<f64>() / (n - 1.0);
        (sq_var / n).sqrt() / (2.0 * rmse)
    } else {
        0.0
    };

    Ok(TrialStatistics {
        theta: strength.theta(),
        shots_total: budget.total(d),
        trials: ok.len(),
        failed_trials: failed,
        mean_fidelity: fid_sum / n,
        rmse_l2: rmse,
        bias_l2: bias_sq.sqrt(),
        std_l2: var.sqrt(),
        rmse_se,
    })
}

/// [`run_trials`] at each angle with the same budget and seed.
pub fn theta_sweep(
    psi: &SystemState,
    thetas: &[CouplingStrength],
    budget: ShotBudget,
    trials: usize,
    seed: u64,
) -> Result<Vec<TrialStatistics>> {
    theta_sweep_with(psi, thetas, budget, trials, seed, Execution::default())
}

pub fn theta_sweep_with(
    psi: &SystemState,
    thetas: &[CouplingStrength],
    budget: ShotBudget,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<TrialStatistics>> {
    thetas
        .iter()
        .map(|&t| run_trials_with(psi, t, budget, trials, seed, exec))
        .collect()
}

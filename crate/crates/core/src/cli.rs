//! Command-line configuration, the `simulate` / `reconstruct` / `sweep`
//! commands, and their JSON / CSV result files.
//!
//! Complex numbers are written to JSON as `[re, im]` pairs. Floats use the
//! shortest representation that parses back to the same `f64`, so every
//! file round-trips at full double precision. Files are written to a
//! temporary sibling and renamed into place.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::metrics::{self, TrialStatistics};
use crate::par::Execution;
use crate::protocol::{self, CouplingStrength, ProbabilitySet};
use crate::sampler::{self, ShotBudget};
use crate::state::{StateVector, SystemState};

#[derive(Debug, Parser)]
#[command(
    name = "pointer-tomo",
    version,
    about = "Direct wavefunction measurement with a qubit pointer"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact (and optionally sampled) joint probabilities for every position.
    Simulate(RunArgs),
    /// Reconstruct the wavefunction from exact or sampled probabilities.
    Reconstruct(RunArgs),
    /// Trial statistics across a list of coupling angles.
    Sweep(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// System dimension d (>= 2).
    #[arg(long)]
    pub dim: usize,
    /// `uniform`, `basis:K`, `gaussian:SIGMA`, `random:SEED`, or a
    /// comma-separated amplitude list such as `0.6,0.8i`.
    #[arg(long, default_value = "uniform", allow_hyphen_values = true)]
    pub state: String,
    /// Coupling angle(s) in radians, comma-separated; `pi/2`-style literals accepted.
    #[arg(long, default_value = "pi/2")]
    pub theta: String,
    /// Total shot budget, or `exact`.
    #[arg(long, default_value = "exact")]
    pub shots: String,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Protocol(Error),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Protocol(_) => 3,
            CliError::Internal(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Protocol(e) => write!(f, "{e}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_protocol_degenerate() {
            CliError::Protocol(e)
        } else if matches!(e, Error::InvalidDistribution(_)) {
            CliError::Internal(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// How the system state is specified.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Explicit(Vec<Complex64>),
    Uniform,
    Basis(usize),
    Gaussian(f64),
    Random(u64),
}

impl FromStr for StateSpec {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let s = s.trim();
        let bad = |what: &str| CliError::Config(format!("invalid state `{s}`: {what}"));
        if s == "uniform" {
            return Ok(StateSpec::Uniform);
        }
        if let Some((name, arg)) = s.split_once(':') {
            return match name {
                "basis" => arg.parse().map(StateSpec::Basis).map_err(|_| bad("bad index")),
                "gaussian" => match arg.parse::<f64>() {
                    Ok(sigma) if sigma > 0.0 && sigma.is_finite() => Ok(StateSpec::Gaussian(sigma)),
                    _ => Err(bad("sigma must be a positive number")),
                },
                "random" => arg.parse().map(StateSpec::Random).map_err(|_| bad("bad seed")),
                _ => Err(bad("unknown preset")),
            };
        }
        s.split(',')
            .map(|a| a.trim().parse::<Complex64>().map_err(|_| bad(a)))
            .collect::<CliResult<Vec<_>>>()
            .map(StateSpec::Explicit)
    }
}

impl StateSpec {
    pub fn build(&self, dim: usize) -> CliResult<SystemState> {
        let state = match self {
            StateSpec::Explicit(amps) => {
                if amps.len() != dim {
                    return Err(CliError::Config(format!(
                        "{} amplitudes given for --dim {dim}",
                        amps.len()
                    )));
                }
                SystemState::new(amps.clone())?
            }
            StateSpec::Uniform => SystemState::momentum_zero(dim)?,
            StateSpec::Basis(k) => SystemState::basis(dim, *k)?,
            StateSpec::Gaussian(sigma) => {
                let center = (dim as f64 - 1.0) / 2.0;
                let amps: Vec<f64> = (0..dim)
                    .map(|x| (-(x as f64 - center).powi(2) / (4.0 * sigma * sigma)).exp())
                    .collect();
                SystemState::from_real(&amps)?
            }
            StateSpec::Random(seed) => random_state(dim, *seed)?,
        };
        Ok(state)
    }
}

/// Complex-normal amplitudes, redrawn until `|ψ̃| > 0.1`.
pub fn random_state(dim: usize, seed: u64) -> crate::Result<SystemState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let amps = (0..dim)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im)
            })
            .collect();
        let state = SystemState::new(amps)?;
        if state.amplitude_sum().norm() > 0.1 {
            return Ok(state);
        }
    }
}

/// Parses `0.3`, `pi`, `pi/2`, `2*pi/3` or `3pi/4`.
pub fn parse_angle(s: &str) -> CliResult<f64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let t = t.to_ascii_lowercase();
    let bad = || CliError::Config(format!("invalid angle `{s}`"));
    let Some(pos) = t.find("pi") else {
        return t.parse::<f64>().map_err(|_| bad());
    };
    let coef = t[..pos].trim_end_matches('*');
    let coef = if coef.is_empty() {
        1.0
    } else {
        coef.parse::<f64>().map_err(|_| bad())?
    };
    let rest = &t[pos + 2..];
    let div = if rest.is_empty() {
        1.0
    } else {
        rest.strip_prefix('/')
            .ok_or_else(bad)?
            .parse::<f64>()
            .map_err(|_| bad())?
    };
    Ok(coef * PI / div)
}

fn parse_angles(s: &str) -> CliResult<Vec<CouplingStrength>> {
    s.split(',')
        .filter(|a| !a.trim().is_empty())
        .map(|a| Ok(CouplingStrength::new(parse_angle(a)?)?))
        .collect()
}

fn parse_shots(s: &str) -> CliResult<ShotBudget> {
    match s.trim() {
        "exact" | "inf" => Ok(ShotBudget::Exact),
        n => match n.parse::<u64>() {
            Ok(n) if n > 0 => Ok(ShotBudget::Total(n)),
            _ => Err(CliError::Config(format!("invalid shot budget `{s}`"))),
        },
    }
}

/// Validated configuration for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dim: usize,
    pub state_spec: StateSpec,
    pub state: SystemState,
    pub thetas: Vec<CouplingStrength>,
    pub shots: ShotBudget,
    pub trials: usize,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    pub fn from_args(args: &RunArgs) -> CliResult<Self> {
        if args.dim < 2 {
            return Err(CliError::Config(format!("--dim must be at least 2, got {}", args.dim)));
        }
        let state_spec: StateSpec = args.state.parse()?;
        let state = state_spec.build(args.dim)?;
        let thetas = parse_angles(&args.theta)?;
        if thetas.is_empty() {
            return Err(CliError::Config("--theta needs at least one angle".into()));
        }
        Ok(RunConfig {
            dim: args.dim,
            state_spec,
            state,
            thetas,
            shots: parse_shots(&args.shots)?,
            trials: args.trials,
            seed: args.seed,
            output_path: args.out.clone(),
            format: args.format,
        })
    }

    fn single_theta(&self) -> CliResult<CouplingStrength> {
        match self.thetas.as_slice() {
            [t] => Ok(*t),
            _ => Err(CliError::Config(format!(
                "this command takes one angle, got {}",
                self.thetas.len()
            ))),
        }
    }

    fn shots_allocation(&self) -> CliResult<Option<Vec<u64>>> {
        Ok(self.shots.allocate(self.dim)?)
    }
}

/// `"exact"` or a shot count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShotsField {
    Label(String),
    Count(u64),
}

impl From<ShotBudget> for ShotsField {
    fn from(b: ShotBudget) -> Self {
        match b {
            ShotBudget::Exact => ShotsField::Label("exact".into()),
            ShotBudget::Total(n) | ShotBudget::PerSetting(n) => ShotsField::Count(n),
        }
    }
}

fn pairs(amps: &[Complex64]) -> Vec<[f64; 2]> {
    amps.iter().map(|a| [a.re, a.im]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateRow {
    pub x: usize,
    pub exact: ProbabilitySet,
    pub postselection: f64,
    pub sampled: Option<ProbabilitySet>,
    /// Shots for the X, Y, Z settings at this position.
    pub shots: Option<[u64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateOutput {
    pub dim: usize,
    pub theta: f64,
    pub state: Vec<[f64; 2]>,
    pub shots: ShotsField,
    pub seed: u64,
    pub rows: Vec<SimulateRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructOutput {
    pub dim: usize,
    pub theta: f64,
    pub shots: ShotsField,
    pub seed: u64,
    pub fidelity: f64,
    pub phase_aligned_l2: f64,
    pub tilde_psi_magnitude: f64,
    pub tilde_psi_true: f64,
    /// Per-position `P_+ + P_-`.
    pub postselection: Vec<f64>,
    pub estimate: Vec<[f64; 2]>,
    /// Ground truth, phase-rotated so its amplitude sum is real and nonnegative.
    pub truth: Vec<[f64; 2]>,
    pub raw: Vec<[f64; 2]>,
    pub shots_per_setting: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub dim: usize,
    pub state: Vec<[f64; 2]>,
    pub shots: ShotsField,
    pub trials: usize,
    pub seed: u64,
    pub rows: Vec<TrialStatistics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityCsvRow {
    pub x: usize,
    pub p_plus: f64,
    pub p_minus: f64,
    pub p_zero: f64,
    pub p_one: f64,
    #[serde(rename = "p_L")]
    pub p_l: f64,
    #[serde(rename = "p_R")]
    pub p_r: f64,
    pub p_postselect: f64,
    /// `exact` or `sampled`
    pub source: String,
}

impl ProbabilityCsvRow {
    fn new(x: usize, p: &ProbabilitySet, post: f64, source: &str) -> Self {
        Self {
            x,
            p_plus: p.p_plus,
            p_minus: p.p_minus,
            p_zero: p.p_zero,
            p_one: p.p_one,
            p_l: p.p_l,
            p_r: p.p_r,
            p_postselect: post,
            source: source.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionCsvRow {
    pub x: usize,
    pub re_psi: f64,
    pub im_psi: f64,
    pub re_true: f64,
    pub im_true: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCsvRow {
    pub theta: f64,
    pub shots_total: String,
    pub trials: usize,
    pub failed_trials: usize,
    pub mean_fidelity: f64,
    pub rmse_l2: f64,
    pub bias_l2: f64,
    pub std_l2: f64,
    pub rmse_se: f64,
}

impl From<&TrialStatistics> for SweepCsvRow {
    fn from(s: &TrialStatistics) -> Self {
        Self {
            theta: s.theta,
            shots_total: s
                .shots_total
                .map_or_else(|| "exact".to_string(), |n| n.to_string()),
            trials: s.trials,
            failed_trials: s.failed_trials,
            mean_fidelity: s.mean_fidelity,
            rmse_l2: s.rmse_l2,
            bias_l2: s.bias_l2,
            std_l2: s.std_l2,
            rmse_se: s.rmse_se,
        }
    }
}

pub fn simulate(cfg: &RunConfig) -> CliResult<SimulateOutput> {
    let theta = cfg.single_theta()?;
    theta.check_invertible()?;
    let psi = &cfg.state;
    let shots = cfg.shots_allocation()?;
    let sampled = match &shots {
        Some(s) => Some(sampler::sample_probsets(
            psi,
            theta,
            s,
            sampler::derive_seed(cfg.seed, 0),
            Execution::default(),
        )?),
        None => None,
    };
    let rows = (0..cfg.dim)
        .map(|x| {
            let joint = protocol::apply_coupling(psi, x, theta)?;
            Ok(SimulateRow {
                x,
                exact: protocol::joint_probabilities(&joint),
                postselection: protocol::postselection_probability(&joint),
                sampled: sampled.as_ref().map(|p| p[x]),
                shots: shots.as_ref().map(|s| [s[3 * x], s[3 * x + 1], s[3 * x + 2]]),
            })
        })
        .collect::<crate::Result<Vec<_>>>()?;
    Ok(SimulateOutput {
        dim: cfg.dim,
        theta: theta.theta(),
        state: pairs(psi.amplitudes()),
        shots: cfg.shots.into(),
        seed: cfg.seed,
        rows,
    })
}

pub fn reconstruct(cfg: &RunConfig) -> CliResult<ReconstructOutput> {
    let theta = cfg.single_theta()?;
    let psi = &cfg.state;
    // trial 0 of the same stream the sweep harness uses
    let result = metrics::single_trial(psi, theta, cfg.shots, 0, cfg.seed)?;
    let truth = psi.with_real_sum();
    Ok(ReconstructOutput {
        dim: cfg.dim,
        theta: theta.theta(),
        shots: cfg.shots.into(),
        seed: cfg.seed,
        fidelity: metrics::fidelity(&result.estimate, psi)?,
        phase_aligned_l2: metrics::phase_aligned_l2(&result.estimate, psi)?,
        tilde_psi_magnitude: result.tilde_psi_magnitude,
        tilde_psi_true: psi.amplitude_sum().norm(),
        postselection: result.postselection.clone(),
        estimate: pairs(result.estimate.amplitudes()),
        truth: pairs(truth.amplitudes()),
        raw: pairs(&result.raw.per_x),
        shots_per_setting: match result.shots_used {
            crate::reconstruction::ShotsUsed::Exact => None,
            crate::reconstruction::ShotsUsed::Sampled(s) => Some(s),
        },
    })
}

pub fn sweep(cfg: &RunConfig) -> CliResult<SweepOutput> {
    if cfg.thetas.len() < 2 {
        return Err(CliError::Config(format!(
            "sweep needs at least 2 angles, got {}",
            cfg.thetas.len()
        )));
    }
    let rows = metrics::theta_sweep(&cfg.state, &cfg.thetas, cfg.shots, cfg.trials, cfg.seed)?;
    Ok(SweepOutput {
        dim: cfg.dim,
        state: pairs(cfg.state.amplitudes()),
        shots: cfg.shots.into(),
        trials: cfg.trials,
        seed: cfg.seed,
        rows,
    })
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> CliResult<String> {
    let internal = |e: &dyn fmt::Display| CliError::Internal(e.to_string());
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| internal(&e))?;
    }
    let bytes = w.into_inner().map_err(|e| internal(&e))?;
    String::from_utf8(bytes).map_err(|e| internal(&e))
}

pub fn render_simulate(out: &SimulateOutput, format: Format) -> CliResult<String> {
    match format {
        Format::Json => to_json(out),
        Format::Csv => {
            let mut rows: Vec<ProbabilityCsvRow> = out
                .rows
                .iter()
                .map(|r| ProbabilityCsvRow::new(r.x, &r.exact, r.postselection, "exact"))
                .collect();
            rows.extend(out.rows.iter().filter_map(|r| {
                r.sampled
                    .map(|p| ProbabilityCsvRow::new(r.x, &p, p.postselection(), "sampled"))
            }));
            to_csv(rows)
        }
    }
}

pub fn render_reconstruct(out: &ReconstructOutput, format: Format) -> CliResult<String> {
    match format {
        Format::Json => to_json(out),
        Format::Csv => to_csv(out.estimate.iter().zip(&out.truth).enumerate().map(
            |(x, (e, t))| ReconstructionCsvRow {
                x,
                re_psi: e[0],
                im_psi: e[1],
                re_true: t[0],
                im_true: t[1],
            },
        )),
    }
}

pub fn render_sweep(out: &SweepOutput, format: Format) -> CliResult<String> {
    match format {
        Format::Json => to_json(out),
        Format::Csv => to_csv(out.rows.iter().map(SweepCsvRow::from)),
    }
}

/// Runs one command and returns the rendered payload.
pub fn execute(command: &Command) -> CliResult<(String, Option<PathBuf>)> {
    let (args, payload) = match command {
        Command::Simulate(a) => {
            let cfg = RunConfig::from_args(a)?;
            (a, render_simulate(&simulate(&cfg)?, cfg.format)?)
        }
        Command::Reconstruct(a) => {
            let cfg = RunConfig::from_args(a)?;
            (a, render_reconstruct(&reconstruct(&cfg)?, cfg.format)?)
        }
        Command::Sweep(a) => {
            let cfg = RunConfig::from_args(a)?;
            (a, render_sweep(&sweep(&cfg)?, cfg.format)?)
        }
    };
    Ok((payload, args.out.clone()))
}

/// Writes `contents` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let (payload, out) = execute(&cli.command)?;
    match out {
        Some(path) => write_atomic(&path, &payload)
            .map_err(|e| CliError::Internal(format!("writing {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(payload.as_bytes())
            .map_err(|e| CliError::Internal(e.to_string())),
    }
}

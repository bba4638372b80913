//! Reproducible Monte Carlo over noise realizations, and parameter sweeps.
//!
//! Trajectory `k` of qubit `q` draws from a ChaCha8 stream keyed by the
//! master seed with stream id `(tag << 40) | (k << 1) | q`. Results are
//! reduced in trajectory order, so the worker count never changes a bit.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{GateParams, ModelError};
use crate::noise::{NoiseError, NoiseSpec, PiecewiseConstantPath};
use crate::propagation::{evolve_trajectory, PropagationError};
use crate::sequences::{build_schedule, PulseSchedule, SequenceError, SequenceKind, SequenceSpec};

pub const DEFAULT_TRAJECTORIES: usize = 10_000;
/// A run aborts once more than this fraction of trajectories fail.
pub const MAX_FAILURE_FRACTION: f64 = 1e-3;

const TRAJECTORY_BITS: u32 = 39;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{failed} of {total} trajectories failed; first at index {first_index}: {first_error}")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first_index: usize,
        first_error: PropagationError,
    },
}

/// How substreams relate across the points of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeedPolicy {
    /// Every sweep point gets its own stream family.
    #[default]
    Decorrelated,
    /// All sweep points reuse the same realizations.
    Common,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub gate: GateParams,
    pub noise1: NoiseSpec,
    pub noise2: NoiseSpec,
    pub sequence: SequenceSpec,
    pub trajectories: usize,
    pub master_seed: u64,
    pub seed_policy: SeedPolicy,
    /// Stream family; sweeps overwrite it per point.
    pub stream_tag: u64,
}

impl RunConfig {
    pub fn new(gate: GateParams, noise1: NoiseSpec, noise2: NoiseSpec, sequence: SequenceSpec) -> Self {
        RunConfig {
            gate,
            noise1,
            noise2,
            sequence,
            trajectories: DEFAULT_TRAJECTORIES,
            master_seed: 0,
            seed_policy: SeedPolicy::Decorrelated,
            stream_tag: 0,
        }
    }

    pub fn with_trajectories(mut self, n: usize) -> Self {
        self.trajectories = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_seed_policy(mut self, policy: SeedPolicy) -> Self {
        self.seed_policy = policy;
        self
    }

    pub fn validate(&self) -> Result<(), EnsembleError> {
        if self.trajectories == 0 {
            return Err(EnsembleError::InvalidConfig("trajectories must be at least 1".into()));
        }
        if self.trajectories as u64 >= 1 << TRAJECTORY_BITS {
            return Err(EnsembleError::InvalidConfig("too many trajectories".into()));
        }
        if self.stream_tag >= 1 << (64 - TRAJECTORY_BITS - 1) {
            return Err(EnsembleError::InvalidConfig("stream tag out of range".into()));
        }
        self.noise1.validate()?;
        self.noise2.validate()?;
        Ok(())
    }

    fn stream_id(&self, trajectory: usize, qubit: u64) -> u64 {
        (self.stream_tag << (TRAJECTORY_BITS + 1)) | ((trajectory as u64) << 1) | qubit
    }

    fn rng(&self, trajectory: usize, qubit: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id(trajectory, qubit));
        rng
    }

    fn tagged(mut self, tag: u64) -> Self {
        if self.seed_policy == SeedPolicy::Decorrelated {
            self.stream_tag = tag;
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√N`.
    pub std_error: f64,
    /// Trajectories that entered the average.
    pub trajectories: usize,
    pub failed: usize,
    pub master_seed: u64,
    pub wall_time: Duration,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Error of trajectory `k` under `cfg` with a prebuilt schedule.
pub fn trajectory_error_at(
    cfg: &RunConfig,
    schedule: &PulseSchedule,
    k: usize,
) -> Result<f64, PropagationError> {
    let t_e = schedule.gate_time();
    let x1 = sample_path(&cfg.noise1, t_e, &mut cfg.rng(k, 0));
    let x2 = sample_path(&cfg.noise2, t_e, &mut cfg.rng(k, 1));
    Ok(evolve_trajectory(&cfg.gate, &x1, &x2, schedule)?.error)
}

fn sample_path(spec: &NoiseSpec, t_e: f64, rng: &mut ChaCha8Rng) -> PiecewiseConstantPath {
    spec.sample(t_e, rng)
        .expect("noise spec validated before the run")
}

/// The two noise paths trajectory `k` of `cfg` sees, for debugging dumps.
pub fn trajectory_paths(
    cfg: &RunConfig,
    k: usize,
) -> Result<(PiecewiseConstantPath, PiecewiseConstantPath), EnsembleError> {
    cfg.validate()?;
    let t_e = cfg.gate.gate_time();
    Ok((
        cfg.noise1.sample(t_e, &mut cfg.rng(k, 0))?,
        cfg.noise2.sample(t_e, &mut cfg.rng(k, 1))?,
    ))
}

/// Mean gate error and its standard error over `cfg.trajectories` realizations.
pub fn estimate_gate_error(cfg: &RunConfig) -> Result<ErrorEstimate, EnsembleError> {
    cfg.validate()?;
    let start = Instant::now();
    let schedule = build_schedule(&cfg.sequence, cfg.gate.gate_time())?;
    let outcomes: Vec<Result<f64, PropagationError>> = (0..cfg.trajectories)
        .into_par_iter()
        .map(|k| trajectory_error_at(cfg, &schedule, k))
        .collect();

    let mut failed = 0;
    let mut first_failure = None;
    let mut values = Vec::with_capacity(outcomes.len());
    for (k, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(e) => values.push(e),
            Err(err) => {
                failed += 1;
                first_failure.get_or_insert((k, err));
            }
        }
    }
    if failed as f64 > MAX_FAILURE_FRACTION * cfg.trajectories as f64 || values.is_empty() {
        let (first_index, first_error) = first_failure.expect("at least one failure");
        return Err(EnsembleError::TooManyFailures {
            failed,
            total: cfg.trajectories,
            first_index,
            first_error,
        });
    }
    let (mean, std_error) = mean_and_std_error(&values);
    Ok(ErrorEstimate {
        mean,
        std_error,
        trajectories: values.len(),
        failed,
        master_seed: cfg.master_seed,
        wall_time: start.elapsed(),
    })
}

fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mut s = CompensatedSum::default();
    values.iter().for_each(|&v| s.add(v));
    let mean = s.value() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let mut sq = CompensatedSum::default();
    values.iter().for_each(|&v| sq.add((v - mean) * (v - mean)));
    let var = sq.value() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs `f` on a dedicated pool of `workers` threads (`None`: rayon default).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        None => f(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .expect("thread pool")
            .install(f),
    }
}

/// One row of a sweep: the swept value, the exact config used, and its estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub config: RunConfig,
    pub estimate: ErrorEstimate,
}

impl SweepPoint {
    pub fn pairs(&self) -> u32 {
        self.config.sequence.pairs()
    }
}

/// Error versus number of pulse pairs; `n = 0` is free evolution.
///
/// Under [`SeedPolicy::Decorrelated`] point `n` uses stream tag `n`, so
/// equal `n` across sequence kinds share realizations.
pub fn sweep_n(cfg: &RunConfig, n_list: &[u32]) -> Result<Vec<SweepPoint>, EnsembleError> {
    let kind = cfg.sequence.kind();
    if kind == SequenceKind::None && n_list.iter().any(|&n| n > 0) {
        return Err(EnsembleError::InvalidConfig(
            "a pulse sequence kind is needed for n > 0".into(),
        ));
    }
    n_list
        .iter()
        .map(|&n| {
            let mut c = cfg.tagged(n as u64);
            c.sequence = SequenceSpec::with_pairs(kind, cfg.sequence.axis(), n)?;
            let estimate = estimate_gate_error(&c)?;
            Ok(SweepPoint {
                value: n as f64,
                config: c,
                estimate,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffMode {
    /// Hold Σ fixed while γ_M moves.
    FixedSigma,
    /// Rescale Σ² ∝ ln(γ_M/γ_m) so the 1/f amplitude stays fixed.
    FixedAmplitude,
}

fn with_cutoff(spec: &NoiseSpec, gamma_max: f64, mode: CutoffMode) -> Result<NoiseSpec, EnsembleError> {
    let NoiseSpec::OneOverF {
        sigma,
        gamma_min,
        gamma_max: reference,
        fluctuators_per_decade,
    } = *spec
    else {
        return Ok(*spec);
    };
    let sigma = match mode {
        CutoffMode::FixedSigma => sigma,
        CutoffMode::FixedAmplitude => {
            let (new, old) = ((gamma_max / gamma_min).ln(), (reference / gamma_min).ln());
            if !(old > 0.0 && new > 0.0) {
                return Err(EnsembleError::InvalidConfig(
                    "fixed-amplitude cutoff sweeps need gamma_max > gamma_min".into(),
                ));
            }
            sigma * (new / old).sqrt()
        }
    };
    let out = NoiseSpec::OneOverF {
        sigma,
        gamma_min,
        gamma_max,
        fluctuators_per_decade,
    };
    out.validate()?;
    Ok(out)
}

/// Error versus the UV cutoff γ_M of the 1/f noise on both qubits.
pub fn sweep_cutoff(
    cfg: &RunConfig,
    gamma_max_list: &[f64],
    mode: CutoffMode,
) -> Result<Vec<SweepPoint>, EnsembleError> {
    if !gamma_max_list.windows(2).all(|w| w[0] < w[1]) {
        return Err(EnsembleError::InvalidConfig("gamma_max list must be ascending".into()));
    }
    if ![cfg.noise1, cfg.noise2]
        .iter()
        .any(|s| matches!(s, NoiseSpec::OneOverF { .. }))
    {
        return Err(EnsembleError::InvalidConfig("cutoff sweeps need 1/f noise".into()));
    }
    gamma_max_list
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let mut c = cfg.tagged(cfg.stream_tag + i as u64);
            c.noise1 = with_cutoff(&cfg.noise1, g, mode)?;
            c.noise2 = with_cutoff(&cfg.noise2, g, mode)?;
            let estimate = estimate_gate_error(&c)?;
            Ok(SweepPoint {
                value: g,
                config: c,
                estimate,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    /// Noise scale on both qubits (Σ, or the telegraph amplitude v).
    Sigma,
    Sigma1,
    Sigma2,
    OmegaC,
    Omega,
}

fn with_scale(spec: &NoiseSpec, value: f64) -> Result<NoiseSpec, EnsembleError> {
    let out = match *spec {
        NoiseSpec::None => {
            return Err(EnsembleError::InvalidConfig("cannot scale a noiseless qubit".into()))
        }
        NoiseSpec::StaticGaussian { .. } => NoiseSpec::StaticGaussian { sigma: value },
        NoiseSpec::SingleRtn { rate, .. } => NoiseSpec::SingleRtn {
            rate,
            amplitude: value,
        },
        NoiseSpec::OneOverF {
            gamma_min,
            gamma_max,
            fluctuators_per_decade,
            ..
        } => NoiseSpec::OneOverF {
            sigma: value,
            gamma_min,
            gamma_max,
            fluctuators_per_decade,
        },
    };
    out.validate()?;
    Ok(out)
}

fn noise_like(reference: &NoiseSpec, fallback: &NoiseSpec, value: f64) -> Result<NoiseSpec, EnsembleError> {
    match reference {
        NoiseSpec::None => with_scale(fallback, value),
        _ => with_scale(reference, value),
    }
}

/// Error versus a noise scale or a Hamiltonian parameter, at the config's `n`.
pub fn sweep_parameter(
    cfg: &RunConfig,
    parameter: SweepParameter,
    values: &[f64],
) -> Result<Vec<SweepPoint>, EnsembleError> {
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(EnsembleError::InvalidConfig(format!("invalid sweep value {v}")));
    }
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut c = cfg.tagged(cfg.stream_tag + i as u64);
            match parameter {
                SweepParameter::Sigma => {
                    c.noise1 = with_scale(&cfg.noise1, v)?;
                    c.noise2 = with_scale(&cfg.noise2, v)?;
                }
                SweepParameter::Sigma1 => c.noise1 = noise_like(&cfg.noise1, &cfg.noise2, v)?,
                SweepParameter::Sigma2 => c.noise2 = noise_like(&cfg.noise2, &cfg.noise1, v)?,
                SweepParameter::OmegaC => c.gate = GateParams::new(cfg.gate.omega(), v)?,
                SweepParameter::Omega => c.gate = GateParams::new(v, cfg.gate.omega_c())?,
            }
            let estimate = estimate_gate_error(&c)?;
            Ok(SweepPoint {
                value: v,
                config: c,
                estimate,
            })
        })
        .collect()
}

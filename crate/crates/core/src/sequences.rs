//! Dynamical-decoupling pulse schedules.
//!
//! `m` is always the total number of instantaneous π-pulses and `n = m/2`
//! the number of pulse pairs. Pulses act simultaneously on both qubits.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{kron, pauli, CMat4};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SequenceError {
    #[error("invalid pulse count {0}: must be even and at least 2")]
    InvalidCount(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceKind {
    None,
    Pdd,
    Cp,
    Udd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseAxis {
    Z,
    Y,
}

impl fmt::Display for PulseAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PulseAxis::Z => "z",
            PulseAxis::Y => "y",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SequenceSpec {
    kind: SequenceKind,
    axis: PulseAxis,
    pulse_count: u32,
}

impl SequenceSpec {
    /// `kind = None` ignores `m` and stores zero pulses.
    pub fn new(kind: SequenceKind, axis: PulseAxis, m: u32) -> Result<Self, SequenceError> {
        if kind == SequenceKind::None {
            return Ok(SequenceSpec {
                kind,
                axis,
                pulse_count: 0,
            });
        }
        check_count(m as i64)?;
        Ok(SequenceSpec {
            kind,
            axis,
            pulse_count: m,
        })
    }

    /// Spec with `n` pulse pairs; `n = 0` is the free-evolution baseline.
    pub fn with_pairs(kind: SequenceKind, axis: PulseAxis, n: u32) -> Result<Self, SequenceError> {
        if n == 0 {
            return SequenceSpec::new(SequenceKind::None, axis, 0);
        }
        SequenceSpec::new(kind, axis, 2 * n)
    }

    pub fn none() -> Self {
        SequenceSpec {
            kind: SequenceKind::None,
            axis: PulseAxis::Z,
            pulse_count: 0,
        }
    }

    pub fn kind(&self) -> SequenceKind {
        self.kind
    }

    pub fn axis(&self) -> PulseAxis {
        self.axis
    }

    pub fn pulse_count(&self) -> u32 {
        self.pulse_count
    }

    pub fn pairs(&self) -> u32 {
        self.pulse_count / 2
    }

    /// Display name; CP with y pulses is CPMG.
    pub fn label(&self) -> &'static str {
        sequence_label(self.kind, self.axis)
    }
}

pub fn sequence_label(kind: SequenceKind, axis: PulseAxis) -> &'static str {
    match (kind, axis) {
        (SequenceKind::None, _) => "none",
        (SequenceKind::Pdd, _) => "PDD",
        (SequenceKind::Cp, PulseAxis::Z) => "CP",
        (SequenceKind::Cp, PulseAxis::Y) => "CPMG",
        (SequenceKind::Udd, _) => "UDD",
    }
}

fn check_count(m: i64) -> Result<(), SequenceError> {
    if m < 2 || m % 2 != 0 {
        return Err(SequenceError::InvalidCount(m));
    }
    Ok(())
}

/// Pulse instants as fractions `δ_i` of the gate time, `i = 1..=m`.
pub fn pulse_fractions(kind: SequenceKind, m: i64) -> Result<Vec<f64>, SequenceError> {
    if kind == SequenceKind::None {
        return Ok(Vec::new());
    }
    check_count(m)?;
    let mf = m as f64;
    let cp = |i: i64| (i as f64 - 0.5) / mf;
    let out = match kind {
        SequenceKind::None => unreachable!(),
        SequenceKind::Pdd => (1..=m).map(|i| i as f64 / mf).collect(),
        SequenceKind::Cp => (1..=m).map(cp).collect(),
        // sin²(π/6) and sin²(π/3) are 1/4 and 3/4 only up to rounding.
        SequenceKind::Udd if m == 2 => (1..=m).map(cp).collect(),
        SequenceKind::Udd => (1..=m)
            .map(|i| (PI * i as f64 / (2.0 * mf + 2.0)).sin().powi(2))
            .collect(),
    };
    Ok(out)
}

/// `σz⊗σz` or `σy⊗σy`; the global phase of `(−iσ)⊗(−iσ)` is dropped.
pub fn pulse_unitary(axis: PulseAxis) -> CMat4 {
    match axis {
        PulseAxis::Z => kron(&pauli::SIGMA_Z, &pauli::SIGMA_Z),
        PulseAxis::Y => kron(&pauli::SIGMA_Y, &pauli::SIGMA_Y),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    spec: SequenceSpec,
    fractions: Vec<f64>,
    times: Vec<f64>,
    pulse_op: CMat4,
    gate_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub index: usize,
    pub delta: f64,
    pub time: f64,
}

impl PulseSchedule {
    pub fn spec(&self) -> &SequenceSpec {
        &self.spec
    }

    pub fn kind(&self) -> SequenceKind {
        self.spec.kind
    }

    pub fn axis(&self) -> PulseAxis {
        self.spec.axis
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    /// Absolute pulse instants in `(0, t_e]`.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn pulse_op(&self) -> &CMat4 {
        &self.pulse_op
    }

    pub fn gate_time(&self) -> f64 {
        self.gate_time
    }

    pub fn entries(&self) -> Vec<ScheduleEntry> {
        self.fractions
            .iter()
            .zip(&self.times)
            .enumerate()
            .map(|(i, (&delta, &time))| ScheduleEntry {
                index: i + 1,
                delta,
                time,
            })
            .collect()
    }

    /// Audit dump: JSON list of `{index, delta, time}`.
    pub fn write_json<W: Write>(&self, out: W) -> serde_json::Result<()> {
        serde_json::to_writer_pretty(out, &self.entries())
    }
}

pub fn build_schedule(spec: &SequenceSpec, gate_time: f64) -> Result<PulseSchedule, SequenceError> {
    let fractions = pulse_fractions(spec.kind, spec.pulse_count as i64)?;
    let times = fractions.iter().map(|d| d * gate_time).collect();
    Ok(PulseSchedule {
        spec: *spec,
        fractions,
        times,
        pulse_op: pulse_unitary(spec.axis),
        gate_time,
    })
}

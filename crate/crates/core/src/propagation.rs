//! Exact evolution of one noise realization through a pulse schedule.
//!
//! Every Hamiltonian is piecewise constant, so each segment is propagated
//! with its spectral exponential and there is no time step anywhere.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::algebra::{expm_hermitian, AlgebraError, CMat4, SpectralDecomposition, State4, C64};
use crate::model::{gate_target, total_hamiltonian, GateParams, PM};
use crate::noise::PiecewiseConstantPath;
use crate::sequences::{PulseSchedule, SequenceKind};

/// Allowed `|1 − ‖ψ‖²|` at the end of a trajectory.
pub const NORM_TOLERANCE: f64 = 1e-10;
/// Roundoff allowance outside `[0, 1]` before an error value is rejected.
pub const ERROR_CLAMP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagationError {
    #[error("noise path covers {path_duration} s but the gate needs {gate_time} s")]
    TimelineMismatch { path_duration: f64, gate_time: f64 },
    #[error("pulse at {time} s lies outside (0, {gate_time}]")]
    ScheduleMismatch { time: f64, gate_time: f64 },
    #[error("norm drifted by {drift:e}")]
    NormDrift { drift: f64 },
    #[error("gate error {value} outside [0, 1]")]
    ErrorOutOfRange { value: f64 },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Event {
    /// Closes the segment ending at `time`; `x1`, `x2` were active during it.
    SegmentEnd {
        time: f64,
        duration: f64,
        x1: f64,
        x2: f64,
    },
    Pulse {
        time: f64,
    },
}

impl Event {
    pub fn time(&self) -> f64 {
        match *self {
            Event::SegmentEnd { time, .. } | Event::Pulse { time } => time,
        }
    }
}

/// Time-ordered merge of both noise paths and the pulse instants.
///
/// At a shared instant the running segment is closed first, then the pulse
/// is applied, then the new noise values take effect.
#[derive(Debug, Clone, PartialEq)]
pub struct EventTimeline {
    events: Vec<Event>,
    gate_time: f64,
}

impl EventTimeline {
    pub fn build(
        x1: &PiecewiseConstantPath,
        x2: &PiecewiseConstantPath,
        schedule: &PulseSchedule,
    ) -> Result<Self, PropagationError> {
        let t_e = schedule.gate_time();
        for path in [x1, x2] {
            if path.duration() < t_e * (1.0 - 1e-12) {
                return Err(PropagationError::TimelineMismatch {
                    path_duration: path.duration(),
                    gate_time: t_e,
                });
            }
        }
        let pulses = schedule.times();
        if let Some(&bad) = pulses.iter().find(|&&t| !(t > 0.0 && t <= t_e)) {
            return Err(PropagationError::ScheduleMismatch {
                time: bad,
                gate_time: t_e,
            });
        }
        let (b1, v1) = (x1.breakpoints(), x1.values());
        let (b2, v2) = (x2.breakpoints(), x2.values());
        let mut events = Vec::with_capacity(b1.len() + b2.len() + pulses.len() + 1);
        let (mut i1, mut i2, mut ip) = (1, 1, 0);
        let (mut a, mut b) = (v1[0], v2[0]);
        let mut t_prev = 0.0;
        loop {
            let next = |bp: &[f64], i: usize| bp.get(i).copied().filter(|&t| t < t_e);
            let tau = [next(b1, i1), next(b2, i2), pulses.get(ip).copied(), Some(t_e)]
                .into_iter()
                .flatten()
                .fold(f64::INFINITY, f64::min);
            if tau > t_prev {
                events.push(Event::SegmentEnd {
                    time: tau,
                    duration: tau - t_prev,
                    x1: a,
                    x2: b,
                });
                t_prev = tau;
            }
            while pulses.get(ip) == Some(&tau) {
                events.push(Event::Pulse { time: tau });
                ip += 1;
            }
            if tau >= t_e {
                break;
            }
            while b1.get(i1) == Some(&tau) {
                a = v1[i1];
                i1 += 1;
            }
            while b2.get(i2) == Some(&tau) {
                b = v2[i2];
                i2 += 1;
            }
        }
        Ok(EventTimeline {
            events,
            gate_time: t_e,
        })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn gate_time(&self) -> f64 {
        self.gate_time
    }

    pub fn segment_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, Event::SegmentEnd { .. }))
            .count()
    }

    pub fn pulse_count(&self) -> usize {
        self.events.len() - self.segment_count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryResult {
    pub final_state: State4,
    pub error: f64,
    pub segment_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEvent {
    pub kind: &'static str,
    pub time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x2: Option<f64>,
    pub norm: f64,
}

/// Debug record of one trajectory: every event with the state norm after it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryTrace {
    pub gate_time: f64,
    pub events: Vec<TraceEvent>,
    pub error: f64,
}

impl TrajectoryTrace {
    pub fn write_json<W: Write>(&self, out: W) -> serde_json::Result<()> {
        serde_json::to_writer_pretty(out, self)
    }
}

/// `1 − |⟨target|state⟩|²`, clamped to `[0, 1]`.
pub fn trajectory_error(state: &State4, target: &State4) -> f64 {
    (1.0 - target.inner(state).norm_sqr()).clamp(0.0, 1.0)
}

fn checked_error(state: &State4, target: &State4) -> Result<f64, PropagationError> {
    let raw = 1.0 - target.inner(state).norm_sqr();
    if !(-ERROR_CLAMP_TOLERANCE..=1.0 + ERROR_CLAMP_TOLERANCE).contains(&raw) {
        return Err(PropagationError::ErrorOutOfRange { value: raw });
    }
    Ok(raw.clamp(0.0, 1.0))
}

fn check_norm(state: &State4) -> Result<(), PropagationError> {
    let drift = (state.norm_sqr() - 1.0).abs();
    if !(drift <= NORM_TOLERANCE) {
        return Err(PropagationError::NormDrift { drift });
    }
    Ok(())
}

/// `e^{−iHt}ψ` applied through the eigenbasis of `H`.
fn evolve_in_eigenbasis(dec: &SpectralDecomposition, t: f64, psi: &State4) -> State4 {
    let v = &dec.vectors.0;
    let mut out = [C64::new(0.0, 0.0); 4];
    for k in 0..4 {
        let mut c = C64::new(0.0, 0.0);
        for i in 0..4 {
            c += v[i][k].conj() * psi.0[i];
        }
        c *= C64::cis(-dec.values[k] * t);
        for (o, row) in out.iter_mut().zip(v) {
            *o += row[k] * c;
        }
    }
    State4(out)
}

/// Propagates `|+−⟩` through the merged timeline of one realization.
pub fn evolve_trajectory(
    p: &GateParams,
    x1: &PiecewiseConstantPath,
    x2: &PiecewiseConstantPath,
    schedule: &PulseSchedule,
) -> Result<TrajectoryResult, PropagationError> {
    run(p, x1, x2, schedule, None)
}

/// Same as [`evolve_trajectory`] but also records a per-event trace.
pub fn evolve_trajectory_traced(
    p: &GateParams,
    x1: &PiecewiseConstantPath,
    x2: &PiecewiseConstantPath,
    schedule: &PulseSchedule,
) -> Result<(TrajectoryResult, TrajectoryTrace), PropagationError> {
    let mut events = Vec::new();
    let result = run(p, x1, x2, schedule, Some(&mut events))?;
    let trace = TrajectoryTrace {
        gate_time: schedule.gate_time(),
        events,
        error: result.error,
    };
    Ok((result, trace))
}

fn run(
    p: &GateParams,
    x1: &PiecewiseConstantPath,
    x2: &PiecewiseConstantPath,
    schedule: &PulseSchedule,
    mut trace: Option<&mut Vec<TraceEvent>>,
) -> Result<TrajectoryResult, PropagationError> {
    let timeline = EventTimeline::build(x1, x2, schedule)?;
    let target = gate_target(p);
    let pulse = schedule.pulse_op();
    let mut psi = State4::basis(PM);
    let mut cached: Option<((f64, f64), SpectralDecomposition)> = None;
    for event in timeline.events() {
        match *event {
            Event::SegmentEnd {
                time,
                duration,
                x1,
                x2,
            } => {
                let fresh = !matches!(&cached, Some((key, _)) if *key == (x1, x2));
                if fresh {
                    let dec = SpectralDecomposition::new_unchecked(&total_hamiltonian(p, x1, x2));
                    cached = Some(((x1, x2), dec));
                }
                let (_, dec) = cached.as_ref().expect("decomposition cached above");
                psi = evolve_in_eigenbasis(dec, duration, &psi);
                if let Some(t) = trace.as_deref_mut() {
                    t.push(TraceEvent {
                        kind: "segment",
                        time,
                        x1: Some(x1),
                        x2: Some(x2),
                        norm: psi.norm_sqr().sqrt(),
                    });
                }
            }
            Event::Pulse { time } => {
                psi = pulse.apply(&psi);
                if let Some(t) = trace.as_deref_mut() {
                    t.push(TraceEvent {
                        kind: "pulse",
                        time,
                        x1: None,
                        x2: None,
                        norm: psi.norm_sqr().sqrt(),
                    });
                }
            }
        }
    }
    check_norm(&psi)?;
    let error = checked_error(&psi, &target.target)?;
    Ok(TrajectoryResult {
        final_state: psi,
        error,
        segment_count: timeline.segment_count(),
    })
}

fn mat_pow(mut base: CMat4, mut k: u32) -> CMat4 {
    let mut acc = CMat4::identity();
    while k > 0 {
        if k & 1 == 1 {
            acc = acc * base;
        }
        base = base * base;
        k >>= 1;
    }
    acc
}

/// Static-noise propagator as a closed matrix product.
///
/// PDD uses the cycle power `(S e^{−iHΔt} S e^{−iHΔt})ⁿ`; other kinds the
/// product over their non-uniform intervals. Shares no code with the
/// event-driven route beyond the Hamiltonian and `expm`.
pub fn evolve_quasi_static(
    p: &GateParams,
    x1: f64,
    x2: f64,
    schedule: &PulseSchedule,
) -> Result<TrajectoryResult, PropagationError> {
    let h = total_hamiltonian(p, x1, x2);
    let t_e = schedule.gate_time();
    let s = *schedule.pulse_op();
    let times = schedule.times();
    let (u, segments) = if schedule.kind() == SequenceKind::Pdd {
        let n = (times.len() / 2) as u32;
        let step = expm_hermitian(&h, t_e / times.len() as f64)?;
        (mat_pow(s * step * s * step, n), times.len())
    } else {
        let mut u = CMat4::identity();
        let mut t_prev = 0.0;
        let mut segments = 0;
        for &t in times {
            if t > t_prev {
                u = expm_hermitian(&h, t - t_prev)? * u;
                segments += 1;
            }
            u = s * u;
            t_prev = t;
        }
        if t_e > t_prev {
            u = expm_hermitian(&h, t_e - t_prev)? * u;
            segments += 1;
        }
        (u, segments)
    };
    let psi = u.apply(&State4::basis(PM));
    check_norm(&psi)?;
    let error = checked_error(&psi, &gate_target(p).target)?;
    Ok(TrajectoryResult {
        final_state: psi,
        error,
        segment_count: segments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MP, PP};
    use crate::sequences::{build_schedule, PulseAxis, SequenceSpec};
    use proptest::prelude::*;

    fn params() -> GateParams {
        GateParams::reference()
    }

    fn schedule(kind: SequenceKind, axis: PulseAxis, m: u32) -> PulseSchedule {
        let spec = SequenceSpec::new(kind, axis, m).unwrap();
        build_schedule(&spec, params().gate_time()).unwrap()
    }

    fn constant(x: f64) -> PiecewiseConstantPath {
        PiecewiseConstantPath::constant(x, params().gate_time())
    }

    fn state_diff(a: &State4, b: &State4) -> f64 {
        a.0.iter().zip(&b.0).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    const KINDS: [SequenceKind; 3] = [SequenceKind::Pdd, SequenceKind::Cp, SequenceKind::Udd];

    #[test]
    fn trajectory_error_examples() {
        let target = gate_target(&params()).target;
        assert_eq!(trajectory_error(&target, &target), 0.0);
        assert_eq!(trajectory_error(&State4::basis(PP), &target), 1.0);
        let e = trajectory_error(&State4::basis(PM), &target);
        assert!((e - 0.5).abs() < 1e-15);
    }

    #[test]
    fn noiseless_free_evolution_is_exact() {
        let p = params();
        let r = evolve_trajectory(&p, &constant(0.0), &constant(0.0), &schedule(SequenceKind::None, PulseAxis::Z, 0))
            .unwrap();
        assert!(r.error < 1e-12);
        assert_eq!(r.segment_count, 1);
    }

    #[test]
    fn noiseless_with_pulses_is_exact() {
        let p = params();
        for axis in [PulseAxis::Z, PulseAxis::Y] {
            for kind in KINDS {
                for m in [2, 4, 10, 40] {
                    let r = evolve_trajectory(&p, &constant(0.0), &constant(0.0), &schedule(kind, axis, m))
                        .unwrap();
                    assert!(r.error < 1e-12, "{kind:?} {axis:?} m={m}: {}", r.error);
                }
            }
        }
    }

    #[test]
    fn static_noise_matches_product_route() {
        let p = params();
        let x = 1e9;
        let none = schedule(SequenceKind::None, PulseAxis::Z, 0);
        let a = evolve_trajectory(&p, &constant(x), &constant(x), &none).unwrap();
        let b = evolve_quasi_static(&p, x, x, &none).unwrap();
        assert!((a.error - b.error).abs() < 1e-12);
        assert!(a.error > 1e-6);
        for axis in [PulseAxis::Z, PulseAxis::Y] {
            for kind in KINDS {
                for m in [2, 6, 20] {
                    let s = schedule(kind, axis, m);
                    let a = evolve_trajectory(&p, &constant(x), &constant(-0.4 * x), &s).unwrap();
                    let b = evolve_quasi_static(&p, x, -0.4 * x, &s).unwrap();
                    assert!(state_diff(&a.final_state, &b.final_state) < 1e-10);
                    assert!((a.error - b.error).abs() < 1e-12, "{kind:?} {axis:?} {m}");
                }
            }
        }
    }

    #[test]
    fn quasi_static_zero_noise() {
        let p = params();
        for kind in KINDS {
            let r = evolve_quasi_static(&p, 0.0, 0.0, &schedule(kind, PulseAxis::Y, 8)).unwrap();
            assert!(r.error < 1e-12);
        }
    }

    #[test]
    fn short_path_is_rejected() {
        let p = params();
        let short = PiecewiseConstantPath::constant(0.0, 0.5 * p.gate_time());
        let s = schedule(SequenceKind::Pdd, PulseAxis::Z, 2);
        assert!(matches!(
            evolve_trajectory(&p, &short, &constant(0.0), &s),
            Err(PropagationError::TimelineMismatch { .. })
        ));
    }

    #[test]
    fn timeline_orders_coincident_events() {
        let p = params();
        let te = p.gate_time();
        let s = schedule(SequenceKind::Pdd, PulseAxis::Z, 2);
        // x1 switches exactly at the first pulse, x2 switches earlier.
        let x1 = PiecewiseConstantPath::new(vec![0.0, 0.5 * te], vec![1.0, 2.0], te).unwrap();
        let x2 = PiecewiseConstantPath::new(vec![0.0, 0.25 * te], vec![3.0, 4.0], te).unwrap();
        let tl = EventTimeline::build(&x1, &x2, &s).unwrap();
        let ev = tl.events();
        assert_eq!(tl.pulse_count(), 2);
        assert_eq!(tl.segment_count(), 3);
        assert!(matches!(ev[0], Event::SegmentEnd { x1: 1.0, x2: 3.0, .. }));
        assert!(matches!(ev[1], Event::SegmentEnd { x1: 1.0, x2: 4.0, .. }));
        assert!(matches!(ev[2], Event::Pulse { .. }));
        assert!(matches!(ev[3], Event::SegmentEnd { x1: 2.0, x2: 4.0, .. }));
        assert!(matches!(ev[4], Event::Pulse { time } if time == te));
        assert!(ev.windows(2).all(|w| w[0].time() <= w[1].time()));
        let total: f64 = ev
            .iter()
            .map(|e| match e {
                Event::SegmentEnd { duration, .. } => *duration,
                _ => 0.0,
            })
            .sum();
        assert!((total - te).abs() < 1e-15 * te * 4.0);
    }

    #[test]
    fn switches_past_gate_time_are_ignored() {
        let p = params();
        let te = p.gate_time();
        let x1 = PiecewiseConstantPath::new(vec![0.0, 2.0 * te], vec![1e9, -1e9], 3.0 * te).unwrap();
        let s = schedule(SequenceKind::Cp, PulseAxis::Z, 4);
        let a = evolve_trajectory(&p, &x1, &constant(0.0), &s).unwrap();
        let b = evolve_quasi_static(&p, 1e9, 0.0, &s).unwrap();
        assert!((a.error - b.error).abs() < 1e-12);
    }

    #[test]
    fn trace_records_every_event() {
        let p = params();
        let s = schedule(SequenceKind::Pdd, PulseAxis::Y, 4);
        let (r, trace) = evolve_trajectory_traced(&p, &constant(1e8), &constant(2e8), &s).unwrap();
        assert_eq!(trace.events.len(), 8);
        assert_eq!(trace.events.iter().filter(|e| e.kind == "pulse").count(), 4);
        assert!(trace.events.iter().all(|e| (e.norm - 1.0).abs() < 1e-12));
        assert_eq!(trace.error, r.error);
        let mut buf = Vec::new();
        trace.write_json(&mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["events"].as_array().unwrap().len(), 8);
    }

    #[test]
    fn segment_with_mixed_states_stays_in_swap_subspace_without_noise() {
        let p = params();
        let r = evolve_trajectory(&p, &constant(0.0), &constant(0.0), &schedule(SequenceKind::Udd, PulseAxis::Y, 6))
            .unwrap();
        assert!(r.final_state.0[PP].norm() < 1e-12);
        assert!((r.final_state.0[PM].norm_sqr() + r.final_state.0[MP].norm_sqr() - 1.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn sign_flip_symmetry(
            x1 in -2e9f64..2e9,
            x2 in -2e9f64..2e9,
            k in 0usize..3,
            y in proptest::bool::ANY,
            n in 1u32..30,
        ) {
            let p = params();
            let axis = if y { PulseAxis::Y } else { PulseAxis::Z };
            let s = schedule(KINDS[k], axis, 2 * n);
            let a = evolve_quasi_static(&p, x1, x2, &s).unwrap().error;
            let b = evolve_quasi_static(&p, -x1, -x2, &s).unwrap().error;
            prop_assert!((a - b).abs() < 1e-12);
            let c = evolve_trajectory(&p, &constant(-x1), &constant(-x2), &s).unwrap().error;
            prop_assert!((a - c).abs() < 1e-12);
        }

        #[test]
        fn splitting_invariance(
            x1 in -2e9f64..2e9,
            x2 in -2e9f64..2e9,
            frac in 0.01f64..0.99,
            k in 0usize..3,
            n in 1u32..10,
        ) {
            let p = params();
            let te = p.gate_time();
            let s = schedule(KINDS[k], PulseAxis::Z, 2 * n);
            let split = PiecewiseConstantPath::new(vec![0.0, frac * te], vec![x1, x1], te).unwrap();
            let a = evolve_trajectory(&p, &constant(x1), &constant(x2), &s).unwrap();
            let b = evolve_trajectory(&p, &split, &constant(x2), &s).unwrap();
            prop_assert!(state_diff(&a.final_state, &b.final_state) < 1e-12);
        }

        #[test]
        fn error_is_a_probability(
            x1 in -5e9f64..5e9,
            x2 in -5e9f64..5e9,
            k in 0usize..3,
            n in 1u32..20,
        ) {
            let p = params();
            let s = schedule(KINDS[k], PulseAxis::Y, 2 * n);
            let r = evolve_trajectory(&p, &constant(x1), &constant(x2), &s).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.error));
            prop_assert!((r.final_state.norm_sqr() - 1.0).abs() < NORM_TOLERANCE);
        }
    }
}

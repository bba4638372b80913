//! Closed-form quasi-static predictions and power-law fitting.

mod fit;
mod magnus;

use std::f64::consts::{PI, SQRT_2};

use thiserror::Error;

use crate::model::GateParams;
use crate::sequences::{PulseAxis, SequenceKind};

pub use fit::{fit_power_law, log_log_slope, FitPoint, FitReport, ScalingFit};
pub use magnus::magnus_effective_hamiltonian;

/// Default `q` in the UDD-z template, `Σ₁⁴ + Σ₂⁴ + qΣ₁²Σ₂²`.
pub const DEFAULT_UDD_Q: f64 = -0.7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("no scaling template for {kind:?} with {axis:?} pulses")]
    UnsupportedCombination { kind: SequenceKind, axis: PulseAxis },
    #[error("insufficient data: need {required} points, got {got}")]
    InsufficientData { required: usize, got: usize },
    #[error("non-positive error {value} at n = {n}")]
    NonPositiveError { n: f64, value: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// A closed-form value and whether its derivation assumptions hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub value: f64,
    /// `n > n₀` and noise scale below `ω_c`.
    pub perturbative: bool,
}

/// Anti-Zeno threshold `n₀ = (π/(8√3)) Ω/ω_c`.
pub fn threshold_n0(p: &GateParams) -> f64 {
    PI / (8.0 * 3f64.sqrt()) * p.omega() / p.omega_c()
}

fn perturbative(p: &GateParams, scale: f64, n: u32) -> bool {
    n as f64 > threshold_n0(p) && scale / p.omega_c() < 1.0
}

/// `1 − cos(E t_e)/√2 − (ω_c/(2√2 E)) sin(E t_e)` with `E = √(Ω² + ω_c²/4)`.
pub fn pdd_bracket(p: &GateParams) -> f64 {
    let e = p.outer_energy();
    let phase = e * p.gate_time();
    1.0 - phase.cos() / SQRT_2 - p.omega_c() / (2.0 * SQRT_2 * e) * phase.sin()
}

/// `1 − cos(πΩ/2ω_c)/√2`, the `ω_c ≪ Ω` form of [`pdd_bracket`].
pub fn pdd_bracket_simplified(p: &GateParams) -> f64 {
    1.0 - (PI * p.omega() / (2.0 * p.omega_c())).cos() / SQRT_2
}

fn half_cycle(p: &GateParams, n: u32) -> f64 {
    p.gate_time() / (2.0 * n as f64)
}

/// Third-order Magnus PDD error for one static realization.
pub fn pdd_error_realization(p: &GateParams, x1: f64, x2: f64, n: u32) -> Prediction {
    if n == 0 {
        return Prediction {
            value: f64::NAN,
            perturbative: false,
        };
    }
    let dt = half_cycle(p, n);
    Prediction {
        value: dt * dt / 8.0 * (x1 * x1 + x2 * x2) * pdd_bracket(p),
        perturbative: perturbative(p, x1.abs().max(x2.abs()), n),
    }
}

fn pdd_mean(p: &GateParams, s1: f64, s2: f64, n: u32, bracket: f64) -> Prediction {
    if n == 0 {
        return Prediction {
            value: f64::NAN,
            perturbative: false,
        };
    }
    let wc = p.omega_c();
    let nf = n as f64;
    Prediction {
        value: PI * PI / 128.0 * (s1 * s1 + s2 * s2) / (wc * wc) / (nf * nf) * bracket,
        perturbative: perturbative(p, s1.max(s2), n),
    }
}

/// Gaussian average of [`pdd_error_realization`], full bracket.
pub fn pdd_error_mean(p: &GateParams, sigma1: f64, sigma2: f64, n: u32) -> Prediction {
    pdd_mean(p, sigma1, sigma2, n, pdd_bracket(p))
}

/// Same with the bracket reduced to `1 − cos(πΩ/2ω_c)/√2`.
pub fn pdd_error_mean_simplified(p: &GateParams, sigma1: f64, sigma2: f64, n: u32) -> Prediction {
    pdd_mean(p, sigma1, sigma2, n, pdd_bracket_simplified(p))
}

/// Asymptotic exponent `α` in `⟨ε⟩ ∝ n^{−α}`.
pub fn template_exponent(kind: SequenceKind, axis: PulseAxis) -> Result<f64, AnalyticsError> {
    match (kind, axis) {
        (SequenceKind::Pdd, PulseAxis::Z) => Ok(2.0),
        (SequenceKind::Cp, PulseAxis::Z) => Ok(4.0),
        (SequenceKind::Udd, PulseAxis::Z) => Ok(5.0),
        (SequenceKind::None, _) => Err(AnalyticsError::UnsupportedCombination { kind, axis }),
        (_, PulseAxis::Y) => Ok(4.0),
    }
}

/// Shape-only asymptotic value; the absolute prefactor is unknown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingTemplate {
    pub value: f64,
    pub alpha: f64,
    pub prefactor_known: bool,
}

/// Asymptotic scaling law for a sequence, up to an unknown constant.
pub fn scaling_template(
    kind: SequenceKind,
    axis: PulseAxis,
    p: &GateParams,
    sigma1: f64,
    sigma2: f64,
    n: u32,
) -> Result<ScalingTemplate, AnalyticsError> {
    scaling_template_with_q(kind, axis, p, sigma1, sigma2, n, DEFAULT_UDD_Q)
}

pub fn scaling_template_with_q(
    kind: SequenceKind,
    axis: PulseAxis,
    p: &GateParams,
    sigma1: f64,
    sigma2: f64,
    n: u32,
    q: f64,
) -> Result<ScalingTemplate, AnalyticsError> {
    let alpha = template_exponent(kind, axis)?;
    if n == 0 {
        return Err(AnalyticsError::InvalidArgument("n must be at least 1".into()));
    }
    let wc = p.omega_c();
    let ratio = p.omega() / wc;
    let quad = (sigma1 * sigma1 + sigma2 * sigma2) / (wc * wc);
    let decay = (n as f64).powf(-alpha);
    let value = match (kind, axis) {
        (SequenceKind::Pdd, PulseAxis::Z) => quad * decay * pdd_bracket_simplified(p),
        (SequenceKind::Cp, PulseAxis::Z) => {
            quad * ratio * ratio * decay * pdd_bracket_simplified(p)
        }
        (SequenceKind::Udd, PulseAxis::Z) => {
            let (a, b) = (sigma1 * sigma1, sigma2 * sigma2);
            (a * a + b * b + q * a * b) / wc.powi(4) * ratio.powf(2.6) * decay
        }
        _ => quad * ratio * ratio * decay,
    };
    Ok(ScalingTemplate {
        value,
        alpha,
        prefactor_known: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::evolve_quasi_static;
    use crate::sequences::{build_schedule, SequenceSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn p() -> GateParams {
        GateParams::reference()
    }

    #[test]
    fn threshold_values() {
        let a = threshold_n0(&GateParams::new(1e11, 5e9).unwrap());
        assert!((a - 4.534).abs() < 1e-3);
        let b = threshold_n0(&GateParams::new(2e11, 5e9).unwrap());
        assert!((b - 9.069).abs() < 1e-3);
        assert!((b / a - 2.0).abs() < 1e-12);
    }

    #[test]
    fn realization_basics() {
        assert_eq!(pdd_error_realization(&p(), 0.0, 0.0, 10).value, 0.0);
        let a = pdd_error_realization(&p(), 1e9, 1e9, 10).value;
        let b = pdd_error_realization(&p(), 1e9, 1e9, 20).value;
        assert!((a / b - 4.0).abs() < 1e-12);
        let dt = p().gate_time() / 20.0;
        let direct = dt * dt / 8.0 * 2e18 * pdd_bracket(&p());
        assert!((a - direct).abs() / a < 1e-14);
        assert!(pdd_error_realization(&p(), 1e9, 1e9, 10).perturbative);
        assert!(!pdd_error_realization(&p(), 1e9, 1e9, 4).perturbative);
    }

    #[test]
    fn mean_reference_value() {
        let m = pdd_error_mean_simplified(&p(), 1e9, 1e9, 10).value;
        let want = PI * PI / 128.0 * 0.08 * 1e-2 * (1.0 - 1.0 / SQRT_2);
        assert!((m - want).abs() / want < 1e-12);
        assert!((m - 1.81e-5).abs() / m < 5e-3);
        let full = pdd_error_mean(&p(), 1e9, 1e9, 10).value;
        assert!((full - m).abs() / m < 1e-2);
        assert_eq!(pdd_error_mean(&p(), 0.0, 0.0, 10).value, 0.0);
        let n2: Vec<f64> = [11u32, 17, 40]
            .iter()
            .map(|&n| pdd_error_mean(&p(), 1e9, 3e8, n).value * (n * n) as f64)
            .collect();
        assert!(n2.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-12 * w[0]));
    }

    #[test]
    fn mean_is_gaussian_average_of_realization() {
        let (s1, s2, n) = (1e9, 6e8, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let g1 = Normal::new(0.0, s1).unwrap();
        let g2 = Normal::new(0.0, s2).unwrap();
        let draws = 1_000_000;
        let sum: f64 = (0..draws)
            .map(|_| pdd_error_realization(&p(), g1.sample(&mut rng), g2.sample(&mut rng), n).value)
            .sum();
        let mc = sum / draws as f64;
        let want = pdd_error_mean(&p(), s1, s2, n).value;
        assert!((mc / want - 1.0).abs() < 0.01, "{mc} vs {want}");
    }

    #[test]
    fn realization_tracks_exact_propagator_as_n_grows() {
        // Relative deviation from the exact product should shrink past n₀.
        let x = 1e8;
        let devs: Vec<f64> = [8u32, 16, 32]
            .iter()
            .map(|&n| {
                let spec = SequenceSpec::with_pairs(SequenceKind::Pdd, PulseAxis::Z, n).unwrap();
                let s = build_schedule(&spec, p().gate_time()).unwrap();
                let exact = evolve_quasi_static(&p(), x, x, &s).unwrap().error;
                let approx = pdd_error_realization(&p(), x, x, n).value;
                (approx / exact - 1.0).abs()
            })
            .collect();
        assert!(devs[0] > devs[1] && devs[1] > devs[2], "{devs:?}");
    }

    #[test]
    fn templates() {
        let pr = p();
        let t = |k, a, s1, s2| scaling_template(k, a, &pr, s1, s2, 10).unwrap().value;
        let udd = t(SequenceKind::Udd, PulseAxis::Z, 2e8, 0.0);
        let udd2 = t(SequenceKind::Udd, PulseAxis::Z, 4e8, 0.0);
        assert!((udd2 / udd - 16.0).abs() < 1e-9);
        let cp = t(SequenceKind::Cp, PulseAxis::Z, 1e9, 1e9);
        let cp_half = t(SequenceKind::Cp, PulseAxis::Z, 5e8, 5e8);
        assert!((cp / cp_half - 4.0).abs() < 1e-12);
        let udd_both = t(SequenceKind::Udd, PulseAxis::Z, 1e9, 1e9);
        let udd_half = t(SequenceKind::Udd, PulseAxis::Z, 5e8, 5e8);
        assert!((udd_both / udd_half - 16.0).abs() < 1e-9);
        assert!(matches!(
            scaling_template(SequenceKind::None, PulseAxis::Z, &pr, 1.0, 1.0, 3),
            Err(AnalyticsError::UnsupportedCombination { .. })
        ));
        for (k, a, alpha) in [
            (SequenceKind::Pdd, PulseAxis::Z, 2.0),
            (SequenceKind::Cp, PulseAxis::Z, 4.0),
            (SequenceKind::Udd, PulseAxis::Z, 5.0),
            (SequenceKind::Pdd, PulseAxis::Y, 4.0),
            (SequenceKind::Cp, PulseAxis::Y, 4.0),
            (SequenceKind::Udd, PulseAxis::Y, 4.0),
        ] {
            let tpl = scaling_template(k, a, &pr, 1e9, 1e9, 7).unwrap();
            assert_eq!(tpl.alpha, alpha);
            assert!(!tpl.prefactor_known);
        }
    }
}

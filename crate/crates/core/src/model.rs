//! Two resonant qubits with transverse `σx⊗σx` coupling, each at its optimal
//! point with transverse noise.
//!
//! Basis and sign conventions are those of [`crate::algebra::pauli`]:
//! single-qubit order `(|+⟩, |−⟩)` with `σz|±⟩ = ∓|±⟩`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use thiserror::Error;

use crate::algebra::pauli::{IDENTITY, SIGMA_X, SIGMA_Z};
use crate::algebra::{kron, CMat4, State4, C64};

/// Index of `|++⟩, |+−⟩, |−+⟩, |−−⟩` in a [`State4`].
pub const PP: usize = 0;
pub const PM: usize = 1;
pub const MP: usize = 2;
pub const MM: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("qubit splitting omega must be positive and finite, got {0}")]
    InvalidOmega(f64),
    #[error("coupling omega_c must be positive and finite, got {0}")]
    InvalidCoupling(f64),
}

/// Deterministic gate parameters, both in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateParams {
    omega: f64,
    omega_c: f64,
}

impl GateParams {
    pub fn new(omega: f64, omega_c: f64) -> Result<Self, ModelError> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(ModelError::InvalidOmega(omega));
        }
        if !(omega_c.is_finite() && omega_c > 0.0) {
            return Err(ModelError::InvalidCoupling(omega_c));
        }
        Ok(GateParams { omega, omega_c })
    }

    /// Ω = 10¹¹ rad/s, ω_c = 5×10⁹ rad/s.
    pub fn reference() -> Self {
        GateParams {
            omega: 1e11,
            omega_c: 5e9,
        }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    /// `ω_c ≤ Ω/10`; analytics that expand in `ω_c/Ω` check this.
    pub fn weak_coupling(&self) -> bool {
        self.omega_c <= self.omega / 10.0
    }

    /// Gate time `t_e = π / (2 ω_c)`.
    pub fn gate_time(&self) -> f64 {
        PI / (2.0 * self.omega_c)
    }

    /// `√(Ω² + (ω_c/2)²)`.
    pub fn outer_energy(&self) -> f64 {
        self.omega.hypot(0.5 * self.omega_c)
    }
}

/// `H₀ = −(Ω/2)(σz⊗I + I⊗σz) + (ω_c/2) σx⊗σx`.
pub fn static_hamiltonian(p: &GateParams) -> CMat4 {
    let z = kron(&SIGMA_Z, &IDENTITY) + kron(&IDENTITY, &SIGMA_Z);
    z.scale_real(-0.5 * p.omega) + kron(&SIGMA_X, &SIGMA_X).scale_real(0.5 * p.omega_c)
}

/// `δH = −(x₁/2) σx⊗I − (x₂/2) I⊗σx`.
pub fn noise_hamiltonian(x1: f64, x2: f64) -> CMat4 {
    kron(&SIGMA_X, &IDENTITY).scale_real(-0.5 * x1) + kron(&IDENTITY, &SIGMA_X).scale_real(-0.5 * x2)
}

/// `H₀ + δH(x₁, x₂)` written out entrywise; equal to the sum of the two
/// builders above but cheap enough for the per-segment hot path.
pub fn total_hamiltonian(p: &GateParams, x1: f64, x2: f64) -> CMat4 {
    let (w, g) = (p.omega, 0.5 * p.omega_c);
    let (a, b) = (-0.5 * x1, -0.5 * x2);
    CMat4::from_real([
        [w, b, a, g],
        [b, 0.0, g, a],
        [a, g, 0.0, b],
        [g, a, b, -w],
    ])
}

/// Closed-form spectrum of `H₀`.
#[derive(Debug, Clone, Copy)]
pub struct Eigensystem {
    /// Ascending energies `ω₀ ≤ ω₁ ≤ ω₂ ≤ ω₃`.
    pub energies: [f64; 4],
    /// Mixing angle with `tan φ = −ω_c/(2Ω)`.
    pub phi: f64,
    pub vectors: [State4; 4],
}

/// Eigenvalues and eigenvectors of `H₀`.
///
/// The SWAP-subspace pair is `|1⟩ = (−|+−⟩ + |−+⟩)/√2`,
/// `|2⟩ = (|+−⟩ + |−+⟩)/√2`. In the `{|++⟩, |−−⟩}` block the mixing angle
/// enters as `|3⟩ = cos(φ/2)|++⟩ − sin(φ/2)|−−⟩`,
/// `|0⟩ = sin(φ/2)|++⟩ + cos(φ/2)|−−⟩`, which are the eigenvectors of `H₀`
/// for `σz|±⟩ = ∓|±⟩` and `tan φ = −ω_c/(2Ω)`.
pub fn eigensystem(p: &GateParams) -> Eigensystem {
    let e = p.outer_energy();
    let half = 0.5 * p.omega_c;
    let phi = (-p.omega_c / (2.0 * p.omega)).atan();
    let (s, c) = (0.5 * phi).sin_cos();
    let r = |x: f64| C64::new(x, 0.0);
    let k = FRAC_1_SQRT_2;
    let v0 = State4([r(s), r(0.0), r(0.0), r(c)]);
    let v1 = State4([r(0.0), r(-k), r(k), r(0.0)]);
    let v2 = State4([r(0.0), r(k), r(k), r(0.0)]);
    let v3 = State4([r(c), r(0.0), r(0.0), r(-s)]);
    Eigensystem {
        energies: [-e, -half, half, e],
        phi,
        vectors: [v0, v1, v2, v3],
    }
}

/// Initial product state, target state and gate time of the √iSWAP.
#[derive(Debug, Clone, Copy)]
pub struct GateTarget {
    pub initial: State4,
    pub target: State4,
    pub gate_time: f64,
}

pub fn gate_target(p: &GateParams) -> GateTarget {
    let k = FRAC_1_SQRT_2;
    let mut target = [C64::new(0.0, 0.0); 4];
    target[PM] = C64::new(k, 0.0);
    target[MP] = C64::new(0.0, -k);
    GateTarget {
        initial: State4::basis(PM),
        target: State4(target),
        gate_time: p.gate_time(),
    }
}

/// SWAP operator exchanging the two qubits.
pub fn swap_operator() -> CMat4 {
    let mut m = [[0.0; 4]; 4];
    m[PP][PP] = 1.0;
    m[PM][MP] = 1.0;
    m[MP][PM] = 1.0;
    m[MM][MM] = 1.0;
    CMat4::from_real(m)
}

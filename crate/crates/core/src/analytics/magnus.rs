//! Third-order Magnus (BCH) effective Hamiltonian of one PDD cycle.

use crate::algebra::{CMat4, C64};
use crate::model::{total_hamiltonian, GateParams};
use crate::sequences::{pulse_unitary, PulseAxis};

/// `H_eff` with `S e^{−iHΔt} S e^{−iHΔt} ≈ e^{−2iH_eff Δt}`.
///
/// Built from the BCH series of `e^X e^Y` with `Y = −iHΔt` and
/// `X = −iSHSΔt`, kept through the nested commutators.
pub fn magnus_effective_hamiltonian(
    axis: PulseAxis,
    p: &GateParams,
    x1: f64,
    x2: f64,
    dt: f64,
) -> CMat4 {
    let h = total_hamiltonian(p, x1, x2);
    let s = pulse_unitary(axis);
    let toggled = s * h * s;
    let minus_i = C64::new(0.0, -dt);
    let y = h.scale(minus_i);
    let x = toggled.scale(minus_i);
    let xy = x.commutator(&y);
    let third = x.commutator(&xy) + y.commutator(&y.commutator(&x));
    let l = x + y + xy.scale_real(0.5) + third.scale_real(1.0 / 12.0);
    let h_eff = l.scale(C64::new(0.0, 1.0 / (2.0 * dt)));
    // Drop the roundoff anti-Hermitian part.
    (h_eff + h_eff.adjoint()).scale_real(0.5)
}

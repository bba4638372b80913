//! Dense complex linear algebra on one- and two-qubit operators.
//!
//! Everything here works on fixed-size arrays: 2×2 single-qubit operators,
//! 4×4 two-qubit operators and 4-component state vectors. The two-qubit
//! computational basis is ordered `|++⟩, |+−⟩, |−+⟩, |−−⟩`, i.e. qubit 1 is
//! the most significant index of the Kronecker product.
//!
//! Matrix exponentials of Hermitian generators are computed from a complex
//! Jacobi eigendecomposition, so `e^{-iHt}` is exact up to roundoff for any
//! step length.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Numerical tolerances shared by the crate.
///
/// `algebraic` bounds single-step identities (hermiticity, unitarity of one
/// exponential); `composed` bounds identities accumulated over products of
/// many factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub algebraic: f64,
    pub composed: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        algebraic: 1e-12,
        composed: 1e-10,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("matrix is not Hermitian: max |M - M†| = {defect:e} exceeds {tolerance:e}")]
    NonHermitianInput { defect: f64, tolerance: f64 },
}

/// Row-major 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CMat2(pub [[C64; 2]; 2]);

/// Row-major 4×4 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CMat4(pub [[C64; 4]; 4]);

/// Two-qubit state vector in the computational basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State4(pub [C64; 4]);

/// Pauli operators and identity on a single qubit.
///
/// Sign convention: the single-qubit basis is ordered `(|+⟩, |−⟩)` with
/// `σz|±⟩ = ∓|±⟩`, so `σz = diag(−1, +1)`. `σy` is fixed by the Pauli
/// algebra `σz σx = i σy`, which gives `σy = [[0, i], [−i, 0]]` in this
/// ordering. Every matrix literal in the crate derives from these four.
pub mod pauli {
    use super::{CMat2, C64};

    const Z: C64 = C64::new(0.0, 0.0);
    const P: C64 = C64::new(1.0, 0.0);
    const M: C64 = C64::new(-1.0, 0.0);
    const I: C64 = C64::new(0.0, 1.0);
    const MI: C64 = C64::new(0.0, -1.0);

    pub const IDENTITY: CMat2 = CMat2([[P, Z], [Z, P]]);
    pub const SIGMA_X: CMat2 = CMat2([[Z, P], [P, Z]]);
    pub const SIGMA_Y: CMat2 = CMat2([[Z, I], [MI, Z]]);
    pub const SIGMA_Z: CMat2 = CMat2([[M, Z], [Z, P]]);
}

impl CMat2 {
    pub fn identity() -> Self {
        pauli::IDENTITY
    }

    pub fn zeros() -> Self {
        CMat2([[ZERO; 2]; 2])
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = *self;
        for row in out.0.iter_mut() {
            for e in row.iter_mut() {
                *e *= s;
            }
        }
        out
    }
}

impl Mul for CMat2 {
    type Output = CMat2;

    fn mul(self, rhs: CMat2) -> CMat2 {
        let mut out = CMat2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] = self.0[i][0] * rhs.0[0][j] + self.0[i][1] * rhs.0[1][j];
            }
        }
        out
    }
}

/// Kronecker product `a ⊗ b`; `a` acts on qubit 1 (the major index).
pub fn kron(a: &CMat2, b: &CMat2) -> CMat4 {
    let mut out = CMat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out.0[2 * i + k][2 * j + l] = a.0[i][j] * b.0[k][l];
                }
            }
        }
    }
    out
}

impl CMat4 {
    pub fn identity() -> Self {
        let mut out = Self::zeros();
        for i in 0..4 {
            out.0[i][i] = ONE;
        }
        out
    }

    pub fn zeros() -> Self {
        CMat4([[ZERO; 4]; 4])
    }

    pub fn from_real(rows: [[f64; 4]; 4]) -> Self {
        let mut out = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] = C64::new(rows[i][j], 0.0);
            }
        }
        out
    }

    pub fn diagonal(d: [C64; 4]) -> Self {
        let mut out = Self::zeros();
        for i in 0..4 {
            out.0[i][i] = d[i];
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] = self.0[j][i].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = *self;
        for row in out.0.iter_mut() {
            for e in row.iter_mut() {
                *e *= s;
            }
        }
        out
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0, |m, e| m.max(e.norm()))
    }

    /// `max |M − M†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        (*self - self.adjoint()).max_abs()
    }

    /// Hermiticity check relative to the matrix scale (entries here are
    /// routinely ~1e11 rad/s, so an absolute bound would be meaningless).
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol * self.max_abs().max(1.0)
    }

    pub fn commutator(&self, other: &CMat4) -> CMat4 {
        *self * *other - *other * *self
    }

    pub fn apply(&self, psi: &State4) -> State4 {
        let mut out = [ZERO; 4];
        for (i, o) in out.iter_mut().enumerate() {
            let r = &self.0[i];
            *o = r[0] * psi.0[0] + r[1] * psi.0[1] + r[2] * psi.0[2] + r[3] * psi.0[3];
        }
        State4(out)
    }

    pub fn trace(&self) -> C64 {
        (0..4).map(|i| self.0[i][i]).sum()
    }

    /// Hilbert–Schmidt overlap `Tr(P† M) / 4`, the coefficient of `P` when
    /// `P` is a two-qubit Pauli string.
    pub fn pauli_coefficient(&self, p: &CMat4) -> C64 {
        (p.adjoint() * *self).trace() / 4.0
    }
}

impl Add for CMat4 {
    type Output = CMat4;

    fn add(self, rhs: CMat4) -> CMat4 {
        let mut out = self;
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] += rhs.0[i][j];
            }
        }
        out
    }
}

impl Sub for CMat4 {
    type Output = CMat4;

    fn sub(self, rhs: CMat4) -> CMat4 {
        let mut out = self;
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] -= rhs.0[i][j];
            }
        }
        out
    }
}

impl Neg for CMat4 {
    type Output = CMat4;

    fn neg(self) -> CMat4 {
        self.scale_real(-1.0)
    }
}

impl Mul for CMat4 {
    type Output = CMat4;

    fn mul(self, rhs: CMat4) -> CMat4 {
        let mut out = CMat4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = ZERO;
                for k in 0..4 {
                    acc += self.0[i][k] * rhs.0[k][j];
                }
                out.0[i][j] = acc;
            }
        }
        out
    }
}

impl State4 {
    pub fn basis(index: usize) -> Self {
        let mut v = [ZERO; 4];
        v[index] = ONE;
        State4(v)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &State4) -> C64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        State4(self.0.map(|c| c * s))
    }
}

impl Add for State4 {
    type Output = State4;

    fn add(self, rhs: State4) -> State4 {
        let mut out = self;
        for i in 0..4 {
            out.0[i] += rhs.0[i];
        }
        out
    }
}

/// Eigendecomposition `H = V diag(λ) V†` of a Hermitian 4×4 matrix.
///
/// Eigenvalues are sorted ascending; column `k` of `vectors` is the
/// eigenvector for `values[k]`.
#[derive(Debug, Clone, Copy)]
pub struct SpectralDecomposition {
    pub values: [f64; 4],
    pub vectors: CMat4,
}

const MAX_JACOBI_SWEEPS: usize = 60;

impl SpectralDecomposition {
    /// Cyclic complex Jacobi diagonalization.
    pub fn new(h: &CMat4) -> Result<Self, AlgebraError> {
        let tol = Tolerances::DEFAULT.algebraic;
        if !h.is_hermitian(tol) {
            return Err(AlgebraError::NonHermitianInput {
                defect: h.hermiticity_defect(),
                tolerance: tol * h.max_abs().max(1.0),
            });
        }
        Ok(Self::new_unchecked(h))
    }

    /// Same as [`SpectralDecomposition::new`] without the hermiticity check;
    /// callers guarantee `h` is Hermitian by construction.
    pub fn new_unchecked(h: &CMat4) -> Self {
        // Symmetrize so the lower triangle is exactly the conjugate of the upper.
        let mut a = [[ZERO; 4]; 4];
        for i in 0..4 {
            a[i][i] = C64::new(h.0[i][i].re, 0.0);
            for j in (i + 1)..4 {
                let v = (h.0[i][j] + h.0[j][i].conj()) * 0.5;
                a[i][j] = v;
                a[j][i] = v.conj();
            }
        }
        let mut v = CMat4::identity().0;

        for sweep in 0..MAX_JACOBI_SWEEPS {
            let off: f64 = (0..4)
                .flat_map(|p| ((p + 1)..4).map(move |q| (p, q)))
                .map(|(p, q)| a[p][q].norm_sqr())
                .sum();
            if off == 0.0 {
                break;
            }
            let diag: f64 = (0..4).map(|i| a[i][i].re * a[i][i].re).sum();
            if off <= 1e-2 * f64::EPSILON * f64::EPSILON * (diag + 2.0 * off) {
                break;
            }
            for p in 0..3 {
                for q in (p + 1)..4 {
                    let apq = a[p][q];
                    let mag = apq.norm();
                    if mag == 0.0 {
                        continue;
                    }
                    let app = a[p][p].re;
                    let aqq = a[q][q].re;
                    // Past the first sweeps, drop elements below the diagonal's resolution.
                    let g = 100.0 * mag;
                    if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                        a[p][q] = ZERO;
                        a[q][p] = ZERO;
                        continue;
                    }
                    let phase = apq / mag;
                    let theta = (aqq - app) / (2.0 * mag);
                    let t = if theta.abs() > 1e150 {
                        0.5 / theta
                    } else {
                        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                    };
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    let ph_c = phase.conj();
                    // A ← A J with J_pp = c, J_pq = s, J_qp = −s e^{−iφ}, J_qq = c e^{−iφ}.
                    for row in a.iter_mut() {
                        let akp = row[p];
                        let akq = row[q];
                        row[p] = akp * c - akq * ph_c * s;
                        row[q] = akp * s + akq * ph_c * c;
                    }
                    for row in v.iter_mut() {
                        let vkp = row[p];
                        let vkq = row[q];
                        row[p] = vkp * c - vkq * ph_c * s;
                        row[q] = vkp * s + vkq * ph_c * c;
                    }
                    // A ← J† A.
                    for k in 0..4 {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = apk * c - aqk * phase * s;
                        a[q][k] = apk * s + aqk * phase * c;
                    }
                    a[p][q] = ZERO;
                    a[q][p] = ZERO;
                    a[p][p] = C64::new(a[p][p].re, 0.0);
                    a[q][q] = C64::new(a[q][q].re, 0.0);
                }
            }
        }

        let mut order = [0usize, 1, 2, 3];
        order.sort_by(|&i, &j| a[i][i].re.total_cmp(&a[j][j].re));
        let mut values = [0.0; 4];
        let mut vectors = CMat4::zeros();
        for (k, &src) in order.iter().enumerate() {
            values[k] = a[src][src].re;
            for r in 0..4 {
                vectors.0[r][k] = v[r][src];
            }
        }
        SpectralDecomposition { values, vectors }
    }

    /// Column `k` as a state.
    pub fn eigenvector(&self, k: usize) -> State4 {
        State4([
            self.vectors.0[0][k],
            self.vectors.0[1][k],
            self.vectors.0[2][k],
            self.vectors.0[3][k],
        ])
    }

    /// `e^{−iHt}` assembled from the decomposition.
    pub fn propagator(&self, t: f64) -> CMat4 {
        let phases = self.values.map(|w| C64::from_polar(1.0, -w * t));
        let v = &self.vectors.0;
        let mut out = CMat4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = ZERO;
                for k in 0..4 {
                    acc += v[i][k] * phases[k] * v[j][k].conj();
                }
                out.0[i][j] = acc;
            }
        }
        out
    }

    /// Reassemble `V diag(λ) V†`.
    pub fn reconstruct(&self) -> CMat4 {
        let d = CMat4::diagonal(self.values.map(|w| C64::new(w, 0.0)));
        self.vectors * d * self.vectors.adjoint()
    }
}

/// `e^{−iht}` for Hermitian `h` via its spectral decomposition.
pub fn expm_hermitian(h: &CMat4, t: f64) -> Result<CMat4, AlgebraError> {
    Ok(SpectralDecomposition::new(h)?.propagator(t))
}

/// `max |U†U − I|`.
pub fn unitarity_defect(u: &CMat4) -> f64 {
    (u.adjoint() * *u - CMat4::identity()).max_abs()
}

#[cfg(test)]
mod tests {
    use super::pauli::*;
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_hermitian(entries: &[f64; 16], scale: f64) -> CMat4 {
        let mut m = CMat4::zeros();
        let mut k = 0;
        for i in 0..4 {
            m.0[i][i] = c(entries[k] * scale, 0.0);
            k += 1;
        }
        for i in 0..4 {
            for j in (i + 1)..4 {
                let z = c(entries[k] * scale, entries[k + 1] * scale);
                k += 2;
                m.0[i][j] = z;
                m.0[j][i] = z.conj();
            }
        }
        m
    }

    #[test]
    fn kron_identity() {
        assert_eq!(kron(&IDENTITY, &IDENTITY), CMat4::identity());
    }

    #[test]
    fn kron_zz_diagonal_signs() {
        let zz = kron(&SIGMA_Z, &SIGMA_Z);
        let expected = CMat4::diagonal([c(1.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(zz, expected);
    }

    #[test]
    fn kron_xx_is_antidiagonal() {
        let xx = kron(&SIGMA_X, &SIGMA_X);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i + j == 3 { 1.0 } else { 0.0 };
                assert_eq!(xx.0[i][j], c(want, 0.0));
            }
        }
    }

    #[test]
    fn pauli_algebra_closes() {
        // σz σx = i σy and σ² = I with the basis convention above.
        assert_eq!(SIGMA_Z * SIGMA_X, SIGMA_Y.scale(c(0.0, 1.0)));
        for p in [SIGMA_X, SIGMA_Y, SIGMA_Z] {
            assert_eq!(p * p, IDENTITY);
        }
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let u = expm_hermitian(&CMat4::zeros(), 1.3e-10).unwrap();
        assert!((u - CMat4::identity()).max_abs() < 1e-15);
    }

    #[test]
    fn expm_of_diagonal() {
        let w = [-1.0e11, -2.5e9, 2.5e9, 1.0e11];
        let h = CMat4::diagonal(w.map(|x| c(x, 0.0)));
        let t = 3.0e-10;
        let u = expm_hermitian(&h, t).unwrap();
        for i in 0..4 {
            let want = C64::from_polar(1.0, -w[i] * t);
            assert!((u.0[i][i] - want).norm() < 1e-12);
        }
        assert!(unitarity_defect(&u) < 1e-12);
    }

    #[test]
    fn expm_rejects_non_hermitian() {
        let mut h = CMat4::zeros();
        h.0[0][1] = c(1.0, 0.0);
        assert!(matches!(
            expm_hermitian(&h, 1.0),
            Err(AlgebraError::NonHermitianInput { .. })
        ));
    }

    #[test]
    fn unitarity_defect_examples() {
        assert_eq!(unitarity_defect(&CMat4::identity()), 0.0);
        assert_eq!(unitarity_defect(&CMat4::identity().scale_real(2.0)), 3.0);
    }

    #[test]
    fn degenerate_spectrum_decomposes() {
        let h = kron(&SIGMA_X, &SIGMA_X).scale_real(2.5e9) + kron(&SIGMA_Z, &SIGMA_Z).scale_real(1e9);
        let d = SpectralDecomposition::new(&h).unwrap();
        assert!((d.reconstruct() - h).max_abs() < 1e-12 * 2.5e9 * 10.0);
        assert!(unitarity_defect(&d.vectors) < 1e-13);
    }

    #[test]
    fn long_product_stays_unitary() {
        // 10^4 segment exponentials of varying Hermitian generators.
        let mut u = CMat4::identity();
        let base = kron(&SIGMA_Z, &IDENTITY).scale_real(-5e10)
            + kron(&IDENTITY, &SIGMA_Z).scale_real(-5e10)
            + kron(&SIGMA_X, &SIGMA_X).scale_real(2.5e9);
        for k in 0..10_000 {
            let x = ((k as f64) * 0.7123).sin() * 1e9;
            let h = base + kron(&SIGMA_X, &IDENTITY).scale_real(-0.5 * x);
            u = expm_hermitian(&h, 3.1e-14).unwrap() * u;
        }
        assert!(unitarity_defect(&u) < 1e-9);
    }

    proptest! {
        #[test]
        fn expm_is_unitary_and_composes(
            entries in prop::array::uniform16(-1.0f64..1.0),
            t1 in -1e-9f64..1e-9,
            t2 in -1e-9f64..1e-9,
        ) {
            let h = random_hermitian(&entries, 2.5e10);
            let d = SpectralDecomposition::new(&h).unwrap();
            prop_assert!((d.reconstruct() - h).max_abs() < 1e-12 * h.max_abs().max(1.0) * 10.0);
            let u1 = d.propagator(t1);
            let u2 = d.propagator(t2);
            prop_assert!(unitarity_defect(&u1) < 1e-12);
            prop_assert!(((u1 * u2) - d.propagator(t1 + t2)).max_abs() < 1e-10);
            prop_assert!(((u1 * d.propagator(-t1)) - CMat4::identity()).max_abs() < 1e-10);
        }

        #[test]
        fn kron_mixed_product(
            a in prop::array::uniform8(-1.0f64..1.0),
            b in prop::array::uniform8(-1.0f64..1.0),
            cc in prop::array::uniform8(-1.0f64..1.0),
            d in prop::array::uniform8(-1.0f64..1.0),
        ) {
            let m = |v: [f64; 8]| CMat2([[c(v[0], v[1]), c(v[2], v[3])], [c(v[4], v[5]), c(v[6], v[7])]]);
            let (a, b, cc, d) = (m(a), m(b), m(cc), m(d));
            let lhs = kron(&a, &b) * kron(&cc, &d);
            let rhs = kron(&(a * cc), &(b * d));
            prop_assert!((lhs - rhs).max_abs() < 1e-12);
        }
    }
}

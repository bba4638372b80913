//! Spectral and cumulant diagnostics for synthesized noise.
//!
//! Convention: `S(ω) = ∫ dt ⟨x(t)x(0)⟩ e^{iωt}`, two-sided, angular frequency.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{NoiseError, NoiseSpec, PiecewiseConstantPath};

pub const MIN_PSD_PATHS: usize = 100;
pub const MIN_CUMULANT_SAMPLES: usize = 10_000;

/// `A = πΣ²/ln(γ_M/γ_m)`, the 1/f amplitude in `S(ω) ≈ A/ω`.
pub fn spectrum_amplitude(sigma: f64, gamma_min: f64, gamma_max: f64) -> Result<f64, NoiseError> {
    if !(gamma_min > 0.0 && gamma_max.is_finite() && gamma_min.is_finite()) {
        return Err(NoiseError::InvalidSpec(
            "switching rates must be positive and finite".into(),
        ));
    }
    let ratio = gamma_max / gamma_min;
    if !(ratio > 1.0 + 1e-9) {
        return Err(NoiseError::DomainError { ratio });
    }
    Ok(PI * sigma * sigma / ratio.ln())
}

/// Ensemble PSD of the fluctuator model in the continuum-of-rates limit.
///
/// Averages the Lorentzian `Σ² 4γ/(4γ²+ω²)` over the `1/γ` rate density.
/// Returns `None` for variants other than `OneOverF`.
pub fn one_over_f_reference_psd(spec: &NoiseSpec, omega: f64) -> Option<f64> {
    let NoiseSpec::OneOverF {
        sigma,
        gamma_min,
        gamma_max,
        ..
    } = *spec
    else {
        return None;
    };
    let s2 = sigma * sigma;
    let w = omega.abs();
    let lorentz = |g: f64| s2 * 4.0 * g / (4.0 * g * g + w * w);
    let ratio = gamma_max / gamma_min;
    if ratio <= 1.0 + 1e-9 {
        return Some(lorentz(gamma_min));
    }
    if w == 0.0 {
        return Some(s2 * (1.0 / gamma_min - 1.0 / gamma_max) / ratio.ln());
    }
    let span = (2.0 * gamma_max / w).atan() - (2.0 * gamma_min / w).atan();
    Some(s2 * 2.0 * span / (w * ratio.ln()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    pub omega: Vec<f64>,
    pub psd: Vec<f64>,
    /// Standard error of the ensemble average at each grid point.
    pub std_error: Vec<f64>,
    pub paths: usize,
}

impl PsdEstimate {
    /// Least-squares slope of `ln S` against `ln ω` over grid points inside `[lo, hi]`.
    pub fn log_log_slope(&self, lo: f64, hi: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .omega
            .iter()
            .zip(&self.psd)
            .filter(|(w, s)| **w >= lo && **w <= hi && **s > 0.0)
            .map(|(w, s)| (w.ln(), s.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        Some(sxy / sxx)
    }
}

/// Hann-windowed periodogram of exact Fourier transforms, averaged over paths.
///
/// The transform of a piecewise-constant path is evaluated in closed form
/// from its jump points, so there is no sampling or aliasing. The window
/// `sin²(πt/T)` is applied as the usual three-term shift in frequency and
/// normalised by `∫w² = 3T/8`.
pub fn estimate_psd(
    paths: &[PiecewiseConstantPath],
    grid: &[f64],
) -> Result<PsdEstimate, NoiseError> {
    if paths.len() < MIN_PSD_PATHS {
        return Err(NoiseError::InsufficientEnsemble {
            required: MIN_PSD_PATHS,
            got: paths.len(),
        });
    }
    let duration = paths[0].duration();
    if !(duration > 0.0) {
        return Err(NoiseError::InvalidPath("paths must have positive duration".into()));
    }
    if paths.iter().any(|p| p.duration() != duration) {
        return Err(NoiseError::InvalidPath("paths must share one duration".into()));
    }
    if grid.iter().any(|w| !w.is_finite()) {
        return Err(NoiseError::InvalidSpec("frequency grid must be finite".into()));
    }
    let norm = 3.0 * duration / 8.0;
    let mut sum = vec![0.0; grid.len()];
    let mut sum_sq = vec![0.0; grid.len()];
    let mut power = vec![0.0; grid.len()];
    for path in paths {
        hann_periodogram(path, grid, &mut power);
        for ((s, q), p) in sum.iter_mut().zip(sum_sq.iter_mut()).zip(&power) {
            let v = p / norm;
            *s += v;
            *q += v * v;
        }
    }
    let n = paths.len() as f64;
    let psd: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std_error = sum_sq
        .iter()
        .zip(&psd)
        .map(|(q, m)| ((q / n - m * m).max(0.0) * n / (n - 1.0) / n).sqrt())
        .collect();
    Ok(PsdEstimate {
        omega: grid.to_vec(),
        psd,
        std_error,
        paths: paths.len(),
    })
}

/// `|∫₀ᵀ w(t) x(t) e^{iωt} dt|²` for every grid point, written into `out`.
fn hann_periodogram(path: &PiecewiseConstantPath, grid: &[f64], out: &mut [f64]) {
    let t_end = path.duration();
    let shift = 2.0 * PI / t_end;
    let bp = path.breakpoints();
    let vals = path.values();
    // Window harmonic phasors per breakpoint, shared by all grid points.
    let harmonics: Vec<Complex64> = bp.iter().map(|&a| Complex64::cis(shift * a)).collect();
    for (slot, &w) in out.iter_mut().zip(grid) {
        let freqs = [w, w + shift, w - shift];
        let mut jumps = [Complex64::new(0.0, 0.0); 3];
        for k in 1..bp.len() {
            let dv = vals[k - 1] - vals[k];
            let base = Complex64::cis(w * bp[k]);
            let h = harmonics[k];
            jumps[0] += dv * base;
            jumps[1] += dv * base * h;
            jumps[2] += dv * base * h.conj();
        }
        let last = *vals.last().expect("non-empty path");
        let mut xs = [Complex64::new(0.0, 0.0); 3];
        for j in 0..3 {
            let f = freqs[j];
            xs[j] = if f.abs() * t_end < 1e-9 {
                // Zero frequency: plain integral of the path.
                Complex64::new(path.segments().map(|(a, b, v)| v * (b - a)).sum(), 0.0)
            } else {
                let tail = last * Complex64::cis(f * t_end);
                (jumps[j] - vals[0] + tail) / Complex64::new(0.0, f)
            };
        }
        let windowed = 0.5 * xs[0] - 0.25 * xs[1] - 0.25 * xs[2];
        *slot = windowed.norm_sqr();
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulantEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// `m₄ − 3m₂²` from raw (zero-mean) moments of static samples.
pub fn fourth_cumulant(values: &[f64]) -> Result<f64, NoiseError> {
    fourth_cumulant_estimate(values).map(|c| c.value)
}

/// Fourth cumulant with a delta-method standard error.
pub fn fourth_cumulant_estimate(values: &[f64]) -> Result<CumulantEstimate, NoiseError> {
    if values.len() < MIN_CUMULANT_SAMPLES {
        return Err(NoiseError::InsufficientEnsemble {
            required: MIN_CUMULANT_SAMPLES,
            got: values.len(),
        });
    }
    let n = values.len() as f64;
    let mut m = [0.0f64; 4];
    for &x in values {
        let x2 = x * x;
        m[0] += x2;
        m[1] += x2 * x2;
        m[2] += x2 * x2 * x2;
        m[3] += x2 * x2 * x2 * x2;
    }
    let [m2, m4, m6, m8] = m.map(|s| s / n);
    let value = m4 - 3.0 * m2 * m2;
    let var_x2 = (m4 - m2 * m2).max(0.0);
    let var_x4 = (m8 - m4 * m4).max(0.0);
    let cov = m6 - m2 * m4;
    let var = (36.0 * m2 * m2 * var_x2 - 12.0 * m2 * cov + var_x4).max(0.0) / n;
    Ok(CumulantEstimate {
        value,
        std_error: var.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn amplitude_arithmetic() {
        let a = spectrum_amplitude(1e9, 1.0, 1e6).unwrap();
        assert!((a - PI * 1e18 / 1e6f64.ln()).abs() / a < 1e-14);
        assert!((a - 2.274e17).abs() / a < 1e-3);
        let doubled = spectrum_amplitude(2f64.sqrt() * 1e9, 1.0, 1e6).unwrap();
        assert!((doubled / a - 2.0).abs() < 1e-12);
    }

    #[test]
    fn amplitude_rejects_degenerate_band() {
        assert!(matches!(
            spectrum_amplitude(1.0, 1.0, 1.0 + 1e-10),
            Err(NoiseError::DomainError { .. })
        ));
        assert!(matches!(
            spectrum_amplitude(1.0, 1.0, 1.0),
            Err(NoiseError::DomainError { .. })
        ));
        assert!(spectrum_amplitude(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn reference_psd_has_one_over_f_core() {
        let spec = NoiseSpec::one_over_f(1e9, 1.0, 1e6);
        let a = spectrum_amplitude(1e9, 1.0, 1e6).unwrap();
        let s = one_over_f_reference_psd(&spec, 1e3).unwrap();
        assert!((s * 1e3 / a - 1.0).abs() < 1e-2);
        assert!(one_over_f_reference_psd(&NoiseSpec::None, 1.0).is_none());
    }

    #[test]
    fn psd_needs_enough_paths() {
        let paths = vec![PiecewiseConstantPath::constant(1.0, 1.0); 99];
        assert!(matches!(
            estimate_psd(&paths, &[1.0]),
            Err(NoiseError::InsufficientEnsemble { required: 100, got: 99 })
        ));
    }

    #[test]
    fn constant_path_transform_is_exact() {
        // Hann-weighted integral of a constant c over [0,T] is cT/2.
        let paths = vec![PiecewiseConstantPath::constant(2.0, 4.0); 100];
        let est = estimate_psd(&paths, &[0.0, 1e-3]).unwrap();
        let want = (2.0 * 4.0 / 2.0f64).powi(2) / (3.0 * 4.0 / 8.0);
        assert!((est.psd[0] - want).abs() / want < 1e-12);
        assert!((est.psd[1] - want).abs() / want < 1e-3);
    }

    #[test]
    fn white_noise_is_flat() {
        let dt = 1e-3;
        let steps = 4000;
        let duration = dt * steps as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let paths: Vec<_> = (0..200)
            .map(|_| {
                let bp = (0..steps).map(|k| k as f64 * dt).collect();
                let vals = (0..steps).map(|_| normal.sample(&mut rng)).collect();
                PiecewiseConstantPath::new(bp, vals, duration).unwrap()
            })
            .collect();
        // Held-sample white noise: S ≈ dt below the hold roll-off.
        let grid = log_grid(20.0, 200.0, 12);
        let est = estimate_psd(&paths, &grid).unwrap();
        for (w, s) in grid.iter().zip(&est.psd) {
            let db = 10.0 * (s / dt).log10();
            assert!(db.abs() < 3.0, "ω={w}: {db} dB");
        }
    }

    #[test]
    fn rtn_is_lorentzian_at_knee() {
        let rate = 1.0;
        let v = 2.0;
        let spec = NoiseSpec::SingleRtn { rate, amplitude: v };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let paths: Vec<_> = (0..2000).map(|_| spec.sample(200.0, &mut rng).unwrap()).collect();
        let w = 2.0 * rate;
        let est = estimate_psd(&paths, &[w]).unwrap();
        let want = v * v / 4.0 * 4.0 * rate / (4.0 * rate * rate + w * w);
        assert!((est.psd[0] - want).abs() / want < 0.1, "{} vs {want}", est.psd[0]);
    }

    #[test]
    fn one_over_f_slope() {
        let spec = NoiseSpec::one_over_f(1.0, 1.0, 1e4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let paths: Vec<_> = (0..200).map(|_| spec.sample(2.0, &mut rng).unwrap()).collect();
        let grid = log_grid(10.0, 1e3, 16);
        let est = estimate_psd(&paths, &grid).unwrap();
        let slope = est.log_log_slope(10.0, 1e3).unwrap();
        assert!((slope + 1.0).abs() < 0.1, "slope {slope}");
        let a = spectrum_amplitude(1.0, 1.0, 1e4).unwrap();
        let mid = est.psd[8] * grid[8] / a;
        assert!((0.5..2.0).contains(&mid), "A/ω ratio {mid}");
    }

    #[test]
    fn cumulant_cases() {
        let c = 1.5;
        let consts = vec![c; 10_000];
        let k = fourth_cumulant(&consts).unwrap();
        assert!((k + 2.0 * c.powi(4)).abs() < 1e-12 * c.powi(4));

        let v = 3.0;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rtn: Vec<f64> = (0..20_000)
            .map(|_| if rng.random::<bool>() { v / 2.0 } else { -v / 2.0 })
            .collect();
        let est = fourth_cumulant_estimate(&rtn).unwrap();
        let want = -v.powi(4) / 8.0;
        assert!((est.value - want).abs() <= 3.0 * est.std_error + 1e-12 * want.abs());

        assert!(matches!(
            fourth_cumulant(&consts[..9_999]),
            Err(NoiseError::InsufficientEnsemble { .. })
        ));
    }
}

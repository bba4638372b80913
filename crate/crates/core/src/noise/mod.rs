//! Classical stochastic noise `x(t)` entering the transverse noise term.
//!
//! All processes are piecewise constant: 1/f noise is a superposition of
//! symmetric random telegraph fluctuators with log-uniform switching rates,
//! a single telegraph process is one such fluctuator, and quasi-static
//! Gaussian noise is one constant draw per realization.
//!
//! A telegraph fluctuator with rate `γ` flips sign at the events of a Poisson
//! process of rate `γ`, so its autocorrelation is `(v²/4) e^{−2γ|t|}`.

mod spectrum;

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use thiserror::Error;

pub use spectrum::{
    estimate_psd, fourth_cumulant, fourth_cumulant_estimate, one_over_f_reference_psd,
    spectrum_amplitude, CumulantEstimate, PsdEstimate, MIN_CUMULANT_SAMPLES, MIN_PSD_PATHS,
};

/// Fluctuators per decade of switching rate when none is given.
pub const DEFAULT_FLUCTUATORS_PER_DECADE: u32 = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("invalid noise specification: {0}")]
    InvalidSpec(String),
    #[error("degenerate bandwidth: gamma_max/gamma_min = {ratio} must exceed 1 + 1e-9")]
    DomainError { ratio: f64 },
    #[error("insufficient ensemble: need at least {required} samples, got {got}")]
    InsufficientEnsemble { required: usize, got: usize },
    #[error("invalid path: {0}")]
    InvalidPath(String),
}

/// Description of the stochastic process on one qubit.
///
/// `sigma` is the standard deviation Σ of `x` in rad/s; switching rates are
/// in 1/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    None,
    StaticGaussian {
        sigma: f64,
    },
    SingleRtn {
        rate: f64,
        amplitude: f64,
    },
    OneOverF {
        sigma: f64,
        gamma_min: f64,
        gamma_max: f64,
        fluctuators_per_decade: u32,
    },
}

impl NoiseSpec {
    pub fn one_over_f(sigma: f64, gamma_min: f64, gamma_max: f64) -> Self {
        NoiseSpec::OneOverF {
            sigma,
            gamma_min,
            gamma_max,
            fluctuators_per_decade: DEFAULT_FLUCTUATORS_PER_DECADE,
        }
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        let bad = |m: &str| Err(NoiseError::InvalidSpec(m.to_string()));
        match *self {
            NoiseSpec::None => Ok(()),
            NoiseSpec::StaticGaussian { sigma } => {
                if !(sigma.is_finite() && sigma >= 0.0) {
                    return bad("sigma must be finite and non-negative");
                }
                Ok(())
            }
            NoiseSpec::SingleRtn { rate, amplitude } => {
                if !(rate.is_finite() && rate >= 0.0) {
                    return bad("rtn rate must be finite and non-negative");
                }
                if !(amplitude.is_finite() && amplitude >= 0.0) {
                    return bad("rtn amplitude must be finite and non-negative");
                }
                Ok(())
            }
            NoiseSpec::OneOverF {
                sigma,
                gamma_min,
                gamma_max,
                fluctuators_per_decade,
            } => {
                if !(sigma.is_finite() && sigma >= 0.0) {
                    return bad("sigma must be finite and non-negative");
                }
                if !(gamma_min.is_finite() && gamma_min > 0.0 && gamma_max.is_finite()) {
                    return bad("switching rates must be positive and finite");
                }
                if gamma_min > gamma_max {
                    return bad("gamma_min must not exceed gamma_max");
                }
                if fluctuators_per_decade < 1 {
                    return bad("fluctuators_per_decade must be at least 1");
                }
                Ok(())
            }
        }
    }

    /// Standard deviation of `x` at any fixed time.
    pub fn std_dev(&self) -> f64 {
        match *self {
            NoiseSpec::None => 0.0,
            NoiseSpec::StaticGaussian { sigma } | NoiseSpec::OneOverF { sigma, .. } => sigma,
            NoiseSpec::SingleRtn { amplitude, .. } => 0.5 * amplitude,
        }
    }

    /// Number of fluctuators used for 1/f synthesis; `None` for other variants.
    ///
    /// `ceil(per_decade · log₁₀(γ_M/γ_m))`, never fewer than one decade's
    /// worth so a degenerate band still gives a near-Gaussian static value.
    pub fn fluctuator_count(&self) -> Option<usize> {
        match *self {
            NoiseSpec::OneOverF {
                gamma_min,
                gamma_max,
                fluctuators_per_decade,
                ..
            } => {
                let decades = (gamma_max / gamma_min).log10().max(0.0);
                let per = fluctuators_per_decade as f64;
                Some(((per * decades).ceil() as usize).max(fluctuators_per_decade as usize))
            }
            _ => None,
        }
    }

    /// Draw one realization covering `[0, duration]`.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        duration: f64,
        rng: &mut R,
    ) -> Result<PiecewiseConstantPath, NoiseError> {
        match self {
            NoiseSpec::None => Ok(PiecewiseConstantPath::constant(0.0, duration)),
            NoiseSpec::StaticGaussian { .. } => sample_static_gaussian(self, duration, rng),
            NoiseSpec::SingleRtn { .. } => sample_single_rtn(self, duration, rng),
            NoiseSpec::OneOverF { .. } => sample_one_over_f(self, duration, rng),
        }
    }
}

/// One realization of `x(t)` on `[0, duration]`.
///
/// Segment `k` starts at `breakpoints[k]` and holds `values[k]` until the
/// next breakpoint (or `duration`).
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstantPath {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    duration: f64,
}

impl PiecewiseConstantPath {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>, duration: f64) -> Result<Self, NoiseError> {
        let invalid = |m: &str| Err(NoiseError::InvalidPath(m.to_string()));
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return invalid("need one value per breakpoint and at least one segment");
        }
        if breakpoints[0] != 0.0 {
            return invalid("first segment must start at 0");
        }
        if !(duration.is_finite() && duration >= 0.0) {
            return invalid("duration must be finite and non-negative");
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("breakpoints must be strictly ascending");
        }
        if breakpoints.last().is_some_and(|&t| t > duration && breakpoints.len() > 1) {
            return invalid("breakpoints must lie inside [0, duration]");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("values must be finite");
        }
        Ok(PiecewiseConstantPath {
            breakpoints,
            values,
            duration,
        })
    }

    pub fn constant(value: f64, duration: f64) -> Self {
        PiecewiseConstantPath {
            breakpoints: vec![0.0],
            values: vec![value],
            duration,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn segment_count(&self) -> usize {
        self.values.len()
    }

    /// Value in force at time `t` (right-continuous).
    pub fn value_at(&self, t: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|&b| b <= t);
        self.values[idx.saturating_sub(1)]
    }

    /// `(start, end, value)` for every segment.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.values.len()).map(move |k| {
            let end = self
                .breakpoints
                .get(k + 1)
                .copied()
                .unwrap_or(self.duration);
            (self.breakpoints[k], end, self.values[k])
        })
    }

    /// Debug dump: CSV with columns `t_start,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t_start", "value"])?;
        for (t, v) in self.breakpoints.iter().zip(&self.values) {
            w.write_record([t.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn random_sign<R: Rng + ?Sized>(rng: &mut R) -> bool {
    rng.random::<bool>()
}

/// Poisson flip times of one fluctuator in `(0, duration)`.
fn flip_times<R: Rng + ?Sized>(rate: f64, duration: f64, rng: &mut R, out: &mut Vec<f64>) {
    if rate <= 0.0 {
        return;
    }
    let exp = Exp::new(rate).expect("positive rate");
    let mut t = 0.0;
    loop {
        t += exp.sample(rng);
        if t >= duration {
            break;
        }
        out.push(t);
    }
}

/// 1/f noise as a sum of `N_f` telegraph fluctuators.
///
/// Each fluctuator has rate `γ = γ_m (γ_M/γ_m)^u` with `u` uniform (density
/// ∝ 1/γ), amplitude `±Σ/√N_f` and an equiprobable initial sign, so the sum
/// is stationary with variance Σ².
pub fn sample_one_over_f<R: Rng + ?Sized>(
    spec: &NoiseSpec,
    duration: f64,
    rng: &mut R,
) -> Result<PiecewiseConstantPath, NoiseError> {
    let NoiseSpec::OneOverF {
        sigma,
        gamma_min,
        gamma_max,
        ..
    } = *spec
    else {
        return Err(NoiseError::InvalidSpec(
            "1/f sampler needs a OneOverF spec".into(),
        ));
    };
    spec.validate()?;
    let count = spec.fluctuator_count().expect("OneOverF has a count");
    let half_amplitude = sigma / (count as f64).sqrt();
    let log_ratio = (gamma_max / gamma_min).ln();

    // (time, fluctuator) flip events; each fluctuator contributes its own
    // ascending run, merged by a single sort.
    let mut positive = vec![false; count];
    let mut events: Vec<(f64, u32)> = Vec::new();
    let mut scratch = Vec::new();
    for (k, sign) in positive.iter_mut().enumerate() {
        let u: f64 = rng.random();
        let rate = gamma_min * (u * log_ratio).exp();
        *sign = random_sign(rng);
        scratch.clear();
        flip_times(rate, duration, rng, &mut scratch);
        events.extend(scratch.iter().map(|&t| (t, k as u32)));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut up = positive.iter().filter(|&&s| s).count() as i64;
    let level = |up: i64| half_amplitude * (2 * up - count as i64) as f64;
    let mut breakpoints = Vec::with_capacity(events.len() + 1);
    let mut values = Vec::with_capacity(events.len() + 1);
    breakpoints.push(0.0);
    values.push(level(up));
    let mut i = 0;
    while i < events.len() {
        let t = events[i].0;
        // Flips sharing an instant land in one breakpoint.
        while i < events.len() && events[i].0 == t {
            let k = events[i].1 as usize;
            up += if positive[k] { -1 } else { 1 };
            positive[k] = !positive[k];
            i += 1;
        }
        if t > 0.0 {
            breakpoints.push(t);
            values.push(level(up));
        } else {
            values[0] = level(up);
        }
    }
    Ok(PiecewiseConstantPath {
        breakpoints,
        values,
        duration,
    })
}

/// Symmetric telegraph process `±v/2` flipping at rate `γ₀`.
pub fn sample_single_rtn<R: Rng + ?Sized>(
    spec: &NoiseSpec,
    duration: f64,
    rng: &mut R,
) -> Result<PiecewiseConstantPath, NoiseError> {
    let NoiseSpec::SingleRtn { rate, amplitude } = *spec else {
        return Err(NoiseError::InvalidSpec(
            "telegraph sampler needs a SingleRtn spec".into(),
        ));
    };
    spec.validate()?;
    let half = 0.5 * amplitude;
    let mut value = if random_sign(rng) { half } else { -half };
    let mut flips = Vec::new();
    flip_times(rate, duration, rng, &mut flips);
    let mut breakpoints = Vec::with_capacity(flips.len() + 1);
    let mut values = Vec::with_capacity(flips.len() + 1);
    breakpoints.push(0.0);
    values.push(value);
    for t in flips {
        value = -value;
        breakpoints.push(t);
        values.push(value);
    }
    Ok(PiecewiseConstantPath {
        breakpoints,
        values,
        duration,
    })
}

/// One constant value drawn from `N(0, Σ²)`.
pub fn sample_static_gaussian<R: Rng + ?Sized>(
    spec: &NoiseSpec,
    duration: f64,
    rng: &mut R,
) -> Result<PiecewiseConstantPath, NoiseError> {
    let NoiseSpec::StaticGaussian { sigma } = *spec else {
        return Err(NoiseError::InvalidSpec(
            "static sampler needs a StaticGaussian spec".into(),
        ));
    };
    spec.validate()?;
    let normal = Normal::new(0.0, sigma).map_err(|e| NoiseError::InvalidSpec(e.to_string()))?;
    Ok(PiecewiseConstantPath::constant(normal.sample(rng), duration))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn mean_and_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, (var / n).sqrt())
    }

    #[test]
    fn zero_sigma_gives_zero_path() {
        let spec = NoiseSpec::one_over_f(0.0, 1.0, 1e6);
        let p = spec.sample(1e-3, &mut rng(1)).unwrap();
        assert!(p.values().iter().all(|&v| v == 0.0));
        let p = NoiseSpec::StaticGaussian { sigma: 0.0 }
            .sample(1e-9, &mut rng(1))
            .unwrap();
        assert_eq!(p.values(), &[0.0]);
    }

    #[test]
    fn wrong_variant_is_rejected() {
        let spec = NoiseSpec::StaticGaussian { sigma: 1.0 };
        assert!(matches!(
            sample_one_over_f(&spec, 1.0, &mut rng(0)),
            Err(NoiseError::InvalidSpec(_))
        ));
        assert!(sample_single_rtn(&spec, 1.0, &mut rng(0)).is_err());
        let rtn = NoiseSpec::SingleRtn {
            rate: 1.0,
            amplitude: 1.0,
        };
        assert!(sample_static_gaussian(&rtn, 1.0, &mut rng(0)).is_err());
        let inverted = NoiseSpec::one_over_f(1.0, 10.0, 1.0);
        assert!(sample_one_over_f(&inverted, 1.0, &mut rng(0)).is_err());
    }

    #[test]
    fn fluctuator_count_rule() {
        assert_eq!(NoiseSpec::one_over_f(1.0, 1.0, 1e6).fluctuator_count(), Some(120));
        assert_eq!(NoiseSpec::one_over_f(1.0, 1.0, 1.0).fluctuator_count(), Some(20));
        let spec = NoiseSpec::OneOverF {
            sigma: 1.0,
            gamma_min: 1.0,
            gamma_max: 3.0,
            fluctuators_per_decade: 2,
        };
        assert_eq!(spec.fluctuator_count(), Some(2));
    }

    #[test]
    fn degenerate_band_is_static_with_variance_sigma_squared() {
        let sigma = 1e9;
        let spec = NoiseSpec::one_over_f(sigma, 1.0, 1.0);
        let mut r = rng(7);
        let mut xs = Vec::new();
        for _ in 0..20_000 {
            let p = spec.sample(3e-10, &mut r).unwrap();
            assert_eq!(p.segment_count(), 1);
            xs.push(p.values()[0]);
        }
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let (m2, se) = mean_and_se(&sq);
        assert!((m2 - sigma * sigma).abs() < 3.0 * se, "{m2} vs {}", sigma * sigma);
        let (m, se) = mean_and_se(&xs);
        assert!(m.abs() < 3.0 * se);
    }

    #[test]
    fn one_over_f_variance_budget_and_stationarity() {
        let sigma = 2.0;
        let spec = NoiseSpec::one_over_f(sigma, 1.0, 1e3);
        let duration = 0.5;
        let probes = [0.0, 0.1, 0.37, 0.49];
        let mut r = rng(11);
        let mut at: Vec<Vec<f64>> = vec![Vec::new(); probes.len()];
        for _ in 0..10_000 {
            let p = spec.sample(duration, &mut r).unwrap();
            for (slot, &t) in at.iter_mut().zip(&probes) {
                slot.push(p.value_at(t));
            }
        }
        let sq: Vec<f64> = at[0].iter().map(|x| x * x).collect();
        let (m2, se) = mean_and_se(&sq);
        assert!((m2 - sigma * sigma).abs() < 3.0 * se);
        for xs in &at {
            let (m, se) = mean_and_se(xs);
            assert!(m.abs() < 3.0 * se, "mean {m} se {se}");
        }
    }

    #[test]
    fn rtn_with_zero_rate_is_constant_and_balanced() {
        let spec = NoiseSpec::SingleRtn {
            rate: 0.0,
            amplitude: 4.0,
        };
        let mut r = rng(3);
        let mut plus = 0;
        for _ in 0..2000 {
            let p = spec.sample(10.0, &mut r).unwrap();
            assert_eq!(p.segment_count(), 1);
            assert_eq!(p.values()[0].abs(), 2.0);
            if p.values()[0] > 0.0 {
                plus += 1;
            }
        }
        // Binomial(2000, 1/2): sd ≈ 22.
        assert!((plus as i64 - 1000).abs() < 90);
    }

    #[test]
    fn rtn_moments_and_autocorrelation() {
        let v = 2.0;
        let rate = 1.0;
        let spec = NoiseSpec::SingleRtn { rate, amplitude: v };
        let lags = [0.1f64, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0];
        let mut r = rng(5);
        let n = 100_000;
        let mut x0 = Vec::with_capacity(n);
        let mut products: Vec<Vec<f64>> = vec![Vec::with_capacity(n); lags.len()];
        for _ in 0..n {
            let p = spec.sample(2.0, &mut r).unwrap();
            let a = p.value_at(0.0);
            x0.push(a);
            for (slot, &t) in products.iter_mut().zip(&lags) {
                slot.push(a * p.value_at(t.min(2.0 - 1e-12)));
            }
        }
        let (m, se) = mean_and_se(&x0);
        assert!(m.abs() < 3.0 * se);
        let sq: Vec<f64> = x0.iter().map(|x| x * x).collect();
        let (m2, _) = mean_and_se(&sq);
        assert!((m2 - v * v / 4.0).abs() < 1e-12);
        // Weighted fit of ln C(t) = ln a − b t over the lags.
        let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (xs, &t) in products.iter().zip(&lags) {
            let (c, se) = mean_and_se(xs);
            let w = (c / se).powi(2);
            let y = c.ln();
            sw += w;
            sx += w * t;
            sy += w * y;
            sxx += w * t * t;
            sxy += w * t * y;
        }
        let b = -(sw * sxy - sx * sy) / (sw * sxx - sx * sx);
        let a = ((sy + b * sx) / sw).exp();
        assert!((b / (2.0 * rate) - 1.0).abs() < 0.05, "decay {b}");
        assert!((a / (v * v / 4.0) - 1.0).abs() < 0.05, "prefactor {a}");
    }

    #[test]
    fn static_gaussian_std() {
        let sigma = 3.5e8;
        let spec = NoiseSpec::StaticGaussian { sigma };
        let mut r = rng(9);
        let xs: Vec<f64> = (0..1_000_000)
            .map(|_| spec.sample(1e-10, &mut r).unwrap().values()[0])
            .collect();
        let n = xs.len() as f64;
        let var = xs.iter().map(|x| x * x).sum::<f64>() / n;
        assert!((var.sqrt() - sigma).abs() / sigma < 0.005);
        let k4 = fourth_cumulant_estimate(&xs).unwrap();
        assert!(k4.value.abs() < 3.0 * k4.std_error);
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = NoiseSpec::one_over_f(1e9, 1.0, 1e10);
        let a = spec.sample(3e-10, &mut rng(42)).unwrap();
        let b = spec.sample(3e-10, &mut rng(42)).unwrap();
        assert_eq!(a, b);
        assert!(a.breakpoints().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn path_validation_and_lookup() {
        assert!(PiecewiseConstantPath::new(vec![0.0, 1.0, 1.0], vec![1.0, 2.0, 3.0], 2.0).is_err());
        assert!(PiecewiseConstantPath::new(vec![0.5], vec![1.0], 2.0).is_err());
        assert!(PiecewiseConstantPath::new(vec![0.0], vec![f64::NAN], 2.0).is_err());
        let p = PiecewiseConstantPath::new(vec![0.0, 1.0], vec![3.0, -3.0], 2.0).unwrap();
        assert_eq!(p.value_at(0.5), 3.0);
        assert_eq!(p.value_at(1.0), -3.0);
        let segs: Vec<_> = p.segments().collect();
        assert_eq!(segs, vec![(0.0, 1.0, 3.0), (1.0, 2.0, -3.0)]);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t_start,value\n0,3\n1,-3\n");
    }
}

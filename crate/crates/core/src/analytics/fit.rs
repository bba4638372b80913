//! Weighted power-law regression in log-log space.

use serde::{Deserialize, Serialize};

use super::AnalyticsError;

pub const MIN_FIT_POINTS: usize = 4;

/// Relative standard errors below this are treated as this value.
const REL_SE_FLOOR: f64 = 1.5e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitPoint {
    pub n: f64,
    pub mean_error: f64,
    pub std_error: f64,
}

impl FitPoint {
    pub fn new(n: f64, mean_error: f64, std_error: f64) -> Self {
        FitPoint {
            n,
            mean_error,
            std_error,
        }
    }
}

/// `ε ≈ exp(log_prefactor) · n^{−alpha}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub alpha: f64,
    pub stderr_alpha: f64,
    pub log_prefactor: f64,
    pub n_range: (f64, f64),
    pub points: usize,
    /// RMS residual of `ln ε`.
    pub residual: f64,
    /// Covariance of `(alpha, log_prefactor)`, scaled by the reduced χ².
    pub covariance: [[f64; 2]; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub alpha: f64,
    pub stderr_alpha: f64,
    pub prefactor: f64,
    pub n_range: [f64; 2],
    pub residual: f64,
}

impl ScalingFit {
    pub fn prefactor(&self) -> f64 {
        self.log_prefactor.exp()
    }

    pub fn report(&self) -> FitReport {
        FitReport {
            alpha: self.alpha,
            stderr_alpha: self.stderr_alpha,
            prefactor: self.prefactor(),
            n_range: [self.n_range.0, self.n_range.1],
            residual: self.residual,
        }
    }

    pub fn predict(&self, n: f64) -> f64 {
        (self.log_prefactor - self.alpha * n.ln()).exp()
    }
}

/// Weighted least squares of `ln ε` on `ln n` over points with `n ≥ n_min`.
///
/// Weights are `1/(σ_ε/ε)²`, the inverse variance of `ln ε` to first order.
pub fn fit_power_law(points: &[FitPoint], n_min: f64) -> Result<ScalingFit, AnalyticsError> {
    let used: Vec<&FitPoint> = points.iter().filter(|pt| pt.n >= n_min).collect();
    if used.len() < MIN_FIT_POINTS {
        return Err(AnalyticsError::InsufficientData {
            required: MIN_FIT_POINTS,
            got: used.len(),
        });
    }
    if let Some(bad) = used.iter().find(|pt| !(pt.mean_error > 0.0)) {
        return Err(AnalyticsError::NonPositiveError {
            n: bad.n,
            value: bad.mean_error,
        });
    }
    if used.iter().any(|pt| !(pt.n > 0.0) || !pt.std_error.is_finite()) {
        return Err(AnalyticsError::InvalidArgument(
            "n must be positive and standard errors finite".into(),
        ));
    }
    let rows: Vec<(f64, f64, f64)> = used
        .iter()
        .map(|pt| {
            let rel = (pt.std_error.abs() / pt.mean_error).max(REL_SE_FLOOR);
            (pt.n.ln(), pt.mean_error.ln(), 1.0 / (rel * rel))
        })
        .collect();
    // Centre the regressor for conditioning.
    let sw: f64 = rows.iter().map(|r| r.2).sum();
    let xm = rows.iter().map(|r| r.2 * r.0).sum::<f64>() / sw;
    let ym = rows.iter().map(|r| r.2 * r.1).sum::<f64>() / sw;
    let sxx: f64 = rows.iter().map(|r| r.2 * (r.0 - xm).powi(2)).sum();
    let sxy: f64 = rows.iter().map(|r| r.2 * (r.0 - xm) * (r.1 - ym)).sum();
    if !(sxx > 0.0) {
        return Err(AnalyticsError::InvalidArgument(
            "need at least two distinct n values".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let resid: Vec<f64> = rows.iter().map(|r| r.1 - intercept - slope * r.0).collect();
    let chi2: f64 = rows.iter().zip(&resid).map(|(r, e)| r.2 * e * e).sum();
    let dof = (rows.len() - 2) as f64;
    let scale = chi2 / dof;
    let var_slope = scale / sxx;
    let var_intercept = scale * (1.0 / sw + xm * xm / sxx);
    // alpha = −slope, so its covariance with the intercept changes sign.
    let cov = scale * xm / sxx;
    let residual = (resid.iter().map(|e| e * e).sum::<f64>() / rows.len() as f64).sqrt();
    let ns = used.iter().map(|pt| pt.n);
    let n_range = (
        ns.clone().fold(f64::INFINITY, f64::min),
        ns.fold(f64::NEG_INFINITY, f64::max),
    );
    Ok(ScalingFit {
        alpha: -slope,
        stderr_alpha: var_slope.sqrt(),
        log_prefactor: intercept,
        n_range,
        points: rows.len(),
        residual,
        covariance: [[var_slope, cov], [cov, var_intercept]],
    })
}

/// Unweighted least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64, AnalyticsError> {
    if xs.len() != ys.len() {
        return Err(AnalyticsError::InvalidArgument("length mismatch".into()));
    }
    if xs.len() < 2 {
        return Err(AnalyticsError::InsufficientData {
            required: 2,
            got: xs.len(),
        });
    }
    if let Some((x, y)) = xs.iter().zip(ys).find(|(x, y)| !(**x > 0.0 && **y > 0.0)) {
        return Err(AnalyticsError::NonPositiveError { n: *x, value: *y });
    }
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(AnalyticsError::InvalidArgument("need distinct x values".into()));
    }
    Ok(sxy / sxx)
}

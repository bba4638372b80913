//! Result tables, run manifests and file writing.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ensemble::SweepPoint;
use crate::noise::NoiseSpec;
use crate::sequences::sequence_label;

use super::config::ExperimentConfig;
use super::CliError;

pub const RESULTS_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const PLOT_FILE: &str = "plot.svg";

/// One CSV row. For telegraph noise the sigma columns carry the amplitude
/// `v` and both gamma columns the switching rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: u32,
    pub mean_error: f64,
    pub std_error: f64,
    #[serde(rename = "N")]
    pub trajectories: usize,
    pub seed: u64,
    pub sequence: String,
    pub axis: String,
    pub omega: f64,
    pub omega_c: f64,
    pub sigma1: Option<f64>,
    pub sigma2: Option<f64>,
    pub gamma_min: Option<f64>,
    pub gamma_max: Option<f64>,
}

fn scale(spec: &NoiseSpec) -> Option<f64> {
    match *spec {
        NoiseSpec::None => None,
        NoiseSpec::StaticGaussian { sigma } | NoiseSpec::OneOverF { sigma, .. } => Some(sigma),
        NoiseSpec::SingleRtn { amplitude, .. } => Some(amplitude),
    }
}

fn band(a: &NoiseSpec, b: &NoiseSpec) -> (Option<f64>, Option<f64>) {
    for spec in [a, b] {
        match *spec {
            NoiseSpec::OneOverF {
                gamma_min,
                gamma_max,
                ..
            } => return (Some(gamma_min), Some(gamma_max)),
            NoiseSpec::SingleRtn { rate, .. } => return (Some(rate), Some(rate)),
            _ => {}
        }
    }
    (None, None)
}

impl ResultRow {
    /// Row for a sweep point; the label comes from the swept sequence so
    /// the `n = 0` baseline shares its series.
    pub fn from_point(point: &SweepPoint, cfg: &ExperimentConfig) -> Self {
        let c = &point.config;
        let (gamma_min, gamma_max) = band(&c.noise1, &c.noise2);
        ResultRow {
            n: c.sequence.pairs(),
            mean_error: point.estimate.mean,
            std_error: point.estimate.std_error,
            trajectories: point.estimate.trajectories,
            seed: point.estimate.master_seed,
            sequence: sequence_label(cfg.sequence.kind, cfg.sequence.axis).to_string(),
            axis: cfg.sequence.axis.to_string(),
            omega: c.gate.omega(),
            omega_c: c.gate.omega_c(),
            sigma1: scale(&c.noise1),
            sigma2: scale(&c.noise2),
            gamma_min,
            gamma_max,
        }
    }

    /// Everything except `n` and the estimate: rows sharing it form one curve.
    pub fn series_key(&self) -> String {
        let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{} {} omega={} omega_c={} sigma1={} sigma2={} gamma=[{},{}]",
            self.sequence,
            self.axis,
            self.omega,
            self.omega_c,
            f(self.sigma1),
            f(self.sigma2),
            f(self.gamma_min),
            f(self.gamma_max)
        )
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| io_error(path, e))
}

/// Serializes rows to CSV with the fixed header.
pub fn results_csv(rows: &[ResultRow]) -> Result<Vec<u8>, CliError> {
    if rows.is_empty() {
        return Err(CliError::Validation {
            key: "results".into(),
            message: "refusing to write an empty table".into(),
        });
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Run(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Run(e.to_string()))
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_error(path, e))?;
    r.deserialize()
        .map(|row| {
            row.map_err(|e| CliError::Validation {
                key: "input".into(),
                message: format!("{}: {e}", path.display()),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Unit the original document was written in; values below are rad/s.
    pub input_unit: String,
    pub resolved_config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
}

impl Manifest {
    pub fn new(subcommand: &str, input_unit: &str, resolved: &ExperimentConfig) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            input_unit: input_unit.to_string(),
            resolved_config: resolved.clone(),
            input: None,
        }
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("manifest serializes");
        out.push(b'\n');
        out
    }
}

pub fn output_dir(flag: Option<&Path>, cfg: &ExperimentConfig) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(d) = &cfg.output.directory {
        return PathBuf::from(d);
    }
    std::env::var_os(super::config::OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(super::config::DEFAULT_OUTPUT_DIR))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: u32) -> ResultRow {
        ResultRow {
            n,
            mean_error: 1.2345678901234567e-5,
            std_error: 3.0e-7,
            trajectories: 10_000,
            seed: 42,
            sequence: "CPMG".into(),
            axis: "y".into(),
            omega: 1e11,
            omega_c: 5e9,
            sigma1: Some(1e9),
            sigma2: Some(0.0),
            gamma_min: None,
            gamma_max: None,
        }
    }

    #[test]
    fn header_contract() {
        let bytes = results_csv(&[row(3)]).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "n,mean_error,std_error,N,seed,sequence,axis,omega,omega_c,sigma1,sigma2,gamma_min,gamma_max"
        );
    }

    #[test]
    fn single_row_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_bytes(&path, &results_csv(&[row(3)]).unwrap()).unwrap();
        let back = read_results_csv(&path).unwrap();
        assert_eq!(back, vec![row(3)]);
    }

    #[test]
    fn empty_table_rejected() {
        assert!(matches!(results_csv(&[]), Err(CliError::Validation { .. })));
    }

    #[test]
    fn quoting_is_rfc_style() {
        let mut r = row(1);
        r.sequence = "a,\"b\"".into();
        let text = String::from_utf8(results_csv(&[r]).unwrap()).unwrap();
        assert!(text.contains("\"a,\"\"b\"\"\""));
    }
}

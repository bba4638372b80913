//! Experiment configuration documents, dotted-path overrides and validation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ensemble::{CutoffMode, RunConfig, SeedPolicy};
use crate::model::GateParams;
use crate::noise::{NoiseSpec, DEFAULT_FLUCTUATORS_PER_DECADE};
use crate::sequences::{PulseAxis, SequenceKind, SequenceSpec};

use super::CliError;

pub const OUTPUT_DIR_ENV: &str = "DDGATE_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "ddgate-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Unit {
    #[default]
    #[serde(rename = "rad/s")]
    RadPerSecond,
    #[serde(rename = "GHz")]
    GHz,
}

impl Unit {
    fn factor(self) -> f64 {
        match self {
            Unit::RadPerSecond => 1.0,
            Unit::GHz => 2.0 * PI * 1e9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Unit of `omega`, `omega_c`, the sigmas and telegraph amplitudes.
    pub unit: Unit,
    pub gate: GateSection,
    pub noise: NoiseSection,
    pub sequence: SequenceSection,
    pub run: RunSection,
    pub output: OutputSection,
    pub sweep: SweepSection,
    pub spectrum: SpectrumSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateSection {
    pub omega: f64,
    pub omega_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseVariant {
    None,
    StaticGaussian,
    SingleRtn,
    OneOverF,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub variant: NoiseVariant,
    pub sigma1: f64,
    pub sigma2: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub fluctuators_per_decade: u32,
    pub rtn_rate: f64,
    pub rtn_amplitude1: f64,
    pub rtn_amplitude2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SequenceSection {
    pub kind: SequenceKind,
    pub axis: PulseAxis,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs_list: Option<Vec<u32>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedPolicyName {
    #[default]
    Decorrelated,
    Common,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub trajectories: usize,
    pub seed: u64,
    pub seed_policy: SeedPolicyName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directory: Option<String>,
    pub formats: Vec<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffModeName {
    #[default]
    FixedSigma,
    FixedAmplitude,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub gamma_max_list: Vec<f64>,
    pub cutoff_mode: CutoffModeName,
    pub sigma_values: Vec<f64>,
    pub omega_c_values: Vec<f64>,
    /// Smallest `n` entering a power-law fit.
    pub n_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub paths: usize,
    pub duration: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            unit: Unit::RadPerSecond,
            gate: GateSection::default(),
            noise: NoiseSection::default(),
            sequence: SequenceSection::default(),
            run: RunSection::default(),
            output: OutputSection::default(),
            sweep: SweepSection::default(),
            spectrum: SpectrumSection::default(),
        }
    }
}

impl Default for GateSection {
    fn default() -> Self {
        GateSection {
            omega: 1e11,
            omega_c: 5e9,
        }
    }
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            variant: NoiseVariant::OneOverF,
            sigma1: 1e9,
            sigma2: 1e9,
            gamma_min: 1.0,
            gamma_max: 1e6,
            fluctuators_per_decade: DEFAULT_FLUCTUATORS_PER_DECADE,
            rtn_rate: 0.0,
            rtn_amplitude1: 1e10,
            rtn_amplitude2: 1e10,
        }
    }
}

impl Default for SequenceSection {
    fn default() -> Self {
        SequenceSection {
            kind: SequenceKind::Pdd,
            axis: PulseAxis::Z,
            pairs: None,
            pairs_list: None,
        }
    }
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            trajectories: crate::ensemble::DEFAULT_TRAJECTORIES,
            seed: 0,
            seed_policy: SeedPolicyName::Decorrelated,
        }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: None,
            formats: vec![Format::Csv, Format::Svg],
        }
    }
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            gamma_max_list: vec![1e6, 1e7, 1e8, 1e9, 1e10],
            cutoff_mode: CutoffModeName::FixedSigma,
            sigma_values: vec![2.5e8, 5e8, 1e9, 2e9],
            omega_c_values: vec![2.5e9, 5e9, 1e10],
            n_min: 10.0,
        }
    }
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection {
            paths: 200,
            duration: 0.01,
            omega_min: 1e4,
            omega_max: 1e5,
            points: 16,
        }
    }
}

/// Sets `path` (dotted) in a JSON document, creating objects on the way.
///
/// The value is parsed as JSON when possible and kept as a string otherwise.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment.split_once('=').ok_or_else(|| CliError::Config {
        key: assignment.to_string(),
        message: "override must look like key.path=value".into(),
    })?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config {
            key: path.to_string(),
            message: "empty key in override path".into(),
        });
    }
    for (i, key) in keys.iter().enumerate() {
        if !node.is_object() {
            return Err(CliError::Config {
                key: keys[..i].join("."),
                message: "cannot descend into a non-object value".into(),
            });
        }
        let map = node.as_object_mut().expect("checked above");
        if i + 1 == keys.len() {
            map.insert(key.to_string(), value);
            return Ok(());
        }
        node = map
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// Parses a config document; a run manifest is accepted via its resolved config.
pub fn parse_document(mut doc: Value, overrides: &[String]) -> Result<ExperimentConfig, CliError> {
    if let Some(resolved) = doc.get("resolved_config").cloned() {
        doc = resolved;
    }
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let cfg: ExperimentConfig =
        serde_path_to_error::deserialize(doc).map_err(|e| CliError::Config {
            key: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    Ok(cfg)
}

fn invalid(key: &str, message: impl Into<String>) -> CliError {
    CliError::Validation {
        key: key.to_string(),
        message: message.into(),
    }
}

fn positive(key: &str, v: f64) -> Result<(), CliError> {
    if !(v.is_finite() && v > 0.0) {
        return Err(invalid(key, format!("must be positive and finite, got {v}")));
    }
    Ok(())
}

fn non_negative(key: &str, v: f64) -> Result<(), CliError> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(invalid(key, format!("must be non-negative and finite, got {v}")));
    }
    Ok(())
}

fn positive_list(key: &str, vs: &[f64]) -> Result<(), CliError> {
    if vs.is_empty() {
        return Err(invalid(key, "must not be empty"));
    }
    for (i, &v) in vs.iter().enumerate() {
        positive(&format!("{key}[{i}]"), v)?;
    }
    Ok(())
}

impl ExperimentConfig {
    /// Converts to rad/s and fills implicit choices, so the result reruns identically.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut r = self.clone();
        let f = self.unit.factor();
        r.unit = Unit::RadPerSecond;
        r.gate.omega *= f;
        r.gate.omega_c *= f;
        r.noise.sigma1 *= f;
        r.noise.sigma2 *= f;
        r.noise.rtn_amplitude1 *= f;
        r.noise.rtn_amplitude2 *= f;
        r.sweep.sigma_values.iter_mut().for_each(|v| *v *= f);
        r.sweep.omega_c_values.iter_mut().for_each(|v| *v *= f);
        let list = match (&self.sequence.pairs_list, self.sequence.pairs) {
            (Some(l), _) => l.clone(),
            (None, Some(n)) => vec![n],
            (None, None) if self.sequence.kind == SequenceKind::None => vec![0],
            (None, None) => (0..=50).collect(),
        };
        r.sequence.pairs = None;
        r.sequence.pairs_list = Some(list);
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        positive("gate.omega", self.gate.omega)?;
        positive("gate.omega_c", self.gate.omega_c)?;
        let n = &self.noise;
        non_negative("noise.sigma1", n.sigma1)?;
        non_negative("noise.sigma2", n.sigma2)?;
        positive("noise.gamma_min", n.gamma_min)?;
        positive("noise.gamma_max", n.gamma_max)?;
        if n.gamma_max < n.gamma_min {
            return Err(invalid("noise.gamma_max", "must not be below gamma_min"));
        }
        if n.fluctuators_per_decade < 1 {
            return Err(invalid("noise.fluctuators_per_decade", "must be at least 1"));
        }
        non_negative("noise.rtn_rate", n.rtn_rate)?;
        non_negative("noise.rtn_amplitude1", n.rtn_amplitude1)?;
        non_negative("noise.rtn_amplitude2", n.rtn_amplitude2)?;
        if let Some(list) = &self.sequence.pairs_list {
            if list.is_empty() {
                return Err(invalid("sequence.pairs_list", "must not be empty"));
            }
            if self.sequence.kind == SequenceKind::None && list.iter().any(|&p| p > 0) {
                return Err(invalid("sequence.pairs_list", "kind none allows only n = 0"));
            }
        }
        if self.sequence.kind == SequenceKind::None && self.sequence.pairs.is_some_and(|p| p > 0) {
            return Err(invalid("sequence.pairs", "kind none allows only n = 0"));
        }
        if self.run.trajectories < 1 {
            return Err(invalid("run.trajectories", "must be at least 1"));
        }
        positive_list("sweep.gamma_max_list", &self.sweep.gamma_max_list)?;
        if !self.sweep.gamma_max_list.windows(2).all(|w| w[0] < w[1]) {
            return Err(invalid("sweep.gamma_max_list", "must be strictly ascending"));
        }
        positive_list("sweep.sigma_values", &self.sweep.sigma_values)?;
        positive_list("sweep.omega_c_values", &self.sweep.omega_c_values)?;
        positive("sweep.n_min", self.sweep.n_min)?;
        if self.spectrum.paths < crate::noise::MIN_PSD_PATHS {
            return Err(invalid(
                "spectrum.paths",
                format!("must be at least {}", crate::noise::MIN_PSD_PATHS),
            ));
        }
        positive("spectrum.duration", self.spectrum.duration)?;
        positive("spectrum.omega_min", self.spectrum.omega_min)?;
        positive("spectrum.omega_max", self.spectrum.omega_max)?;
        if self.spectrum.omega_max <= self.spectrum.omega_min {
            return Err(invalid("spectrum.omega_max", "must exceed omega_min"));
        }
        if self.spectrum.points < 2 {
            return Err(invalid("spectrum.points", "must be at least 2"));
        }
        Ok(())
    }

    pub fn pairs_list(&self) -> Vec<u32> {
        self.sequence.pairs_list.clone().unwrap_or_default()
    }

    pub fn gate_params(&self) -> Result<GateParams, CliError> {
        GateParams::new(self.gate.omega, self.gate.omega_c)
            .map_err(|e| invalid("gate", e.to_string()))
    }

    pub fn noise_specs(&self) -> (NoiseSpec, NoiseSpec) {
        let n = &self.noise;
        let one = |sigma: f64, amplitude: f64| match n.variant {
            NoiseVariant::None => NoiseSpec::None,
            NoiseVariant::StaticGaussian => NoiseSpec::StaticGaussian { sigma },
            NoiseVariant::SingleRtn => NoiseSpec::SingleRtn {
                rate: n.rtn_rate,
                amplitude,
            },
            NoiseVariant::OneOverF => NoiseSpec::OneOverF {
                sigma,
                gamma_min: n.gamma_min,
                gamma_max: n.gamma_max,
                fluctuators_per_decade: n.fluctuators_per_decade,
            },
        };
        (one(n.sigma1, n.rtn_amplitude1), one(n.sigma2, n.rtn_amplitude2))
    }

    pub fn cutoff_mode(&self) -> CutoffMode {
        match self.sweep.cutoff_mode {
            CutoffModeName::FixedSigma => CutoffMode::FixedSigma,
            CutoffModeName::FixedAmplitude => CutoffMode::FixedAmplitude,
        }
    }

    /// Ensemble configuration at `n` pairs.
    pub fn run_config(&self, n: u32) -> Result<RunConfig, CliError> {
        let (n1, n2) = self.noise_specs();
        let seq = SequenceSpec::with_pairs(self.sequence.kind, self.sequence.axis, n)
            .map_err(|e| invalid("sequence.pairs_list", e.to_string()))?;
        let policy = match self.run.seed_policy {
            SeedPolicyName::Decorrelated => SeedPolicy::Decorrelated,
            SeedPolicyName::Common => SeedPolicy::Common,
        };
        Ok(RunConfig::new(self.gate_params()?, n1, n2, seq)
            .with_trajectories(self.run.trajectories)
            .with_seed(self.run.seed)
            .with_seed_policy(policy))
    }

    pub fn wants(&self, format: Format) -> bool {
        self.output.formats.contains(&format)
    }
}

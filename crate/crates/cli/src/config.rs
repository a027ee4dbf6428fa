use std::path::Path;

use qslq_core::opalg::{bloch_observable, bloch_state, c, C64};
use qslq_core::{BoundKind, Operator, Prefactor};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MIN_STEPS: usize = 8;
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Unitary,
    MarkovDephasing,
    PureDephasing,
    CoherenceGeneration,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PictureName {
    Schrodinger,
    Heisenberg,
}

/// A qubit Bloch vector or a flattened row-major list of `[re, im]` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Bloch([f64; 3]),
    Entries(Vec<[f64; 2]>),
}

impl MatrixSpec {
    fn matrix(&self, name: &str) -> Result<qslq_core::opalg::CMatrix, CliError> {
        match self {
            Self::Bloch(v) => Ok(bloch_observable(*v).into_matrix()),
            Self::Entries(entries) => {
                let len = entries.len();
                let dim = (len as f64).sqrt().round() as usize;
                if dim == 0 || dim * dim != len {
                    return Err(CliError::Config(format!(
                        "{name}: {len} entries do not form a square matrix"
                    )));
                }
                let values: Vec<C64> = entries.iter().map(|[re, im]| c(*re, *im)).collect();
                Operator::from_row_major(dim, &values).map_err(|e| CliError::Config(format!("{name}: {e}")))
            }
        }
    }

    /// Hermitian observable; a Bloch vector `a` means `a·σ`.
    pub fn observable(&self, name: &str) -> Result<Operator, CliError> {
        Operator::hermitian(self.matrix(name)?).map_err(|e| CliError::Config(format!("{name}: {e}")))
    }

    /// Density matrix; a Bloch vector `r` means `(I + r·σ)/2`.
    pub fn state(&self, name: &str) -> Result<Operator, CliError> {
        let m = match self {
            Self::Bloch(v) => bloch_state(*v)
                .map_err(|e| CliError::Config(format!("{name}: {e}")))?
                .into_matrix(),
            Self::Entries(_) => self.matrix(name)?,
        };
        Operator::density(m).map_err(|e| CliError::Config(format!("{name}: {e}")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_hat: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_hat: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a0: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b0: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub picture: Option<PictureName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularize: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_max: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    #[serde(default)]
    pub parameters: Parameters,
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<BoundKind>>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub saturation: bool,
    #[serde(default)]
    pub prefactor: Prefactor,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub t_max: Option<f64>,
    pub steps: Option<usize>,
    pub tolerance: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid configuration: {e}")))
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(t) = overrides.t_max {
            self.grid.t_max = t;
        }
        if let Some(n) = overrides.steps {
            self.grid.steps = n;
        }
        if let Some(tol) = overrides.tolerance {
            self.tolerance = tol;
        }
    }

    /// Sets one numeric key, as used by `sweep --set`.
    pub fn set(&mut self, key: &str, value: f64) -> Result<(), CliError> {
        let p = &mut self.parameters;
        match key {
            "theta" => p.theta = Some(value),
            "gamma" => p.gamma = Some(value),
            "s" => p.s = Some(value),
            "eta" => p.eta = Some(value),
            "t_max" => self.grid.t_max = value,
            "tolerance" => self.tolerance = value,
            "steps" => {
                if value.fract() != 0.0 || value < 0.0 || !value.is_finite() {
                    return Err(CliError::Config(format!("steps must be a non-negative integer, got {value}")));
                }
                self.grid.steps = value as usize;
            }
            other => return Err(CliError::Config(format!("unknown sweep key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.grid.t_max.is_finite() && self.grid.t_max > 0.0) {
            return Err(CliError::Config(format!("grid.t_max must be > 0, got {}", self.grid.t_max)));
        }
        if self.grid.steps < MIN_STEPS {
            return Err(CliError::Config(format!(
                "grid.steps must be >= {MIN_STEPS}, got {}",
                self.grid.steps
            )));
        }
        if !(self.tolerance.is_finite() && self.tolerance > -1.0) {
            return Err(CliError::Config(format!(
                "tolerance must be finite and > -1, got {}",
                self.tolerance
            )));
        }
        if self.saturation && self.model != ModelKind::PureDephasing {
            return Err(CliError::Config(
                "saturation checks are only defined for the pure_dephasing model".into(),
            ));
        }
        Ok(())
    }

    /// SHA-256 of the effective configuration in canonical JSON form.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("configuration serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

/// Parses `key=v1,v2,...`.
pub fn parse_sweep(spec: &str) -> Result<(String, Vec<f64>), CliError> {
    let (key, values) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("expected key=v1,v2,... in '{spec}'")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Config("empty sweep key".into()));
    }
    let parsed = values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("invalid sweep value '{v}'")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if parsed.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    Ok((key.to_string(), parsed))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"model": "unitary", "parameters": {"theta": 1.0}, "grid": {"t_max": 1.0, "steps": 16}}"#;

    #[test]
    fn defaults_are_filled_in() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.tolerance, DEFAULT_TOLERANCE);
        assert_eq!(cfg.output.format, Format::Csv);
        assert!(!cfg.saturation);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"model": "unitary", "grid": {"t_max": 1.0, "steps": 16}, "extra": 1}"#;
        assert!(RunConfig::parse(text).is_err());
        assert!(RunConfig::parse("{").is_err());
    }

    #[test]
    fn grid_and_tolerance_validation() {
        let mut cfg = RunConfig::parse(MINIMAL).unwrap();
        cfg.grid.t_max = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::parse(MINIMAL).unwrap();
        cfg.grid.steps = 7;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::parse(MINIMAL).unwrap();
        cfg.tolerance = -1.0;
        assert!(cfg.validate().is_err());
        cfg.tolerance = -0.5;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn saturation_only_for_pure_dephasing() {
        let mut cfg = RunConfig::parse(MINIMAL).unwrap();
        cfg.saturation = true;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn digest_tracks_content() {
        let a = RunConfig::parse(MINIMAL).unwrap();
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        b.set("theta", 0.5).unwrap();
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn sweep_spec_parsing() {
        let (k, v) = parse_sweep("s=0.5, 1,2,3").unwrap();
        assert_eq!(k, "s");
        assert_eq!(v, vec![0.5, 1.0, 2.0, 3.0]);
        assert!(parse_sweep("s").is_err());
        assert!(parse_sweep("s=a").is_err());
        assert!(parse_sweep("=1").is_err());
    }

    #[test]
    fn matrix_specs() {
        let spec: MatrixSpec = serde_json::from_str("[[0,0],[1,0],[1,0],[0,0]]").unwrap();
        assert!(spec.observable("h").is_ok());
        let bad: MatrixSpec = serde_json::from_str("[[0,0],[1,0],[0,0],[0,0]]").unwrap();
        assert!(bad.observable("h").is_err());
        let bloch: MatrixSpec = serde_json::from_str("[0, 0, 0.6]").unwrap();
        assert_eq!(bloch.state("rho").unwrap().dim(), 2);
        let short: MatrixSpec = serde_json::from_str("[[1,0],[0,0],[0,0]]").unwrap();
        assert!(short.observable("h").is_err());
    }

    #[test]
    fn sweep_keys() {
        let mut cfg = RunConfig::parse(MINIMAL).unwrap();
        assert!(cfg.set("steps", 32.0).is_ok());
        assert_eq!(cfg.grid.steps, 32);
        assert!(cfg.set("steps", 3.5).is_err());
        assert!(cfg.set("colour", 1.0).is_err());
    }
}

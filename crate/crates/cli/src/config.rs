//! JSON run configurations. Every config carries `schema_version`, may name
//! an output directory, and rejects unknown keys.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

pub type Terms = Vec<(u32, f64)>;

/// Implemented by every config so the loader can check the shared header.
pub trait RunConfig: Serialize + DeserializeOwned {
    fn schema_version(&self) -> u32;
    fn out(&self) -> Option<&Path>;
    fn validate(&self) -> Result<(), CliError> {
        Ok(())
    }
}

macro_rules! run_config {
    ($t:ty) => {
        impl RunConfig for $t {
            fn schema_version(&self) -> u32 {
                self.schema_version
            }
            fn out(&self) -> Option<&Path> {
                self.out.as_deref()
            }
            fn validate(&self) -> Result<(), CliError> {
                self.check()
            }
        }
    };
}

pub fn load<T: RunConfig>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: T = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if cfg.schema_version() != SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            cfg.schema_version()
        )));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn config_err<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Config(msg.into()))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BetaRange {
    pub min: f64,
    pub max: f64,
    /// Number of intervals; the sweep has `steps + 1` points.
    pub steps: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CriticalConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    pub mixture: Terms,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_range: Option<BetaRange>,
    #[serde(default = "default_root_tol")]
    pub tol: f64,
}

fn default_root_tol() -> f64 {
    1e-12
}

impl CriticalConfig {
    fn check(&self) -> Result<(), CliError> {
        match (&self.betas, &self.beta_range) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => return config_err("give exactly one of `betas` or `beta_range`"),
        }
        if let Some(r) = &self.beta_range {
            if r.steps == 0 || r.min.is_nan() || r.max.is_nan() || r.max < r.min {
                return config_err("beta_range needs steps >= 1 and max >= min");
            }
        }
        Ok(())
    }

    pub fn beta_values(&self) -> Vec<f64> {
        match (&self.betas, &self.beta_range) {
            (Some(b), _) => b.clone(),
            (None, Some(r)) => (0..=r.steps)
                .map(|k| r.min + k as f64 * (r.max - r.min) / r.steps as f64)
                .collect(),
            (None, None) => Vec::new(),
        }
    }
}
run_config!(CriticalConfig);

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FdtMethod {
    Direct,
    FixedPoint,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FdtConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    /// Either a mixture (with `beta` and optional `gamma`) or a constant `φ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixture: Option<Terms>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_constant: Option<f64>,
    #[serde(default)]
    pub beta: f64,
    /// Defaults to `γ(β)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default = "default_b")]
    pub b: f64,
    pub delta: f64,
    pub horizon: f64,
    #[serde(default = "default_method")]
    pub method: FdtMethod,
    #[serde(default = "default_fp_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_b() -> f64 {
    0.5
}
fn default_method() -> FdtMethod {
    FdtMethod::Direct
}
fn default_fp_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    10_000
}

impl FdtConfig {
    fn check(&self) -> Result<(), CliError> {
        if self.mixture.is_some() == self.phi_constant.is_some() {
            return config_err("give exactly one of `mixture` or `phi_constant`");
        }
        if self.phi_constant.is_some() && self.gamma.is_some() {
            return config_err("`gamma` applies to mixtures only");
        }
        Ok(())
    }
}
run_config!(FdtConfig);

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SoftSpec {
    pub l: f64,
    #[serde(default = "default_k")]
    pub k: u32,
    #[serde(default = "default_k0")]
    pub k0: f64,
}

fn default_k() -> u32 {
    1
}
fn default_k0() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TwoTimeConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    pub mixture: Terms,
    pub beta: f64,
    pub delta: f64,
    pub horizon: f64,
    /// Soft closure; the spherical one when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soft: Option<SoftSpec>,
    /// Every `csv_stride`-th mesh point is written to the CSV.
    #[serde(default = "default_stride")]
    pub csv_stride: usize,
    #[serde(default = "yes")]
    pub checkpoint: bool,
    /// Adds the FDT-violation summary to the sidecar (spherical only).
    #[serde(default)]
    pub diagnostics: bool,
}

fn default_stride() -> usize {
    1
}
fn yes() -> bool {
    true
}

impl TwoTimeConfig {
    fn check(&self) -> Result<(), CliError> {
        if self.csv_stride == 0 {
            return config_err("csv_stride must be >= 1");
        }
        if self.diagnostics && self.soft.is_some() {
            return config_err("diagnostics are defined for the spherical closure only");
        }
        Ok(())
    }
}
run_config!(TwoTimeConfig);

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PsiConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    pub mixture: Terms,
    pub beta: f64,
    pub delta: f64,
    pub horizon: f64,
    pub iterations: usize,
    /// Starting pair; the free dynamics `e^{-(s-t)/2}` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_checkpoint: Option<PathBuf>,
    #[serde(default)]
    pub checkpoint: bool,
}

impl PsiConfig {
    fn check(&self) -> Result<(), CliError> {
        if self.iterations == 0 {
            return config_err("iterations must be >= 1");
        }
        Ok(())
    }
}
run_config!(PsiConfig);

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub l: f64,
    #[serde(default = "default_k")]
    pub k: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    pub mixture: Terms,
    pub beta: f64,
    pub potential: PotentialSpec,
    pub n: usize,
    pub dt: f64,
    pub horizon: f64,
    pub replicas: usize,
    #[serde(default = "default_stride")]
    pub save_stride: usize,
    #[serde(default)]
    pub seed: u64,
}

impl SimulateConfig {
    fn check(&self) -> Result<(), CliError> {
        Ok(())
    }
}
run_config!(SimulateConfig);

/// Limit grid for `compare`: a saved checkpoint or a soft solve with the
/// simulation's potential and `K(0) = 1`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum GridSource {
    Checkpoint(PathBuf),
    Solve { delta: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    pub mixture: Terms,
    pub beta: f64,
    pub potential: PotentialSpec,
    pub n: usize,
    pub dt: f64,
    pub horizon: f64,
    pub replicas: usize,
    #[serde(default = "default_stride")]
    pub save_stride: usize,
    #[serde(default)]
    pub seed: u64,
    pub grid: GridSource,
}

impl CompareConfig {
    fn check(&self) -> Result<(), CliError> {
        Ok(())
    }

    pub fn simulation(&self) -> SimulateConfig {
        SimulateConfig {
            schema_version: self.schema_version,
            out: None,
            mixture: self.mixture.clone(),
            beta: self.beta,
            potential: self.potential,
            n: self.n,
            dt: self.dt,
            horizon: self.horizon,
            replicas: self.replicas,
            save_stride: self.save_stride,
            seed: self.seed,
        }
    }
}
run_config!(CompareConfig);

#[cfg(test)]
mod tests {
    use super::*;

    fn parse<T: RunConfig>(text: &str) -> Result<T, CliError> {
        let cfg: T = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let r = parse::<CriticalConfig>(
            r#"{"schema_version":1,"mixture":[[2,1.0]],"betas":[1.0],"bogus":1}"#,
        );
        assert!(matches!(r, Err(CliError::Config(m)) if m.contains("bogus")));
    }

    #[test]
    fn beta_range_includes_both_ends() {
        let cfg: CriticalConfig = parse(
            r#"{"schema_version":1,"mixture":[[2,1.0]],"beta_range":{"min":0.5,"max":1.5,"steps":10}}"#,
        )
        .unwrap();
        let b = cfg.beta_values();
        assert_eq!(b.len(), 11);
        assert_eq!(b[5], 1.0);
        assert_eq!(b[10], 1.5);
    }

    #[test]
    fn exclusive_choices() {
        assert!(parse::<CriticalConfig>(r#"{"schema_version":1,"mixture":[[2,1.0]]}"#).is_err());
        assert!(parse::<FdtConfig>(
            r#"{"schema_version":1,"mixture":[[2,1.0]],"phi_constant":0.5,"delta":0.1,"horizon":1}"#
        )
        .is_err());
        assert!(parse::<FdtConfig>(
            r#"{"schema_version":1,"phi_constant":0.5,"delta":0.1,"horizon":1}"#
        )
        .is_ok());
    }

    #[test]
    fn out_is_not_part_of_the_serialised_config() {
        let cfg: PsiConfig = parse(
            r#"{"schema_version":1,"out":"x","mixture":[[3,2.0]],"beta":0.1,"delta":0.1,"horizon":1,"iterations":2}"#,
        )
        .unwrap();
        assert_eq!(cfg.out.as_deref(), Some(Path::new("x")));
        assert!(!serde_json::to_string(&cfg).unwrap().contains("\"out\""));
    }

    #[test]
    fn grid_source_forms() {
        let a: GridSource = serde_json::from_str(r#"{"checkpoint":"g.ttg"}"#).unwrap();
        assert_eq!(a, GridSource::Checkpoint("g.ttg".into()));
        let b: GridSource = serde_json::from_str(r#"{"solve":{"delta":0.01}}"#).unwrap();
        assert_eq!(b, GridSource::Solve { delta: 0.01 });
    }
}

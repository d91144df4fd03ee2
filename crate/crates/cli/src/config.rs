//! Config schema for the experiment runner.
//!
//! Configs are JSON or TOML (decided by file extension) with a versioned
//! `schema_version` field and a `command` tag selecting the payload. Optional
//! fields fall back to the library defaults; the `--seed`, `--out` and
//! `--format` flags override their config counterparts.

use serde::Deserialize;
use std::path::PathBuf;
use ternlab::{
    AlgebraInstance, CatalogTerm, ControlFunction, Error, FunctionHandle, Parity, Result,
    SampleGrid, Tolerances,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Deserialize)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub formats: Option<Vec<Format>>,
    #[serde(flatten)]
    pub command: CommandConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Precondition(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if matches!(&self.formats, Some(f) if f.is_empty()) {
            return Err(Error::Precondition(
                "formats must be a nonempty subset of {json, csv}".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum CommandConfig {
    Axioms(AxiomsConfig),
    Residual(ResidualConfig),
    Extract(ExtractConfig),
    Theorem25(ExperimentConfig),
    Theorem26(Theorem26Config),
    Corollary(CorollaryConfig),
}

/// Grid parameters; anything omitted takes the library default, and the seed
/// falls back to the experiment seed.
#[derive(Debug, Default, Deserialize)]
pub struct GridConfig {
    pub seed: Option<u64>,
    pub count: Option<usize>,
    pub band: Option<[f64; 2]>,
    pub structured: Option<bool>,
}

impl GridConfig {
    pub fn build(&self, default_seed: u64) -> SampleGrid {
        let defaults = SampleGrid::default_for_seed(self.seed.unwrap_or(default_seed));
        SampleGrid::new(
            defaults.seed,
            self.count.unwrap_or(defaults.count),
            self.band.unwrap_or(defaults.radius_band),
            self.structured.unwrap_or(defaults.includes_structured),
        )
    }
}

/// A handle as a term list with an optional declared parity (inferred from
/// the terms when omitted).
#[derive(Debug, Deserialize)]
pub struct HandleConfig {
    #[serde(default)]
    pub parity: Option<Parity>,
    pub terms: Vec<CatalogTerm>,
}

impl HandleConfig {
    pub fn build(&self, algebra: AlgebraInstance) -> FunctionHandle {
        match self.parity {
            Some(p) => FunctionHandle::with_parity(algebra, p, self.terms.clone()),
            None => FunctionHandle::new(algebra, self.terms.clone()),
        }
    }
}

#[derive(Debug, Deserialize)]
pub struct AxiomsConfig {
    pub algebra: String,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
pub struct ResidualConfig {
    pub algebra: String,
    pub j: u32,
    #[serde(default)]
    pub rho: Option<[f64; 2]>,
    pub handle: HandleConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub control: Option<ControlFunction>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
pub struct ExtractConfig {
    pub algebra: String,
    pub j: u32,
    pub handle: HandleConfig,
    /// Explicit evaluation points (coordinate pairs); the grid is used when
    /// omitted.
    #[serde(default)]
    pub points: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
pub struct PowerConfig {
    pub s: f64,
    pub r: f64,
}

#[derive(Debug, Deserialize)]
pub struct ExperimentConfig {
    pub algebra: String,
    pub j: u32,
    #[serde(default)]
    pub rho: Option<[f64; 2]>,
    pub base: HandleConfig,
    pub perturbation: PowerConfig,
    pub seed: u64,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: Option<Tolerances>,
    #[serde(default)]
    pub n_max: Option<usize>,
}

#[derive(Debug, Deserialize)]
pub struct Theorem26Config {
    #[serde(flatten)]
    pub experiment: ExperimentConfig,
    pub base_der: HandleConfig,
    pub sigma: PowerConfig,
    /// Separate control for the derivation side; defaults to `perturbation`.
    #[serde(default)]
    pub perturbation_der: Option<PowerConfig>,
}

#[derive(Debug, Deserialize)]
pub struct CorollaryConfig {
    pub s: f64,
    pub r: f64,
    pub j: u32,
}

/// Parses a config from its raw text, using the file extension to pick the
/// format (`.toml` is TOML, anything else is JSON).
pub fn parse_config(text: &str, path: &std::path::Path) -> std::result::Result<RunConfig, String> {
    let is_toml = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("toml"))
        .unwrap_or(false);
    if is_toml {
        toml::from_str(text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }
}

//! Input files and machine-readable reports.
//!
//! Instance, distribution and contract files are JSON. Reports are JSON
//! documents carrying a schema version, the tool version, a hash of every
//! input and the numeric tolerances in force, so identical inputs produce
//! byte-identical output.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::conditions::{ScanConfig, PARAM_TOL, VERDICT_TOL};
use crate::incentives::{ContractFile, MenuContract, IC_GRID, IC_TOL};
use crate::instance::{EffortOrder, Instance};
use crate::metrics::{ALPHA_GRID, SIMPSON_PANELS};
use crate::scalar::Real;
use crate::typedist::{DistSpec, TypeDistribution, DEFAULT_GRID};

pub const SCHEMA_VERSION: u32 = 1;

/// Malformed input: which file, which key, what is wrong.
#[derive(Debug, Clone, PartialEq)]
pub struct InputError {
    pub file: String,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.key {
            Some(k) => write!(f, "{}: {}: {}", self.file, k, self.message),
            None => write!(f, "{}: {}", self.file, self.message),
        }
    }
}

impl std::error::Error for InputError {}

impl InputError {
    fn new(file: &str, key: Option<&str>, message: impl Into<String>) -> Self {
        Self {
            file: file.to_string(),
            key: key.map(str::to_string),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub gammas: Vec<f64>,
    pub rewards: Vec<f64>,
    #[serde(rename = "F")]
    pub f: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<DistSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effort_order: Option<EffortOrder>,
}

/// Raw bytes of an input plus their SHA-256.
#[derive(Debug, Clone, Serialize)]
pub struct InputEcho {
    pub path: String,
    pub sha256: String,
    pub content: serde_json::Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read(path: &Path) -> Result<(String, Vec<u8>), InputError> {
    let name = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|e| InputError::new(&name, None, format!("cannot read: {e}")))?;
    Ok((name, bytes))
}

fn parse<T: for<'de> Deserialize<'de>>(name: &str, bytes: &[u8]) -> Result<(T, serde_json::Value), InputError> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| InputError::new(name, None, format!("invalid JSON: {e}")))?;
    let typed = serde_json::from_value(value.clone()).map_err(|e| {
        let msg = e.to_string();
        let key = msg
            .split('`')
            .nth(1)
            .filter(|_| msg.contains("field"))
            .map(str::to_string);
        InputError {
            file: name.to_string(),
            key,
            message: msg,
        }
    })?;
    Ok((typed, value))
}

/// Validates an instance, reporting the first broken constraint.
pub fn instance_from_file(name: &str, file: &InstanceFile) -> Result<Instance, InputError> {
    Instance::with_order(
        file.gammas.clone(),
        file.rewards.clone(),
        file.f.clone(),
        file.effort_order.unwrap_or_default(),
    )
    .map_err(|e| {
        let v = &e.0[0];
        InputError::new(name, Some(v.key), v.message.clone())
    })
}

pub struct LoadedInstance {
    pub instance: Instance,
    pub dist: Option<DistSpec>,
    pub echo: InputEcho,
}

pub fn load_instance(path: &Path) -> Result<LoadedInstance, InputError> {
    let (name, bytes) = read(path)?;
    let (file, content): (InstanceFile, _) = parse(&name, &bytes)?;
    let instance = instance_from_file(&name, &file)?;
    Ok(LoadedInstance {
        instance,
        dist: file.dist,
        echo: InputEcho {
            path: name,
            sha256: sha256_hex(&bytes),
            content,
        },
    })
}

pub fn dist_from_spec(name: &str, spec: DistSpec) -> Result<TypeDistribution, InputError> {
    TypeDistribution::new(spec).map_err(|e| {
        let msg = e.to_string();
        let (key, message) = match msg.split_once(": ") {
            Some((k, m)) => (format!("dist.{k}"), m.to_string()),
            None => ("dist".to_string(), msg),
        };
        InputError::new(name, Some(&key), message)
    })
}

/// A distribution file holds either a bare tagged record or an object
/// with a `dist` key.
pub fn load_dist(path: &Path) -> Result<(TypeDistribution, InputEcho), InputError> {
    let (name, bytes) = read(path)?;
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Either {
        Wrapped { dist: DistSpec },
        Bare(DistSpec),
    }
    let (spec, content): (Either, _) = parse(&name, &bytes)?;
    let spec = match spec {
        Either::Wrapped { dist } | Either::Bare(dist) => dist,
    };
    let dist = dist_from_spec(&name, spec)?;
    Ok((
        dist,
        InputEcho {
            path: name,
            sha256: sha256_hex(&bytes),
            content,
        },
    ))
}

pub fn load_contract(path: &Path, instance: &Instance) -> Result<(MenuContract, InputEcho), InputError> {
    let (name, bytes) = read(path)?;
    let (file, content): (ContractFile, _) = parse(&name, &bytes)?;
    let contract = MenuContract::from_file(&file, instance)
        .map_err(|e| InputError::new(&name, Some(&e.key), e.message.clone()))?;
    Ok((
        contract,
        InputEcho {
            path: name,
            sha256: sha256_hex(&bytes),
            content,
        },
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub utility_tie: f64,
    pub cost_merge: f64,
    pub verdict: f64,
    pub parameter: f64,
    pub curvature: f64,
    pub scan_points: usize,
    pub scan_refine_rounds: usize,
    pub simpson_panels: usize,
    pub alpha_grid: usize,
    pub iron_grid: usize,
    pub ic_grid: usize,
}

impl Tolerances {
    pub fn current(scan: ScanConfig) -> Self {
        Self {
            utility_tie: f64::utility_tie(),
            cost_merge: f64::cost_merge(),
            verdict: VERDICT_TOL,
            parameter: PARAM_TOL,
            curvature: IC_TOL,
            scan_points: scan.points,
            scan_refine_rounds: scan.rounds,
            simpson_panels: SIMPSON_PANELS,
            alpha_grid: ALPHA_GRID,
            iron_grid: DEFAULT_GRID,
            ic_grid: IC_GRID,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report<T: Serialize> {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<InputEcho>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tolerances: Tolerances,
    pub result: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(command: &str, inputs: Vec<InputEcho>, scan: ScanConfig, result: T) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            inputs,
            seed: None,
            tolerances: Tolerances::current(scan),
            result,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

/// Comma-separated table with a header row.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn row_sum_diagnostic_names_key() {
        let f = temp(r#"{"gammas": [0, 1, 2], "rewards": [0, 1], "F": [[1, 0], [0, 1], [0, 0.97]]}"#);
        let err = load_instance(f.path()).err().unwrap();
        assert_eq!(err.key.as_deref(), Some("F"));
        assert!(err.message.contains("F row 2 sums to 0.97"), "{err}");
    }

    #[test]
    fn missing_key_is_named() {
        let f = temp(r#"{"gammas": [0, 1], "F": [[1, 0], [0, 1]]}"#);
        let err = load_instance(f.path()).err().unwrap();
        assert_eq!(err.key.as_deref(), Some("rewards"), "{err}");
    }

    #[test]
    fn dist_files_bare_or_wrapped() {
        let a = temp(r#"{"kind": "uniform", "low": 0, "high": 2}"#);
        let b = temp(r#"{"dist": {"kind": "exponential", "rate": 1.5}}"#);
        assert_eq!(load_dist(a.path()).unwrap().0.high(), 2.0);
        assert!(load_dist(b.path()).unwrap().0.high().is_infinite());
        let c = temp(r#"{"kind": "uniform", "low": 2, "high": 1}"#);
        assert!(load_dist(c.path()).is_err());
    }

    #[test]
    fn hashes_are_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}

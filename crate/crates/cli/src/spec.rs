//! Spec files and `--set key=value` overrides.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use hvcollapse::lattice::Scheme;
use hvcollapse::harness::ExperimentSpec;

use crate::error::CliError;

/// Lattice run description for `evolve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSpec {
    pub sites: usize,
    pub mass: f64,
    pub box_length: f64,
    pub scheme: Scheme,
    pub dt: f64,
    pub steps: u64,
    /// Keep every `stride`-th state; defaults to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<u64>,
    pub initial: EvolveInitial,
}

/// Either a named eigenmode `n` (1-based), or label counts with optional phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveInitial {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenmode: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases: Option<Vec<f64>>,
}

/// A single `key=value` override. Dotted keys address nested objects; the
/// value is read as JSON when it parses, otherwise as a string.
#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub path: Vec<String>,
    pub value: Value,
}

impl std::str::FromStr for Override {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let (key, raw) = s
            .split_once('=')
            .ok_or_else(|| CliError::validation("--set", format!("`{s}` is not key=value")))?;
        let path: Vec<String> = key.split('.').map(str::to_owned).collect();
        if path.iter().any(String::is_empty) {
            return Err(CliError::validation("--set", format!("bad key `{key}`")));
        }
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
        Ok(Self { path, value })
    }
}

impl Override {
    fn key(&self) -> String {
        self.path.join(".")
    }

    fn apply(&self, root: &mut Value) -> Result<(), CliError> {
        let (last, parents) = self.path.split_last().expect("nonempty path");
        let mut node = root;
        for part in parents {
            let obj = node
                .as_object_mut()
                .ok_or_else(|| CliError::validation(self.key(), format!("`{part}` is not inside an object")))?;
            node = obj
                .entry(part.clone())
                .or_insert_with(|| Value::Object(Default::default()));
        }
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::validation(self.key(), "parent is not an object"))?;
        obj.insert(last.clone(), self.value.clone());
        Ok(())
    }
}

fn read_with_overrides<T: DeserializeOwned>(path: &Path, overrides: &[Override]) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_owned(),
        source: e,
    })?;
    let parse_err = |e: serde_json::Error| CliError::Parse {
        path: path.to_owned(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    };
    // Schema errors in the file itself are reported with their position.
    let parsed: T = serde_json::from_str(&text).map_err(parse_err)?;
    if overrides.is_empty() {
        return Ok(parsed);
    }
    let mut value: Value = serde_json::from_str(&text).map_err(parse_err)?;
    for o in overrides {
        o.apply(&mut value)?;
    }
    serde_json::from_value(value).map_err(|e| {
        let keys: Vec<String> = overrides.iter().map(Override::key).collect();
        CliError::validation(keys.join(", "), e.to_string())
    })
}

/// Read and validate an experiment spec.
pub fn parse_spec(path: &Path, overrides: &[Override]) -> Result<ExperimentSpec, CliError> {
    let spec: ExperimentSpec = read_with_overrides(path, overrides)?;
    spec.validate()?;
    Ok(spec)
}

/// Read and validate a lattice run spec.
pub fn parse_evolve_spec(path: &Path, overrides: &[Override]) -> Result<EvolveSpec, CliError> {
    let spec: EvolveSpec = read_with_overrides(path, overrides)?;
    crate::commands::evolve_initial_state(&spec)?;
    Ok(spec)
}

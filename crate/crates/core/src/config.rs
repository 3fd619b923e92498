//! Layered run configuration: an optional TOML file merged with dotted
//! `key=value` overrides, every field falling back to its default.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::{ModelSelection, ScenarioConfig};
use crate::lstm::TrainConfig;
use crate::nar::NarConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config syntax: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("bad override '{0}': expected dotted.key=value")]
    BadOverride(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Sweep defaults a file may adjust; the axis itself stays a CLI choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub k: usize,
    pub model: ModelSelection,
    /// Axis values; when absent each axis supplies its own defaults.
    pub values: Option<Vec<f64>>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { k: 10, model: ModelSelection::Both, values: None }
    }
}

/// Full run configuration as read from disk.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub scenario: ScenarioConfig,
    pub lstm: TrainConfig,
    pub nar: NarConfig,
    pub sweep: SweepSection,
}

/// Sets one dotted key, creating intermediate tables as needed. The value
/// is parsed with TOML rules and falls back to a bare string.
fn apply_override(table: &mut toml::Table, set: &str) -> Result<(), ConfigError> {
    let bad = || ConfigError::BadOverride(set.to_string());
    let (key, raw) = set.split_once('=').ok_or_else(bad)?;
    let (key, raw) = (key.trim(), raw.trim());
    if key.is_empty() || raw.is_empty() {
        return Err(bad());
    }
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(bad());
    }
    let mut current = table;
    for part in &parts[..parts.len() - 1] {
        current = current
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(bad)?;
    }
    current.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Loads the file (when given), applies the overrides in order, and
/// deserializes the result. Unknown keys anywhere are an error.
pub fn load_config(path: Option<&Path>, sets: &[String]) -> Result<FileConfig, ConfigError> {
    let mut table = match path {
        Some(p) => fs::read_to_string(p)?.parse::<toml::Table>()?,
        None => toml::Table::new(),
    };
    for set in sets {
        apply_override(&mut table, set)?;
    }
    Ok(toml::Table::try_into(table)?)
}

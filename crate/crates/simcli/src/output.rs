use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::ConfigView;
use crate::spec::Scenario;

pub fn write_csv<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<PathBuf> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(path.to_path_buf())
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<PathBuf> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path.to_path_buf())
}

#[derive(Debug, Clone, Serialize)]
pub struct TableInfo {
    pub n_rx: usize,
    pub impaired: &'static str,
    pub file: String,
}

/// Resolved configuration and seed behind a run's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario: Scenario,
    pub seed: u64,
    pub n_trials: usize,
    pub k_values: Vec<usize>,
    pub n_rx: Vec<usize>,
    pub impairments: Vec<&'static str>,
    pub trace_trials: usize,
    pub n_symbols: usize,
    pub config: ConfigView,
    pub tables: Vec<TableInfo>,
    pub outputs: Vec<String>,
}

//! Experiment configuration file.
//!
//! Top-level keys are the system parameters; optional `[ga]`, `[dprc]` and
//! `[rate_table]` sections tune the optimizers and the table builder. Every
//! key is optional and unknown keys are rejected by name.

use std::path::Path;

use anyhow::{anyhow, Context, Result};
use serde::{Deserialize, Serialize};

use mimonet::dprc::DprcParams;
use mimonet::ga::GaParams;
use mimonet::params::ParamsFile;
use mimonet::rate_table::TableConfig;
use mimonet::SystemParams;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub params: SystemParams,
    pub ga: GaParams,
    pub dprc: DprcParams,
    pub rate_table: TableConfig,
}

/// Serialized form, as written into manifests.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigView {
    #[serde(flatten)]
    pub system: ParamsFile,
    pub ga: GaParams,
    pub dprc: DprcParams,
    pub rate_table: TableConfig,
}

fn section<T: for<'de> Deserialize<'de> + Default>(table: &mut toml::Table, name: &str) -> Result<T> {
    match table.remove(name) {
        None => Ok(T::default()),
        Some(toml::Value::Table(t)) => {
            T::deserialize(toml::Value::Table(t)).map_err(|e| anyhow!("in [{name}]: {}", e.message()))
        }
        Some(_) => Err(anyhow!("`{name}` must be a table")),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| anyhow!("{}", e.message()))?;
        let ga: GaParams = section(&mut table, "ga")?;
        let dprc: DprcParams = section(&mut table, "dprc")?;
        let rate_table: TableConfig = section(&mut table, "rate_table")?;
        let system = ParamsFile::deserialize(toml::Value::Table(table)).map_err(|e| anyhow!("{}", e.message()))?;
        let params = system.resolve()?;
        dprc.validate()?;
        Ok(Self {
            params,
            ga,
            dprc,
            rate_table,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn view(&self) -> ConfigView {
        ConfigView {
            system: self.params.to_file(),
            ga: self.ga.clone(),
            dprc: self.dprc.clone(),
            rate_table: self.rate_table.clone(),
        }
    }
}

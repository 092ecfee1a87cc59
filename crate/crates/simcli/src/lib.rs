//! Experiment runner for the `mimonet` simulator.

pub mod config;
pub mod output;
pub mod scenarios;
pub mod spec;
pub mod tables;

use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Serialize;

use mimonet::link::Impairments;
use mimonet::rate_table::RateTable;

use crate::config::ExperimentConfig;
use crate::output::{write_csv, write_json, Manifest, TableInfo};
use crate::scenarios::TableRef;
pub use crate::spec::{ExperimentSpec, Scenario};
use crate::tables::{relative, TableStore};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTableRow {
    pub n_rx: usize,
    pub impaired: &'static str,
    pub rate_bps: f64,
    pub m: usize,
    pub u: u32,
    pub threshold_db: f64,
}

fn store(spec: &ExperimentSpec, build: bool) -> TableStore<'_> {
    TableStore {
        dir: spec.tables_dir.clone(),
        params: &spec.params,
        config: &spec.table_config,
        build,
    }
}

/// Ensures a fresh table exists for every `(n_rx, impairments)` `spec`
/// names, building only what is missing or stale.
pub fn build_tables(spec: &ExperimentSpec) -> Result<Vec<(usize, Impairments, RateTable)>> {
    store(spec, true).get_all(&spec.n_rx, &spec.table_flags())
}

/// Runs one scenario and writes its outputs plus `manifest.json` under
/// `spec.out_dir`. Returns the written paths.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<PathBuf>> {
    spec.validate()?;
    let out = &spec.out_dir;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut written = Vec::new();

    let loaded = if spec.scenario.needs_tables() {
        let build = spec.build_tables || spec.scenario == Scenario::RateTable;
        store(spec, build).get_all(&spec.n_rx, &spec.table_flags())?
    } else {
        Vec::new()
    };
    let refs: Vec<TableRef> = loaded
        .iter()
        .map(|(n_rx, flags, table)| TableRef {
            n_rx: *n_rx,
            flags: *flags,
            table,
        })
        .collect();

    match spec.scenario {
        Scenario::SinrMap => {
            written.push(write_csv(out.join("sinr_map.csv"), &scenarios::sinr_map(&spec.params))?);
        }
        Scenario::BerValidate => {
            let rows = scenarios::ber_validate(
                &spec.params,
                &spec.n_rx,
                &spec.impairments,
                spec.table_config.n_draws,
                spec.table_config.quad_order,
                spec.n_symbols,
                spec.seed,
            )?;
            written.push(write_csv(out.join("ber_validate.csv"), &rows)?);
        }
        Scenario::RateTable => {
            let rows: Vec<RateTableRow> = refs
                .iter()
                .flat_map(|t| {
                    t.table.entries.iter().map(|e| RateTableRow {
                        n_rx: t.n_rx,
                        impaired: t.flags.tag(),
                        rate_bps: e.rate_bps,
                        m: e.m,
                        u: e.u,
                        threshold_db: e.threshold_db,
                    })
                })
                .collect();
            written.push(write_csv(out.join("rate_tables.csv"), &rows)?);
        }
        Scenario::MstSweep | Scenario::LossRatio => {
            let rows = scenarios::mst_trials(&spec.params, &refs, &spec.k_values, spec.n_trials, &spec.ga, spec.seed);
            let agg = scenarios::mst_aggregate(&rows);
            written.push(write_csv(out.join("mst_trials.csv"), &rows)?);
            written.push(write_json(out.join("mst_summary.json"), &agg)?);
            if spec.scenario == Scenario::LossRatio {
                let lr = scenarios::loss_ratios(&agg);
                written.push(write_csv(out.join("loss_ratio.csv"), &lr)?);
                written.push(write_json(out.join("loss_ratio.json"), &lr)?);
            }
        }
        Scenario::DprcSweep => {
            let (rows, trace) = scenarios::dprc_trials(
                &spec.params,
                &refs,
                &spec.k_values,
                spec.n_trials,
                &spec.ga,
                &spec.dprc,
                spec.seed,
                spec.trace_trials,
            )?;
            written.push(write_csv(out.join("dprc_trials.csv"), &rows)?);
            written.push(write_csv(out.join("dprc_iterations.csv"), &trace)?);
            written.push(write_json(
                out.join("dprc_summary.json"),
                &scenarios::dprc_aggregate(&rows),
            )?);
        }
    }

    let config = ExperimentConfig {
        params: spec.params.clone(),
        ga: spec.ga.clone(),
        dprc: spec.dprc.clone(),
        rate_table: spec.table_config.clone(),
    };
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        scenario: spec.scenario,
        seed: spec.seed,
        n_trials: spec.n_trials,
        k_values: spec.k_values.clone(),
        n_rx: spec.n_rx.clone(),
        impairments: spec.impairments.iter().map(|f| f.tag()).collect(),
        trace_trials: spec.trace_trials,
        n_symbols: spec.n_symbols,
        config: config.view(),
        tables: loaded
            .iter()
            .map(|(n, f, _)| TableInfo {
                n_rx: *n,
                impaired: f.tag(),
                file: relative(&store(spec, false).path(*n, *f), out),
            })
            .collect(),
        outputs: written.iter().map(|p| relative(p, out)).collect(),
    };
    written.push(write_json(out.join("manifest.json"), &manifest)?);
    Ok(written)
}

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::ValueEnum;
use serde::Serialize;

use mimonet::dprc::DprcParams;
use mimonet::ga::GaParams;
use mimonet::link::Impairments;
use mimonet::rate_table::TableConfig;
use mimonet::SystemParams;

pub const DEFAULT_TRIALS: usize = 200;
pub const PAPER_TRIALS: usize = 1000;
pub const DEFAULT_SEED: u64 = 2008;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// RF-input SINR against baseband SINR under phase noise.
    SinrMap,
    /// Semi-analytic BER against the symbol-level simulator.
    BerValidate,
    /// Build and export rate tables.
    RateTable,
    /// Maximum sum throughput over K, receive antennas and impairments.
    MstSweep,
    /// Throughput lost to each impairment alone and to all together.
    LossRatio,
    /// Distributed power and rate control next to the MST.
    DprcSweep,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::SinrMap => "sinr-map",
            Scenario::BerValidate => "ber-validate",
            Scenario::RateTable => "rate-table",
            Scenario::MstSweep => "mst-sweep",
            Scenario::LossRatio => "loss-ratio",
            Scenario::DprcSweep => "dprc-sweep",
        }
    }

    pub fn needs_tables(&self) -> bool {
        matches!(
            self,
            Scenario::RateTable | Scenario::MstSweep | Scenario::LossRatio | Scenario::DprcSweep
        )
    }
}

/// Everything a run depends on.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub params: SystemParams,
    pub k_values: Vec<usize>,
    pub n_rx: Vec<usize>,
    pub impairments: Vec<Impairments>,
    pub n_trials: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub tables_dir: PathBuf,
    pub build_tables: bool,
    pub table_config: TableConfig,
    pub ga: GaParams,
    pub dprc: DprcParams,
    /// Trials per cell whose per-iteration trace is written.
    pub trace_trials: usize,
    /// Symbol vectors per oracle point.
    pub n_symbols: usize,
}

impl ExperimentSpec {
    /// Scenario defaults; `tables_dir` defaults to `<out>/tables`.
    pub fn new(scenario: Scenario, params: SystemParams, out_dir: PathBuf) -> Self {
        let (k_values, n_rx, impairments): (Vec<usize>, Vec<usize>, Vec<Impairments>) = match scenario {
            Scenario::SinrMap => (vec![], vec![], vec![Impairments::PHASE_NOISE]),
            Scenario::BerValidate => (
                vec![],
                vec![1, 2, 4],
                vec![
                    Impairments::NONE,
                    Impairments {
                        phase_noise: false,
                        ..Impairments::ALL
                    },
                ],
            ),
            Scenario::RateTable => (vec![], vec![1, 2, 3, 4], vec![Impairments::NONE, Impairments::ALL]),
            Scenario::MstSweep | Scenario::DprcSweep => (
                (2..=10).collect(),
                vec![1, 2, 3, 4],
                vec![Impairments::NONE, Impairments::ALL],
            ),
            Scenario::LossRatio => (
                (2..=10).collect(),
                vec![4],
                vec![
                    Impairments::ALL,
                    Impairments::PHASE_NOISE,
                    Impairments::CHANNEL_ESTIMATION,
                    Impairments::RFO,
                ],
            ),
        };
        let tables_dir = out_dir.join("tables");
        Self {
            scenario,
            params,
            k_values,
            n_rx,
            impairments,
            n_trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            out_dir,
            tables_dir,
            build_tables: false,
            table_config: TableConfig::default(),
            ga: GaParams::default(),
            dprc: DprcParams::default(),
            trace_trials: 1,
            n_symbols: 100_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            bail!("--trials must be at least 1");
        }
        if self.k_values.contains(&0) {
            bail!("K values must be at least 1");
        }
        if self.n_rx.contains(&0) {
            bail!("receive antenna counts must be at least 1");
        }
        if matches!(
            self.scenario,
            Scenario::MstSweep | Scenario::LossRatio | Scenario::DprcSweep
        ) && self.k_values.is_empty()
        {
            bail!("{} needs at least one K value", self.scenario.name());
        }
        if self.scenario != Scenario::SinrMap && self.n_rx.is_empty() {
            bail!("{} needs at least one receive antenna count", self.scenario.name());
        }
        self.dprc.validate()?;
        Ok(())
    }

    /// Table settings the run needs, loss-ratio runs including their
    /// unimpaired reference.
    pub fn table_flags(&self) -> Vec<Impairments> {
        let mut f = self.impairments.clone();
        if self.scenario == Scenario::LossRatio && !f.contains(&Impairments::NONE) {
            f.insert(0, Impairments::NONE);
        }
        f
    }
}

/// Parses lists like `2,4,6` or `2..10` (inclusive) or mixtures.
pub fn parse_list(s: &str) -> std::result::Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a.trim().parse().map_err(|_| format!("bad range start in '{part}'"))?;
            let b: usize = b
                .trim()
                .trim_start_matches('=')
                .parse()
                .map_err(|_| format!("bad range end in '{part}'"))?;
            if a > b {
                return Err(format!("empty range '{part}'"));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| format!("not a count: '{part}'"))?);
        }
    }
    Ok(out)
}

pub fn parse_impairments(s: &str) -> std::result::Result<Impairments, String> {
    Impairments::from_tag(s.trim()).ok_or_else(|| {
        format!("unknown impairment set '{s}' (expected ideal, imp, pn, rfo, ce, pn+rfo, pn+ce or rfo+ce)")
    })
}

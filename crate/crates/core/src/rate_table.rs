//! Adaptive stream control as a lookup table.
//!
//! For every stream count `M <= N` and modulation, the table records the
//! smallest RF-input SINR on a dB grid at which the average BER meets the
//! target. Only the Pareto frontier is kept, so thresholds and rates rise
//! together and a lookup returns the fastest mode a given SINR supports.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::{ChannelSet, Impairments, LinkModel};
use crate::modulation::{ModScheme, BITS_PER_SYMBOL};
use crate::params::SystemParams;
use crate::rng::{stream, Purpose};
use crate::units::db_to_lin;

pub const TABLE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableConfig {
    pub grid_min_db: f64,
    pub grid_max_db: f64,
    pub grid_step_db: f64,
    pub n_draws: usize,
    pub quad_order: usize,
    pub seed: u64,
}

impl Default for TableConfig {
    fn default() -> Self {
        Self {
            grid_min_db: -5.0,
            grid_max_db: 45.0,
            grid_step_db: 0.1,
            n_draws: 2000,
            quad_order: 15,
            seed: 2008,
        }
    }
}

impl TableConfig {
    fn grid_len(&self) -> usize {
        ((self.grid_max_db - self.grid_min_db) / self.grid_step_db).round() as usize + 1
    }

    fn grid_db(&self, idx: usize) -> f64 {
        // round to the grid's decimal resolution so thresholds print cleanly
        let v = self.grid_min_db + idx as f64 * self.grid_step_db;
        (v * 1e9).round() / 1e9
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEntry {
    pub rate_bps: f64,
    pub m: usize,
    pub u: u32,
    pub threshold_db: f64,
}

impl RateEntry {
    pub fn threshold(&self) -> f64 {
        db_to_lin(self.threshold_db)
    }
}

/// Ordered `(rate, M, U, threshold)` entries for one receiver configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub version: u32,
    pub n_rx: usize,
    pub impaired: bool,
    pub impairments: Impairments,
    pub grid_step_db: f64,
    pub entries: Vec<RateEntry>,
    /// Build settings the table was generated with; used for cache checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub build: Option<BuildKey>,
    #[serde(skip)]
    thresholds: Vec<f64>,
}

/// Everything a table's contents depend on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildKey {
    pub config: TableConfig,
    pub f_ici: f64,
    pub n_sub: usize,
    pub gamma_ber: f64,
    pub r_base: f64,
}

/// Outcome of link adaptation for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkOutcome {
    /// Index into the table entries, `None` when the link is silent.
    pub entry: Option<usize>,
    pub m: usize,
    pub u: u32,
    pub rate_bps: f64,
    pub sinr_in: f64,
}

impl LinkOutcome {
    pub fn feasible(&self) -> bool {
        self.entry.is_some()
    }
}

impl RateTable {
    pub fn new(n_rx: usize, impairments: Impairments, grid_step_db: f64, entries: Vec<RateEntry>) -> Result<Self> {
        let t = Self {
            version: TABLE_VERSION,
            n_rx,
            impaired: impairments.any(),
            impairments,
            grid_step_db,
            thresholds: entries.iter().map(RateEntry::threshold).collect(),
            entries,
            build: None,
        };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        for w in self.entries.windows(2) {
            if !(w[1].threshold_db > w[0].threshold_db && w[1].rate_bps > w[0].rate_bps) {
                return Err(Error::Config(format!(
                    "rate table entries must strictly increase: {:?} then {:?}",
                    w[0], w[1]
                )));
            }
        }
        if let Some(e) = self.entries.iter().find(|e| e.m > self.n_rx || e.m == 0) {
            return Err(Error::Config(format!("entry with M = {} for N = {}", e.m, self.n_rx)));
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Linear SINR thresholds, ascending.
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn top_rate(&self) -> f64 {
        self.entries.last().map_or(0.0, |e| e.rate_bps)
    }

    pub fn has_rate(&self, rate_bps: f64) -> bool {
        self.entries.iter().any(|e| (e.rate_bps - rate_bps).abs() < 0.5)
    }

    /// Largest gap between consecutive rates, counting the step up from
    /// silence.
    pub fn max_step(&self) -> f64 {
        let mut prev = 0.0;
        let mut step: f64 = 0.0;
        for e in &self.entries {
            step = step.max(e.rate_bps - prev);
            prev = e.rate_bps;
        }
        step
    }

    pub fn file_name(&self) -> String {
        table_file_name(self.n_rx, self.impairments)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut t: Self = serde_json::from_str(text)?;
        if t.version != TABLE_VERSION {
            return Err(Error::Config(format!("unsupported rate table version {}", t.version)));
        }
        t.thresholds = t.entries.iter().map(RateEntry::threshold).collect();
        t.validate()?;
        Ok(t)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}

pub fn table_file_name(n_rx: usize, impairments: Impairments) -> String {
    format!("rates_N{n_rx}_{}.json", impairments.tag().replace('+', "-"))
}

/// Highest-rate entry whose threshold does not exceed `sinr_in`.
pub fn select_mode(sinr_in: f64, table: &RateTable) -> LinkOutcome {
    let k = table.thresholds.partition_point(|&t| t <= sinr_in);
    match k.checked_sub(1) {
        Some(i) => {
            let e = &table.entries[i];
            LinkOutcome {
                entry: Some(i),
                m: e.m,
                u: e.u,
                rate_bps: e.rate_bps,
                sinr_in,
            }
        }
        None => LinkOutcome {
            entry: None,
            m: 0,
            u: 0,
            rate_bps: 0.0,
            sinr_in,
        },
    }
}

/// Threshold search result for one candidate mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeThreshold {
    pub m: usize,
    pub u: u32,
    pub rate_bps: f64,
    /// `None` when the target is never met on the grid.
    pub threshold_db: Option<f64>,
}

/// Finds the smallest grid SINR meeting the BER target for every candidate
/// `(M, U)`. The BER curve is evaluated under common random numbers and is
/// non-increasing on the grid, so a bisection over grid indices suffices.
pub fn mode_thresholds(
    n_rx: usize,
    impairments: Impairments,
    params: &SystemParams,
    cfg: &TableConfig,
) -> Vec<ModeThreshold> {
    let model = LinkModel::new(params, impairments, cfg.quad_order);
    let sets: Vec<ChannelSet> = (1..=n_rx)
        .map(|m| {
            let mut rng = stream(cfg.seed, Purpose::RateTable, ((m as u64) << 8) | n_rx as u64);
            ChannelSet::draw(m, n_rx, cfg.n_draws, &mut rng)
        })
        .collect();
    let modes: Vec<(usize, u32)> = (1..=n_rx)
        .flat_map(|m| BITS_PER_SYMBOL.iter().map(move |&u| (m, u)))
        .collect();
    modes
        .into_par_iter()
        .map(|(m, u)| {
            let scheme = ModScheme::new(u).expect("supported modulation");
            let set = &sets[m - 1];
            let passes = |idx: usize| {
                let sinr = db_to_lin(cfg.grid_db(idx));
                model.ber_end_to_end(set, sinr, &scheme).mean <= params.gamma_ber
            };
            let g = cfg.grid_len();
            let threshold_db = if !passes(g - 1) {
                None
            } else if passes(0) {
                Some(cfg.grid_db(0))
            } else {
                let (mut lo, mut hi) = (0usize, g - 1);
                while hi - lo > 1 {
                    let mid = (lo + hi) / 2;
                    if passes(mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                Some(cfg.grid_db(hi))
            };
            ModeThreshold {
                m,
                u,
                rate_bps: params.r_base * (m as f64) * u as f64,
                threshold_db,
            }
        })
        .collect()
}

/// Keeps the modes that are not dominated: ascending threshold with strictly
/// ascending rate.
pub fn pareto_frontier(modes: &[ModeThreshold]) -> Vec<RateEntry> {
    let mut feasible: Vec<&ModeThreshold> = modes.iter().filter(|m| m.threshold_db.is_some()).collect();
    // by threshold, then fastest first so equal thresholds keep the best rate
    feasible.sort_by(|a, b| {
        a.threshold_db
            .partial_cmp(&b.threshold_db)
            .unwrap()
            .then(b.rate_bps.partial_cmp(&a.rate_bps).unwrap())
            .then(a.m.cmp(&b.m))
    });
    let mut out: Vec<RateEntry> = Vec::new();
    for md in feasible {
        let t = md.threshold_db.unwrap();
        let best = out.last().map_or(0.0, |e| e.rate_bps);
        if md.rate_bps > best {
            if let Some(last) = out.last() {
                if last.threshold_db == t {
                    continue;
                }
            }
            out.push(RateEntry {
                rate_bps: md.rate_bps,
                m: md.m,
                u: md.u,
                threshold_db: t,
            });
        }
    }
    out
}

pub fn build_rate_table(
    n_rx: usize,
    impairments: Impairments,
    params: &SystemParams,
    cfg: &TableConfig,
) -> Result<RateTable> {
    if n_rx == 0 {
        return Err(Error::Domain("need at least one receive antenna".into()));
    }
    let modes = mode_thresholds(n_rx, impairments, params, cfg);
    let mut t = RateTable::new(n_rx, impairments, cfg.grid_step_db, pareto_frontier(&modes))?;
    t.build = Some(BuildKey {
        config: cfg.clone(),
        f_ici: params.f_ici,
        n_sub: params.n_sub,
        gamma_ber: params.gamma_ber,
        r_base: params.r_base,
    });
    Ok(t)
}

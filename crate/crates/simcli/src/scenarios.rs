//! Scenario runners. Each returns ordered rows; nothing here touches disk.

use std::time::Instant;

use anyhow::Result;
use rayon::prelude::*;
use serde::Serialize;

use mimonet::dprc::{iteration_rows, run_dprc, DprcParams, IterationRow, Stage};
use mimonet::ga::{maximize_sum_throughput, GaParams, GaResult};
use mimonet::link::{ChannelSet, Impairments, LinkModel};
use mimonet::modulation::ModScheme;
use mimonet::network::{loss_ratio, Network};
use mimonet::oracle::{simulate_link_ber, OracleConfig, OracleFlags};
use mimonet::radio_env::{sample_topology, Topology};
use mimonet::rate_table::RateTable;
use mimonet::rng::{derive_seed, stream, trial_index, Purpose};
use mimonet::units::{db_to_lin, lin_to_db};
use mimonet::SystemParams;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinrMapRow {
    pub sinr_in_db: f64,
    pub sinr_b_db: f64,
}

/// Baseband SINR over RF-input SINR from -10 to 60 dB in 0.5 dB steps.
pub fn sinr_map(params: &SystemParams) -> Vec<SinrMapRow> {
    let model = LinkModel::new(params, Impairments::PHASE_NOISE, 1);
    (0..=140)
        .map(|i| {
            let sinr_in_db = -10.0 + 0.5 * i as f64;
            SinrMapRow {
                sinr_in_db,
                sinr_b_db: lin_to_db(model.baseband_sinr(db_to_lin(sinr_in_db))),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerRow {
    pub source: &'static str,
    pub sinr_db: f64,
    pub m: usize,
    pub n: usize,
    pub u: u32,
    pub flags: &'static str,
    pub ber: f64,
    pub stderr: f64,
    /// Bits simulated for the oracle, channel draws for the analytic rows.
    pub n_bits: u64,
}

pub const BER_SINR_DB: [f64; 6] = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0];
pub const BER_BITS: [u32; 3] = [1, 2, 4];

/// Analytic and simulated BER for `M = N` links over [`BER_SINR_DB`].
///
/// Both sides run at baseband SINR, so phase noise is ignored; the offset
/// and estimation flags are honoured.
#[allow(clippy::too_many_arguments)]
pub fn ber_validate(
    params: &SystemParams,
    n_rx: &[usize],
    flag_sets: &[Impairments],
    n_draws: usize,
    quad_order: usize,
    n_symbols: usize,
    seed: u64,
) -> Result<Vec<BerRow>> {
    let mut jobs = Vec::new();
    for (fi, &flags) in flag_sets.iter().enumerate() {
        for &n in n_rx {
            for &u in &BER_BITS {
                for (si, &s) in BER_SINR_DB.iter().enumerate() {
                    jobs.push((fi, flags, n, u, si, s));
                }
            }
        }
    }
    let rows: Vec<Result<[BerRow; 2]>> = jobs
        .par_iter()
        .map(|&(fi, flags, n, u, si, sinr_db)| {
            let flags = Impairments {
                phase_noise: false,
                ..flags
            };
            let oflags = OracleFlags {
                rfo: flags.rfo,
                imperfect_ce: flags.channel_estimation,
            };
            let scheme = ModScheme::new(u)?;
            let sinr = db_to_lin(sinr_db);
            let cell = ((fi as u64) << 24) | ((n as u64) << 16) | ((u as u64) << 8) | si as u64;
            let set = ChannelSet::draw(n, n, n_draws, &mut stream(seed, Purpose::Fading, cell));
            let a = LinkModel::new(params, flags, quad_order).ber_baseband(&set, sinr, &scheme);
            let mut cfg = OracleConfig::new(n, n, scheme, sinr, n_symbols, derive_seed(seed, cell)).with_flags(oflags);
            cfg.n_sub = params.n_sub;
            let o = simulate_link_ber(&cfg)?;
            let tag = oflags.tag();
            Ok([
                BerRow {
                    source: "analytic",
                    sinr_db,
                    m: n,
                    n,
                    u,
                    flags: tag,
                    ber: a.mean,
                    stderr: a.stderr,
                    n_bits: a.n as u64,
                },
                BerRow {
                    source: "oracle",
                    sinr_db,
                    m: n,
                    n,
                    u,
                    flags: tag,
                    ber: o.ber,
                    stderr: o.stderr,
                    n_bits: o.n_bits,
                },
            ])
        })
        .collect();
    let mut out = Vec::with_capacity(2 * rows.len());
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

/// Topology of trial `trial` in a `k`-pair sweep; shared by every table so
/// impaired and unimpaired runs see the same networks.
pub fn trial_topology(seed: u64, k: usize, trial: usize, params: &SystemParams) -> Topology {
    sample_topology(k, params, &mut stream(seed, Purpose::Topology, trial_index(k, trial)))
}

pub fn trial_mst(net: &Network, ga: &GaParams, seed: u64, k: usize, trial: usize) -> GaResult {
    let ga = GaParams {
        seed: derive_seed(seed, trial_index(k, trial)),
        ..ga.clone()
    };
    maximize_sum_throughput(net, &ga)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MstTrialRow {
    pub trial_id: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub n_rx: usize,
    pub impaired: &'static str,
    pub mst_bps: f64,
    pub runtime_ms: f64,
}

/// A table the sweep runs against.
pub struct TableRef<'a> {
    pub n_rx: usize,
    pub flags: Impairments,
    pub table: &'a RateTable,
}

pub fn mst_trials(
    params: &SystemParams,
    tables: &[TableRef],
    k_values: &[usize],
    n_trials: usize,
    ga: &GaParams,
    seed: u64,
) -> Vec<MstTrialRow> {
    let mut jobs = Vec::new();
    for (ti, _) in tables.iter().enumerate() {
        for &k in k_values {
            for trial in 0..n_trials {
                jobs.push((ti, k, trial));
            }
        }
    }
    jobs.par_iter()
        .map(|&(ti, k, trial)| {
            let t = &tables[ti];
            let start = Instant::now();
            let topo = trial_topology(seed, k, trial, params);
            let net = Network::new(&topo, t.table, params);
            let r = trial_mst(&net, ga, seed, k, trial);
            MstTrialRow {
                trial_id: trial,
                k,
                n_rx: t.n_rx,
                impaired: t.flags.tag(),
                mst_bps: r.mst_bps,
                runtime_ms: start.elapsed().as_secs_f64() * 1e3,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    #[serde(rename = "K")]
    pub k: usize,
    pub n_rx: usize,
    pub impaired: String,
    pub trials: usize,
    pub mean_bps: f64,
    pub stderr_bps: f64,
}

pub fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Mean and standard error per `(K, n_rx, impaired)` in first-seen order.
pub fn aggregate<'r>(rows: impl IntoIterator<Item = (usize, usize, &'r str, f64)>) -> Vec<Aggregate> {
    let mut keys: Vec<(usize, usize, &str)> = Vec::new();
    let mut vals: Vec<Vec<f64>> = Vec::new();
    for (k, n, imp, v) in rows {
        match keys.iter().position(|&x| x == (k, n, imp)) {
            Some(i) => vals[i].push(v),
            None => {
                keys.push((k, n, imp));
                vals.push(vec![v]);
            }
        }
    }
    keys.into_iter()
        .zip(vals)
        .map(|((k, n_rx, imp), v)| {
            let (mean_bps, stderr_bps) = mean_stderr(&v);
            Aggregate {
                k,
                n_rx,
                impaired: imp.to_string(),
                trials: v.len(),
                mean_bps,
                stderr_bps,
            }
        })
        .collect()
}

pub fn mst_aggregate(rows: &[MstTrialRow]) -> Vec<Aggregate> {
    aggregate(rows.iter().map(|r| (r.k, r.n_rx, r.impaired, r.mst_bps)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossRatioRow {
    #[serde(rename = "K")]
    pub k: usize,
    pub n_rx: usize,
    pub impairment: String,
    pub trials: usize,
    pub mst_ideal_bps: f64,
    pub mst_impaired_bps: f64,
    /// Empty when the unimpaired reference is zero.
    pub loss_ratio: Option<f64>,
}

/// Loss ratio of each impaired setting against the unimpaired reference
/// with the same `(K, n_rx)`, from mean MSTs over the same topologies.
pub fn loss_ratios(agg: &[Aggregate]) -> Vec<LossRatioRow> {
    let ideal = Impairments::NONE.tag();
    agg.iter()
        .filter(|a| a.impaired != ideal)
        .filter_map(|a| {
            let r = agg
                .iter()
                .find(|b| b.impaired == ideal && b.k == a.k && b.n_rx == a.n_rx)?;
            Some(LossRatioRow {
                k: a.k,
                n_rx: a.n_rx,
                impairment: a.impaired.clone(),
                trials: a.trials.min(r.trials),
                mst_ideal_bps: r.mean_bps,
                mst_impaired_bps: a.mean_bps,
                loss_ratio: loss_ratio(r.mean_bps, a.mean_bps),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DprcTrialRow {
    pub trial_id: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub n_rx: usize,
    pub impaired: &'static str,
    pub dprc_bps: f64,
    pub mst_bps: f64,
    pub active_pairs: usize,
    pub runtime_ms: f64,
}

/// Trace row tagged with its sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    #[serde(rename = "K")]
    pub k: usize,
    pub n_rx: usize,
    pub impaired: &'static str,
    pub trial: usize,
    pub stage: Stage,
    pub iteration: usize,
    pub pair: usize,
    pub power_dbm: f64,
    pub sinr_db: f64,
    pub rate_bps: f64,
}

impl TraceRow {
    fn new(k: usize, n_rx: usize, impaired: &'static str, r: IterationRow) -> Self {
        Self {
            k,
            n_rx,
            impaired,
            trial: r.trial,
            stage: r.stage,
            iteration: r.iteration,
            pair: r.pair,
            power_dbm: r.power_dbm,
            sinr_db: r.sinr_db,
            rate_bps: r.rate_bps,
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn dprc_trials(
    params: &SystemParams,
    tables: &[TableRef],
    k_values: &[usize],
    n_trials: usize,
    ga: &GaParams,
    dprc: &DprcParams,
    seed: u64,
    trace_trials: usize,
) -> Result<(Vec<DprcTrialRow>, Vec<TraceRow>)> {
    let mut jobs = Vec::new();
    for (ti, _) in tables.iter().enumerate() {
        for &k in k_values {
            for trial in 0..n_trials {
                jobs.push((ti, k, trial));
            }
        }
    }
    let res: Vec<Result<(DprcTrialRow, Vec<TraceRow>)>> = jobs
        .par_iter()
        .map(|&(ti, k, trial)| {
            let t = &tables[ti];
            let start = Instant::now();
            let topo = trial_topology(seed, k, trial, params);
            let net = Network::new(&topo, t.table, params);
            let d = run_dprc(&net, dprc, &mut stream(seed, Purpose::DprcInit, trial_index(k, trial)))?;
            let mst = trial_mst(&net, ga, seed, k, trial).mst_bps;
            let tag = t.flags.tag();
            let trace = if trial < trace_trials {
                iteration_rows(trial, &d.state.history, &net)
                    .into_iter()
                    .map(|row| TraceRow::new(k, t.n_rx, tag, row))
                    .collect()
            } else {
                Vec::new()
            };
            Ok((
                DprcTrialRow {
                    trial_id: trial,
                    k,
                    n_rx: t.n_rx,
                    impaired: tag,
                    dprc_bps: d.sum_bps,
                    mst_bps: mst,
                    active_pairs: d.links.iter().filter(|l| l.feasible()).count(),
                    runtime_ms: start.elapsed().as_secs_f64() * 1e3,
                },
                trace,
            ))
        })
        .collect();
    let mut rows = Vec::with_capacity(res.len());
    let mut trace = Vec::new();
    for r in res {
        let (row, tr) = r?;
        rows.push(row);
        trace.extend(tr);
    }
    Ok((rows, trace))
}

pub fn dprc_aggregate(rows: &[DprcTrialRow]) -> Vec<Aggregate> {
    aggregate(rows.iter().map(|r| (r.k, r.n_rx, r.impaired, r.dprc_bps)))
}

//! Distributed power and rate control.
//!
//! Stage 1 is a synchronous best-response game in which every pair
//! maximizes a sigmoid utility of its own SINR minus a linear power price,
//! seeing only its aggregate interference. Stage 2 repeatedly picks the
//! highest threshold each pair clears and steers its power toward that
//! threshold. The final rates come from table lookup at the final powers.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Network, PowerAllocation};
use crate::rate_table::LinkOutcome;
use crate::units::lin_to_db;

/// Relative headroom above the selected threshold when tracking it, so that
/// rounding cannot leave a pair a hair below its own threshold.
pub const TRACKING_MARGIN: f64 = 1e-9;

/// Power update applied to pairs holding a rate in stage 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage2Rule {
    /// `P <- P gamma / SINR`: drive each SINR onto its selected threshold.
    #[default]
    TargetTracking,
    /// `P <- P SINR / gamma`, as the update is usually printed.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DprcParams {
    /// Sigmoid steepness.
    pub a: f64,
    /// Power price per mW.
    pub alpha_price: f64,
    /// Sigmoid shape parameter; sets the midpoint `beta`.
    pub gamma_sig: f64,
    pub loop_num: usize,
    pub stage2: Stage2Rule,
}

impl Default for DprcParams {
    fn default() -> Self {
        Self {
            a: 1.0,
            alpha_price: 0.001,
            gamma_sig: 1.001,
            loop_num: 30,
            stage2: Stage2Rule::TargetTracking,
        }
    }
}

impl DprcParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a * self.gamma_sig > 1.0) {
            return Err(Error::InvalidParam {
                key: "gamma_sig".into(),
                reason: "a * gamma_sig must exceed 1".into(),
            });
        }
        if self.loop_num == 0 {
            return Err(Error::InvalidParam {
                key: "loop_num".into(),
                reason: "must be at least 1".into(),
            });
        }
        if !(self.alpha_price >= 0.0) {
            return Err(Error::InvalidParam {
                key: "alpha_price".into(),
                reason: "must be non-negative".into(),
            });
        }
        Ok(())
    }

    /// Sigmoid midpoint.
    pub fn beta(&self) -> f64 {
        self.gamma_sig - (self.a * self.gamma_sig - 1.0).ln() / self.a
    }
}

pub fn sigmoid_utility(sinr: f64, p: f64, params: &DprcParams) -> f64 {
    1.0 / (1.0 + (-params.a * (sinr - params.beta())).exp()) - params.alpha_price * p
}

/// Utility-maximizing power when the pair's SINR is `P / ieff`.
pub fn best_response_power(ieff: f64, params: &DprcParams, p_t: f64) -> f64 {
    // the sigmoid's slope in P never exceeds a / (4 ieff)
    if params.alpha_price * ieff >= params.a / 4.0 {
        return 0.0;
    }
    let beta = params.beta();
    let u = |p: f64| sigmoid_utility(p / ieff, p, params);
    let floor = u(0.0);
    let mut best = (p_t, u(p_t));
    // concave above the midpoint, where any interior optimum lives
    let lo = (ieff * beta).min(p_t);
    if lo < p_t {
        let p = golden_max(&u, lo, p_t, 1e-12 * p_t);
        let v = u(p);
        if v > best.1 {
            best = (p, v);
        }
    }
    if best.1 <= floor {
        0.0
    } else {
        best.0
    }
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Init,
    Power,
    Rate,
}

/// Powers, SINRs and rate indices after one round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub stage: Stage,
    pub iteration: usize,
    pub p: Vec<f64>,
    pub sinr: Vec<f64>,
    /// Selected threshold index plus one, 0 when silent. Empty in stage 1.
    pub r: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DprcState {
    pub p: Vec<f64>,
    pub r: Vec<usize>,
    pub history: Vec<Snapshot>,
}

fn all_sinr(net: &Network, p: &[f64]) -> Vec<f64> {
    (0..p.len()).map(|j| net.sinr(j, p)).collect()
}

/// Interference-over-gain seen by pair `j`, noise included.
fn ieff(net: &Network, j: usize, p: &[f64]) -> f64 {
    let mut i = net.noise;
    for (l, &pl) in p.iter().enumerate() {
        if l != j {
            i += pl * net.topo.rho[(j, l)];
        }
    }
    i / net.topo.rho[(j, j)]
}

/// Power game from random initial powers `u P_T`, `u ~ U(0, 1)`.
pub fn stage1<R: Rng + ?Sized>(net: &Network, dprc: &DprcParams, rng: &mut R) -> (PowerAllocation, Vec<Snapshot>) {
    let k = net.k();
    let mut p: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * net.p_t).collect();
    let mut history = vec![Snapshot {
        stage: Stage::Init,
        iteration: 0,
        sinr: all_sinr(net, &p),
        p: p.clone(),
        r: Vec::new(),
    }];
    for it in 1..=dprc.loop_num {
        p = (0..k)
            .map(|j| best_response_power(ieff(net, j, &p), dprc, net.p_t).min(net.p_t))
            .collect();
        history.push(Snapshot {
            stage: Stage::Power,
            iteration: it,
            sinr: all_sinr(net, &p),
            p: p.clone(),
            r: Vec::new(),
        });
    }
    (PowerAllocation { p }, history)
}

/// Highest `q` (1-based) with `sinr >= thresholds[q - 1]`, or 0.
pub fn select_threshold(sinr: f64, thresholds: &[f64]) -> usize {
    thresholds.partition_point(|&t| t <= sinr)
}

/// Threshold tracking from `p0` against ascending linear `thresholds`.
pub fn stage2(p0: &PowerAllocation, net: &Network, thresholds: &[f64], loop_num: usize, rule: Stage2Rule) -> DprcState {
    assert!(thresholds.windows(2).all(|w| w[0] < w[1]), "thresholds must ascend");
    let mut p = p0.p.clone();
    let mut r = vec![0; p.len()];
    let mut history = Vec::with_capacity(loop_num);
    for it in 1..=loop_num {
        let sinr = all_sinr(net, &p);
        for j in 0..p.len() {
            r[j] = select_threshold(sinr[j], thresholds);
            if r[j] > 0 {
                let g = thresholds[r[j] - 1];
                let scale = match rule {
                    Stage2Rule::TargetTracking => g * (1.0 + TRACKING_MARGIN) / sinr[j],
                    Stage2Rule::Literal => sinr[j] / g,
                };
                p[j] = (p[j] * scale).clamp(0.0, net.p_t);
            }
        }
        history.push(Snapshot {
            stage: Stage::Rate,
            iteration: it,
            sinr: all_sinr(net, &p),
            p: p.clone(),
            r: r.clone(),
        });
    }
    DprcState { p, r, history }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DprcOutcome {
    pub state: DprcState,
    pub links: Vec<LinkOutcome>,
    pub sum_bps: f64,
}

pub fn run_dprc<R: Rng + ?Sized>(net: &Network, dprc: &DprcParams, rng: &mut R) -> Result<DprcOutcome> {
    dprc.validate()?;
    let (p1, mut history) = stage1(net, dprc, rng);
    let mut state = stage2(&p1, net, net.table.thresholds(), dprc.loop_num, dprc.stage2);
    history.append(&mut state.history);
    state.history = history;
    let links = net.outcomes(&state.p);
    let sum_bps = links.iter().map(|l| l.rate_bps).sum();
    Ok(DprcOutcome { state, links, sum_bps })
}

/// One row of the per-iteration convergence trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRow {
    pub trial: usize,
    pub stage: Stage,
    pub iteration: usize,
    pub pair: usize,
    pub power_dbm: f64,
    pub sinr_db: f64,
    pub rate_bps: f64,
}

/// Flattens a history into rows; rates are looked up at each snapshot.
pub fn iteration_rows(trial: usize, history: &[Snapshot], net: &Network) -> Vec<IterationRow> {
    let mut rows = Vec::new();
    for s in history {
        for j in 0..s.p.len() {
            rows.push(IterationRow {
                trial,
                stage: s.stage,
                iteration: s.iteration,
                pair: j,
                power_dbm: lin_to_db(s.p[j]),
                sinr_db: lin_to_db(s.sinr[j]),
                rate_bps: crate::rate_table::select_mode(s.sinr[j], net.table).rate_bps,
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::Impairments;
    use crate::params::SystemParams;
    use crate::radio_env::{sample_topology, Topology};
    use crate::rate_table::{select_mode, RateEntry, RateTable};
    use crate::rng::{stream, Purpose};
    use nalgebra::DMatrix;

    #[test]
    fn beta_value() {
        let d = DprcParams::default();
        // 1.001 - ln(0.001)
        assert!((d.beta() - 7.908_755_278_982_137).abs() < 1e-12);
        assert!((sigmoid_utility(d.beta(), 0.0, &d) - 0.5).abs() < 1e-15);
        assert!(DprcParams {
            gamma_sig: 0.9,
            ..d.clone()
        }
        .validate()
        .is_err());
        assert!(DprcParams { loop_num: 0, ..d }.validate().is_err());
    }

    #[test]
    fn utility_decreases_in_power() {
        let d = DprcParams::default();
        assert!(sigmoid_utility(10.0, 1.0, &d) > sigmoid_utility(10.0, 2.0, &d));
    }

    #[test]
    fn cutoff_and_drop() {
        let d = DprcParams::default();
        assert_eq!(best_response_power(250.0, &d, 100.0), 0.0);
        assert_eq!(best_response_power(1e6, &d, 100.0), 0.0);
        // reaching the midpoint would need far more than P_T: silence wins
        assert_eq!(best_response_power(200.0, &d, 100.0), 0.0);
    }

    #[test]
    fn interior_optimum_matches_stationary_point() {
        // sigma (1 - sigma) = alpha ieff / a on the concave branch
        let d = DprcParams::default();
        for ieff in [1e-3, 0.05, 1.0, 4.0] {
            let c = d.alpha_price * ieff / d.a;
            let s = 0.5 * (1.0 + (1.0 - 4.0 * c).sqrt());
            let x = d.beta() + (s / (1.0 - s)).ln() / d.a;
            let exact = ieff * x;
            let p = best_response_power(ieff, &d, 100.0);
            // a flat maximum pins the argmax only to about sqrt(machine eps)
            assert!((p - exact).abs() < 1e-6 * exact.max(1.0), "{ieff}: {p} vs {exact}");
        }
    }

    #[test]
    fn full_power_when_optimum_beyond_limit() {
        let d = DprcParams::default();
        // stationary point above P_T but the utility there beats silence
        let p = best_response_power(9.0, &d, 100.0);
        assert_eq!(p, 100.0);
    }

    #[test]
    fn threshold_selection() {
        let t = [1.0, 2.0, 4.0];
        assert_eq!(select_threshold(0.5, &t), 0);
        assert_eq!(select_threshold(1.0, &t), 1);
        assert_eq!(select_threshold(3.9, &t), 2);
        assert_eq!(select_threshold(100.0, &t), 3);
    }

    fn table() -> RateTable {
        let e = |rate: f64, u, t| RateEntry {
            rate_bps: rate,
            m: 1,
            u,
            threshold_db: t,
        };
        RateTable::new(
            1,
            Impairments::NONE,
            0.1,
            vec![e(8e6, 1, 3.0), e(16e6, 2, 6.0), e(32e6, 4, 13.0), e(48e6, 6, 21.0)],
        )
        .unwrap()
    }

    #[test]
    fn stage2_fixed_point_and_silent_pairs() {
        let p = SystemParams::default();
        let topo = Topology::from_distances(DMatrix::from_element(1, 1, 100.0), &p).unwrap();
        let t = table();
        let net = Network::new(&topo, &t, &p);
        let th = t.thresholds();
        // power putting the SINR exactly on the second threshold
        // nudged so rounding cannot put the start just under the threshold
        let p_exact = th[1] * net.noise / topo.rho[(0, 0)] * (1.0 + 1e-12);
        let s = stage2(
            &PowerAllocation { p: vec![p_exact] },
            &net,
            th,
            5,
            Stage2Rule::TargetTracking,
        );
        assert!((s.p[0] - p_exact).abs() < 1e-8 * p_exact);
        assert_eq!(select_mode(net.sinr(0, &s.p), &t).entry, Some(1));
        assert_eq!(s.r, vec![2]);
        let weak = th[0] * 0.5 * net.noise / topo.rho[(0, 0)];
        let s = stage2(
            &PowerAllocation { p: vec![weak] },
            &net,
            th,
            5,
            Stage2Rule::TargetTracking,
        );
        assert_eq!((s.p[0], s.r[0]), (weak, 0));
    }

    #[test]
    fn literal_rule_climbs_to_limit() {
        let p = SystemParams::default();
        let topo = Topology::from_distances(DMatrix::from_element(1, 1, 100.0), &p).unwrap();
        let t = table();
        let net = Network::new(&topo, &t, &p);
        let start = 4.0 * t.thresholds()[0] * net.noise / topo.rho[(0, 0)];
        let s = stage2(
            &PowerAllocation { p: vec![start] },
            &net,
            t.thresholds(),
            30,
            Stage2Rule::Literal,
        );
        assert_eq!(s.p[0], p.p_t);
    }

    #[test]
    fn powers_stay_in_range_and_runs_repeat() {
        let p = SystemParams::default();
        let t = table();
        let d = DprcParams::default();
        let topo = sample_topology(5, &p, &mut stream(2, Purpose::Topology, 0));
        let net = Network::new(&topo, &t, &p);
        let a = run_dprc(&net, &d, &mut stream(2, Purpose::DprcInit, 0)).unwrap();
        let b = run_dprc(&net, &d, &mut stream(2, Purpose::DprcInit, 0)).unwrap();
        assert_eq!(a, b);
        for s in &a.state.history {
            assert!(s.p.iter().all(|&x| (0.0..=p.p_t).contains(&x)));
        }
        assert_eq!(a.state.history.len(), 1 + 2 * d.loop_num);
        assert_eq!(a.sum_bps, net.sum_throughput(&a.state.p));
        let rows = iteration_rows(0, &a.state.history, &net);
        assert_eq!(rows.len(), 5 * (1 + 2 * d.loop_num));
    }

    #[test]
    fn outage_everywhere_goes_silent() {
        let p = SystemParams::default();
        let t = table();
        let d = DMatrix::from_row_slice(2, 2, &[5000.0, 6000.0, 6000.0, 5000.0]);
        let topo = Topology::from_distances(d, &p).unwrap();
        let net = Network::new(&topo, &t, &p);
        let dp = DprcParams::default();
        let (p1, hist) = stage1(&net, &dp, &mut stream(0, Purpose::DprcInit, 0));
        assert_eq!(p1.p, vec![0.0, 0.0]);
        assert_eq!(hist[1].p, vec![0.0, 0.0]);
        assert_eq!(
            run_dprc(&net, &dp, &mut stream(0, Purpose::DprcInit, 0))
                .unwrap()
                .sum_bps,
            0.0
        );
    }
}

//! Network-level SINR and the sum-throughput objective.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::params::SystemParams;
use crate::radio_env::{noise_variance, Topology};
use crate::rate_table::{select_mode, LinkOutcome, RateTable};

/// Per-pair transmit powers in linear mW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub p: Vec<f64>,
}

impl PowerAllocation {
    pub fn new(p: Vec<f64>, p_t: f64) -> Result<Self> {
        if let Some(bad) = p.iter().find(|&&x| !(0.0..=p_t).contains(&x)) {
            return Err(domain(format!("power {bad} mW outside [0, {p_t}]")));
        }
        Ok(Self { p })
    }

    pub fn uniform(k: usize, value: f64) -> Self {
        Self { p: vec![value; k] }
    }

    pub fn k(&self) -> usize {
        self.p.len()
    }
}

/// RF-input SINR of pair `j`: own received power over interference plus the
/// in-band noise `ns * sigma2_n`.
pub fn sinr_in(j: usize, p: &[f64], topo: &Topology, sigma2_n: f64, ns: usize) -> f64 {
    let signal = p[j] * topo.rho[(j, j)];
    if signal == 0.0 {
        return 0.0;
    }
    let interference: f64 = (0..p.len()).filter(|&i| i != j).map(|i| p[i] * topo.rho[(j, i)]).sum();
    signal / (interference + ns as f64 * sigma2_n)
}

/// A topology paired with the rate table its links adapt against.
#[derive(Debug, Clone, Copy)]
pub struct Network<'a> {
    pub topo: &'a Topology,
    pub table: &'a RateTable,
    /// In-band noise power `ns * sigma2_n` (mW).
    pub noise: f64,
    pub p_t: f64,
}

impl<'a> Network<'a> {
    pub fn new(topo: &'a Topology, table: &'a RateTable, params: &SystemParams) -> Self {
        Self {
            topo,
            table,
            noise: params.ns as f64 * noise_variance(params),
            p_t: params.p_t,
        }
    }

    pub fn k(&self) -> usize {
        self.topo.k()
    }

    pub fn sinr(&self, j: usize, p: &[f64]) -> f64 {
        let signal = p[j] * self.topo.rho[(j, j)];
        if signal == 0.0 {
            return 0.0;
        }
        let mut interference = self.noise;
        for (i, &pi) in p.iter().enumerate() {
            if i != j {
                interference += pi * self.topo.rho[(j, i)];
            }
        }
        signal / interference
    }

    pub fn outcomes(&self, p: &[f64]) -> Vec<LinkOutcome> {
        (0..self.k())
            .map(|j| select_mode(self.sinr(j, p), self.table))
            .collect()
    }

    pub fn sum_throughput(&self, p: &[f64]) -> f64 {
        (0..self.k())
            .map(|j| select_mode(self.sinr(j, p), self.table).rate_bps)
            .sum()
    }
}

pub fn sum_throughput(p: &PowerAllocation, topo: &Topology, table: &RateTable, params: &SystemParams) -> f64 {
    Network::new(topo, table, params).sum_throughput(&p.p)
}

/// Fraction of throughput lost to impairments; `None` when the reference is
/// zero.
pub fn loss_ratio(t_wo: f64, t_w: f64) -> Option<f64> {
    (t_wo > 0.0).then(|| (t_wo - t_w) / t_wo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::Impairments;
    use crate::rate_table::RateEntry;
    use nalgebra::DMatrix;

    fn table() -> RateTable {
        let e = |rate: f64, m, u, t| RateEntry {
            rate_bps: rate,
            m,
            u,
            threshold_db: t,
        };
        RateTable::new(
            1,
            Impairments::NONE,
            0.1,
            vec![e(8e6, 1, 1, 0.0), e(16e6, 1, 2, 5.0), e(48e6, 1, 6, 20.0)],
        )
        .unwrap()
    }

    #[test]
    fn single_pair_has_no_interference() {
        let p = SystemParams::default();
        let topo = Topology::from_distances(DMatrix::from_element(1, 1, 50.0), &p).unwrap();
        let s = sinr_in(0, &[p.p_t], &topo, noise_variance(&p), p.ns);
        let exact = p.p_t * topo.rho[(0, 0)] / (64.0 * noise_variance(&p));
        assert!((s - exact).abs() < 1e-12 * exact);
        assert_eq!(sinr_in(0, &[0.0], &topo, noise_variance(&p), p.ns), 0.0);
    }

    #[test]
    fn symmetric_pairs_match() {
        let p = SystemParams::default();
        let d = DMatrix::from_row_slice(2, 2, &[40.0, 200.0, 200.0, 40.0]);
        let topo = Topology::from_distances(d, &p).unwrap();
        let s = noise_variance(&p);
        let pw = [30.0, 30.0];
        assert_eq!(sinr_in(0, &pw, &topo, s, 64), sinr_in(1, &pw, &topo, s, 64));
    }

    #[test]
    fn zero_power_zero_throughput() {
        let p = SystemParams::default();
        let d = DMatrix::from_row_slice(2, 2, &[40.0, 200.0, 150.0, 30.0]);
        let topo = Topology::from_distances(d, &p).unwrap();
        assert_eq!(
            sum_throughput(&PowerAllocation::uniform(2, 0.0), &topo, &table(), &p),
            0.0
        );
        let full = sum_throughput(&PowerAllocation::uniform(2, p.p_t), &topo, &table(), &p);
        assert!(full > 0.0);
    }

    #[test]
    fn network_matches_free_function() {
        let p = SystemParams::default();
        let d = DMatrix::from_row_slice(3, 3, &[20.0, 300.0, 90.0, 250.0, 60.0, 40.0, 70.0, 500.0, 35.0]);
        let topo = Topology::from_distances(d, &p).unwrap();
        let t = table();
        let net = Network::new(&topo, &t, &p);
        let pw = [50.0, 3.0, 100.0];
        for j in 0..3 {
            assert_eq!(net.sinr(j, &pw), sinr_in(j, &pw, &topo, noise_variance(&p), p.ns));
        }
        let o = net.outcomes(&pw);
        assert_eq!(o.iter().map(|x| x.rate_bps).sum::<f64>(), net.sum_throughput(&pw));
    }

    #[test]
    fn allocation_bounds() {
        assert!(PowerAllocation::new(vec![0.0, 100.0], 100.0).is_ok());
        assert!(PowerAllocation::new(vec![-1.0], 100.0).is_err());
        assert!(PowerAllocation::new(vec![100.1], 100.0).is_err());
    }

    #[test]
    fn loss_ratio_values() {
        assert_eq!(loss_ratio(100.0, 100.0), Some(0.0));
        assert_eq!(loss_ratio(100.0, 0.0), Some(1.0));
        assert!((loss_ratio(100.0, 73.0).unwrap() - 0.27).abs() < 1e-15);
        assert_eq!(loss_ratio(0.0, 0.0), None);
    }
}

//! Symbol-level Monte Carlo reference for the semi-analytic BER.
//!
//! Random Gray-labelled symbols go through `y = H x / sqrt(M) + n`, are
//! detected with the MMSE filter built from the (possibly noisy) channel
//! estimate and demapped by minimum distance. Residual frequency offset is
//! applied as the same SINR penalty the analytic chain uses.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::impairment::{rfo_std, sinr_after_rfo_clamped};
use crate::link::{detector, estimation_error_var};
use crate::modulation::{demap, ModScheme};
use crate::radio_env::{cn_matrix, cn_sample, CMatrix};
use crate::rng::{stream, Purpose};
use crate::units::lin_to_db;

/// Symbol vectors simulated per RNG substream. Fixing this keeps results
/// independent of how chunks are scheduled.
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct OracleFlags {
    pub rfo: bool,
    pub imperfect_ce: bool,
}

impl OracleFlags {
    pub fn tag(&self) -> &'static str {
        match (self.rfo, self.imperfect_ce) {
            (false, false) => "ideal",
            (true, false) => "rfo",
            (false, true) => "ce",
            (true, true) => "rfo+ce",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelMode {
    /// Fresh `H` (and estimate) for every symbol vector.
    Fast,
    /// One channel and estimate held for the whole run.
    Frozen { h: CMatrix, h_hat: CMatrix },
}

#[derive(Debug, Clone)]
pub struct OracleConfig {
    pub m: usize,
    pub n: usize,
    pub scheme: ModScheme,
    /// Baseband SINR, linear.
    pub sinr: f64,
    pub flags: OracleFlags,
    pub n_symbols: usize,
    pub seed: u64,
    pub n_sub: usize,
    pub channel: ChannelMode,
}

impl OracleConfig {
    pub fn new(m: usize, n: usize, scheme: ModScheme, sinr: f64, n_symbols: usize, seed: u64) -> Self {
        Self {
            m,
            n,
            scheme,
            sinr,
            flags: OracleFlags::default(),
            n_symbols,
            seed,
            n_sub: 64,
            channel: ChannelMode::Fast,
        }
    }

    pub fn with_flags(mut self, flags: OracleFlags) -> Self {
        self.flags = flags;
        self
    }

    pub fn frozen(mut self, h: CMatrix, h_hat: CMatrix) -> Self {
        self.channel = ChannelMode::Frozen { h, h_hat };
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_symbols == 0 {
            return Err(domain("n_symbols must be at least 1"));
        }
        if self.m == 0 || self.m > self.n {
            return Err(domain(format!("need 1 <= M <= N, got M = {}, N = {}", self.m, self.n)));
        }
        if !(self.sinr >= 0.0) {
            return Err(domain("SINR must be non-negative"));
        }
        if let ChannelMode::Frozen { h, h_hat } = &self.channel {
            if h.shape() != (self.n, self.m) || h_hat.shape() != (self.n, self.m) {
                return Err(domain("frozen channel shape does not match (N, M)"));
            }
        }
        Ok(())
    }
}

/// Bit error rate with the standard error over symbol vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleResult {
    pub ber: f64,
    pub stderr: f64,
    pub n_bits: u64,
    pub n_errors: u64,
}

/// One CSV row of oracle output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub sinr_db: f64,
    pub m: usize,
    pub n: usize,
    pub u: u32,
    pub flags: String,
    pub ber: f64,
    pub stderr: f64,
    pub n_bits: u64,
}

impl OracleRow {
    pub fn new(cfg: &OracleConfig, r: &OracleResult) -> Self {
        Self {
            sinr_db: lin_to_db(cfg.sinr),
            m: cfg.m,
            n: cfg.n,
            u: cfg.scheme.bits(),
            flags: cfg.flags.tag().to_string(),
            ber: r.ber,
            stderr: r.stderr,
            n_bits: r.n_bits,
        }
    }
}

#[derive(Default)]
struct Tally {
    errors: u64,
    // per-vector error fractions, first and second moments
    sum: f64,
    sum_sq: f64,
    vectors: u64,
}

impl Tally {
    fn merge(mut self, o: Tally) -> Tally {
        self.errors += o.errors;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
        self.vectors += o.vectors;
        self
    }
}

pub fn simulate_link_ber(cfg: &OracleConfig) -> Result<OracleResult> {
    cfg.validate()?;
    let sigma_rfo = if cfg.flags.rfo && cfg.sinr > 0.0 {
        Some(rfo_std(cfg.sinr, cfg.n_sub)?)
    } else {
        None
    };
    let chunks = cfg.n_symbols.div_ceil(CHUNK);
    let tally = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(cfg.n_symbols - c * CHUNK);
            let mut rng = stream(cfg.seed, Purpose::Oracle, c as u64);
            run_chunk(cfg, sigma_rfo, count, &mut rng)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Tally::default(), Tally::merge);
    let bits_per_vector = (cfg.m as u64) * cfg.scheme.bits() as u64;
    let n = tally.vectors as f64;
    let mean = tally.sum / n;
    let stderr = if tally.vectors > 1 {
        ((tally.sum_sq - n * mean * mean).max(0.0) / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    Ok(OracleResult {
        ber: mean,
        stderr,
        n_bits: tally.vectors * bits_per_vector,
        n_errors: tally.errors,
    })
}

fn run_chunk<R: Rng + ?Sized>(cfg: &OracleConfig, sigma_rfo: Option<f64>, count: usize, rng: &mut R) -> Tally {
    let (m, n) = (cfg.m, cfg.n);
    let pts = cfg.scheme.points();
    let bits = (m as f64) * cfg.scheme.bits() as f64;
    let inv_sqrt_m = Complex64::from(1.0 / (m as f64).sqrt());
    let mut tally = Tally::default();
    let mut labels = vec![0u32; m];
    let mut x = nalgebra::DVector::<Complex64>::zeros(m);

    // frozen channels keep one detector unless the offset varies it
    let frozen_w = match (&cfg.channel, sigma_rfo) {
        (ChannelMode::Frozen { h_hat, .. }, None) => Some(detector(h_hat, cfg.sinr).ok()),
        _ => None,
    };

    for _ in 0..count {
        let sinr = match sigma_rfo {
            Some(s) => {
                let eps: f64 = rng.sample::<f64, _>(rand_distr::StandardNormal) * s;
                sinr_after_rfo_clamped(cfg.sinr, eps)
            }
            None => cfg.sinr,
        };
        let (h, w) = match &cfg.channel {
            ChannelMode::Fast => {
                let h = cn_matrix(rng, n, m, 1.0);
                let h_hat = if cfg.flags.imperfect_ce && sinr.is_finite() && sinr > 0.0 {
                    let scale = (m as f64 * estimation_error_var(m, sinr)).sqrt();
                    &h + cn_matrix(rng, n, m, 1.0) * Complex64::from(scale)
                } else {
                    h.clone()
                };
                let w = detector(&h_hat, sinr).ok();
                (std::borrow::Cow::Owned(h), w)
            }
            ChannelMode::Frozen { h, h_hat } => {
                let w = match &frozen_w {
                    Some(w) => w.clone(),
                    None => detector(h_hat, sinr).ok(),
                };
                (std::borrow::Cow::Borrowed(h), w)
            }
        };
        for k in 0..m {
            labels[k] = rng.random_range(0..pts.len() as u32);
            x[k] = pts[labels[k] as usize];
        }
        let noise_var = if sinr > 0.0 { 1.0 / sinr } else { f64::INFINITY };
        let errs = match w {
            Some(w) if noise_var.is_finite() => {
                let mut y = &*h * &x * inv_sqrt_m;
                if noise_var > 0.0 {
                    for v in y.iter_mut() {
                        *v += cn_sample(rng, noise_var);
                    }
                }
                let x_hat = w * y;
                (0..m)
                    .map(|k| (demap(x_hat[k], &cfg.scheme) ^ labels[k]).count_ones() as u64)
                    .sum::<u64>()
            }
            // no usable signal: decisions are independent of the data
            _ => (0..m)
                .map(|k| (rng.random_range(0..pts.len() as u32) ^ labels[k]).count_ones() as u64)
                .sum(),
        };
        let frac = errs as f64 / bits;
        tally.errors += errs;
        tally.sum += frac;
        tally.sum_sq += frac * frac;
        tally.vectors += 1;
    }
    tally
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::q_function;
    use crate::units::db_to_lin;

    fn one() -> CMatrix {
        CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0))
    }

    #[test]
    fn bpsk_awgn() {
        for db in [0.0, 4.0] {
            let s = db_to_lin(db);
            let cfg = OracleConfig::new(1, 1, ModScheme::bpsk(), s, 200_000, 1).frozen(one(), one());
            let r = simulate_link_ber(&cfg).unwrap();
            let exact = q_function((2.0 * s).sqrt());
            assert!((r.ber - exact).abs() < 3.0 * r.stderr, "{db}: {} vs {exact}", r.ber);
        }
    }

    #[test]
    fn noiseless_orthogonal_is_error_free() {
        let mut h = CMatrix::zeros(2, 2);
        h[(0, 0)] = Complex64::new(1.0, 0.0);
        h[(1, 1)] = Complex64::new(0.0, -1.0);
        let cfg = OracleConfig::new(2, 2, ModScheme::qam64(), f64::INFINITY, 100_000, 2).frozen(h.clone(), h);
        let r = simulate_link_ber(&cfg).unwrap();
        assert_eq!(r.n_errors, 0);
        assert_eq!(r.n_bits, 1_200_000);
    }

    #[test]
    fn pure_noise_is_coin_flip() {
        let cfg = OracleConfig::new(1, 1, ModScheme::bpsk(), 0.0, 50_000, 3);
        let r = simulate_link_ber(&cfg).unwrap();
        assert!((r.ber - 0.5).abs() < 3.0 * r.stderr + 1e-12, "{r:?}");
    }

    #[test]
    fn deterministic_for_seed() {
        let cfg = OracleConfig::new(2, 2, ModScheme::qpsk(), 10.0, 10_000, 4).with_flags(OracleFlags {
            rfo: true,
            imperfect_ce: true,
        });
        assert_eq!(simulate_link_ber(&cfg).unwrap(), simulate_link_ber(&cfg).unwrap());
    }

    #[test]
    fn rejects_bad_config() {
        assert!(simulate_link_ber(&OracleConfig::new(2, 1, ModScheme::bpsk(), 1.0, 10, 0)).is_err());
        assert!(simulate_link_ber(&OracleConfig::new(1, 1, ModScheme::bpsk(), 1.0, 0, 0)).is_err());
        let bad = OracleConfig::new(1, 2, ModScheme::bpsk(), 1.0, 10, 0).frozen(one(), one());
        assert!(simulate_link_ber(&bad).is_err());
    }

    #[test]
    fn row_fields() {
        let cfg = OracleConfig::new(1, 1, ModScheme::qam16(), 100.0, 10, 0);
        let r = simulate_link_ber(&cfg).unwrap();
        let row = OracleRow::new(&cfg, &r);
        assert_eq!(
            (row.sinr_db, row.u, row.n_bits, row.flags.as_str()),
            (20.0, 4, 40, "ideal")
        );
    }
}

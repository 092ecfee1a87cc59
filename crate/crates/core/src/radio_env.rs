//! Radio environment: path loss, thermal noise, topologies, Rayleigh fading.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Result};
use crate::params::SystemParams;
use crate::units::db_to_lin;

pub type CMatrix = DMatrix<Complex64>;

/// Radius of the disk Tx nodes are dropped in (m).
pub const DISK_RADIUS_M: f64 = 1000.0;
/// Tx-Rx separation range within a pair (m).
pub const PAIR_DISTANCE_M: (f64, f64) = (10.0, 300.0);

/// Path loss in dB, as a positive attenuation. The configured reference
/// loss is tabulated with a negative sign (-46 dB); only its magnitude is
/// used.
pub fn path_loss_db(d: f64, params: &SystemParams) -> f64 {
    params.lp_d0_db.abs() + 10.0 * params.alpha * (d / params.d0).log10()
}

/// Linear power gain at distance `d`. The model is undefined inside the
/// reference distance.
pub fn path_gain(d: f64, params: &SystemParams) -> Result<f64> {
    if !(d >= params.d0) {
        return Err(domain(format!(
            "distance {d} m is inside the reference distance {} m",
            params.d0
        )));
    }
    Ok(db_to_lin(-path_loss_db(d, params)))
}

/// Per-subcarrier thermal noise power in dBm.
pub fn noise_dbm(params: &SystemParams) -> f64 {
    params.eta_n_dbm_hz + 10.0 * params.ws.log10() + params.f_n_db
}

/// Per-subcarrier thermal noise power, linear mW.
pub fn noise_variance(params: &SystemParams) -> f64 {
    db_to_lin(noise_dbm(params))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// K transceiver pairs. Entry `(j, i)` of `d` and `rho` describes the link
/// from Tx `i` to Rx `j`; the diagonal holds the intended links.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub d: DMatrix<f64>,
    pub rho: DMatrix<f64>,
    pub tx: Vec<Point>,
    pub rx: Vec<Point>,
}

impl Topology {
    pub fn k(&self) -> usize {
        self.d.nrows()
    }

    /// Builds a topology from node positions. Cross-link distances below the
    /// reference distance are clamped to it.
    pub fn from_positions(tx: Vec<Point>, rx: Vec<Point>, params: &SystemParams) -> Self {
        let k = tx.len();
        assert_eq!(k, rx.len(), "tx/rx count mismatch");
        let d = DMatrix::from_fn(k, k, |j, i| rx[j].dist(&tx[i]).max(params.d0));
        Self::with_distances(d, tx, rx, params)
    }

    /// Builds a topology from a distance matrix alone.
    pub fn from_distances(d: DMatrix<f64>, params: &SystemParams) -> Result<Self> {
        assert!(d.is_square(), "distance matrix must be square");
        if let Some(bad) = d.iter().find(|&&x| !(x >= params.d0)) {
            return Err(domain(format!("distance {bad} m below the reference distance")));
        }
        Ok(Self::with_distances(d, Vec::new(), Vec::new(), params))
    }

    fn with_distances(d: DMatrix<f64>, tx: Vec<Point>, rx: Vec<Point>, params: &SystemParams) -> Self {
        let rho = d.map(|x| db_to_lin(-path_loss_db(x, params)));
        Self { d, rho, tx, rx }
    }

    /// Restriction to a subset of pairs, in the given order.
    pub fn subset(&self, idx: &[usize]) -> Self {
        let k = idx.len();
        let pick = |m: &DMatrix<f64>| DMatrix::from_fn(k, k, |a, b| m[(idx[a], idx[b])]);
        let pts = |v: &Vec<Point>| {
            if v.is_empty() {
                Vec::new()
            } else {
                idx.iter().map(|&i| v[i]).collect()
            }
        };
        Self {
            d: pick(&self.d),
            rho: pick(&self.rho),
            tx: pts(&self.tx),
            rx: pts(&self.rx),
        }
    }
}

/// Drops `k` pairs: Tx uniform over the disk, Rx at a uniform distance in
/// [10, 300] m and uniform bearing from its Tx.
pub fn sample_topology<R: Rng + ?Sized>(k: usize, params: &SystemParams, rng: &mut R) -> Topology {
    assert!(k >= 1, "need at least one pair");
    let mut tx = Vec::with_capacity(k);
    let mut rx = Vec::with_capacity(k);
    for _ in 0..k {
        let r = DISK_RADIUS_M * rng.random::<f64>().sqrt();
        let th = 2.0 * PI * rng.random::<f64>();
        let t = Point {
            x: r * th.cos(),
            y: r * th.sin(),
        };
        let dist = rng.random_range(PAIR_DISTANCE_M.0..=PAIR_DISTANCE_M.1);
        let phi = 2.0 * PI * rng.random::<f64>();
        tx.push(t);
        rx.push(Point {
            x: t.x + dist * phi.cos(),
            y: t.y + dist * phi.sin(),
        });
    }
    Topology::from_positions(tx, rx, params)
}

/// One circularly-symmetric complex Gaussian sample with variance `var`.
#[inline]
pub fn cn_sample<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// `rows x cols` matrix of i.i.d. CN(0, var) entries.
pub fn cn_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, var: f64) -> CMatrix {
    // column-major fill keeps the draw order fixed for a given shape
    CMatrix::from_fn(rows, cols, |_, _| cn_sample(rng, var))
}

/// Flat Rayleigh channel on one subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingRealization {
    pub h: CMatrix,
}

/// `ns` independent N x M Rayleigh channels, one per subcarrier.
pub fn sample_fading<R: Rng + ?Sized>(m: usize, n: usize, ns: usize, rng: &mut R) -> Vec<FadingRealization> {
    assert!(m >= 1 && n >= 1, "antenna counts must be positive");
    (0..ns)
        .map(|_| FadingRealization {
            h: cn_matrix(rng, n, m, 1.0),
        })
        .collect()
}

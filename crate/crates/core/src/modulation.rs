//! Gray-mapped BPSK and square QAM constellations.
//!
//! `points[l]` is the constellation point carrying bit label `l`. For square
//! QAM the upper `U/2` bits select the in-phase level and the lower `U/2`
//! bits the quadrature level, each through a binary-reflected Gray code, so
//! neighbouring levels on either axis differ in exactly one bit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bits per symbol supported by the link model.
pub const BITS_PER_SYMBOL: [u32; 4] = [1, 2, 4, 6];

#[inline]
pub fn gray(i: u32) -> u32 {
    i ^ (i >> 1)
}

#[inline]
pub fn gray_inverse(mut g: u32) -> u32 {
    let mut i = g;
    while g > 1 {
        g >>= 1;
        i ^= g;
    }
    i
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct ModScheme {
    u: u32,
    d: f64,
    points: Vec<Complex64>,
    /// Per-axis amplitude levels, ascending.
    levels: Vec<f64>,
}

impl TryFrom<u32> for ModScheme {
    type Error = Error;
    fn try_from(u: u32) -> Result<Self> {
        Self::new(u)
    }
}

impl From<ModScheme> for u32 {
    fn from(m: ModScheme) -> u32 {
        m.u
    }
}

impl ModScheme {
    pub fn new(u: u32) -> Result<Self> {
        let d = match u {
            1 => 1.0,
            2 => 2.0,
            4 => 10.0,
            6 => 42.0,
            _ => {
                return Err(Error::InvalidParam {
                    key: "u".into(),
                    reason: format!("unsupported bits per symbol {u}"),
                })
            }
        };
        let scale = 1.0 / f64::sqrt(d);
        let per_axis = if u == 1 { 2 } else { 1u32 << (u / 2) };
        let levels: Vec<f64> = (0..per_axis)
            .map(|i| (2.0 * i as f64 - (per_axis - 1) as f64) * scale)
            .collect();
        let points = if u == 1 {
            levels.iter().map(|&x| Complex64::new(x, 0.0)).collect()
        } else {
            let h = u / 2;
            let mask = (1u32 << h) - 1;
            (0..1u32 << u)
                .map(|l| {
                    let i = gray_inverse(l >> h) as usize;
                    let q = gray_inverse(l & mask) as usize;
                    Complex64::new(levels[i], levels[q])
                })
                .collect()
        };
        Ok(Self { u, d, points, levels })
    }

    pub fn bpsk() -> Self {
        Self::new(1).unwrap()
    }

    pub fn qpsk() -> Self {
        Self::new(2).unwrap()
    }

    pub fn qam16() -> Self {
        Self::new(4).unwrap()
    }

    pub fn qam64() -> Self {
        Self::new(6).unwrap()
    }

    pub fn all() -> Vec<Self> {
        BITS_PER_SYMBOL.iter().map(|&u| Self::new(u).unwrap()).collect()
    }

    /// Bits per symbol.
    pub fn bits(&self) -> u32 {
        self.u
    }

    /// Energy normalizer: levels sit at odd multiples of `1/sqrt(D)`.
    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Whether the quadrature axis carries bits.
    pub fn is_complex(&self) -> bool {
        self.u > 1
    }

    /// Bits carried per axis.
    pub fn bits_per_axis(&self) -> u32 {
        if self.u == 1 {
            1
        } else {
            self.u / 2
        }
    }

    /// Half the spacing between adjacent levels.
    pub fn half_spacing(&self) -> f64 {
        1.0 / self.d.sqrt()
    }

    /// Gray label of axis level `i`.
    pub fn axis_label(&self, i: usize) -> u32 {
        if self.u == 1 {
            i as u32
        } else {
            gray(i as u32)
        }
    }

    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    pub fn name(&self) -> &'static str {
        match self.u {
            1 => "BPSK",
            2 => "QPSK",
            4 => "16QAM",
            _ => "64QAM",
        }
    }
}

/// Hard minimum-distance decision. Ties go to the lower label.
pub fn demap(y_hat: Complex64, scheme: &ModScheme) -> u32 {
    let mut best = 0u32;
    let mut best_d = f64::INFINITY;
    for (l, z) in scheme.points.iter().enumerate() {
        let d = (y_hat - z).norm_sqr();
        if d < best_d {
            best_d = d;
            best = l as u32;
        }
    }
    best
}

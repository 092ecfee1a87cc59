//! Semi-analytic BER of an MMSE-detected MIMO-OFDM link.
//!
//! A link with `M` streams and `N` receive antennas sees, per subcarrier,
//! `y = H x / sqrt(M) + n` with unit-energy symbols and noise variance
//! `1 / SINR`. The receiver knows only an LS estimate
//! `H_hat = H + sqrt(M) E`, `E ~ CN(0, 1 / (M_train SINR))`, and applies the
//! MMSE filter built from it. Given `(H, H_hat)`, each stream's detector
//! output is modelled as `S_mm Z + Gaussian`, with `S = W H / sqrt(M)`, and
//! its bit error probability follows from Gaussian tail integrals over the
//! per-axis decision regions of the Gray-mapped constellation.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::impairment::{rfo_std_unchecked, sinr_after_rfo_clamped, sinr_baseband};
use crate::modulation::ModScheme;
use crate::params::SystemParams;
use crate::quadrature::GaussHermite;
use crate::radio_env::{cn_matrix, CMatrix};

/// Which impairments are applied along the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Impairments {
    pub phase_noise: bool,
    pub rfo: bool,
    pub channel_estimation: bool,
}

impl Impairments {
    pub const NONE: Self = Self {
        phase_noise: false,
        rfo: false,
        channel_estimation: false,
    };
    pub const ALL: Self = Self {
        phase_noise: true,
        rfo: true,
        channel_estimation: true,
    };
    pub const PHASE_NOISE: Self = Self {
        phase_noise: true,
        ..Self::NONE
    };
    pub const RFO: Self = Self {
        rfo: true,
        ..Self::NONE
    };
    pub const CHANNEL_ESTIMATION: Self = Self {
        channel_estimation: true,
        ..Self::NONE
    };

    pub fn any(&self) -> bool {
        self.phase_noise || self.rfo || self.channel_estimation
    }

    /// Short tag used in file names and CSV columns.
    pub fn tag(&self) -> &'static str {
        match (self.phase_noise, self.rfo, self.channel_estimation) {
            (false, false, false) => "ideal",
            (true, true, true) => "imp",
            (true, false, false) => "pn",
            (false, true, false) => "rfo",
            (false, false, true) => "ce",
            (true, true, false) => "pn+rfo",
            (true, false, true) => "pn+ce",
            (false, true, true) => "rfo+ce",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        [
            Self::NONE,
            Self::ALL,
            Self::PHASE_NOISE,
            Self::RFO,
            Self::CHANNEL_ESTIMATION,
            Self {
                rfo: false,
                ..Self::ALL
            },
            Self {
                phase_noise: false,
                ..Self::ALL
            },
            Self {
                channel_estimation: false,
                ..Self::ALL
            },
        ]
        .into_iter()
        .find(|f| f.tag() == tag)
    }
}

/// Post-detection interference model for stream `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterferenceModel {
    /// Leakage from the other streams into row `m` of `S`, plus noise
    /// scaled by the filter row energy `||w_m||^2`.
    #[default]
    RowLeakage,
    /// Diagonal entries of the other streams plus unscaled noise, as the
    /// expression is usually printed.
    DiagonalLiteral,
}

/// How per-axis symbol errors are turned into bit errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorModel {
    /// Probability mass of every wrong decision region, weighted by the
    /// Gray-label Hamming distance.
    #[default]
    GrayRegions,
    /// Nearest-neighbour terms only, one bit per neighbour error.
    NearestNeighbour,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BerOptions {
    pub interference: InterferenceModel,
    pub errors: ErrorModel,
}

/// Number of training symbols for `m` streams: the next power of two.
pub fn training_length(m: usize) -> usize {
    m.max(1).next_power_of_two()
}

/// Per-entry variance of the estimation noise term before the `sqrt(M)`
/// scaling.
pub fn estimation_error_var(m: usize, sinr: f64) -> f64 {
    1.0 / (training_length(m) as f64 * sinr)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedChannel {
    pub h_hat: CMatrix,
    pub err_var: f64,
}

/// Draws an LS channel estimate for `h` at SINR `sinr_rfo`.
pub fn perturb_channel<R: Rng + ?Sized>(h: &CMatrix, sinr_rfo: f64, m: usize, rng: &mut R) -> EstimatedChannel {
    let err_var = estimation_error_var(m, sinr_rfo);
    let e = cn_matrix(rng, h.nrows(), h.ncols(), 1.0);
    EstimatedChannel {
        h_hat: h + e * Complex64::from((m as f64 * err_var).sqrt()),
        err_var,
    }
}

/// `W = H_hat^H (H_hat H_hat^H + I / sinr)^-1`.
pub fn mmse_weights(h_hat: &CMatrix, sinr: f64) -> Result<CMatrix> {
    let n = h_hat.nrows();
    let nu = if sinr.is_infinite() { 0.0 } else { 1.0 / sinr };
    let a = h_hat * h_hat.adjoint() + CMatrix::identity(n, n) * Complex64::from(nu);
    let scale = (0..n).map(|i| a[(i, i)].re).fold(0.0, f64::max);
    let chol = a
        .cholesky()
        .filter(|c| (0..n).all(|i| c.l_dirty()[(i, i)].re.powi(2) > 1e-12 * scale))
        .ok_or_else(|| Error::Numerical("MMSE covariance is singular".into()))?;
    // A is Hermitian, so W^H = A^-1 H_hat
    Ok(chol.solve(h_hat).adjoint())
}

/// MMSE filter for the `1/sqrt(M)` power split: built on `H_hat / sqrt(M)`.
pub fn detector(h_hat: &CMatrix, sinr: f64) -> Result<CMatrix> {
    let m = h_hat.ncols() as f64;
    mmse_weights(&(h_hat / Complex64::from(m.sqrt())), sinr)
}

/// Gaussian tail `Q(x / sd)`, with the `sd = 0` limit resolved.
#[inline]
fn q_ratio(x: f64, sd: f64) -> f64 {
    if sd > 0.0 {
        0.5 * erfc(x / (sd * std::f64::consts::SQRT_2))
    } else if x > 0.0 {
        0.0
    } else if x < 0.0 {
        1.0
    } else {
        0.5
    }
}

/// Tail function `Q(x) = P(X > x)`, `X ~ N(0, 1)`.
pub fn q_function(x: f64) -> f64 {
    q_ratio(x, 1.0)
}

/// Expected bit errors per axis bit when level `i` is sent and the detector
/// output on that axis is `N(mu, sd^2)`.
fn axis_ber(mu: f64, i: usize, scheme: &ModScheme, sd: f64, model: ErrorModel) -> f64 {
    let levels = scheme.levels();
    let l = levels.len();
    let h = scheme.half_spacing();
    let bound = |t: usize| levels[t] + h;
    let per_axis = scheme.bits_per_axis() as f64;
    match model {
        ErrorModel::NearestNeighbour => {
            let up = if i + 1 < l { q_ratio(bound(i) - mu, sd) } else { 0.0 };
            let down = if i > 0 { q_ratio(mu - bound(i - 1), sd) } else { 0.0 };
            (up + down) / per_axis
        }
        ErrorModel::GrayRegions => {
            let li = scheme.axis_label(i);
            let mut acc = 0.0;
            // regions above i from upper tails, below i from lower tails
            let mut prev = if i + 1 < l { q_ratio(bound(i) - mu, sd) } else { 0.0 };
            for j in i + 1..l {
                let next = if j + 1 < l { q_ratio(bound(j) - mu, sd) } else { 0.0 };
                acc += (prev - next) * (li ^ scheme.axis_label(j)).count_ones() as f64;
                prev = next;
            }
            let mut prev = if i > 0 { q_ratio(mu - bound(i - 1), sd) } else { 0.0 };
            for j in (0..i).rev() {
                let next = if j > 0 { q_ratio(mu - bound(j - 1), sd) } else { 0.0 };
                acc += (prev - next) * (li ^ scheme.axis_label(j)).count_ones() as f64;
                prev = next;
            }
            acc / per_axis
        }
    }
}

/// Average BER of one stream whose detector output is `s Z + v`,
/// `v ~ CN(0, var)`.
pub fn stream_ber(s: Complex64, var: f64, scheme: &ModScheme, model: ErrorModel) -> f64 {
    let sd = (var / 2.0).max(0.0).sqrt();
    let levels = scheme.levels();
    let l = levels.len();
    if !scheme.is_complex() {
        return (0..l)
            .map(|i| axis_ber(s.re * levels[i], i, scheme, sd, model))
            .sum::<f64>()
            / l as f64;
    }
    if s.im == 0.0 {
        // real gain: the two axes decouple and are identically distributed
        return (0..l)
            .map(|i| axis_ber(s.re * levels[i], i, scheme, sd, model))
            .sum::<f64>()
            / l as f64;
    }
    let mut acc = 0.0;
    for i in 0..l {
        for q in 0..l {
            let e = s * Complex64::new(levels[i], levels[q]);
            acc += axis_ber(e.re, i, scheme, sd, model) + axis_ber(e.im, q, scheme, sd, model);
        }
    }
    acc / (2 * l * l) as f64
}

/// BER given the true channel `h` (N x M), its estimate `h_hat`, and the
/// post-offset SINR.
pub fn conditional_ber(h: &CMatrix, h_hat: &CMatrix, sinr_rfo: f64, scheme: &ModScheme, opts: BerOptions) -> f64 {
    if !(sinr_rfo > 0.0) {
        return 0.5;
    }
    let m = h.ncols();
    let w = match detector(h_hat, sinr_rfo) {
        Ok(w) => w,
        Err(_) => return 0.5,
    };
    let nu = if sinr_rfo.is_infinite() { 0.0 } else { 1.0 / sinr_rfo };
    let s_mat = &w * h / Complex64::from((m as f64).sqrt());
    stream_average(&s_mat, &w, nu, scheme, opts)
}

fn stream_average(s_mat: &CMatrix, w: &CMatrix, nu: f64, scheme: &ModScheme, opts: BerOptions) -> f64 {
    let m = s_mat.nrows();
    let mut total = 0.0;
    for k in 0..m {
        let s = s_mat[(k, k)];
        let var = match opts.interference {
            InterferenceModel::RowLeakage => {
                let leak: f64 = (0..m).filter(|&l| l != k).map(|l| s_mat[(k, l)].norm_sqr()).sum();
                let wn: f64 = w.row(k).iter().map(|x| x.norm_sqr()).sum();
                leak + wn * nu
            }
            InterferenceModel::DiagonalLiteral => {
                let leak: f64 = (0..m).filter(|&l| l != k).map(|l| s_mat[(l, l)].norm_sqr()).sum();
                leak + nu
            }
        };
        // perfect estimates give a real diagonal; strip rounding residue
        let s = if s.im.abs() <= 1e-13 * s.re.abs() {
            Complex64::new(s.re, 0.0)
        } else {
            s
        };
        total += stream_ber(s, var, scheme, opts.errors);
    }
    total / m as f64
}

/// Mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl BerEstimate {
    pub fn from_samples(v: &[f64]) -> Self {
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr, n }
    }
}

/// Pre-drawn Rayleigh channels with unit-variance estimation noise, reused
/// across SINR values so that curves are evaluated under common random
/// numbers.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    m: usize,
    n: usize,
    draws: Vec<(CMatrix, CMatrix)>,
}

impl ChannelSet {
    pub fn draw<R: Rng + ?Sized>(m: usize, n: usize, count: usize, rng: &mut R) -> Self {
        assert!(m >= 1 && n >= m, "need 1 <= M <= N");
        assert!(count >= 1, "need at least one draw");
        let draws = (0..count)
            .map(|_| {
                let h = cn_matrix(rng, n, m, 1.0);
                let e = cn_matrix(rng, n, m, 1.0);
                (h, e)
            })
            .collect();
        Self { m, n, draws }
    }

    pub fn streams(&self) -> usize {
        self.m
    }

    pub fn rx(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn channel(&self, idx: usize) -> &CMatrix {
        &self.draws[idx].0
    }

    /// Channel estimate for draw `idx` at SINR `sinr`.
    pub fn estimate(&self, idx: usize, sinr: f64) -> CMatrix {
        let (h, e) = &self.draws[idx];
        if sinr.is_infinite() {
            return h.clone();
        }
        let scale = (self.m as f64 * estimation_error_var(self.m, sinr)).sqrt();
        h + e * Complex64::from(scale)
    }

    /// Per-draw conditional BER at `sinr_rfo`.
    pub fn conditional(&self, sinr_rfo: f64, scheme: &ModScheme, ce: bool, opts: BerOptions) -> Vec<f64> {
        (0..self.draws.len())
            .into_par_iter()
            .map(|i| {
                let h = self.channel(i);
                if ce {
                    conditional_ber(h, &self.estimate(i, sinr_rfo), sinr_rfo, scheme, opts)
                } else {
                    conditional_ber(h, h, sinr_rfo, scheme, opts)
                }
            })
            .collect()
    }
}

/// Channel-averaged BER at a fixed post-offset SINR, with estimation error.
pub fn ber_over_channels<R: Rng + ?Sized>(
    sinr_rfo: f64,
    m: usize,
    n: usize,
    scheme: &ModScheme,
    n_draws: usize,
    rng: &mut R,
) -> BerEstimate {
    let set = ChannelSet::draw(m, n, n_draws, rng);
    BerEstimate::from_samples(&set.conditional(sinr_rfo, scheme, true, BerOptions::default()))
}

/// Evaluates the impairment chain on a fixed [`ChannelSet`].
#[derive(Debug, Clone)]
pub struct LinkModel {
    pub f_ici: f64,
    pub n_sub: usize,
    pub flags: Impairments,
    pub opts: BerOptions,
    pub quad: GaussHermite,
}

impl LinkModel {
    pub fn new(params: &SystemParams, flags: Impairments, quad_order: usize) -> Self {
        Self {
            f_ici: params.f_ici,
            n_sub: params.n_sub,
            flags,
            opts: BerOptions::default(),
            quad: GaussHermite::new(quad_order),
        }
    }

    pub fn with_options(mut self, opts: BerOptions) -> Self {
        self.opts = opts;
        self
    }

    /// Baseband SINR for a given RF-input SINR.
    pub fn baseband_sinr(&self, sinr_in: f64) -> f64 {
        if self.flags.phase_noise {
            sinr_baseband(sinr_in, self.f_ici)
        } else {
            sinr_in
        }
    }

    /// BER averaged over channels and, if enabled, the offset distribution.
    pub fn ber_baseband(&self, set: &ChannelSet, sinr_b: f64, scheme: &ModScheme) -> BerEstimate {
        let ce = self.flags.channel_estimation;
        if !self.flags.rfo || !(sinr_b > 0.0) || sinr_b.is_infinite() {
            return BerEstimate::from_samples(&set.conditional(sinr_b, scheme, ce, self.opts));
        }
        let sigma = rfo_std_unchecked(sinr_b, self.n_sub);
        // weights applied per draw so the standard error reflects the channel spread
        let weighted = self.rfo_weighted(set, sinr_b, sigma, scheme, ce);
        BerEstimate::from_samples(&weighted)
    }

    fn rfo_weighted(&self, set: &ChannelSet, sinr_b: f64, sigma: f64, scheme: &ModScheme, ce: bool) -> Vec<f64> {
        let gh = &self.quad;
        let n = gh.nodes.len();
        let s = std::f64::consts::SQRT_2 * sigma;
        let norm = std::f64::consts::PI.sqrt();
        let mut acc = vec![0.0; set.len()];
        for i in 0..n.div_ceil(2) {
            let w = if n - 1 - i == i {
                gh.weights[i]
            } else {
                2.0 * gh.weights[i]
            } / norm;
            let eps = s * gh.nodes[i].abs();
            let v = set.conditional(sinr_after_rfo_clamped(sinr_b, eps), scheme, ce, self.opts);
            for (a, x) in acc.iter_mut().zip(v) {
                *a += w * x;
            }
        }
        acc
    }

    /// BER for an RF-input SINR through the whole chain.
    pub fn ber_end_to_end(&self, set: &ChannelSet, sinr_in: f64, scheme: &ModScheme) -> BerEstimate {
        self.ber_baseband(set, self.baseband_sinr(sinr_in), scheme)
    }
}

/// Offset-averaged BER at baseband SINR `sinr_b` with estimation error.
#[allow(clippy::too_many_arguments)]
pub fn ber_with_rfo<R: Rng + ?Sized>(
    sinr_b: f64,
    m: usize,
    n: usize,
    scheme: &ModScheme,
    quad_order: usize,
    n_draws: usize,
    n_sub: usize,
    rng: &mut R,
) -> Result<BerEstimate> {
    if !(sinr_b > 0.0) {
        return Err(crate::error::domain("baseband SINR must be positive"));
    }
    let set = ChannelSet::draw(m, n, n_draws, rng);
    let model = LinkModel {
        f_ici: 0.0,
        n_sub,
        flags: Impairments {
            rfo: true,
            channel_estimation: true,
            phase_noise: false,
        },
        opts: BerOptions::default(),
        quad: GaussHermite::new(quad_order),
    };
    Ok(model.ber_baseband(&set, sinr_b, scheme))
}

/// BER for RF-input SINR `sinr_in` with the selected impairments.
#[allow(clippy::too_many_arguments)]
pub fn ber_end_to_end<R: Rng + ?Sized>(
    sinr_in: f64,
    m: usize,
    n: usize,
    scheme: &ModScheme,
    flags: Impairments,
    params: &SystemParams,
    n_draws: usize,
    rng: &mut R,
) -> BerEstimate {
    let set = ChannelSet::draw(m, n, n_draws, rng);
    LinkModel::new(params, flags, 15).ber_end_to_end(&set, sinr_in, scheme)
}

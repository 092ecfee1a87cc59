//! Transceiver impairments as SINR maps.
//!
//! Phase noise turns a fraction `F_ICI` of both the transmitted and the
//! received signal power into white inter-carrier interference, which caps
//! the SINR reaching baseband at `1 / (2 F_ICI)`. Residual frequency offset
//! after two-symbol training is Gaussian with an SINR-dependent variance and
//! degrades the post-FFT SINR through a sinc attenuation plus ICI term.

use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::params::PhaseNoisePsdParams;
use crate::quadrature;

/// Coefficient of the ICI term in the RFO-degraded SINR bound.
pub const RFO_ICI_COEFF: f64 = 0.5947;
/// RFO draws are held strictly inside the unambiguous range.
pub const RFO_CLAMP: f64 = 0.4999;

/// Phase-noise PSD (1/Hz) at offset `f`.
pub fn phase_noise_psd(f: f64, psd: &PhaseNoisePsdParams) -> f64 {
    let slope = psd.b / (psd.f_h - psd.f_l);
    let shaped = if f.abs() <= psd.f_l {
        -psd.a
    } else {
        -(f.abs() - psd.f_l) * slope - psd.a
    };
    10f64.powf(-psd.c) + 10f64.powf(shaped)
}

/// ICI factor: integral of the phase-noise PSD over the occupied band.
pub fn ici_factor(psd: &PhaseNoisePsdParams, w_t: f64) -> Result<f64> {
    if !(w_t > 0.0) {
        return Err(domain("bandwidth must be positive"));
    }
    let half = w_t / 2.0;
    quadrature::integrate(|f| phase_noise_psd(f, psd), -half, half, &[-psd.f_l, psd.f_l], 1e-6)
}

/// SINR at the baseband input given the RF-input SINR.
#[inline]
pub fn sinr_baseband(sinr_in: f64, f_ici: f64) -> f64 {
    if sinr_in.is_infinite() {
        return if f_ici > 0.0 {
            1.0 / (2.0 * f_ici)
        } else {
            f64::INFINITY
        };
    }
    sinr_in / (1.0 + 2.0 * sinr_in * f_ici)
}

/// Standard deviation of the residual normalized frequency offset.
pub fn rfo_std(sinr_b: f64, n_sub: usize) -> Result<f64> {
    if !(sinr_b > 0.0) {
        return Err(domain("RFO variance needs a positive baseband SINR"));
    }
    if n_sub == 0 {
        return Err(domain("n_sub must be at least 1"));
    }
    Ok(rfo_std_unchecked(sinr_b, n_sub))
}

#[inline]
pub(crate) fn rfo_std_unchecked(sinr_b: f64, n_sub: usize) -> f64 {
    (1.0 / ((2.0 * PI).powi(2) * n_sub as f64 * sinr_b)).sqrt()
}

/// Residual-offset model for one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfoModel {
    pub n_sub: usize,
    pub sigma2: f64,
}

impl RfoModel {
    pub fn new(sinr_b: f64, n_sub: usize) -> Result<Self> {
        let s = rfo_std(sinr_b, n_sub)?;
        Ok(Self { n_sub, sigma2: s * s })
    }

    pub fn std(&self) -> f64 {
        self.sigma2.sqrt()
    }
}

/// Lower bound on the post-FFT SINR under a normalized offset `eps`.
pub fn sinr_after_rfo(sinr_b: f64, eps: f64) -> Result<f64> {
    if !(eps.abs() < 0.5) {
        return Err(domain(format!("normalized offset {eps} outside (-0.5, 0.5)")));
    }
    Ok(sinr_after_rfo_unchecked(sinr_b, eps))
}

/// [`sinr_after_rfo`] with `eps` clamped to `+-RFO_CLAMP`.
#[inline]
pub fn sinr_after_rfo_clamped(sinr_b: f64, eps: f64) -> f64 {
    sinr_after_rfo_unchecked(sinr_b, eps.clamp(-RFO_CLAMP, RFO_CLAMP))
}

#[inline]
fn sinr_after_rfo_unchecked(sinr_b: f64, eps: f64) -> f64 {
    if eps == 0.0 {
        return sinr_b;
    }
    let s = (PI * eps).sin();
    let sinc = s / (PI * eps);
    if sinr_b.is_infinite() {
        return sinc * sinc / (RFO_ICI_COEFF * s * s);
    }
    sinr_b * sinc * sinc / (1.0 + RFO_ICI_COEFF * sinr_b * s * s)
}

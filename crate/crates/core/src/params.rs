//! System configuration.
//!
//! [`SystemParams`] holds every physical constant used by the link and
//! network models. Values are stored in the units the models consume
//! (linear mW, linear ratios); the configuration file carries the
//! customary dB forms.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{db_to_lin, lin_to_db};

/// Piecewise phase-noise PSD: flat below `f_l`, log-linear roll-off of `b`
/// decades between `f_l` and `f_h`, plus a `10^-c` floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseNoisePsdParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub f_l: f64,
    pub f_h: f64,
}

impl Default for PhaseNoisePsdParams {
    fn default() -> Self {
        Self {
            a: 8.5,
            b: 2.0,
            c: 12.5,
            f_l: 10e3,
            f_h: 100e3,
        }
    }
}

impl PhaseNoisePsdParams {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [("psd_a", self.a), ("psd_b", self.b), ("psd_c", self.c)] {
            if !(v > 0.0) {
                return Err(invalid(key, "must be positive"));
            }
        }
        if !(self.f_l > 0.0) {
            return Err(invalid("psd_fl_hz", "must be positive"));
        }
        if !(self.f_h > self.f_l) {
            return Err(invalid("psd_fh_hz", "must exceed psd_fl_hz"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Reference distance (m).
    pub d0: f64,
    /// Path loss at the reference distance (dB). Negative, as tabulated.
    pub lp_d0_db: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Thermal noise PSD (dBm/Hz).
    pub eta_n_dbm_hz: f64,
    /// Subcarrier bandwidth (Hz).
    pub ws: f64,
    /// Number of subcarriers.
    pub ns: usize,
    /// Noise figure (dB).
    pub f_n_db: f64,
    /// Total bandwidth (Hz).
    pub w_t: f64,
    /// Phase-noise ICI factor, linear.
    pub f_ici: f64,
    pub psd: PhaseNoisePsdParams,
    /// Average-BER target a link must meet.
    pub gamma_ber: f64,
    /// Single-stream BPSK rate (bit/s).
    pub r_base: f64,
    /// Maximum transmit power, linear mW.
    pub p_t: f64,
    /// Sample count in the residual frequency offset variance.
    pub n_sub: usize,
}

impl Default for SystemParams {
    fn default() -> Self {
        ParamsFile::default().resolve().expect("built-in defaults are valid")
    }
}

/// On-disk form of [`SystemParams`]. Every key is optional and falls back to
/// the built-in defaults; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsFile {
    pub d0_m: f64,
    pub lp_d0_db: f64,
    pub alpha: f64,
    pub eta_n_dbm_hz: f64,
    pub ws_hz: f64,
    pub ns: usize,
    pub f_n_db: f64,
    pub w_t_hz: f64,
    pub f_ici_dbc: f64,
    pub gamma_ber: f64,
    pub r_base_bps: f64,
    pub p_t_dbm: f64,
    pub psd_a: f64,
    pub psd_b: f64,
    pub psd_c: f64,
    pub psd_fl_hz: f64,
    pub psd_fh_hz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_sub: Option<usize>,
}

impl Default for ParamsFile {
    fn default() -> Self {
        let psd = PhaseNoisePsdParams::default();
        Self {
            d0_m: 1.0,
            lp_d0_db: -46.0,
            alpha: 3.0,
            eta_n_dbm_hz: -174.0,
            ws_hz: 312.5e3,
            ns: 64,
            f_n_db: 4.0,
            w_t_hz: 20e6,
            f_ici_dbc: -31.9,
            gamma_ber: 0.02,
            r_base_bps: 8e6,
            p_t_dbm: 20.0,
            psd_a: psd.a,
            psd_b: psd.b,
            psd_c: psd.c,
            psd_fl_hz: psd.f_l,
            psd_fh_hz: psd.f_h,
            n_sub: None,
        }
    }
}

impl ParamsFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn resolve(&self) -> Result<SystemParams> {
        let p = SystemParams {
            d0: self.d0_m,
            lp_d0_db: self.lp_d0_db,
            alpha: self.alpha,
            eta_n_dbm_hz: self.eta_n_dbm_hz,
            ws: self.ws_hz,
            ns: self.ns,
            f_n_db: self.f_n_db,
            w_t: self.w_t_hz,
            f_ici: db_to_lin(self.f_ici_dbc),
            psd: PhaseNoisePsdParams {
                a: self.psd_a,
                b: self.psd_b,
                c: self.psd_c,
                f_l: self.psd_fl_hz,
                f_h: self.psd_fh_hz,
            },
            gamma_ber: self.gamma_ber,
            r_base: self.r_base_bps,
            p_t: db_to_lin(self.p_t_dbm),
            n_sub: self.n_sub.unwrap_or(self.ns),
        };
        p.validate()?;
        Ok(p)
    }
}

impl SystemParams {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        ParamsFile::parse(text)?.resolve()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// The configuration-file view of these parameters.
    pub fn to_file(&self) -> ParamsFile {
        ParamsFile {
            d0_m: self.d0,
            lp_d0_db: self.lp_d0_db,
            alpha: self.alpha,
            eta_n_dbm_hz: self.eta_n_dbm_hz,
            ws_hz: self.ws,
            ns: self.ns,
            f_n_db: self.f_n_db,
            w_t_hz: self.w_t,
            f_ici_dbc: lin_to_db(self.f_ici),
            gamma_ber: self.gamma_ber,
            r_base_bps: self.r_base,
            p_t_dbm: lin_to_db(self.p_t),
            psd_a: self.psd.a,
            psd_b: self.psd.b,
            psd_c: self.psd.c,
            psd_fl_hz: self.psd.f_l,
            psd_fh_hz: self.psd.f_h,
            n_sub: (self.n_sub != self.ns).then_some(self.n_sub),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d0 > 0.0) {
            return Err(invalid("d0_m", "must be positive"));
        }
        if !(self.alpha > 0.0) {
            return Err(invalid("alpha", "must be positive"));
        }
        if !(self.ws > 0.0) {
            return Err(invalid("ws_hz", "must be positive"));
        }
        if self.ns == 0 {
            return Err(invalid("ns", "must be at least 1"));
        }
        let bw = self.ns as f64 * self.ws;
        if ((bw - self.w_t) / self.w_t).abs() > 1e-9 {
            return Err(invalid(
                "w_t_hz",
                &format!("must equal ns * ws_hz = {bw} Hz, got {}", self.w_t),
            ));
        }
        if !(self.f_ici > 0.0) {
            return Err(invalid("f_ici_dbc", "must be finite"));
        }
        if !(self.gamma_ber > 0.0 && self.gamma_ber < 0.5) {
            return Err(invalid("gamma_ber", "must lie in (0, 0.5)"));
        }
        if !(self.r_base > 0.0) {
            return Err(invalid("r_base_bps", "must be positive"));
        }
        if !(self.p_t > 0.0 && self.p_t.is_finite()) {
            return Err(invalid("p_t_dbm", "must be finite"));
        }
        if self.n_sub == 0 {
            return Err(invalid("n_sub", "must be at least 1"));
        }
        self.psd.validate()
    }
}

fn invalid(key: &str, reason: &str) -> Error {
    Error::InvalidParam {
        key: key.to_string(),
        reason: reason.to_string(),
    }
}

//! Link- and network-level simulation of MIMO-OFDM ad hoc networks with
//! phase noise, residual frequency offset and imperfect channel estimates.

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dprc;
pub mod error;
pub mod ga;
pub mod impairment;
pub mod link;
pub mod modulation;
pub mod network;
pub mod oracle;
pub mod params;
pub mod quadrature;
pub mod radio_env;
pub mod rate_table;
pub mod rng;
pub mod units;

pub use error::{Error, Result};
pub use params::SystemParams;

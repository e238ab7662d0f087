//! p-leader multifractal analysis.
//!
//! Wavelet coefficient pyramids ([`dwt`]), p-leaders and the wavelet scaling
//! function ([`leaders`]), corrected scaling-function, log-cumulant and Legendre
//! estimators ([`formalism`]), a detrended fluctuation reference ([`mfdfa`]),
//! synthetic processes with exact oracles ([`synth`]) and a Monte Carlo runner
//! ([`harness`]).

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dwt;
pub mod error;
pub mod formalism;
pub mod harness;
pub mod io;
pub mod leaders;
pub mod mfdfa;
pub mod stats;
pub mod synth;

pub use error::{Error, ErrorKind, Result};
pub use stats::PValue;

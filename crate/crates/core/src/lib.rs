//! Physical-layer simulator for OFDM narrowband powerline links.
//!
//! The crate models a complex-baseband PRIME-style OFDM link whose receiver
//! front end is emulated at a 40x oversampled "analog" rate. Impulsive noise
//! (cyclostationary bursts locked to the mains cycle plus Poisson-arriving
//! pulses) is added on top of coloured thermal noise, and the received record
//! is cleaned up by one of several front ends before the ADC:
//!
//! * [`andl`]: the adaptive nonlinear differential limiter, a first-order
//!   lowpass whose time constant grows with the input/output difference,
//!   followed by a fixed second-order section.
//! * [`mitigators`]: blanking and clipping baselines.
//!
//! [`sim`] ties everything into Monte Carlo BER sweeps and PSD snapshots.

// Range checks are written as negated comparisons so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod andl;
pub mod error;
pub(crate) mod fft;
pub mod mitigators;
pub mod noise;
pub mod ofdm;
pub mod signal;
pub mod sim;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use signal::{RngStream, SampledSignal};

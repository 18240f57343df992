//! Adaptive nonlinear differential limiter (ANDL).
//!
//! The limiter is a first-order lowpass `chi' = (x - chi) / tau` whose time
//! constant depends on the magnitude of the input/output difference:
//!
//! ```text
//! tau(|x - chi|) = tau0                      if |x - chi| <= alpha
//!                = tau0 * |x - chi| / alpha  otherwise
//! ```
//!
//! While the difference stays under the resolution parameter `alpha` the
//! section is an ordinary linear lowpass; above it the output slews at most
//! `alpha / tau0`, so large outliers barely move it. The limiter is followed
//! by a fixed second-order lowpass `1 / (tau^2 s^2 + (tau / Q) s + 1)`; with
//! `Q = 1` and `tau = tau0` the linear cascade is a third-order Butterworth
//! filter with corner `1 / (2 pi tau0)`.
//!
//! Discretization: the first-order section uses the exact exponential update
//! `chi += (1 - exp(-dt / tau)) (x - chi)` with `tau` taken from the previous
//! output; the second-order section is the bilinear transform of its
//! transfer function, giving exactly unit DC gain. Complex samples share one
//! `tau` computed from the complex magnitude of the difference.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf_inv;

use crate::error::{arg_err, config_err, Error, Result};
use crate::signal::{check_compatible, SampledSignal};

/// Tolerance giving `alpha = 2 sqrt(2) sigma_z`.
pub const DEFAULT_EPSILON: f64 = 4.68e-3;

/// Default limiter corner, twice the top of the PRIME band.
pub const DEFAULT_CORNER_HZ: f64 = 178e3;

/// Where the impulse-free statistics for the adaptive resolution come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SigmaSource {
    /// From the impulse-free signal-plus-thermal mixture (simulation only).
    #[default]
    Genie,
    /// From the received record via a median absolute deviation estimate.
    Robust,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    /// A fixed `alpha` in signal units.
    Fixed(f64),
    /// `alpha = erfinv(1 - epsilon) sqrt(2) sigma_z`, re-estimated per block.
    Adaptive { epsilon: f64, source: SigmaSource },
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution::Adaptive { epsilon: DEFAULT_EPSILON, source: SigmaSource::Genie }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AndlParams {
    /// Limiter time constant in seconds.
    pub tau0: f64,
    pub resolution: Resolution,
    /// Quality factor of the follow-up second-order section.
    pub follow_q: f64,
    /// Time constant of the follow-up section; `None` means `tau0`.
    pub follow_tau: Option<f64>,
    /// Samples per adaptation block (one OFDM symbol at the analog rate).
    /// `None` treats the whole record as one block.
    pub block_len: Option<usize>,
}

impl Default for AndlParams {
    fn default() -> Self {
        Self {
            tau0: 1.0 / (std::f64::consts::TAU * DEFAULT_CORNER_HZ),
            resolution: Resolution::default(),
            follow_q: 1.0,
            follow_tau: None,
            block_len: None,
        }
    }
}

impl AndlParams {
    pub fn with_alpha(alpha: f64) -> Self {
        Self { resolution: Resolution::Fixed(alpha), ..Default::default() }
    }

    pub fn follow_tau(&self) -> f64 {
        self.follow_tau.unwrap_or(self.tau0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau0 > 0.0 && self.tau0.is_finite()) {
            return config_err(format!("tau0 must be positive, got {}", self.tau0));
        }
        if !(self.follow_q > 0.0) || !(self.follow_tau() > 0.0) {
            return config_err("follow-up section needs positive Q and time constant");
        }
        match self.resolution {
            Resolution::Fixed(a) if !(a > 0.0) => config_err(format!("alpha must be positive, got {a}")),
            Resolution::Adaptive { epsilon, .. } if !(epsilon > 0.0 && epsilon < 1.0) => {
                config_err(format!("epsilon must be in (0, 1), got {epsilon}"))
            }
            _ => Ok(()),
        }
        .and_then(|_| match self.block_len {
            Some(0) => config_err("block_len must be positive"),
            _ => Ok(()),
        })
    }
}

/// Time parameter as a function of the difference magnitude.
pub fn tau_of_diff(diff_mag: f64, alpha: f64, tau0: f64) -> f64 {
    if diff_mag <= alpha {
        tau0
    } else {
        tau0 * diff_mag / alpha
    }
}

/// Evolving filter state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AndlState {
    /// Output of the nonlinear first-order section.
    pub chi: Complex64,
    /// Transposed direct-form state of the second-order section.
    pub second_order: [Complex64; 2],
}

impl AndlState {
    pub fn reset(&mut self) {
        *self = Self::default();
    }

    pub fn is_finite(&self) -> bool {
        [self.chi, self.second_order[0], self.second_order[1]]
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

#[derive(Debug, Clone, Copy)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    /// Bilinear transform of `1 / (tau^2 s^2 + (tau/q) s + 1)` at step `dt`.
    fn lowpass(tau: f64, q: f64, dt: f64) -> Self {
        let k = 2.0 / dt;
        let a = tau * tau * k * k;
        let b = tau / q * k;
        let a0 = a + b + 1.0;
        Self {
            b: [1.0 / a0, 2.0 / a0, 1.0 / a0],
            a: [(2.0 - 2.0 * a) / a0, (a - b + 1.0) / a0],
        }
    }

    #[inline]
    fn step(&self, s: &mut [Complex64; 2], x: Complex64) -> Complex64 {
        let y = x * self.b[0] + s[0];
        s[0] = x * self.b[1] - y * self.a[0] + s[1];
        s[1] = x * self.b[2] - y * self.a[1];
        y
    }

    fn response(&self, z_inv: Complex64) -> Complex64 {
        let num = self.b[0] + z_inv * (self.b[1] + z_inv * self.b[2]);
        let den = 1.0 + z_inv * (self.a[0] + z_inv * self.a[1]);
        num / den
    }
}

/// A limiter discretized for a particular sample rate.
#[derive(Debug, Clone)]
pub struct Andl {
    dt: f64,
    tau0: f64,
    /// First-order update gain in the linear regime.
    linear_gain: f64,
    follow: Biquad,
}

impl Andl {
    /// Fails when the step violates `dt <= tau0 / 4`.
    pub fn new(params: &AndlParams, rate: f64) -> Result<Self> {
        params.validate()?;
        if !(rate > 0.0) {
            return arg_err("sample rate must be positive");
        }
        let dt = 1.0 / rate;
        if dt > params.tau0 / 4.0 {
            return config_err(format!(
                "sample rate {rate} Hz too low: step {dt} s exceeds tau0/4 = {} s",
                params.tau0 / 4.0
            ));
        }
        Ok(Self {
            dt,
            tau0: params.tau0,
            linear_gain: -(-dt / params.tau0).exp_m1(),
            follow: Biquad::lowpass(params.follow_tau(), params.follow_q, dt),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    /// Advances the nonlinear first-order section only; returns its increment.
    #[inline]
    pub fn limiter_step(&self, chi: &mut Complex64, x: Complex64, alpha: f64) -> Complex64 {
        let diff = x - *chi;
        let mag = diff.norm();
        let gain = if mag <= alpha {
            self.linear_gain
        } else {
            -(-self.dt / tau_of_diff(mag, alpha, self.tau0)).exp_m1()
        };
        let inc = diff * gain;
        *chi += inc;
        inc
    }

    /// One sample through the limiter and the follow-up section.
    #[inline]
    pub fn step(&self, state: &mut AndlState, x: Complex64, alpha: f64) -> Complex64 {
        self.limiter_step(&mut state.chi, x, alpha);
        self.follow.step(&mut state.second_order, state.chi)
    }

    /// Filters `x` from a zeroed state with a fixed resolution parameter.
    /// `alpha = f64::INFINITY` gives the linear cascade.
    pub fn run(&self, x: &[Complex64], alpha: f64) -> Vec<Complex64> {
        let mut state = AndlState::default();
        x.iter().map(|&v| self.step(&mut state, v, alpha)).collect()
    }

    /// The resolution parameter for one block. `reference` is the
    /// impulse-free record needed by the genie source; `received` feeds the
    /// robust source.
    pub fn resolve_alpha(
        &self,
        resolution: &Resolution,
        reference: Option<&[Complex64]>,
        received: &[Complex64],
    ) -> Result<f64> {
        match *resolution {
            Resolution::Fixed(a) => Ok(a),
            Resolution::Adaptive { epsilon, source } => {
                let sigma = match (source, reference) {
                    (SigmaSource::Genie, Some(r)) => sigma_z(r, self)?,
                    (SigmaSource::Genie, None) => {
                        return arg_err("genie resolution needs the impulse-free reference record")
                    }
                    (SigmaSource::Robust, _) => robust_sigma_z(received, self)?,
                };
                Ok(resolution_multiplier(epsilon)? * sigma)
            }
        }
    }

    /// Frequency response of the linear cascade at `freq` Hz.
    pub fn linear_response(&self, freq: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -std::f64::consts::TAU * freq * self.dt);
        let first = self.linear_gain / (1.0 - z_inv * (1.0 - self.linear_gain));
        first * self.follow.response(z_inv)
    }
}

/// Output of [`andl_filter`] with the resolution used on each block.
#[derive(Debug, Clone)]
pub struct AndlOutput {
    pub signal: SampledSignal,
    pub alphas: Vec<f64>,
}

/// Runs the limiter over a record, resetting the state at each block.
///
/// With an adaptive resolution, `alpha` is re-estimated per block: from the
/// matching block of `reference` in genie mode (the reference is the
/// impulse-free signal-plus-thermal mixture), or from the input itself in
/// robust mode.
pub fn andl_filter(signal: &SampledSignal, params: &AndlParams, reference: Option<&SampledSignal>) -> Result<AndlOutput> {
    let andl = Andl::new(params, signal.rate())?;
    if let Some(r) = reference {
        check_compatible(signal, r)?;
    }
    let block = params.block_len.unwrap_or(signal.len()).min(signal.len());
    let mut out = Vec::with_capacity(signal.len());
    let mut alphas = Vec::new();
    for (i, chunk) in signal.samples().chunks(block).enumerate() {
        let range = i * block..i * block + chunk.len();
        let alpha = andl.resolve_alpha(&params.resolution, reference.map(|r| &r.samples()[range]), chunk)?;
        alphas.push(alpha);
        out.extend(andl.run(chunk, alpha));
    }
    Ok(AndlOutput { signal: SampledSignal::new(out, signal.rate())?, alphas })
}

/// The linear cascade (the limiter with its nonlinearity switched off).
pub fn linear_reference(signal: &SampledSignal, params: &AndlParams) -> Result<SampledSignal> {
    let andl = Andl::new(params, signal.rate())?;
    let block = params.block_len.unwrap_or(signal.len()).min(signal.len());
    let out = signal
        .samples()
        .chunks(block)
        .flat_map(|c| andl.run(c, f64::INFINITY))
        .collect();
    SampledSignal::new(out, signal.rate())
}

fn highpass_into(x: &[Complex64], gain: f64) -> Vec<Complex64> {
    let mut low = Complex64::new(0.0, 0.0);
    x.iter()
        .map(|&v| {
            low += (v - low) * gain;
            v - low
        })
        .collect()
}

/// First-order highpass with time constant `tau0`: the input minus its
/// first-order lowpass (same discretization as the limiter).
pub fn highpass_diff(signal: &SampledSignal, tau0: f64) -> Result<SampledSignal> {
    if !(tau0 > 0.0) {
        return arg_err("tau0 must be positive");
    }
    let gain = -(-1.0 / (signal.rate() * tau0)).exp_m1();
    SampledSignal::new(highpass_into(signal.samples(), gain), signal.rate())
}

/// `erfinv(1 - epsilon) * sqrt(2)`.
pub fn resolution_multiplier(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return arg_err(format!("epsilon must be in (0, 1), got {epsilon}"));
    }
    Ok(erf_inv(1.0 - epsilon) * std::f64::consts::SQRT_2)
}

fn sample_variance(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n, sum) = v.clone().fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    let mean = sum / n as f64;
    v.map(|x| (x - mean).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64
}

/// Per-quadrature sample standard deviation of the highpassed reference.
fn sigma_z(reference: &[Complex64], andl: &Andl) -> Result<f64> {
    let z = highpass_into(reference, andl.linear_gain);
    let var = 0.5 * (sample_variance(z.iter().map(|c| c.re)) + sample_variance(z.iter().map(|c| c.im)));
    if !(var > 0.0) {
        return Err(Error::Estimation("reference has zero variance after highpass".into()));
    }
    Ok(var.sqrt())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Per-quadrature sigma from the median absolute deviation (x 1.4826).
fn robust_sigma_z(received: &[Complex64], andl: &Andl) -> Result<f64> {
    let z = highpass_into(received, andl.linear_gain);
    let mad_sigma = |v: Vec<f64>| {
        let m = median(v.clone());
        1.4826 * median(v.into_iter().map(|x| (x - m).abs()).collect())
    };
    let s_re = mad_sigma(z.iter().map(|c| c.re).collect());
    let s_im = mad_sigma(z.iter().map(|c| c.im).collect());
    let sigma = (0.5 * (s_re * s_re + s_im * s_im)).sqrt();
    if !(sigma > 0.0) {
        return Err(Error::Estimation("received record has zero spread after highpass".into()));
    }
    Ok(sigma)
}

/// Resolution parameter for `(1 - epsilon)` distortionless filtering of the
/// impulse-free `reference`: `erfinv(1 - epsilon) sqrt(2) sigma_z`, with
/// `sigma_z` the per-quadrature sample standard deviation of
/// `highpass_diff(reference, tau0)`.
pub fn estimate_alpha(reference: &SampledSignal, tau0: f64, epsilon: f64) -> Result<f64> {
    let params = AndlParams { tau0, ..Default::default() };
    let andl = Andl::new(&params, reference.rate())?;
    Ok(resolution_multiplier(epsilon)? * sigma_z(reference.samples(), &andl)?)
}

/// As [`estimate_alpha`] but from a possibly impulsive record, using the
/// median absolute deviation of the highpassed samples.
pub fn estimate_alpha_robust(received: &SampledSignal, tau0: f64, epsilon: f64) -> Result<f64> {
    let params = AndlParams { tau0, ..Default::default() };
    let andl = Andl::new(&params, received.rate())?;
    Ok(resolution_multiplier(epsilon)? * robust_sigma_z(received.samples(), &andl)?)
}

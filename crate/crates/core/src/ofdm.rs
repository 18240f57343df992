//! OFDM transmitter and receiver.
//!
//! One OFDM symbol is a block of `n_fft` samples at `sample_rate` with data on
//! the carriers `first_carrier..=last_carrier` (carrier `k` sits at
//! `k * sample_rate / n_fft` Hz). There is no cyclic prefix. Blocks are
//! treated as one period of a periodic signal, so the root-raised-cosine
//! interpolator that emulates the analog waveform at `oversample` times the
//! sample rate wraps around the block edges.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, config_err, Error, Result};
use crate::fft;
use crate::signal::SampledSignal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    #[default]
    Bpsk,
    Qpsk,
    Qam16,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
        }
    }
}

/// Carrier plan and waveform parameters.
///
/// Defaults follow the PRIME band plan: 512-point FFT at 250 kHz (488 Hz
/// spacing), data on carriers 86 through 182 (42 to 89 kHz), BPSK, RRC
/// rolloff 0.25 and 40x analog emulation (10 MHz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OfdmConfig {
    pub n_fft: usize,
    pub first_carrier: usize,
    pub last_carrier: usize,
    pub sample_rate: f64,
    pub modulation: Modulation,
    pub rolloff: f64,
    pub oversample: usize,
    /// Interpolation filter length in symbol periods.
    pub rrc_span: usize,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        Self {
            n_fft: 512,
            first_carrier: 86,
            last_carrier: 182,
            sample_rate: 250_000.0,
            modulation: Modulation::Bpsk,
            rolloff: 0.25,
            oversample: 40,
            rrc_span: 64,
        }
    }
}

impl OfdmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_fft < 4 {
            return config_err(format!("n_fft must be at least 4, got {}", self.n_fft));
        }
        if self.first_carrier < 1
            || self.first_carrier > self.last_carrier
            || self.last_carrier > self.n_fft / 2 - 1
        {
            return config_err(format!(
                "data carriers {}..={} must lie within 1..={}",
                self.first_carrier,
                self.last_carrier,
                self.n_fft / 2 - 1
            ));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return config_err("sample_rate must be positive");
        }
        if !(0.0..=1.0).contains(&self.rolloff) {
            return config_err(format!("rolloff must be in [0, 1], got {}", self.rolloff));
        }
        if self.oversample == 0 {
            return config_err("oversample must be at least 1");
        }
        if self.rrc_span == 0 || !self.rrc_span.is_multiple_of(2) {
            return config_err("rrc_span must be a positive even number of symbols");
        }
        Ok(())
    }

    pub fn carriers(&self) -> std::ops::RangeInclusive<usize> {
        self.first_carrier..=self.last_carrier
    }

    pub fn data_carrier_count(&self) -> usize {
        self.last_carrier - self.first_carrier + 1
    }

    pub fn bits_per_block(&self) -> usize {
        self.data_carrier_count() * self.modulation.bits_per_symbol()
    }

    pub fn carrier_spacing(&self) -> f64 {
        self.sample_rate / self.n_fft as f64
    }

    pub fn carrier_frequency(&self, k: usize) -> f64 {
        k as f64 * self.carrier_spacing()
    }

    /// Lowest and highest occupied carrier frequency.
    pub fn occupied_band(&self) -> (f64, f64) {
        (
            self.carrier_frequency(self.first_carrier),
            self.carrier_frequency(self.last_carrier),
        )
    }

    pub fn analog_rate(&self) -> f64 {
        self.sample_rate * self.oversample as f64
    }

    pub fn symbol_duration(&self) -> f64 {
        self.n_fft as f64 / self.sample_rate
    }

    /// Amplitude gain applied after the `1/sqrt(N)` IDFT so that a block of
    /// unit-energy symbols has unit mean power: `sqrt(n_fft / data carriers)`.
    pub fn power_gain(&self) -> f64 {
        (self.n_fft as f64 / self.data_carrier_count() as f64).sqrt()
    }
}

/// The bits carried by one OFDM symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitBlock(pub Vec<u8>);

impl BitBlock {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn random(bits: usize, rng: &mut impl rand::Rng) -> Self {
        BitBlock((0..bits).map(|_| rng.random_range(0..2u8)).collect())
    }
}

const QAM16_SCALE: f64 = 0.316_227_766_016_837_94; // 1/sqrt(10)

/// Gray-coded 4-PAM level for a bit pair: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3.
fn pam4_level(b0: u8, b1: u8) -> f64 {
    match (b0, b1) {
        (0, 0) => -3.0,
        (0, 1) => -1.0,
        (1, 1) => 1.0,
        _ => 3.0,
    }
}

fn pam4_bits(x: f64) -> (u8, u8) {
    if x < -2.0 {
        (0, 0)
    } else if x < 0.0 {
        (0, 1)
    } else if x < 2.0 {
        (1, 1)
    } else {
        (1, 0)
    }
}

/// Maps bits onto unit-average-energy Gray-labelled constellation points.
///
/// BPSK sends bit 0 as `+1` and bit 1 as `-1`. QPSK uses the same rule on
/// each quadrature (scaled by `1/sqrt(2)`); 16-QAM uses a Gray 4-PAM per
/// quadrature scaled by `1/sqrt(10)`.
pub fn map_bits(bits: &BitBlock, modulation: Modulation) -> Result<Vec<Complex64>> {
    let bps = modulation.bits_per_symbol();
    if !bits.len().is_multiple_of(bps) {
        return arg_err(format!("{} bits do not fill whole {bps}-bit symbols", bits.len()));
    }
    if let Some(b) = bits.0.iter().find(|b| **b > 1) {
        return arg_err(format!("bit value {b} is not 0 or 1"));
    }
    let antipodal = |b: u8| 1.0 - 2.0 * b as f64;
    Ok(bits
        .0
        .chunks_exact(bps)
        .map(|c| match modulation {
            Modulation::Bpsk => Complex64::new(antipodal(c[0]), 0.0),
            Modulation::Qpsk => Complex64::new(antipodal(c[0]), antipodal(c[1])) * FRAC_1_SQRT_2,
            Modulation::Qam16 => {
                Complex64::new(pam4_level(c[0], c[1]), pam4_level(c[2], c[3])) * QAM16_SCALE
            }
        })
        .collect())
}

/// Minimum-distance hard decisions; inverse of [`map_bits`].
///
/// Points exactly on a decision boundary resolve toward the label of the
/// larger level, so a BPSK estimate of exactly zero decodes as bit 0.
pub fn demap(symbols: &[Complex64], modulation: Modulation) -> BitBlock {
    let mut out = Vec::with_capacity(symbols.len() * modulation.bits_per_symbol());
    let hard = |x: f64| u8::from(x < 0.0);
    for s in symbols {
        match modulation {
            Modulation::Bpsk => out.push(hard(s.re)),
            Modulation::Qpsk => {
                out.push(hard(s.re));
                out.push(hard(s.im));
            }
            Modulation::Qam16 => {
                let (a, b) = pam4_bits(s.re / QAM16_SCALE);
                let (c, d) = pam4_bits(s.im / QAM16_SCALE);
                out.extend([a, b, c, d]);
            }
        }
    }
    BitBlock(out)
}

/// Builds one baseband OFDM block from the data-carrier symbols.
///
/// `x[n] = g / sqrt(N) * sum_k X[k] exp(j 2 pi k n / N)` with `g` from
/// [`OfdmConfig::power_gain`], so unit-energy symbols give unit mean power.
pub fn modulate(symbols: &[Complex64], config: &OfdmConfig) -> Result<SampledSignal> {
    if symbols.len() != config.data_carrier_count() {
        return arg_err(format!(
            "expected {} data symbols, got {}",
            config.data_carrier_count(),
            symbols.len()
        ));
    }
    let n = config.n_fft;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    buf[config.carriers()].copy_from_slice(symbols);
    fft::inverse(&mut buf);
    let scale = config.power_gain() / (n as f64).sqrt();
    buf.iter_mut().for_each(|x| *x *= scale);
    SampledSignal::new(buf, config.sample_rate)
}

/// Recovers data-carrier symbol estimates from one received block.
pub fn demodulate(signal: &SampledSignal, config: &OfdmConfig) -> Result<Vec<Complex64>> {
    if signal.len() != config.n_fft {
        return Err(Error::Framing(format!(
            "expected a block of {} samples, got {}",
            config.n_fft,
            signal.len()
        )));
    }
    let mut buf = signal.samples().to_vec();
    fft::forward(&mut buf);
    let scale = 1.0 / (config.power_gain() * (config.n_fft as f64).sqrt());
    Ok(buf[config.carriers()].iter().map(|x| x * scale).collect())
}

/// Root-raised-cosine pulse at time `t` in symbol periods, unit peak area
/// convention (`p(0) = 1 - beta + 4 beta / pi`).
pub fn rrc_pulse(t: f64, beta: f64) -> f64 {
    if t.abs() < 1e-12 {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    if beta > 0.0 && ((4.0 * beta * t).abs() - 1.0).abs() < 1e-12 {
        let a = PI / (4.0 * beta);
        return beta / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * t * (1.0 - beta)).sin() + 4.0 * beta * t * (PI * t * (1.0 + beta)).cos();
    let den = PI * t * (1.0 - (4.0 * beta * t).powi(2));
    num / den
}

/// Zero-stuff-and-filter interpolator with a truncated, Hann-tapered RRC
/// kernel.
///
/// The kernel has `span * L + 1` taps centred on tap `span * L / 2`; that
/// group delay is removed when interpolating, so output sample `n * L` is
/// time-aligned with input sample `n`. Taps sum to `L`, giving unit passband
/// gain after zero stuffing. Filtering is circular over the block and is
/// carried out in the frequency domain, which is exactly the circular FIR.
#[derive(Debug, Clone)]
pub struct RrcInterpolator {
    taps: Vec<f64>,
    factor: usize,
    delay: usize,
    block_len: usize,
    spectrum: Vec<Complex64>,
}

impl RrcInterpolator {
    pub fn new(config: &OfdmConfig) -> Result<Self> {
        config.validate()?;
        let l = config.oversample;
        let delay = config.rrc_span * l / 2;
        let mut taps: Vec<f64> = (0..=2 * delay)
            .map(|i| {
                let offset = i as f64 - delay as f64;
                let taper = 0.5 + 0.5 * (PI * offset / (delay as f64 + 1.0)).cos();
                taper * rrc_pulse(offset / l as f64, config.rolloff)
            })
            .collect();
        let sum: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|t| *t *= l as f64 / sum);
        let mut interp = Self { taps, factor: l, delay, block_len: config.n_fft, spectrum: Vec::new() };
        interp.spectrum = interp.circular_spectrum(config.n_fft);
        Ok(interp)
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Group delay of the kernel in output samples.
    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    /// Delay-compensated frequency response at `freq` Hz for an output rate
    /// of `rate` Hz. The kernel is symmetric so this is real.
    pub fn response(&self, freq: f64, rate: f64) -> Complex64 {
        let w = std::f64::consts::TAU * freq / rate;
        self.taps
            .iter()
            .enumerate()
            .map(|(i, h)| Complex64::from_polar(*h, -w * (i as f64 - self.delay as f64)))
            .sum()
    }

    /// DFT of the delay-compensated kernel wrapped onto `block_len * L` points.
    fn circular_spectrum(&self, block_len: usize) -> Vec<Complex64> {
        let n_out = block_len * self.factor;
        let mut buf = vec![Complex64::new(0.0, 0.0); n_out];
        for (i, h) in self.taps.iter().enumerate() {
            let idx = (i as isize - self.delay as isize).rem_euclid(n_out as isize) as usize;
            buf[idx] += h;
        }
        fft::forward(&mut buf);
        buf
    }

    /// Circular interpolation of one block by the configured factor.
    pub fn interpolate(&self, signal: &SampledSignal) -> SampledSignal {
        let l = self.factor;
        if l == 1 {
            return signal.clone();
        }
        let n_in = signal.len();
        let n_out = n_in * l;
        let owned;
        let spectrum = if n_in == self.block_len {
            &self.spectrum
        } else {
            owned = self.circular_spectrum(n_in);
            &owned
        };
        let mut x = signal.samples().to_vec();
        fft::forward(&mut x);
        let mut out: Vec<Complex64> = spectrum
            .iter()
            .enumerate()
            .map(|(m, h)| x[m % n_in] * h)
            .collect();
        fft::inverse(&mut out);
        let scale = 1.0 / n_out as f64;
        out.iter_mut().for_each(|v| *v *= scale);
        SampledSignal::from_parts(out, signal.rate() * l as f64)
    }
}

/// Emulates the analog transmit waveform at `oversample` times the sample rate.
pub fn upsample_analog(signal: &SampledSignal, config: &OfdmConfig) -> Result<SampledSignal> {
    check_rate(signal, config.sample_rate)?;
    Ok(RrcInterpolator::new(config)?.interpolate(signal))
}

/// Keeps every `oversample`-th sample starting at `offset`.
///
/// Input must already be delay-aligned (as produced by [`upsample_analog`]
/// and any zero-delay processing), so the natural offset is 0.
pub fn downsample_analog(signal: &SampledSignal, config: &OfdmConfig, offset: usize) -> Result<SampledSignal> {
    let l = config.oversample;
    check_rate(signal, config.analog_rate())?;
    if !signal.len().is_multiple_of(l) {
        return Err(Error::Framing(format!(
            "record of {} samples is not a multiple of the oversampling factor {l}",
            signal.len()
        )));
    }
    if offset >= l {
        return Err(Error::Framing(format!("offset {offset} must be below {l}")));
    }
    let out = signal.samples().iter().skip(offset).step_by(l).copied().collect();
    Ok(SampledSignal::from_parts(out, config.sample_rate))
}

fn check_rate(signal: &SampledSignal, expected: f64) -> Result<()> {
    if (signal.rate() - expected).abs() > 1e-9 * expected {
        return arg_err(format!("expected rate {expected} Hz, got {} Hz", signal.rate()));
    }
    Ok(())
}

/// Raw bit error counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BitErrors {
    pub errors: u64,
    pub bits: u64,
}

impl BitErrors {
    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.errors as f64 / self.bits as f64
        }
    }
}

impl std::ops::AddAssign for BitErrors {
    fn add_assign(&mut self, rhs: Self) {
        self.errors += rhs.errors;
        self.bits += rhs.bits;
    }
}

/// Hamming distance between two block sequences.
pub fn bit_error_rate(tx: &[BitBlock], rx: &[BitBlock]) -> Result<BitErrors> {
    if tx.len() != rx.len() {
        return arg_err(format!("{} transmitted blocks vs {} received", tx.len(), rx.len()));
    }
    let mut total = BitErrors::default();
    for (t, r) in tx.iter().zip(rx) {
        if t.len() != r.len() {
            return arg_err(format!("block length mismatch: {} vs {}", t.len(), r.len()));
        }
        total.errors += t.0.iter().zip(&r.0).filter(|(a, b)| a != b).count() as u64;
        total.bits += t.len() as u64;
    }
    Ok(total)
}

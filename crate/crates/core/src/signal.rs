//! Complex baseband sample buffers, reproducible random streams and power
//! measurements shared by every stage of the link.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{arg_err, Error, Result};
use crate::fft;

/// A block of complex baseband samples at a known sample rate.
///
/// Construction enforces a positive rate, a nonempty buffer and finite
/// samples, so every stage can rely on those without rechecking.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    samples: Vec<Complex64>,
    rate: f64,
}

impl SampledSignal {
    pub fn new(samples: Vec<Complex64>, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return arg_err(format!("sample rate must be positive, got {rate}"));
        }
        if samples.is_empty() {
            return arg_err("signal must contain at least one sample");
        }
        if let Some(i) = samples.iter().position(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return arg_err(format!("sample {i} is not finite"));
        }
        Ok(Self { samples, rate })
    }

    pub fn zeros(n: usize, rate: f64) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); n], rate)
    }

    /// Internal constructor for buffers produced by arithmetic on already
    /// validated signals.
    pub(crate) fn from_parts(samples: Vec<Complex64>, rate: f64) -> Self {
        debug_assert!(!samples.is_empty() && rate > 0.0);
        debug_assert!(samples.iter().all(|s| s.re.is_finite() && s.im.is_finite()));
        Self { samples, rate }
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.rate
    }

    pub fn mean_power(&self) -> f64 {
        mean_power(self)
    }

    pub fn peak_magnitude(&self) -> f64 {
        self.samples.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, gain: f64) -> SampledSignal {
        Self::from_parts(self.samples.iter().map(|s| s * gain).collect(), self.rate)
    }

    /// Applies `f` to every sample. `f` must map finite values to finite values.
    /// Elementwise sum; both signals must share rate and length.
    pub fn try_add(&self, other: &SampledSignal) -> Result<SampledSignal> {
        check_compatible(self, other)?;
        Ok(Self::from_parts(
            self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect(),
            self.rate,
        ))
    }

    pub fn try_sub(&self, other: &SampledSignal) -> Result<SampledSignal> {
        check_compatible(self, other)?;
        Ok(Self::from_parts(
            self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect(),
            self.rate,
        ))
    }
}

pub(crate) fn check_compatible(a: &SampledSignal, b: &SampledSignal) -> Result<()> {
    if a.rate != b.rate {
        return arg_err(format!("sample rate mismatch: {} Hz vs {} Hz", a.rate, b.rate));
    }
    if a.len() != b.len() {
        return arg_err(format!("length mismatch: {} vs {}", a.len(), b.len()));
    }
    Ok(())
}

/// Identifies one reproducible random stream.
///
/// Streams are ChaCha8 keystreams: the key comes from the master seed and
/// the 64-bit ChaCha stream selector from `stream`. Two streams with the same
/// `(seed, stream)` produce identical sequences, and different stream ids
/// never overlap, so trial `k` can be regenerated on any worker in any order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Stream id layout used by the simulator: 24 bits of sweep point, 32 bits
    /// of trial index and 8 bits of component tag.
    pub fn for_trial(seed: u64, point: usize, trial: u64, component: u8) -> Self {
        debug_assert!(point < 1 << 24 && trial < 1 << 32);
        let id = ((point as u64) << 40) | (trial << 8) | component as u64;
        Self::new(seed, id)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// `n` samples of circularly symmetric complex Gaussian noise with
/// `E|x|^2 = variance`.
pub fn complex_gaussian(n: usize, variance: f64, rate: f64, stream: &RngStream) -> Result<SampledSignal> {
    if n == 0 {
        return arg_err("sample count must be positive");
    }
    if !(variance >= 0.0 && variance.is_finite()) {
        return arg_err(format!("variance must be non-negative, got {variance}"));
    }
    let sigma = (variance / 2.0).sqrt();
    let mut rng = stream.rng();
    let samples = (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(sigma * re, sigma * im)
        })
        .collect();
    SampledSignal::new(samples, rate)
}

/// Mean of `|x|^2` over the record.
pub fn mean_power(signal: &SampledSignal) -> f64 {
    power_of(signal.samples())
}

pub(crate) fn power_of(samples: &[Complex64]) -> f64 {
    samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len() as f64
}

/// Rescales `signal` by a positive real gain so its mean power is `target`.
pub fn scale_to_power(signal: &SampledSignal, target: f64) -> Result<SampledSignal> {
    if !(target >= 0.0 && target.is_finite()) {
        return arg_err(format!("target power must be non-negative, got {target}"));
    }
    if target == 0.0 {
        return Ok(signal.scaled(0.0));
    }
    let current = mean_power(signal);
    if current == 0.0 {
        return Err(Error::Calibration(
            "cannot scale a zero-power signal to a positive target".into(),
        ));
    }
    Ok(signal.scaled((target / current).sqrt()))
}

/// Two-sided power spectral density estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    /// Bin centre frequencies in Hz, ascending over `[-rate/2, rate/2)`.
    pub frequencies: Vec<f64>,
    /// Power per Hz in each bin.
    pub density: Vec<f64>,
}

impl Psd {
    pub fn bin_width(&self) -> f64 {
        if self.frequencies.len() < 2 {
            return 0.0;
        }
        self.frequencies[1] - self.frequencies[0]
    }

    /// Integrated power over the bins whose centre lies in `[lo, hi]`.
    pub fn band_power(&self, lo: f64, hi: f64) -> f64 {
        let df = self.bin_width();
        self.frequencies
            .iter()
            .zip(&self.density)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .map(|(_, p)| p * df)
            .sum()
    }

    pub fn total_power(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin_width()
    }

    /// Averages several estimates computed with identical segment settings.
    pub fn average(estimates: &[Psd]) -> Result<Psd> {
        let Some(first) = estimates.first() else {
            return arg_err("cannot average an empty set of PSD estimates");
        };
        if estimates.iter().any(|e| e.frequencies != first.frequencies) {
            return arg_err("PSD estimates use different frequency grids");
        }
        let mut density = vec![0.0; first.density.len()];
        for e in estimates {
            for (d, v) in density.iter_mut().zip(&e.density) {
                *d += v;
            }
        }
        let k = estimates.len() as f64;
        density.iter_mut().for_each(|d| *d /= k);
        Ok(Psd { frequencies: first.frequencies.clone(), density })
    }
}

/// Welch estimate with a periodic Hann window.
///
/// Segments of `segment_len` samples advance by `segment_len * (1 - overlap)`
/// (at least one sample). The density is normalized so that
/// `sum(density) * bin_width` approximates the mean power of the input.
pub fn welch_psd(signal: &SampledSignal, segment_len: usize, overlap: f64) -> Result<Psd> {
    if segment_len == 0 || segment_len > signal.len() {
        return arg_err(format!(
            "segment length {segment_len} must be in 1..={}",
            signal.len()
        ));
    }
    if !(0.0..1.0).contains(&overlap) {
        return arg_err(format!("overlap must be in [0, 1), got {overlap}"));
    }
    let window: Vec<f64> = (0..segment_len)
        .map(|i| {
            let phase = std::f64::consts::TAU * i as f64 / segment_len as f64;
            0.5 - 0.5 * phase.cos()
        })
        .collect();
    let window_energy: f64 = window.iter().map(|w| w * w).sum();
    let hop = ((segment_len as f64 * (1.0 - overlap)).round() as usize).max(1);

    let x = signal.samples();
    let mut acc = vec![0.0; segment_len];
    let mut segments = 0usize;
    let mut buf = vec![Complex64::new(0.0, 0.0); segment_len];
    let mut start = 0;
    while start + segment_len <= x.len() {
        for ((b, s), w) in buf.iter_mut().zip(&x[start..start + segment_len]).zip(&window) {
            *b = s * w;
        }
        fft::forward(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        segments += 1;
        start += hop;
    }

    let scale = 1.0 / (segments as f64 * signal.rate() * window_energy);
    // fftshift so frequencies ascend from -rate/2.
    let half = segment_len / 2;
    let order = (segment_len - half..segment_len).chain(0..segment_len - half);
    let (frequencies, density) = order
        .map(|k| (fft::bin_frequency(k, segment_len, signal.rate()), acc[k] * scale))
        .unzip();
    Ok(Psd { frequencies, density })
}

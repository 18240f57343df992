//! Thermal and impulsive noise synthesis with power calibration.
//!
//! All components are generated at the analog emulation rate. Impulsive
//! components follow continuous-time models evaluated at the sample instants:
//!
//! * cyclostationary bursts start at `t_k = k / (2 f_AC)` with envelope
//!   `A_cs exp(-(t - t_k) / tau_cs)` for `0 <= t - t_k < D_cs`;
//! * asynchronous pulses arrive as a Poisson process with normal amplitudes
//!   and envelope `A_k exp(-(t - t_k) / tau_as)` for `0 <= t - t_k < D_as`,
//!   all multiplied by one common complex white Gaussian process.
//!
//! Powers are long-run time averages including the silence between bursts.
//! [`CalibratedNoise`] fixes amplitudes analytically so that short records
//! (a single OFDM symbol) are unbiased segments of the long-run process;
//! [`NoiseComponents::rescale_to`] additionally pins long records exactly.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, config_err, Error, Result};
use crate::fft;
use crate::signal::{check_compatible, complex_gaussian, mean_power, scale_to_power, RngStream, SampledSignal};

/// Coloured Gaussian background noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalSpec {
    /// Total power (variance) of the complex noise.
    pub variance: f64,
    /// Spectral slope in dB per MHz away from DC.
    pub psd_decay: f64,
}

impl Default for ThermalSpec {
    fn default() -> Self {
        Self { variance: 0.0, psd_decay: 30.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BurstCarrier {
    /// Spectrally shaped complex white Gaussian noise.
    GaussianBurst,
    /// Unit complex exponential with a random phase per burst.
    #[default]
    DampedSinusoid,
}

/// Mains-synchronous impulsive bursts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CycloSpec {
    pub amplitude: f64,
    pub decay_time: f64,
    pub ac_frequency: f64,
    pub burst_duration: f64,
    pub mode: BurstCarrier,
    /// Carrier frequency for [`BurstCarrier::DampedSinusoid`].
    pub oscillation_frequency: f64,
    /// Spectral slope of the [`BurstCarrier::GaussianBurst`] carrier.
    pub psd_decay: f64,
}

impl Default for CycloSpec {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            decay_time: 40e-6,
            ac_frequency: 60.0,
            burst_duration: 200e-6,
            mode: BurstCarrier::DampedSinusoid,
            oscillation_frequency: 65e3,
            psd_decay: 30.0,
        }
    }
}

impl CycloSpec {
    /// Burst repetition period, half the mains cycle.
    pub fn period(&self) -> f64 {
        1.0 / (2.0 * self.ac_frequency)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.decay_time > 0.0) {
            return config_err("cyclostationary decay_time must be positive");
        }
        if !(self.ac_frequency > 0.0) {
            return config_err("ac_frequency must be positive");
        }
        if !(self.burst_duration > 0.0) {
            return config_err("cyclostationary burst_duration must be positive");
        }
        if self.burst_duration >= self.period() {
            return config_err(format!(
                "burst duration {} s must be shorter than the burst period {} s",
                self.burst_duration,
                self.period()
            ));
        }
        if !(self.amplitude >= 0.0) || self.psd_decay < 0.0 {
            return config_err("amplitude and psd_decay must be non-negative");
        }
        Ok(())
    }

    /// Long-run mean power of the process with the current amplitude.
    pub fn mean_power(&self) -> f64 {
        self.amplitude.powi(2) * decayed_energy(self.decay_time, self.burst_duration) / self.period()
    }

    /// Copy with the amplitude chosen so that [`Self::mean_power`] is `power`.
    pub fn with_power(&self, power: f64) -> CycloSpec {
        let per_unit = decayed_energy(self.decay_time, self.burst_duration) / self.period();
        CycloSpec { amplitude: (power / per_unit).sqrt(), ..self.clone() }
    }
}

/// Poisson-arriving short impulses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsyncSpec {
    /// Mean arrivals per second.
    pub arrival_rate: f64,
    /// Standard deviation of the normally distributed pulse amplitudes.
    pub amplitude_sigma: f64,
    pub decay_time: f64,
    pub burst_duration: f64,
}

impl Default for AsyncSpec {
    fn default() -> Self {
        Self { arrival_rate: 1e4, amplitude_sigma: 1.0, decay_time: 0.4e-6, burst_duration: 2e-6 }
    }
}

impl AsyncSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.arrival_rate >= 0.0 && self.arrival_rate.is_finite()) {
            return config_err("arrival_rate must be non-negative");
        }
        if !(self.decay_time > 0.0) || !(self.burst_duration > 0.0) {
            return config_err("asynchronous decay_time and burst_duration must be positive");
        }
        if !(self.amplitude_sigma >= 0.0) {
            return config_err("amplitude_sigma must be non-negative");
        }
        Ok(())
    }

    /// Long-run mean power (Campbell's theorem).
    pub fn mean_power(&self) -> f64 {
        self.arrival_rate * self.amplitude_sigma.powi(2) * decayed_energy(self.decay_time, self.burst_duration)
    }

    pub fn with_power(&self, power: f64) -> AsyncSpec {
        let per_unit = self.arrival_rate * decayed_energy(self.decay_time, self.burst_duration);
        let sigma = if per_unit > 0.0 { (power / per_unit).sqrt() } else { 0.0 };
        AsyncSpec { amplitude_sigma: sigma, ..self.clone() }
    }
}

/// `integral_0^D exp(-2 t / tau) dt`
fn decayed_energy(tau: f64, duration: f64) -> f64 {
    0.5 * tau * -(-2.0 * duration / tau).exp_m1()
}

/// Full noise environment plus the ratios it must be calibrated to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseScenario {
    pub thermal: ThermalSpec,
    pub cyclo: Option<CycloSpec>,
    #[serde(rename = "async")]
    pub asynchronous: Option<AsyncSpec>,
    /// Signal to thermal noise ratio in dB.
    pub target_snr: f64,
    /// Signal to impulsive interference ratio in dB. Absent from a config
    /// file means unset, so a file names exactly the ratio it fixes.
    #[serde(default)]
    pub target_sir: Option<f64>,
    /// Signal to thermal-plus-impulsive ratio in dB.
    #[serde(default)]
    pub target_sinr: Option<f64>,
    pub cyclo_to_async_power_ratio: f64,
}

impl Default for NoiseScenario {
    fn default() -> Self {
        Self {
            thermal: ThermalSpec::default(),
            cyclo: Some(CycloSpec::default()),
            asynchronous: Some(AsyncSpec::default()),
            target_snr: 20.0,
            target_sir: Some(0.0),
            target_sinr: None,
            cyclo_to_async_power_ratio: 3.0,
        }
    }
}

impl NoiseScenario {
    pub fn impulsive(&self) -> bool {
        self.cyclo.is_some() || self.asynchronous.is_some()
    }

    /// The same scenario with both impulsive components removed.
    pub fn thermal_only(&self) -> NoiseScenario {
        NoiseScenario {
            cyclo: None,
            asynchronous: None,
            target_sir: None,
            target_sinr: None,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thermal.variance < 0.0 || self.thermal.psd_decay < 0.0 {
            return config_err("thermal variance and psd_decay must be non-negative");
        }
        if let Some(c) = &self.cyclo {
            c.validate()?;
        }
        if let Some(a) = &self.asynchronous {
            a.validate()?;
        }
        if !(self.cyclo_to_async_power_ratio > 0.0) {
            return config_err("cyclo_to_async_power_ratio must be positive");
        }
        if self.impulsive() && self.target_sir.is_some() == self.target_sinr.is_some() {
            return config_err("set exactly one of target_sir or target_sinr when impulsive noise is enabled");
        }
        Ok(())
    }

    /// Analytic amplitudes for every enabled component.
    pub fn calibrated(&self, signal_power: f64) -> Result<CalibratedNoise> {
        let powers = calibrate(self, signal_power)?;
        Ok(CalibratedNoise {
            thermal: ThermalSpec { variance: powers.thermal, ..self.thermal.clone() },
            cyclo: self.cyclo.as_ref().map(|c| c.with_power(powers.cyclo)),
            asynchronous: self.asynchronous.as_ref().map(|a| a.with_power(powers.asynchronous)),
            powers,
        })
    }
}

/// Long-run component powers.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComponentPowers {
    pub thermal: f64,
    pub cyclo: f64,
    pub asynchronous: f64,
}

impl ComponentPowers {
    pub fn impulsive(&self) -> f64 {
        self.cyclo + self.asynchronous
    }

    pub fn total(&self) -> f64 {
        self.thermal + self.impulsive()
    }
}

/// Splits the noise budget implied by the scenario's SNR and SIR (or SINR).
pub fn calibrate(scenario: &NoiseScenario, signal_power: f64) -> Result<ComponentPowers> {
    if !(signal_power > 0.0) {
        return arg_err(format!("signal power must be positive, got {signal_power}"));
    }
    scenario.validate()?;
    let db = |x: f64| 10f64.powf(x / 10.0);
    let thermal = signal_power / db(scenario.target_snr);
    if !scenario.impulsive() {
        return Ok(ComponentPowers { thermal, ..Default::default() });
    }
    let impulsive = match (scenario.target_sir, scenario.target_sinr) {
        (Some(sir), None) => signal_power / db(sir),
        (None, Some(sinr)) => {
            let rest = signal_power / db(sinr) - thermal;
            if rest < 0.0 {
                return config_err(format!(
                    "SINR {sinr} dB is unreachable with SNR {} dB",
                    scenario.target_snr
                ));
            }
            rest
        }
        _ => unreachable!("validated above"),
    };
    let (cyclo, asynchronous) = match (&scenario.cyclo, &scenario.asynchronous) {
        (Some(_), Some(_)) => {
            let r = scenario.cyclo_to_async_power_ratio;
            (impulsive * r / (1.0 + r), impulsive / (1.0 + r))
        }
        (Some(_), None) => (impulsive, 0.0),
        _ => (0.0, impulsive),
    };
    Ok(ComponentPowers { thermal, cyclo, asynchronous })
}

/// A scenario with amplitudes fixed for a given signal power.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedNoise {
    pub thermal: ThermalSpec,
    pub cyclo: Option<CycloSpec>,
    pub asynchronous: Option<AsyncSpec>,
    pub powers: ComponentPowers,
}

/// Random streams feeding each noise component.
#[derive(Debug, Clone, Copy)]
pub struct NoiseStreams {
    pub thermal: RngStream,
    pub cyclo: RngStream,
    pub asynchronous: RngStream,
}

/// One realization of every component over the same record.
#[derive(Debug, Clone)]
pub struct NoiseComponents {
    pub thermal: SampledSignal,
    pub cyclo: SampledSignal,
    pub asynchronous: SampledSignal,
}

impl CalibratedNoise {
    /// Generates a record of `n` samples starting at absolute time
    /// `start_time` on the mains-locked clock.
    pub fn generate(&self, n: usize, rate: f64, start_time: f64, streams: &NoiseStreams) -> Result<NoiseComponents> {
        let thermal = gen_thermal(&self.thermal, n, rate, &streams.thermal)?;
        let cyclo = match &self.cyclo {
            Some(c) => gen_cyclo(c, n, rate, start_time, &streams.cyclo)?,
            None => SampledSignal::zeros(n, rate)?,
        };
        let asynchronous = match &self.asynchronous {
            Some(a) => gen_async(a, n, rate, &streams.asynchronous)?,
            None => SampledSignal::zeros(n, rate)?,
        };
        Ok(NoiseComponents { thermal, cyclo, asynchronous })
    }
}

impl NoiseComponents {
    /// Scales each component so its power over this record equals the target.
    pub fn rescale_to(&self, powers: &ComponentPowers) -> Result<NoiseComponents> {
        Ok(NoiseComponents {
            thermal: scale_to_power(&self.thermal, powers.thermal)?,
            cyclo: scale_to_power(&self.cyclo, powers.cyclo)?,
            asynchronous: scale_to_power(&self.asynchronous, powers.asynchronous)?,
        })
    }

    pub fn measured_powers(&self) -> ComponentPowers {
        ComponentPowers {
            thermal: mean_power(&self.thermal),
            cyclo: mean_power(&self.cyclo),
            asynchronous: mean_power(&self.asynchronous),
        }
    }

    pub fn impulsive(&self) -> Result<SampledSignal> {
        self.cyclo.try_add(&self.asynchronous)
    }
}

/// Applies the amplitude mask `10^(-decay |f| / 20 MHz)` in the frequency
/// domain (so the PSD falls by `decay` dB per MHz) and restores the input
/// mean power. The record is treated as periodic.
pub fn shape_spectrum(white: &SampledSignal, decay_db_per_mhz: f64) -> Result<SampledSignal> {
    if !(decay_db_per_mhz >= 0.0) {
        return arg_err(format!("decay must be non-negative, got {decay_db_per_mhz}"));
    }
    let power = mean_power(white);
    if power == 0.0 || decay_db_per_mhz == 0.0 {
        return Ok(white.clone());
    }
    let n = white.len();
    let mut buf = white.samples().to_vec();
    fft::forward(&mut buf);
    for (k, b) in buf.iter_mut().enumerate() {
        let f = fft::bin_frequency(k, n, white.rate()).abs();
        *b *= 10f64.powf(-decay_db_per_mhz * f / 20e6);
    }
    fft::inverse(&mut buf);
    let shaped = SampledSignal::new(buf, white.rate())?;
    scale_to_power(&shaped, power)
}

/// Coloured Gaussian noise whose power over the record is exactly the
/// spec's variance.
pub fn gen_thermal(spec: &ThermalSpec, n: usize, rate: f64, stream: &RngStream) -> Result<SampledSignal> {
    if spec.variance == 0.0 {
        return SampledSignal::zeros(n, rate);
    }
    let white = complex_gaussian(n, 1.0, rate, stream)?;
    scale_to_power(&shape_spectrum(&white, spec.psd_decay)?, spec.variance)
}

/// Index of the first sample at or after absolute time `t` on a clock whose
/// sample `0` sits at time 0.
fn first_sample_at_or_after(t: f64, rate: f64) -> i64 {
    // Guard against t*rate landing a hair above an integer.
    let x = t * rate;
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as i64
    } else {
        x.ceil() as i64
    }
}

/// Absolute sample indices at which cyclostationary bursts begin, for bursts
/// touching the record `[first, first + n)`. Burst `k` begins at the first
/// sample at or after `k / (2 f_AC)`.
pub fn cyclo_burst_starts(spec: &CycloSpec, first: i64, n: usize, rate: f64) -> Vec<(i64, i64)> {
    let period = spec.period();
    let span = (spec.burst_duration * rate).ceil() as i64;
    let k_lo = (((first - span) as f64 / rate) / period).floor() as i64 - 1;
    let k_hi = (((first + n as i64) as f64 / rate) / period).ceil() as i64 + 1;
    (k_lo..=k_hi)
        .map(|k| (k, first_sample_at_or_after(k as f64 * period, rate)))
        .filter(|&(_, s)| s + span > first && s < first + n as i64)
        .collect()
}

/// Cyclostationary burst noise over `n` samples beginning at absolute time
/// `start_time` (rounded to the nearest sample of the `rate` clock).
pub fn gen_cyclo(spec: &CycloSpec, n: usize, rate: f64, start_time: f64, stream: &RngStream) -> Result<SampledSignal> {
    spec.validate()?;
    if n == 0 {
        return arg_err("sample count must be positive");
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    if spec.amplitude == 0.0 {
        return SampledSignal::new(out, rate);
    }
    let first = (start_time * rate).round() as i64;
    let bursts = cyclo_burst_starts(spec, first, n, rate);
    if bursts.is_empty() {
        return SampledSignal::new(out, rate);
    }
    let period = spec.period();
    let mut rng = stream.rng();
    let carrier = match spec.mode {
        BurstCarrier::GaussianBurst => {
            let white = complex_gaussian(n, 1.0, rate, &RngStream::new(rng.random(), 0))?;
            Some(shape_spectrum(&white, spec.psd_decay)?)
        }
        BurstCarrier::DampedSinusoid => None,
    };
    for (k, start) in bursts {
        let t_k = k as f64 * period;
        let phase0 = rng.random::<f64>() * std::f64::consts::TAU;
        let lo = (start - first).max(0);
        for idx in lo..n as i64 {
            let dt = (first + idx) as f64 / rate - t_k;
            if dt >= spec.burst_duration {
                break;
            }
            let env = spec.amplitude * (-dt / spec.decay_time).exp();
            let c = match &carrier {
                Some(g) => g.samples()[idx as usize],
                None => Complex64::from_polar(1.0, phase0 + std::f64::consts::TAU * spec.oscillation_frequency * dt),
            };
            out[idx as usize] += env * c;
        }
    }
    SampledSignal::new(out, rate)
}

/// Asynchronous impulsive noise over `n` samples.
///
/// Arrivals are drawn over `[-D, n / rate)` so pulses that started before the
/// record contribute their tails; the process is stationary so the absolute
/// start time is irrelevant.
pub fn gen_async(spec: &AsyncSpec, n: usize, rate: f64, stream: &RngStream) -> Result<SampledSignal> {
    spec.validate()?;
    if n == 0 {
        return arg_err("sample count must be positive");
    }
    let mut envelope = vec![0.0f64; n];
    if spec.arrival_rate == 0.0 || spec.amplitude_sigma == 0.0 {
        return SampledSignal::zeros(n, rate);
    }
    let mut rng = stream.rng();
    let duration = n as f64 / rate;
    let window = duration + spec.burst_duration;
    let count: f64 = Poisson::new(spec.arrival_rate * window)
        .map_err(|e| Error::Argument(e.to_string()))?
        .sample(&mut rng);
    let amp = Normal::new(0.0, spec.amplitude_sigma).map_err(|e| Error::Argument(e.to_string()))?;
    for _ in 0..count as u64 {
        let t_k = rng.random::<f64>() * window - spec.burst_duration;
        let a_k = amp.sample(&mut rng);
        let lo = first_sample_at_or_after(t_k, rate).max(0);
        for idx in lo..n as i64 {
            let dt = idx as f64 / rate - t_k;
            if dt >= spec.burst_duration {
                break;
            }
            envelope[idx as usize] += a_k * (-dt / spec.decay_time).exp();
        }
    }
    let out = envelope
        .iter()
        .map(|&e| {
            if e == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im) * (e * std::f64::consts::FRAC_1_SQRT_2)
            }
        })
        .collect();
    SampledSignal::new(out, rate)
}

/// Received record `r = s + w + i_cs + i_as`.
pub fn compose_received(
    signal: &SampledSignal,
    thermal: &SampledSignal,
    cyclo: &SampledSignal,
    asynchronous: &SampledSignal,
) -> Result<SampledSignal> {
    for other in [thermal, cyclo, asynchronous] {
        check_compatible(signal, other)?;
    }
    let out = (0..signal.len())
        .map(|i| signal.samples()[i] + thermal.samples()[i] + cyclo.samples()[i] + asynchronous.samples()[i])
        .collect();
    SampledSignal::new(out, signal.rate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::welch_psd;

    const RATE: f64 = 10e6;

    fn stream(id: u64) -> RngStream {
        RngStream::new(2024, id)
    }

    /// Least-squares slope of `y` against `x`.
    fn slope(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        sxy / sxx
    }

    fn psd_slope_db_per_mhz(x: &SampledSignal) -> f64 {
        let psd = welch_psd(x, 1024, 0.5).unwrap();
        let (f, db): (Vec<f64>, Vec<f64>) = psd
            .frequencies
            .iter()
            .zip(&psd.density)
            .filter(|(f, _)| **f > 0.0 && **f <= 1e6)
            .map(|(f, d)| (f / 1e6, 10.0 * d.log10()))
            .unzip();
        slope(&f, &db)
    }

    #[test]
    fn shaping_identity_and_power() {
        let w = complex_gaussian(4096, 2.0, RATE, &stream(1)).unwrap();
        let same = shape_spectrum(&w, 0.0).unwrap();
        for (a, b) in same.samples().iter().zip(w.samples()) {
            assert!((a - b).norm() < 1e-12);
        }
        let shaped = shape_spectrum(&w, 30.0).unwrap();
        assert!((mean_power(&shaped) / mean_power(&w) - 1.0).abs() < 1e-9);
        assert!(shape_spectrum(&w, -1.0).is_err());
    }

    #[test]
    fn shaping_slope() {
        let w = complex_gaussian(10_000_000, 1.0, RATE, &stream(2)).unwrap();
        let s = psd_slope_db_per_mhz(&shape_spectrum(&w, 30.0).unwrap());
        assert!((s + 30.0).abs() < 1.0, "slope {s}");
    }

    #[test]
    fn thermal_generation() {
        let z = gen_thermal(&ThermalSpec { variance: 0.0, psd_decay: 30.0 }, 100, RATE, &stream(3)).unwrap();
        assert_eq!(mean_power(&z), 0.0);
        let w = gen_thermal(&ThermalSpec { variance: 1.0, psd_decay: 30.0 }, 1_000_000, RATE, &stream(3)).unwrap();
        assert!((mean_power(&w) - 1.0).abs() < 1e-9);
        let s = psd_slope_db_per_mhz(&w);
        assert!((s + 30.0).abs() < 1.0, "slope {s}");
    }

    #[test]
    fn cyclo_timing() {
        let spec = CycloSpec::default();
        assert!((spec.period() - 8.3333e-3).abs() < 1e-7);
        // One tenth of the default 2.048 ms OFDM symbol, to within 2.4%.
        assert!((spec.burst_duration / 2.048e-3 - 0.1).abs() < 0.0025);
        let n = 1_000_000; // 100 ms
        let starts = cyclo_burst_starts(&spec, 0, n, RATE);
        let idx: Vec<i64> = starts.iter().map(|s| s.1).filter(|s| *s >= 0).collect();
        for w in idx.windows(2) {
            let d = w[1] - w[0];
            assert!(d == 83_333 || d == 83_334, "spacing {d}");
        }
        // Every index is the ceiling of k * period * rate.
        for (k, s) in &starts {
            let exact = *k as f64 * 1e7 / 120.0;
            assert!((*s as f64 - exact) >= -1e-6 && (*s as f64 - exact) < 1.0);
        }
    }

    #[test]
    fn cyclo_burst_shape() {
        let spec = CycloSpec { amplitude: 2.0, ..Default::default() };
        // Record starting 1 ms before burst k=1.
        let start = spec.period() - 1e-3;
        let x = gen_cyclo(&spec, 30_000, RATE, start, &stream(4)).unwrap();
        let first = (start * RATE).round() as i64;
        let (k, abs_onset) = cyclo_burst_starts(&spec, first, 30_000, RATE)[0];
        assert_eq!(k, 1);
        let onset = (abs_onset - first) as usize;
        assert!(x.samples()[..onset].iter().all(|s| s.norm() == 0.0));
        let t_k = spec.period();
        let expect_at = |i: usize| 2.0 * (-((first + i as i64) as f64 / RATE - t_k) / 40e-6).exp();
        let mag = x.samples()[onset].norm();
        assert!(mag <= 2.0 && mag > 1.99, "onset magnitude {mag}");
        assert!((mag - expect_at(onset)).abs() < 1e-9);
        let later = x.samples()[onset + 1000].norm();
        assert!((later - expect_at(onset + 1000)).abs() < 1e-9, "{later}");
        let end = onset + 2000;
        assert!(x.samples()[end + 1..].iter().all(|s| s.norm() == 0.0));
    }

    #[test]
    fn cyclo_zero_amplitude_and_bad_duration() {
        let spec = CycloSpec { amplitude: 0.0, ..Default::default() };
        let x = gen_cyclo(&spec, 100_000, RATE, 0.0, &stream(5)).unwrap();
        assert_eq!(mean_power(&x), 0.0);
        let bad = CycloSpec { burst_duration: 9e-3, ..Default::default() };
        assert!(gen_cyclo(&bad, 10, RATE, 0.0, &stream(5)).is_err());
    }

    #[test]
    fn cyclo_long_run_power_matches_analytic() {
        for mode in [BurstCarrier::DampedSinusoid, BurstCarrier::GaussianBurst] {
            let spec = CycloSpec { mode, ..Default::default() }.with_power(0.75);
            assert!((spec.mean_power() - 0.75).abs() < 1e-12);
            // 12 full periods.
            let n = (12.0 * spec.period() * RATE).round() as usize;
            let x = gen_cyclo(&spec, n, RATE, 0.0, &stream(6)).unwrap();
            let p = mean_power(&x);
            let tol = if mode == BurstCarrier::DampedSinusoid { 0.01 } else { 0.3 };
            assert!((p / 0.75 - 1.0).abs() < tol, "{mode:?}: {p}");
        }
    }

    #[test]
    fn async_zero_rate() {
        let spec = AsyncSpec { arrival_rate: 0.0, ..Default::default() };
        assert_eq!(mean_power(&gen_async(&spec, 1000, RATE, &stream(7)).unwrap()), 0.0);
    }

    #[test]
    fn async_event_count() {
        // Count isolated onsets: with amplitude sigma 1 and sparse arrivals
        // every pulse begins with a nonzero sample after a zero run.
        let spec = AsyncSpec { arrival_rate: 1000.0, ..Default::default() };
        let mut total = 0usize;
        let runs = 20;
        for r in 0..runs {
            let x = gen_async(&spec, 10_000_000, RATE, &stream(100 + r)).unwrap();
            let s = x.samples();
            total += (1..s.len()).filter(|&i| s[i].norm() > 0.0 && s[i - 1].norm() == 0.0).count();
        }
        let mean = total as f64 / runs as f64;
        // Poisson oracle on the mean of 20 one-second records: sd = sqrt(1000/20).
        assert!((mean - 1000.0).abs() < 3.0 * (1000.0f64 / runs as f64).sqrt() + 2.0, "mean count {mean}");
    }

    #[test]
    fn async_power_matches_campbell() {
        let spec = AsyncSpec { amplitude_sigma: 3.0, ..Default::default() };
        // Independent closed form: lambda sigma^2 tau/2 (1 - exp(-2D/tau)).
        let oracle = 1e4 * 9.0 * 0.2e-6 * (1.0 - (-10.0f64).exp());
        assert!((spec.mean_power() - oracle).abs() < 1e-15);
        let mut acc = 0.0;
        for r in 0..100 {
            acc += mean_power(&gen_async(&spec, 100_000, RATE, &stream(300 + r)).unwrap());
        }
        let p = acc / 100.0;
        assert!((p / oracle - 1.0).abs() < 0.05, "{p} vs {oracle}");
    }

    #[test]
    fn calibration_rules() {
        let mut sc = NoiseScenario { target_snr: 10.0, target_sir: Some(0.0), ..Default::default() };
        let p = calibrate(&sc, 1.0).unwrap();
        assert!((p.thermal - 0.1).abs() < 1e-15);
        assert!((p.cyclo - 0.75).abs() < 1e-15);
        assert!((p.asynchronous - 0.25).abs() < 1e-15);

        sc.target_sinr = Some(3.0);
        assert!(matches!(calibrate(&sc, 1.0), Err(Error::Config(_))));
        sc.target_sir = None;
        sc.target_snr = 200.0;
        let p = calibrate(&sc, 1.0).unwrap();
        assert!(p.thermal < 1e-19);
        assert!((p.impulsive() - 10f64.powf(-0.3)).abs() < 1e-12);
        sc.target_snr = 0.0;
        assert!(calibrate(&sc, 1.0).is_err());
        sc.target_sinr = None;
        assert!(calibrate(&sc, 1.0).is_err());
        assert!(calibrate(&sc.thermal_only(), 1.0).is_ok());
        assert!(calibrate(&sc.thermal_only(), 0.0).is_err());

        let only_cyclo = NoiseScenario { asynchronous: None, ..Default::default() };
        let p = calibrate(&only_cyclo, 1.0).unwrap();
        assert_eq!((p.cyclo, p.asynchronous), (1.0, 0.0));
    }

    #[test]
    fn compose_rules() {
        let s = complex_gaussian(64, 1.0, RATE, &stream(9)).unwrap();
        let w = complex_gaussian(64, 1.0, RATE, &stream(10)).unwrap();
        let i1 = complex_gaussian(64, 1.0, RATE, &stream(11)).unwrap();
        let i2 = complex_gaussian(64, 1.0, RATE, &stream(12)).unwrap();
        let z = SampledSignal::zeros(64, RATE).unwrap();
        assert_eq!(compose_received(&s, &z, &z, &z).unwrap(), s);
        let r = compose_received(&z, &w, &i1, &i2).unwrap();
        let expect = w.try_add(&i1).unwrap().try_add(&i2).unwrap();
        for (a, b) in r.samples().iter().zip(expect.samples()) {
            assert!((a - b).norm() < 1e-15);
        }
        let r1 = compose_received(&s, &w, &i1, &i2).unwrap();
        let r2 = compose_received(&s.scaled(2.0), &w.scaled(2.0), &i1.scaled(2.0), &i2.scaled(2.0)).unwrap();
        for (a, b) in r1.samples().iter().zip(r2.samples()) {
            assert!((2.0 * a - b).norm() < 1e-12);
        }
        let short = SampledSignal::zeros(63, RATE).unwrap();
        assert!(compose_received(&s, &short, &z, &z).is_err());
        let other_rate = SampledSignal::zeros(64, 1.0).unwrap();
        assert!(compose_received(&s, &w, &other_rate, &z).is_err());
    }
}

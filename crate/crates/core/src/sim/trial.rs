//! One OFDM symbol through the whole link.
//!
//! map -> modulate -> upsample -> add noise -> front end -> downsample ->
//! demodulate -> equalize -> demap.
//!
//! The analog record carries a cyclic prefix of `warmup` samples in front of
//! the symbol. The front end filters the prefix along with the symbol and the
//! prefix is then dropped, so the IIR filters see the symbol in periodic
//! steady state and every carrier is scaled by the chain's response at its
//! frequency, which the receiver divides out.

use num_complex::Complex64;
use rand::Rng;

use crate::andl::{Andl, AndlParams};
use crate::error::{Error, Result};
use crate::mitigators::{blank_in_place, optimize_blanking_threshold, BlankingPosition, BlankingThreshold, ThresholdSearch};
use crate::noise::{compose_received, CalibratedNoise, ComponentPowers, NoiseScenario, NoiseStreams};
use crate::ofdm::{demap, demodulate, map_bits, modulate, BitBlock, OfdmConfig, RrcInterpolator};
use crate::signal::{RngStream, SampledSignal};

use super::config::{MitigatorKind, SweepSpec};

/// Random stream tags within one trial.
pub mod component {
    pub const BITS: u8 = 0;
    pub const THERMAL: u8 = 1;
    pub const CYCLO: u8 = 2;
    pub const ASYNC: u8 = 3;
    pub const TIMING: u8 = 4;
}

/// Trial indices at or above this offset are reserved for the blanking
/// threshold search, keeping its records disjoint from the sweep's.
pub const SEARCH_TRIAL_OFFSET: u64 = 1 << 31;

/// A transmitted symbol and what arrived at the receiver input.
#[derive(Debug, Clone)]
pub struct ReceivedRecord {
    pub tx_bits: BitBlock,
    /// Transmitted analog waveform including the cyclic prefix.
    pub signal: SampledSignal,
    /// Signal plus thermal noise: the impulse-free mixture.
    pub clean: SampledSignal,
    pub received: SampledSignal,
    /// Component powers measured on this record.
    pub powers: ComponentPowers,
    /// Absolute record start on the mains-locked clock.
    pub start_time: f64,
}

/// Output of one front end on one record.
#[derive(Debug, Clone)]
pub struct Detection {
    pub rx_bits: BitBlock,
    pub errors: u64,
    /// Resolution parameter used by the limiter.
    pub alpha: Option<f64>,
}

/// A front end with everything data-independent resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrontEnd {
    None,
    Linear,
    Blanking { threshold: f64, position: BlankingPosition },
    Andl { alpha_multiplier: f64 },
}

impl FrontEnd {
    pub fn kind(&self) -> MitigatorKind {
        match self {
            FrontEnd::None => MitigatorKind::None,
            FrontEnd::Linear => MitigatorKind::Linear,
            FrontEnd::Blanking { .. } => MitigatorKind::Blanking,
            FrontEnd::Andl { .. } => MitigatorKind::Andl,
        }
    }
}

/// Per-trial result for every front end.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub tx_bits: BitBlock,
    /// `None` for front ends skipped on this trial.
    pub detections: Vec<Option<Detection>>,
    pub powers: ComponentPowers,
}

/// The link at one sweep point.
#[derive(Debug, Clone)]
pub struct TrialChain {
    ofdm: OfdmConfig,
    interp: RrcInterpolator,
    andl: Andl,
    andl_params: AndlParams,
    noise: CalibratedNoise,
    warmup: usize,
    seed: u64,
    point: usize,
    signal_power: f64,
    /// Demodulated response to unit symbols, without and with the filter.
    response_direct: Vec<Complex64>,
    response_filtered: Vec<Complex64>,
}

impl TrialChain {
    /// Builds the chain for an explicit scenario.
    pub fn new(
        ofdm: &OfdmConfig,
        scenario: &NoiseScenario,
        andl_params: &AndlParams,
        warmup: usize,
        seed: u64,
        point: usize,
    ) -> Result<Self> {
        ofdm.validate()?;
        let interp = RrcInterpolator::new(ofdm)?;
        let andl = Andl::new(andl_params, ofdm.analog_rate())?;
        let probe = vec![Complex64::new(1.0, 0.0); ofdm.data_carrier_count()];
        let probe_analog = interp.interpolate(&modulate(&probe, ofdm)?);
        let signal_power = probe_analog.mean_power();
        let noise = scenario.calibrated(signal_power)?;
        let mut chain = Self {
            ofdm: ofdm.clone(),
            interp,
            andl,
            andl_params: andl_params.clone(),
            noise,
            warmup,
            seed,
            point,
            signal_power,
            response_direct: Vec::new(),
            response_filtered: Vec::new(),
        };
        let extended = chain.with_prefix(probe_analog.samples());
        chain.response_direct = chain.receive(&extended)?;
        chain.response_filtered = chain.receive(&chain.andl.run(&extended, f64::INFINITY))?;
        if chain.response_filtered.iter().any(|c| c.norm() < 1e-6) {
            return Err(Error::Config("front end removes a data carrier".into()));
        }
        Ok(chain)
    }

    /// Builds the chain for sweep point `point` of `spec`.
    pub fn for_point(spec: &SweepSpec, point: usize) -> Result<Self> {
        Self::new(&spec.ofdm, &spec.point_scenario(point), &spec.andl, spec.warmup, spec.seed, point)
    }

    pub fn ofdm(&self) -> &OfdmConfig {
        &self.ofdm
    }

    pub fn noise(&self) -> &CalibratedNoise {
        &self.noise
    }

    pub fn andl(&self) -> &Andl {
        &self.andl
    }

    pub fn signal_power(&self) -> f64 {
        self.signal_power
    }

    /// Per-carrier gain of the linear filter chain as seen after
    /// demodulation (close to the filter response at each carrier).
    pub fn filtered_response(&self) -> &[Complex64] {
        &self.response_filtered
    }

    pub fn direct_response(&self) -> &[Complex64] {
        &self.response_direct
    }

    /// Expected rms magnitude of the received record.
    pub fn received_rms(&self) -> f64 {
        (self.signal_power + self.noise.powers.total()).sqrt()
    }

    fn with_prefix(&self, symbol: &[Complex64]) -> Vec<Complex64> {
        let n = symbol.len();
        (0..self.warmup)
            .map(|i| symbol[(n - self.warmup % n + i) % n])
            .chain(symbol.iter().copied())
            .collect()
    }

    /// ADC and FFT on a front-end output that still has its prefix.
    fn receive(&self, filtered: &[Complex64]) -> Result<Vec<Complex64>> {
        let l = self.ofdm.oversample;
        let adc: Vec<Complex64> = filtered[self.warmup..].iter().step_by(l).copied().collect();
        demodulate(&SampledSignal::new(adc, self.ofdm.sample_rate)?, &self.ofdm)
    }

    fn stream(&self, trial: u64, component: u8) -> RngStream {
        RngStream::for_trial(self.seed, self.point, trial, component)
    }

    /// Generates the transmitted symbol and received record of a trial.
    pub fn received(&self, trial: u64) -> Result<ReceivedRecord> {
        let bits = BitBlock::random(self.ofdm.bits_per_block(), &mut self.stream(trial, component::BITS).rng());
        let symbols = map_bits(&bits, self.ofdm.modulation)?;
        let analog = self.interp.interpolate(&modulate(&symbols, &self.ofdm)?);
        let rate = analog.rate();
        let signal = SampledSignal::new(self.with_prefix(analog.samples()), rate)?;
        let start_time = match &self.noise.cyclo {
            Some(c) => self.stream(trial, component::TIMING).rng().random::<f64>() * c.period(),
            None => 0.0,
        };
        let streams = NoiseStreams {
            thermal: self.stream(trial, component::THERMAL),
            cyclo: self.stream(trial, component::CYCLO),
            asynchronous: self.stream(trial, component::ASYNC),
        };
        let noise = self.noise.generate(signal.len(), rate, start_time, &streams)?;
        let clean = signal.try_add(&noise.thermal)?;
        let received = compose_received(&signal, &noise.thermal, &noise.cyclo, &noise.asynchronous)?;
        Ok(ReceivedRecord {
            tx_bits: bits,
            signal,
            clean,
            received,
            powers: noise.measured_powers(),
            start_time,
        })
    }

    /// Resolution parameter the limiter uses on a record.
    pub fn andl_alpha(&self, record: &ReceivedRecord, multiplier: f64) -> Result<f64> {
        let alpha = self.andl.resolve_alpha(
            &self.andl_params.resolution,
            Some(record.clean.samples()),
            record.received.samples(),
        )?;
        Ok(alpha * multiplier)
    }

    /// Front-end output over the whole record, prefix included.
    pub fn front_end_output(&self, record: &ReceivedRecord, front_end: FrontEnd) -> Result<(Vec<Complex64>, Option<f64>)> {
        let r = record.received.samples();
        Ok(match front_end {
            FrontEnd::None => (r.to_vec(), None),
            FrontEnd::Linear => (self.andl.run(r, f64::INFINITY), None),
            FrontEnd::Blanking { threshold, position: BlankingPosition::BeforeFilter } => {
                let mut x = r.to_vec();
                blank_in_place(&mut x, threshold);
                (self.andl.run(&x, f64::INFINITY), None)
            }
            FrontEnd::Blanking { threshold, position: BlankingPosition::AfterFilter } => {
                let mut y = self.andl.run(r, f64::INFINITY);
                blank_in_place(&mut y, threshold);
                (y, None)
            }
            FrontEnd::Andl { alpha_multiplier } => {
                let alpha = self.andl_alpha(record, alpha_multiplier)?;
                (self.andl.run(r, alpha), Some(alpha))
            }
        })
    }

    /// Equalized carrier estimates for a front-end output.
    pub fn equalized(&self, filtered: &[Complex64], front_end: FrontEnd) -> Result<Vec<Complex64>> {
        let response = match front_end {
            FrontEnd::None => &self.response_direct,
            _ => &self.response_filtered,
        };
        Ok(self.receive(filtered)?.iter().zip(response).map(|(y, c)| y / c).collect())
    }

    /// Runs one front end on a record and counts bit errors.
    pub fn detect(&self, record: &ReceivedRecord, front_end: FrontEnd) -> Result<Detection> {
        let (filtered, alpha) = self.front_end_output(record, front_end)?;
        let rx_bits = demap(&self.equalized(&filtered, front_end)?, self.ofdm.modulation);
        let errors = record.tx_bits.0.iter().zip(&rx_bits.0).filter(|(a, b)| a != b).count() as u64;
        Ok(Detection { rx_bits, errors, alpha })
    }

    /// One trial for every front end whose `active` flag is set, all on the
    /// same received record.
    pub fn run_trial(&self, trial: u64, front_ends: &[FrontEnd], active: &[bool]) -> Result<TrialOutcome> {
        let wrap = |e: Error| Error::Trial { point: self.point, trial, source: Box::new(e) };
        let record = self.received(trial).map_err(wrap)?;
        let detections = front_ends
            .iter()
            .zip(active)
            .map(|(fe, &on)| if on { self.detect(&record, *fe).map(Some) } else { Ok(None) })
            .collect::<Result<Vec<_>>>()
            .map_err(wrap)?;
        Ok(TrialOutcome { tx_bits: record.tx_bits, detections, powers: record.powers })
    }

    /// Exhaustive blanking threshold search on records reserved for it.
    pub fn search_blanking_threshold(&self, grid: &[f64], trials: u64, position: BlankingPosition) -> Result<ThresholdSearch> {
        optimize_blanking_threshold(grid, trials, |t, thresholds| {
            let trial = SEARCH_TRIAL_OFFSET + t;
            let record = self
                .received(trial)
                .map_err(|e| Error::Trial { point: self.point, trial, source: Box::new(e) })?;
            let bits = record.tx_bits.len() as u64;
            thresholds
                .iter()
                .map(|&threshold| {
                    let fe = FrontEnd::Blanking { threshold, position };
                    Ok((self.detect(&record, fe)?.errors, bits))
                })
                .collect()
        })
    }

    /// Resolves the configured mitigators for this point, searching for the
    /// blanking threshold if needed.
    pub fn front_ends(&self, spec: &SweepSpec, point: usize) -> Result<Vec<FrontEnd>> {
        spec.mitigators
            .iter()
            .map(|m| {
                Ok(match m {
                    MitigatorKind::None => FrontEnd::None,
                    MitigatorKind::Linear => FrontEnd::Linear,
                    MitigatorKind::Andl => FrontEnd::Andl { alpha_multiplier: spec.alpha_multiplier(point) },
                    MitigatorKind::Blanking => {
                        let position = spec.blanking.position;
                        let threshold = match &spec.blanking.threshold {
                            BlankingThreshold::Fixed(t) => *t,
                            BlankingThreshold::Search(grid) => {
                                let candidates = grid.thresholds(self.received_rms());
                                self.search_blanking_threshold(&candidates, grid.trials, position)?.best_threshold
                            }
                        };
                        FrontEnd::Blanking { threshold, position }
                    }
                })
            })
            .collect()
    }
}

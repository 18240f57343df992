//! Memoryless baseline front ends: blanking and clipping.
//!
//! Both run at the analog emulation rate ahead of the ADC. In the receiver
//! chain blanking is paired with the linear Butterworth cascade, which is
//! also the anti-aliasing filter; [`BlankingPosition`] sets the order.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, config_err, Result};
use crate::signal::SampledSignal;

/// Zeroes every sample with `|x| > threshold`.
pub fn blank(signal: &SampledSignal, threshold: f64) -> Result<SampledSignal> {
    if !(threshold > 0.0) {
        return arg_err(format!("blanking threshold must be positive, got {threshold}"));
    }
    let mut out = signal.samples().to_vec();
    blank_in_place(&mut out, threshold);
    SampledSignal::new(out, signal.rate())
}

pub(crate) fn blank_in_place(x: &mut [Complex64], threshold: f64) {
    let t2 = threshold * threshold;
    for s in x.iter_mut().filter(|s| s.norm_sqr() > t2) {
        *s = Complex64::new(0.0, 0.0);
    }
}

/// Limits the magnitude to `threshold`, keeping the phase.
pub fn clip(signal: &SampledSignal, threshold: f64) -> Result<SampledSignal> {
    if !(threshold > 0.0) {
        return arg_err(format!("clipping threshold must be positive, got {threshold}"));
    }
    let out = signal
        .samples()
        .iter()
        .map(|&s| {
            let m = s.norm();
            if m > threshold {
                s * (threshold / m)
            } else {
                s
            }
        })
        .collect();
    SampledSignal::new(out, signal.rate())
}

/// Log-spaced candidate thresholds, as multiples of the expected rms
/// magnitude of the received record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdGrid {
    pub points: usize,
    pub low: f64,
    pub high: f64,
    /// Trials per evaluation of the whole grid.
    pub trials: u64,
}

impl Default for ThresholdGrid {
    fn default() -> Self {
        Self { points: 40, low: 0.1, high: 20.0, trials: 400 }
    }
}

impl ThresholdGrid {
    pub fn validate(&self) -> Result<()> {
        if self.points == 0 || self.trials == 0 {
            return config_err("threshold grid needs at least one point and one trial");
        }
        if !(self.low > 0.0 && self.high >= self.low && self.high.is_finite()) {
            return config_err(format!("bad threshold grid range [{}, {}]", self.low, self.high));
        }
        Ok(())
    }

    /// Absolute thresholds for a record with the given rms magnitude.
    pub fn thresholds(&self, rms: f64) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.low * rms];
        }
        let ratio = (self.high / self.low).ln();
        (0..self.points)
            .map(|i| rms * self.low * (ratio * i as f64 / (self.points - 1) as f64).exp())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlankingThreshold {
    Fixed(f64),
    Search(ThresholdGrid),
}

impl Default for BlankingThreshold {
    fn default() -> Self {
        BlankingThreshold::Search(ThresholdGrid::default())
    }
}

/// Where blanking sits relative to the linear front-end filter. Both run at
/// the analog emulation rate, ahead of the ADC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlankingPosition {
    /// Blank the raw received record, then filter.
    BeforeFilter,
    /// Filter, then blank: a digital blanker behind the anti-aliasing filter.
    #[default]
    AfterFilter,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlankingParams {
    pub threshold: BlankingThreshold,
    pub position: BlankingPosition,
}

impl BlankingParams {
    pub fn validate(&self) -> Result<()> {
        match &self.threshold {
            BlankingThreshold::Fixed(t) if !(*t > 0.0) => {
                config_err(format!("blanking threshold must be positive, got {t}"))
            }
            BlankingThreshold::Search(grid) => grid.validate(),
            _ => Ok(()),
        }
    }
}

/// Outcome of a threshold search.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSearch {
    pub best_threshold: f64,
    /// `(threshold, ber)` for every grid point, in grid order.
    pub ber_per_threshold: Vec<(f64, f64)>,
}

/// Exhaustive search: evaluates every threshold on the same `trials`
/// received records and returns the one with the lowest BER, the smallest
/// threshold winning ties.
///
/// `evaluate(trial, thresholds)` must run one trial of the full chain and
/// return the bit errors and bit count for each threshold; it has to be a
/// pure function of its arguments for the search to be reproducible.
pub fn optimize_blanking_threshold<F>(grid: &[f64], trials: u64, evaluate: F) -> Result<ThresholdSearch>
where
    F: Fn(u64, &[f64]) -> Result<Vec<(u64, u64)>> + Sync,
{
    if grid.is_empty() || trials == 0 {
        return arg_err("threshold search needs a nonempty grid and at least one trial");
    }
    if grid.iter().any(|t| !(*t > 0.0)) {
        return arg_err("thresholds must be positive");
    }
    let per_trial = (0..trials)
        .into_par_iter()
        .map(|t| evaluate(t, grid))
        .collect::<Result<Vec<_>>>()?;
    let mut totals = vec![(0u64, 0u64); grid.len()];
    for counts in per_trial {
        for (acc, (e, b)) in totals.iter_mut().zip(counts) {
            acc.0 += e;
            acc.1 += b;
        }
    }
    let ber_per_threshold: Vec<(f64, f64)> = grid
        .iter()
        .zip(&totals)
        .map(|(&t, &(e, b))| (t, if b == 0 { 0.0 } else { e as f64 / b as f64 }))
        .collect();
    let best_threshold = ber_per_threshold
        .iter()
        .fold(None::<(f64, f64)>, |best, &(t, ber)| match best {
            Some((bt, bb)) if bb < ber || (bb == ber && bt <= t) => Some((bt, bb)),
            _ => Some((t, ber)),
        })
        .map(|(t, _)| t)
        .expect("grid is nonempty");
    Ok(ThresholdSearch { best_threshold, ber_per_threshold })
}

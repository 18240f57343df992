//! Monte Carlo sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::config::{SweepSpec, SweepVariable};
use super::stats::{wilson_interval, Z_99};
use super::trial::{FrontEnd, TrialChain};

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub mitigator: String,
    pub sweep_var: SweepVariable,
    pub sweep_value_db: f64,
    pub ber: f64,
    pub errors: u64,
    pub bits: u64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Mean resolution parameter over the counted trials (limiter only).
    pub alpha: Option<f64>,
}

impl ResultRecord {
    /// False when the point stopped at the bit cap short of the error target.
    pub fn error_target_met(&self, target_errors: u64) -> bool {
        self.errors >= target_errors
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    errors: u64,
    bits: u64,
    alpha_sum: f64,
    alpha_count: u64,
}

/// Progress reports, one per finished (point, mitigator) pair.
pub trait Progress: Sync {
    fn point_started(&self, _point: usize, _front_ends: &[FrontEnd]) {}
    fn record_done(&self, _record: &ResultRecord) {}
}

impl Progress for () {}

/// Runs every sweep point and returns records ordered by point, then by
/// mitigator in config order.
///
/// Trials run in fixed-size batches on `workers` threads (all cores when
/// `None`); stopping is decided between batches from counts summed in trial
/// order, so the output does not depend on the worker count.
pub fn run_sweep(spec: &SweepSpec, workers: Option<usize>) -> Result<Vec<ResultRecord>> {
    run_sweep_with(spec, workers, &())
}

pub fn run_sweep_with(spec: &SweepSpec, workers: Option<usize>, progress: &dyn Progress) -> Result<Vec<ResultRecord>> {
    spec.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::Config("worker count must be positive".into()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("cannot start workers: {e}")))?;
    pool.install(|| {
        let mut records = Vec::new();
        for point in 0..spec.points.len() {
            records.extend(run_point(spec, point, progress)?);
        }
        Ok(records)
    })
}

fn run_point(spec: &SweepSpec, point: usize, progress: &dyn Progress) -> Result<Vec<ResultRecord>> {
    let chain = TrialChain::for_point(spec, point)?;
    let front_ends = chain.front_ends(spec, point)?;
    progress.point_started(point, &front_ends);
    let m = front_ends.len();
    let mut tallies = vec![Tally::default(); m];
    let mut active = vec![true; m];
    let mut next = 0u64;
    while active.iter().any(|a| *a) {
        let outcomes = (next..next + spec.batch_trials)
            .into_par_iter()
            .map(|t| chain.run_trial(t, &front_ends, &active))
            .collect::<Result<Vec<_>>>()?;
        for outcome in &outcomes {
            let bits = outcome.tx_bits.len() as u64;
            for (tally, det) in tallies.iter_mut().zip(&outcome.detections) {
                if let Some(d) = det {
                    tally.errors += d.errors;
                    tally.bits += bits;
                    if let Some(a) = d.alpha {
                        tally.alpha_sum += a;
                        tally.alpha_count += 1;
                    }
                }
            }
        }
        next += spec.batch_trials;
        for (on, t) in active.iter_mut().zip(&tallies) {
            let converged = t.bits >= spec.min_bits && t.errors >= spec.target_errors;
            if converged || t.bits >= spec.max_bits {
                *on = false;
            }
        }
    }
    let records: Vec<ResultRecord> = front_ends
        .iter()
        .zip(&tallies)
        .map(|(fe, t)| {
            let (ci_lo, ci_hi) = wilson_interval(t.errors, t.bits, Z_99);
            ResultRecord {
                mitigator: fe.kind().to_string(),
                sweep_var: spec.sweep,
                sweep_value_db: spec.sweep_value_db(point),
                ber: t.errors as f64 / t.bits as f64,
                errors: t.errors,
                bits: t.bits,
                ci_lo,
                ci_hi,
                alpha: (t.alpha_count > 0).then(|| t.alpha_sum / t.alpha_count as f64),
            }
        })
        .collect();
    records.iter().for_each(|r| progress.record_done(r));
    Ok(records)
}

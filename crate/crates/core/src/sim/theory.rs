//! Analytic bit error rate of the linear receiver in thermal noise only.

use statrs::function::erf::erfc;

use crate::error::{arg_err, Result};
use crate::fft::bin_frequency;
use crate::ofdm::Modulation;

use super::config::SweepSpec;
use super::trial::TrialChain;

/// Per-carrier SNR `gamma_k = |C_k|^2 / E|N_k|^2` after equalization, with
/// `C_k` the chain's carrier response and `N_k` the coloured thermal noise
/// after the filter, the ADC (which folds every alias of the carrier) and
/// the FFT.
pub fn carrier_snr(chain: &TrialChain, filtered: bool) -> Vec<f64> {
    let ofdm = chain.ofdm();
    let thermal = &chain.noise().thermal;
    let l = ofdm.oversample;
    let n = ofdm.n_fft;
    let n_sym = n * l;
    let rate = ofdm.analog_rate();
    let mask = |m: usize| 10f64.powf(-thermal.psd_decay * bin_frequency(m, n_sym, rate).abs() / 10e6);
    let mean_mask = (0..n_sym).map(mask).sum::<f64>() / n_sym as f64;
    let g2 = ofdm.power_gain().powi(2);
    let response = if filtered { chain.filtered_response() } else { chain.direct_response() };
    ofdm.carriers()
        .zip(response)
        .map(|(k, c)| {
            let folded: f64 = (0..l)
                .map(|j| {
                    let m = k + j * n;
                    let h = if filtered { chain.andl().linear_response(bin_frequency(m, n_sym, rate)).norm_sqr() } else { 1.0 };
                    mask(m) / mean_mask * h
                })
                .sum();
            let noise = thermal.variance * folded / (g2 * l as f64);
            c.norm_sqr() / noise
        })
        .collect()
}

/// Mean bit error rate over the data carriers for BPSK or QPSK.
pub fn awgn_ber(chain: &TrialChain, filtered: bool) -> Result<f64> {
    let per_axis = match chain.ofdm().modulation {
        Modulation::Bpsk => 1.0,
        Modulation::Qpsk => 0.5,
        Modulation::Qam16 => return arg_err("the analytic curve covers BPSK and QPSK only"),
    };
    let snr = carrier_snr(chain, filtered);
    Ok(snr.iter().map(|g| 0.5 * erfc((g * per_axis).sqrt())).sum::<f64>() / snr.len() as f64)
}

/// Analytic curve for every point of an `awgn_only` sweep: `(snr_db, ber)`.
pub fn awgn_curve(spec: &SweepSpec) -> Result<Vec<(f64, f64)>> {
    (0..spec.points.len())
        .map(|i| {
            let chain = TrialChain::new(&spec.ofdm, &spec.point_scenario(i).thermal_only(), &spec.andl, spec.warmup, spec.seed, i)?;
            Ok((spec.points[i], awgn_ber(&chain, true)?))
        })
        .collect()
}

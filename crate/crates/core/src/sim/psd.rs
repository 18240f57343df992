//! Spectral snapshots of the front ends on one long received record.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;

use crate::error::Result;
use crate::noise::{compose_received, NoiseStreams};
use crate::ofdm::{map_bits, modulate, BitBlock, RrcInterpolator};
use crate::signal::{welch_psd, Psd, RngStream, SampledSignal};

use super::config::SweepSpec;
use super::trial::{component, TrialChain};

/// In-band powers used to compare the two front ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InBandPowers {
    pub band: (f64, f64),
    /// Noise plus interference at the filter output, measured against the
    /// linear filter's response to the transmitted signal alone.
    pub noise_linear: f64,
    pub noise_andl: f64,
    /// Output power with impulses disabled (signal plus thermal).
    pub clean_linear: f64,
    pub clean_andl: f64,
}

impl InBandPowers {
    /// How far the limiter pushes in-band noise below the linear filter.
    pub fn suppression_db(&self) -> f64 {
        10.0 * (self.noise_linear / self.noise_andl).log10()
    }

    /// In-band output level change caused by the limiter without impulses.
    pub fn clean_difference_db(&self) -> f64 {
        10.0 * (self.clean_andl / self.clean_linear).log10()
    }
}

#[derive(Debug, Clone)]
pub struct PsdReport {
    pub received: Psd,
    pub linear: Psd,
    pub andl: Psd,
    pub in_band: InBandPowers,
    pub alpha: f64,
}

/// Filters one multi-symbol record at the first sweep point of `spec` with
/// the linear filter and with the limiter, and estimates the spectra.
pub fn psd_snapshot(spec: &SweepSpec) -> Result<PsdReport> {
    spec.validate()?;
    let chain = TrialChain::for_point(spec, 0)?;
    let ofdm = chain.ofdm();
    let interp = RrcInterpolator::new(ofdm)?;
    let mut tx = Vec::new();
    for s in 0..spec.psd.symbols as u64 {
        let mut rng = RngStream::for_trial(spec.seed, 0, s, component::BITS).rng();
        let bits = BitBlock::random(ofdm.bits_per_block(), &mut rng);
        let symbol = modulate(&map_bits(&bits, ofdm.modulation)?, ofdm)?;
        tx.extend_from_slice(interp.interpolate(&symbol).samples());
    }
    let rate = ofdm.analog_rate();
    let signal = SampledSignal::new(tx, rate)?;
    let noise = chain.noise();
    let start_time = match &noise.cyclo {
        Some(c) => RngStream::for_trial(spec.seed, 0, 0, component::TIMING).rng().random::<f64>() * c.period(),
        None => 0.0,
    };
    let streams = NoiseStreams {
        thermal: RngStream::for_trial(spec.seed, 0, 0, component::THERMAL),
        cyclo: RngStream::for_trial(spec.seed, 0, 0, component::CYCLO),
        asynchronous: RngStream::for_trial(spec.seed, 0, 0, component::ASYNC),
    };
    let parts = noise.generate(signal.len(), rate, start_time, &streams)?;
    let received = compose_received(&signal, &parts.thermal, &parts.cyclo, &parts.asynchronous)?;
    let clean = signal.try_add(&parts.thermal)?;

    let andl = chain.andl();
    let alpha = andl.resolve_alpha(&spec.andl.resolution, Some(clean.samples()), received.samples())?;
    let run = |x: &SampledSignal, a: f64| SampledSignal::new(andl.run(x.samples(), a), rate);
    let out_linear = run(&received, f64::INFINITY)?;
    let out_andl = run(&received, alpha)?;
    let desired = run(&signal, f64::INFINITY)?;
    let clean_linear = run(&clean, f64::INFINITY)?;
    let clean_andl = run(&clean, alpha)?;

    let welch = |x: &SampledSignal| welch_psd(x, spec.psd.segment_len, spec.psd.overlap);
    let band = ofdm.occupied_band();
    let in_band = |x: &SampledSignal| -> Result<f64> { Ok(welch(x)?.band_power(band.0, band.1)) };
    let residual = |y: &SampledSignal| y.try_sub(&desired);
    Ok(PsdReport {
        received: welch(&received)?,
        linear: welch(&out_linear)?,
        andl: welch(&out_andl)?,
        in_band: InBandPowers {
            band,
            noise_linear: in_band(&residual(&out_linear)?)?,
            noise_andl: in_band(&residual(&out_andl)?)?,
            clean_linear: in_band(&clean_linear)?,
            clean_andl: in_band(&clean_andl)?,
        },
        alpha,
    })
}

/// Writes `psd.csv` (densities in dB re 1/Hz per trace) and `psd.svg` (a
/// log-frequency overlay of the positive-frequency half) into `dir`.
pub fn emit_psd(traces: &[(&str, &Psd)], dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join("psd.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    let mut header = vec!["frequency_hz".to_string()];
    header.extend(traces.iter().map(|(label, _)| format!("{label}_db")));
    w.write_record(&header)?;
    if let Some((_, first)) = traces.first() {
        for (i, f) in first.frequencies.iter().enumerate() {
            let mut row = vec![f.to_string()];
            row.extend(traces.iter().map(|(_, p)| to_db(p.density[i]).to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    let svg_path = dir.join("psd.svg");
    std::fs::write(&svg_path, svg_overlay(traces))?;
    Ok((csv_path, svg_path))
}

fn to_db(x: f64) -> f64 {
    10.0 * x.max(1e-300).log10()
}

const COLOURS: [&str; 6] = ["#7f7f7f", "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

/// A self-contained SVG line chart, frequency on a log axis.
pub fn svg_overlay(traces: &[(&str, &Psd)]) -> String {
    let (w, h) = (900.0, 540.0);
    let (left, right, top, bottom) = (80.0, 170.0, 30.0, 60.0);
    let (pw, ph) = (w - left - right, h - top - bottom);

    let positive: Vec<Vec<(f64, f64)>> = traces
        .iter()
        .map(|(_, p)| {
            p.frequencies
                .iter()
                .zip(&p.density)
                .filter(|(f, _)| **f > 0.0)
                .map(|(f, d)| (f.log10(), to_db(*d)))
                .collect()
        })
        .collect();
    let all = positive.iter().flatten();
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (3.0, 6.0, -100.0, 0.0);
    }
    x0 = x0.floor();
    x1 = x1.ceil().max(x0 + 1.0);
    y1 = (y1 / 10.0).ceil() * 10.0;
    // Keep 100 dB of range; the deep stopband is not informative.
    y0 = ((y0 / 10.0).floor() * 10.0).max(y1 - 100.0).min(y1 - 10.0);
    let px = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| top + (y1 - y.clamp(y0, y1)) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let mut decade = x0;
    while decade <= x1 + 1e-9 {
        let x = px(decade);
        let _ = writeln!(s, r##"<line x1="{x:.1}" y1="{top}" x2="{x:.1}" y2="{:.1}" stroke="#ddd"/>"##, top + ph);
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, top + ph + 18.0, freq_label(decade));
        decade += 1.0;
    }
    let mut level = y0;
    while level <= y1 + 1e-9 {
        let y = py(level);
        let _ = writeln!(s, r##"<line x1="{left}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/>"##, left + pw);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{level:.0}</text>"#, left - 6.0, y + 4.0);
        level += 10.0;
    }
    let _ = writeln!(s, r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">Frequency (Hz)</text>"#, left + pw / 2.0, h - 15.0);
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">PSD (dB/Hz)</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (i, ((label, _), pts)) in traces.iter().zip(&positive).enumerate() {
        let colour = COLOURS[i % COLOURS.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.2" points="{}"/>"#, path.join(" "));
        let ly = top + 20.0 + 20.0 * i as f64;
        let lx = left + pw + 15.0;
        let _ = writeln!(s, r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{colour}" stroke-width="2"/>"#, lx + 25.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 32.0, ly + 4.0, escape(label));
    }
    s.push_str("</svg>\n");
    s
}

fn freq_label(log10_hz: f64) -> String {
    let hz = 10f64.powf(log10_hz).round();
    match hz {
        h if h >= 1e6 => format!("{}M", h / 1e6),
        h if h >= 1e3 => format!("{}k", h / 1e3),
        h => format!("{h}"),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

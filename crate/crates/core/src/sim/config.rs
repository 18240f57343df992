//! Sweep configuration, read from TOML.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::andl::{AndlParams, Resolution};
use crate::error::{config_err, Error, Result};
use crate::mitigators::BlankingParams;
use crate::noise::{calibrate, NoiseScenario};
use crate::ofdm::OfdmConfig;

/// What the sweep points mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Points are SNR in dB; the scenario's SIR stays fixed.
    SnrFixedSir,
    /// Points are SNR in dB; the scenario's SINR stays fixed.
    SnrFixedSinr,
    /// Points are multipliers of the limiter's resolution parameter.
    AlphaSweep,
    /// Points are SNR in dB with every impulsive component removed.
    AwgnOnly,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::SnrFixedSir => "snr_fixed_sir",
            SweepVariable::SnrFixedSinr => "snr_fixed_sinr",
            SweepVariable::AlphaSweep => "alpha_sweep",
            SweepVariable::AwgnOnly => "awgn_only",
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Front end placed between the received record and the ADC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MitigatorKind {
    /// Straight to the ADC, no filtering.
    None,
    /// The limiter with its nonlinearity disabled (third-order Butterworth).
    Linear,
    /// Blanking followed by the linear filter.
    Blanking,
    /// The adaptive nonlinear differential limiter.
    Andl,
}

impl MitigatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MitigatorKind::None => "none",
            MitigatorKind::Linear => "linear",
            MitigatorKind::Blanking => "blanking",
            MitigatorKind::Andl => "andl",
        }
    }
}

impl fmt::Display for MitigatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Settings for the `psd` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsdSpec {
    /// OFDM symbols in the analysed record.
    pub symbols: usize,
    pub segment_len: usize,
    pub overlap: f64,
}

impl Default for PsdSpec {
    fn default() -> Self {
        Self { symbols: 16, segment_len: 4096, overlap: 0.5 }
    }
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub name: String,
    pub description: String,
    pub ofdm: OfdmConfig,
    /// Noise template; the sweep overrides the SNR (or the limiter's
    /// resolution for `alpha_sweep`).
    pub scenario: NoiseScenario,
    pub mitigators: Vec<MitigatorKind>,
    pub andl: AndlParams,
    pub blanking: BlankingParams,
    pub sweep: SweepVariable,
    pub points: Vec<f64>,
    pub min_bits: u64,
    /// Bit errors required before a point may stop early.
    pub target_errors: u64,
    /// Hard stop for points that never reach the error target.
    pub max_bits: u64,
    pub seed: u64,
    /// Trials per scheduling batch. Stopping is only checked between
    /// batches, which keeps results independent of the worker count.
    pub batch_trials: u64,
    /// Cyclic-prefix samples run through the front end and then discarded,
    /// so the filters reach steady state before the symbol starts.
    pub warmup: usize,
    pub psd: PsdSpec,
    /// Settings whose values are placeholders rather than published figures.
    pub paper_unverified: Vec<String>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            name: String::new(),
            description: String::new(),
            ofdm: OfdmConfig::default(),
            scenario: NoiseScenario::default(),
            mitigators: vec![MitigatorKind::Linear, MitigatorKind::Blanking, MitigatorKind::Andl],
            andl: AndlParams::default(),
            blanking: BlankingParams::default(),
            sweep: SweepVariable::SnrFixedSir,
            points: Vec::new(),
            min_bits: 1_000_000,
            target_errors: 100,
            max_bits: 100_000_000,
            seed: 1,
            batch_trials: 64,
            warmup: 1024,
            psd: PsdSpec::default(),
            paper_unverified: Vec::new(),
        }
    }
}

impl SweepSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: SweepSpec = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Reads a config file. A missing or unreadable file is a configuration
    /// error, not a runtime one.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.ofdm.validate()?;
        self.andl.validate()?;
        self.blanking.validate()?;
        if self.points.is_empty() {
            return config_err("sweep needs at least one point");
        }
        if self.points.iter().any(|p| !p.is_finite()) {
            return config_err("sweep points must be finite");
        }
        if self.mitigators.is_empty() {
            return config_err("at least one mitigator is required");
        }
        for (i, m) in self.mitigators.iter().enumerate() {
            if self.mitigators[..i].contains(m) {
                return config_err(format!("mitigator {m} listed twice"));
            }
        }
        if self.min_bits == 0 {
            return config_err("min_bits must be positive");
        }
        if self.max_bits < self.min_bits {
            return config_err("max_bits must be at least min_bits");
        }
        if self.batch_trials == 0 {
            return config_err("batch_trials must be positive");
        }
        if self.psd.symbols == 0 || self.psd.segment_len < 2 || !(0.0..1.0).contains(&self.psd.overlap) {
            return config_err("psd needs symbols > 0, segment_len >= 2 and overlap in [0, 1)");
        }
        match self.sweep {
            SweepVariable::SnrFixedSir if self.scenario.target_sir.is_none() || !self.scenario.impulsive() => {
                return config_err("snr_fixed_sir needs impulsive noise and scenario.target_sir");
            }
            SweepVariable::SnrFixedSinr if self.scenario.target_sinr.is_none() || !self.scenario.impulsive() => {
                return config_err("snr_fixed_sinr needs impulsive noise and scenario.target_sinr");
            }
            SweepVariable::AlphaSweep => {
                if self.points.iter().any(|p| !(*p > 0.0)) {
                    return config_err("alpha multipliers must be positive");
                }
                if !self.mitigators.contains(&MitigatorKind::Andl) {
                    return config_err("alpha_sweep needs the andl mitigator");
                }
            }
            _ => {}
        }
        for i in 0..self.points.len() {
            // Ratios only, so any positive signal power will do.
            calibrate(&self.point_scenario(i), 1.0)?;
        }
        Ok(())
    }

    /// The noise scenario at sweep point `index`.
    pub fn point_scenario(&self, index: usize) -> NoiseScenario {
        let p = self.points[index];
        match self.sweep {
            SweepVariable::SnrFixedSir | SweepVariable::SnrFixedSinr => {
                NoiseScenario { target_snr: p, ..self.scenario.clone() }
            }
            SweepVariable::AwgnOnly => NoiseScenario { target_snr: p, ..self.scenario.thermal_only() },
            SweepVariable::AlphaSweep => self.scenario.clone(),
        }
    }

    /// Factor applied to the limiter's resolution at point `index`.
    pub fn alpha_multiplier(&self, index: usize) -> f64 {
        match self.sweep {
            SweepVariable::AlphaSweep => self.points[index],
            _ => 1.0,
        }
    }

    /// Value written to the `sweep_value_db` column: the SNR, or the alpha
    /// multiplier expressed as `20 log10(m)`.
    pub fn sweep_value_db(&self, index: usize) -> f64 {
        match self.sweep {
            SweepVariable::AlphaSweep => 20.0 * self.points[index].log10(),
            _ => self.points[index],
        }
    }

    /// True when the limiter adapts its resolution from the data.
    pub fn adaptive_andl(&self) -> bool {
        matches!(self.andl.resolution, Resolution::Adaptive { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::andl::SigmaSource;
    use crate::mitigators::{BlankingThreshold, ThresholdGrid};

    #[test]
    fn minimal_config_uses_defaults() {
        let spec = SweepSpec::from_toml("points = [10.0, 20.0]\n[scenario]\ntarget_sir = 0.0").unwrap();
        assert_eq!(spec.min_bits, 1_000_000);
        assert_eq!(spec.target_errors, 100);
        assert_eq!(spec.max_bits, 100_000_000);
        assert_eq!(spec.ofdm, OfdmConfig::default());
        assert_eq!(spec.scenario.cyclo_to_async_power_ratio, 3.0);
        assert_eq!(spec.andl.follow_q, 1.0);
        assert_eq!(spec.blanking.threshold, BlankingThreshold::Search(ThresholdGrid::default()));
        assert_eq!(spec.point_scenario(1).target_snr, 20.0);
    }

    #[test]
    fn full_round_trip() {
        let spec = SweepSpec {
            points: vec![0.25, 1.0, 4.0],
            sweep: SweepVariable::AlphaSweep,
            andl: AndlParams {
                resolution: Resolution::Adaptive { epsilon: 0.01, source: SigmaSource::Robust },
                ..Default::default()
            },
            ..Default::default()
        };
        let back = SweepSpec::from_toml(&spec.to_toml()).unwrap();
        assert_eq!(back, spec);
        assert!((back.sweep_value_db(2) - 12.041_199_826_559_248).abs() < 1e-12);
        assert_eq!(back.alpha_multiplier(0), 0.25);
    }

    #[test]
    fn nested_tables_parse() {
        let text = r#"
            sweep = "snr_fixed_sinr"
            points = [10.0, 30.0]
            mitigators = ["none", "andl"]
            [scenario]
            target_sinr = 0.0
            [scenario.cyclo]
            mode = "gaussian_burst"
            [andl]
            resolution = { fixed = 0.5 }
            [blanking]
            threshold = { fixed = 2.0 }
            "#;
        let spec = SweepSpec::from_toml(text).unwrap();
        assert_eq!(spec.scenario.target_sir, None);
        assert_eq!(spec.andl.resolution, Resolution::Fixed(0.5));
        assert_eq!(spec.blanking.threshold, BlankingThreshold::Fixed(2.0));
        assert_eq!(spec.mitigators, vec![MitigatorKind::None, MitigatorKind::Andl]);
        assert!(spec.scenario.asynchronous.is_some());
    }

    #[test]
    fn impulsive_file_must_name_one_ratio() {
        let neither = "points = [10.0]\n[scenario]\ntarget_snr = 10.0\n";
        assert!(SweepSpec::from_toml(neither).unwrap_err().is_config());
        let both = "points = [10.0]\n[scenario]\ntarget_sir = 0.0\ntarget_sinr = 0.0\n";
        assert!(SweepSpec::from_toml(both).unwrap_err().is_config());
    }

    #[test]
    fn rejects_bad_specs() {
        let bad = [
            "points = []",
            "points = [1.0]\nmin_bits = 0",
            "points = [1.0]\nmax_bits = 10",
            "points = [1.0]\nmitigators = []",
            "points = [1.0]\nmitigators = [\"andl\", \"andl\"]",
            "points = [1.0]\nbogus = 3",
            "points = [1.0]\nsweep = \"snr_fixed_sinr\"",
            "points = [-1.0]\nsweep = \"alpha_sweep\"",
            "points = [1.0]\nsweep = \"alpha_sweep\"\nmitigators = [\"linear\"]",
            "points = [1.0]\n[ofdm]\nfirst_carrier = 400\nlast_carrier = 300",
            "points = [1.0]\n[andl]\ntau0 = -1.0",
            "points = [1.0]\n[blanking]\nthreshold = { fixed = 0.0 }",
            "points = [\"x\"]",
        ];
        for text in bad {
            let err = SweepSpec::from_toml(text).unwrap_err();
            assert!(err.is_config(), "{text}: {err}");
        }
    }

    #[test]
    fn sinr_below_snr_budget_is_rejected() {
        let text = "sweep = \"snr_fixed_sinr\"\npoints = [5.0]\n[scenario]\ntarget_sinr = 10.0\n";
        assert!(SweepSpec::from_toml(text).unwrap_err().is_config());
        let mut spec = SweepSpec {
            sweep: SweepVariable::SnrFixedSinr,
            points: vec![5.0],
            ..Default::default()
        };
        spec.scenario.target_sir = None;
        spec.scenario.target_sinr = Some(10.0);
        assert!(matches!(spec.validate(), Err(Error::Config(_))));
        spec.points = vec![15.0];
        spec.validate().unwrap();
    }

    #[test]
    fn awgn_points_drop_impulses() {
        let spec = SweepSpec { sweep: SweepVariable::AwgnOnly, points: vec![-3.0], ..Default::default() };
        let s = spec.point_scenario(0);
        assert!(!s.impulsive());
        assert_eq!(s.target_snr, -3.0);
        assert_eq!(s.target_sir, None);
    }

    #[test]
    fn missing_file_is_config_error() {
        let err = SweepSpec::from_file(Path::new("/nonexistent/sweep.toml")).unwrap_err();
        assert!(err.is_config());
    }
}

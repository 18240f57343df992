use plc_andl::andl::Resolution;
use plc_andl::noise::NoiseScenario;
use plc_andl::ofdm::Modulation;
use plc_andl::sim::{presets, run_sweep, write_records, FrontEnd, MitigatorKind, SweepSpec, SweepVariable, TrialChain};

fn quiet_spec(modulation: Modulation) -> SweepSpec {
    let mut spec = SweepSpec {
        sweep: SweepVariable::AwgnOnly,
        points: vec![300.0],
        mitigators: vec![MitigatorKind::None, MitigatorKind::Linear, MitigatorKind::Andl],
        min_bits: 1,
        max_bits: 1,
        ..Default::default()
    };
    spec.ofdm.modulation = modulation;
    spec.scenario = NoiseScenario { cyclo: None, asynchronous: None, target_sir: None, ..Default::default() };
    spec
}

#[test]
fn noiseless_singleton_is_error_free_and_flagged() {
    let mut spec = quiet_spec(Modulation::Bpsk);
    spec.mitigators = vec![MitigatorKind::None];
    spec.min_bits = 970;
    spec.max_bits = 970;
    spec.batch_trials = 5;
    let records = run_sweep(&spec, Some(1)).unwrap();
    assert_eq!(records.len(), 1);
    let r = &records[0];
    assert_eq!((r.errors, r.bits, r.ber), (0, 970, 0.0));
    assert_eq!(r.ci_lo, 0.0);
    assert!(r.ci_hi > 0.0 && r.ci_hi < 0.01);
    assert!(!r.error_target_met(spec.target_errors));
    assert_eq!(r.alpha, None);
}

#[test]
fn every_front_end_is_transparent_without_noise() {
    for modulation in [Modulation::Bpsk, Modulation::Qpsk, Modulation::Qam16] {
        let spec = quiet_spec(modulation);
        let chain = TrialChain::for_point(&spec, 0).unwrap();
        let front_ends = [FrontEnd::None, FrontEnd::Linear, FrontEnd::Andl { alpha_multiplier: 1.0 }];
        for trial in 0..4 {
            let out = chain.run_trial(trial, &front_ends, &[true; 3]).unwrap();
            for d in out.detections.iter().flatten() {
                assert_eq!(d.errors, 0, "{modulation:?} trial {trial}");
            }
        }
    }
}

#[test]
fn huge_alpha_detects_like_the_linear_filter() {
    let mut spec = presets::load("fig5").unwrap();
    spec.andl.resolution = Resolution::Fixed(1e9);
    let chain = TrialChain::for_point(&spec, 0).unwrap();
    let front_ends = [FrontEnd::Linear, FrontEnd::Andl { alpha_multiplier: 1.0 }];
    let mut errors = 0;
    for trial in 0..40 {
        let out = chain.run_trial(trial, &front_ends, &[true, true]).unwrap();
        let lin = out.detections[0].as_ref().unwrap();
        let andl = out.detections[1].as_ref().unwrap();
        assert_eq!(lin.rx_bits, andl.rx_bits);
        errors += lin.errors;
    }
    assert!(errors > 0, "the comparison should include erroneous symbols");
}

#[test]
fn records_satisfy_interval_and_stopping_invariants() {
    let mut spec = presets::load("fig6").unwrap();
    spec.points = vec![0.0, 20.0];
    spec.mitigators = vec![MitigatorKind::Linear, MitigatorKind::Andl];
    spec.min_bits = 2000;
    spec.target_errors = 50;
    spec.max_bits = 20_000;
    spec.batch_trials = 8;
    let records = run_sweep(&spec, None).unwrap();
    let order: Vec<(&str, f64)> = records.iter().map(|r| (r.mitigator.as_str(), r.sweep_value_db)).collect();
    assert_eq!(order, [("linear", 0.0), ("andl", 0.0), ("linear", 20.0), ("andl", 20.0)]);
    let per_batch = 8 * 97;
    for r in &records {
        assert!(r.ci_lo <= r.ber && r.ber <= r.ci_hi);
        assert!(r.bits >= spec.min_bits);
        assert!(r.error_target_met(spec.target_errors) || r.bits >= spec.max_bits);
        // Early stop happens at the first batch boundary meeting both rules.
        if r.bits < spec.max_bits {
            assert!(r.bits - per_batch < spec.min_bits || r.errors >= spec.target_errors);
        }
        assert_eq!(r.alpha.is_some(), r.mitigator == "andl");
    }
    // The linear filter collects errors quickly at this impulsive level.
    assert!(records[0].error_target_met(50) && records[0].bits < spec.max_bits);
}

#[test]
fn seed_controls_output() {
    let mut spec = quiet_spec(Modulation::Bpsk);
    spec.points = vec![-4.0];
    spec.mitigators = vec![MitigatorKind::Linear];
    spec.min_bits = 3000;
    spec.max_bits = 3000;
    let csv = |spec: &SweepSpec| {
        let mut buf = Vec::new();
        write_records(&run_sweep(spec, Some(2)).unwrap(), &mut buf).unwrap();
        buf
    };
    let a = csv(&spec);
    assert_eq!(a, csv(&spec));
    spec.seed = 2;
    assert_ne!(a, csv(&spec));
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for name in presets::names() {
        let spec = presets::load(name).unwrap();
        let path = dir.path().join(format!("{name}.toml"));
        std::fs::write(&path, spec.to_toml()).unwrap();
        assert_eq!(SweepSpec::from_file(&path).unwrap(), spec);
    }
}

#[test]
fn alpha_sweep_reports_multipliers_in_db() {
    let mut spec = presets::load("fig7").unwrap();
    spec.points = vec![0.5, 2.0];
    spec.mitigators = vec![MitigatorKind::Andl];
    spec.min_bits = 97;
    spec.max_bits = 97;
    spec.batch_trials = 1;
    let records = run_sweep(&spec, Some(1)).unwrap();
    assert!((records[0].sweep_value_db + 6.0206).abs() < 1e-3);
    assert!((records[1].sweep_value_db - 6.0206).abs() < 1e-3);
    let ratio = records[1].alpha.unwrap() / records[0].alpha.unwrap();
    assert!((ratio - 4.0).abs() < 0.05, "{ratio}");
}

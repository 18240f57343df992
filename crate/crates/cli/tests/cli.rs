use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
name = "small"
sweep = "snr_fixed_sir"
points = [20.0]
mitigators = ["linear", "blanking", "andl"]
min_bits = 1940
max_bits = 1940
batch_trials = 4

[blanking.threshold.search]
trials = 8
points = 6

[scenario]
target_sir = 0.0

[scenario.cyclo]
mode = "gaussian_burst"
"#;

fn plcsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plcsim")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn list_presets() {
    let out = plcsim(&["list-presets"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["fig4", "fig5", "fig6", "fig7", "fig8"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing from {text}");
    }
    let show = plcsim(&["list-presets", "--show", "fig6"]);
    assert_eq!(show.status.code(), Some(0));
    assert!(String::from_utf8(show.stdout).unwrap().contains("snr_fixed_sinr"));
    assert_eq!(plcsim(&["list-presets", "--show", "fig9"]).status.code(), Some(1));
}

#[test]
fn run_writes_csv_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let out = plcsim(&["run", "--config", &cfg, "--workers", "1", "--out", a.to_str().unwrap(), "-q"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = plcsim(&["run", "--config", &cfg, "--workers", "3", "--out", b.to_str().unwrap(), "-q"]);
    assert_eq!(out.status.code(), Some(0));
    let csv_a = std::fs::read_to_string(a.join("results.csv")).unwrap();
    let csv_b = std::fs::read_to_string(b.join("results.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    let mut lines = csv_a.lines();
    assert_eq!(lines.next(), Some("mitigator,sweep_var,sweep_value_db,ber,errors,bits,ci_lo,ci_hi,alpha"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("linear,snr_fixed_sir,20.0,"));
    assert!(rows[2].starts_with("andl,"));
    assert!(!a.join("theory.csv").exists());

    let c = dir.path().join("c");
    let out = plcsim(&["run", "--config", &cfg, "--seed", "9", "--out", c.to_str().unwrap(), "-q"]);
    assert_eq!(out.status.code(), Some(0));
    assert_ne!(std::fs::read_to_string(c.join("results.csv")).unwrap(), csv_a);
}

#[test]
fn awgn_run_adds_theory_curve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "awgn.toml",
        "sweep = \"awgn_only\"\npoints = [-4.0, 0.0]\nmitigators = [\"andl\"]\nmin_bits = 970\nmax_bits = 970\n",
    );
    let out = plcsim(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let theory = std::fs::read_to_string(dir.path().join("theory.csv")).unwrap();
    let rows: Vec<&str> = theory.lines().collect();
    assert_eq!(rows[0], "sweep_value_db,ber");
    assert_eq!(rows.len(), 3);
    let ber: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!(ber > 0.0 && ber < 0.5);
}

#[test]
fn psd_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "psd.toml", &format!("{SMALL}\n[psd]\nsymbols = 2\nsegment_len = 1024\n"));
    let out = plcsim(&["psd", "--config", &cfg, "--out", dir.path().join("p").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains("suppression"));
    let csv = std::fs::read_to_string(dir.path().join("p/psd.csv")).unwrap();
    assert!(csv.starts_with("frequency_hz,received_db,linear_db,andl_db"));
    let svg = std::fs::read_to_string(dir.path().join("p/psd.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let missing = dir.path().join("nope.toml");
    assert_eq!(plcsim(&["run", "--config", missing.to_str().unwrap(), "--out", out_dir]).status.code(), Some(1));
    let bad = write(dir.path(), "bad.toml", "points = [");
    assert_eq!(plcsim(&["run", "--config", &bad, "--out", out_dir]).status.code(), Some(1));
    let unknown = write(dir.path(), "unknown.toml", "points = [1.0]\nbogus = 3\n");
    assert_eq!(plcsim(&["run", "--config", &unknown, "--out", out_dir]).status.code(), Some(1));
    let empty = write(dir.path(), "empty.toml", "points = []\n");
    assert_eq!(plcsim(&["run", "--config", &empty, "--out", out_dir]).status.code(), Some(1));
    let cfg = write(dir.path(), "small.toml", SMALL);
    assert_eq!(plcsim(&["run", "--config", &cfg, "--workers", "0", "--out", out_dir]).status.code(), Some(1));
    assert_eq!(plcsim(&["run"]).status.code(), Some(1));
    assert_eq!(plcsim(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(plcsim(&["--help"]).status.code(), Some(0));
}

#[test]
fn unwritable_output_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let blocker = write(dir.path(), "file", "");
    let out = plcsim(&["run", "--config", &cfg, "--out", &format!("{blocker}/sub"), "-q"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error:"));
}

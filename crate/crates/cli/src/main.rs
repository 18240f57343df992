//! `plcsim`: runs BER sweeps and PSD snapshots from TOML configs or the
//! bundled presets.
//!
//! Exit status is 0 on success, 1 for configuration and usage errors and 2
//! for failures while running.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use plc_andl::sim::{self, presets, FrontEnd, Progress, ResultRecord, SweepSpec, SweepVariable};
use plc_andl::Error;

#[derive(Parser)]
#[command(name = "plcsim", version, about = "Powerline OFDM simulator with an adaptive nonlinear differential limiter")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo BER sweep and write results.csv.
    Run {
        /// Config file, or the name of a bundled preset.
        #[arg(long)]
        config: String,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Suppress per-record progress on stderr.
        #[arg(long, short)]
        quiet: bool,
    },
    /// Estimate received, linear and limiter output spectra; writes psd.csv and psd.svg.
    Psd {
        #[arg(long)]
        config: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// List the bundled presets.
    ListPresets {
        /// Print the TOML source of the named preset instead.
        #[arg(long)]
        show: Option<String>,
    },
}

fn load_spec(config: &str) -> Result<SweepSpec, Error> {
    let path = Path::new(config);
    if path.exists() || presets::source(config).is_none() {
        SweepSpec::from_file(path)
    } else {
        presets::load(config)
    }
}

struct Reporter {
    start: Instant,
    points: usize,
}

impl Progress for Reporter {
    fn point_started(&self, point: usize, _front_ends: &[FrontEnd]) {
        eprintln!("[{:7.1}s] point {}/{}", self.start.elapsed().as_secs_f64(), point + 1, self.points);
    }

    fn record_done(&self, r: &ResultRecord) {
        let alpha = r.alpha.map(|a| format!(" alpha={a:.4}")).unwrap_or_default();
        eprintln!(
            "[{:7.1}s]   {:<9} {:>8.3} dB  ber={:.3e} ({} / {}){alpha}",
            self.start.elapsed().as_secs_f64(),
            r.mitigator,
            r.sweep_value_db,
            r.ber,
            r.errors,
            r.bits
        );
    }
}

fn run(config: &str, seed: Option<u64>, workers: Option<usize>, out: &Path, quiet: bool) -> Result<(), Error> {
    let mut spec = load_spec(config)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    spec.validate()?;
    std::fs::create_dir_all(out)?;
    let reporter = Reporter { start: Instant::now(), points: spec.points.len() };
    let records = if quiet { sim::run_sweep(&spec, workers)? } else { sim::run_sweep_with(&spec, workers, &reporter)? };
    let path = out.join("results.csv");
    sim::emit_results(&records, &path)?;
    println!("wrote {}", path.display());
    for r in records.iter().filter(|r| !r.error_target_met(spec.target_errors)) {
        eprintln!(
            "note: {} at {} dB stopped at {} bits with {} errors, short of the {}-error target",
            r.mitigator, r.sweep_value_db, r.bits, r.errors, spec.target_errors
        );
    }
    if spec.sweep == SweepVariable::AwgnOnly {
        let path = out.join("theory.csv");
        sim::emit_curve(&sim::theory::awgn_curve(&spec)?, &path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn psd(config: &str, out: &Path) -> Result<(), Error> {
    let spec = load_spec(config)?;
    let report = sim::psd_snapshot(&spec)?;
    let traces = [("received", &report.received), ("linear", &report.linear), ("andl", &report.andl)];
    let (csv, svg) = sim::emit_psd(&traces, out)?;
    println!("wrote {}", csv.display());
    println!("wrote {}", svg.display());
    let p = &report.in_band;
    println!("alpha: {:.6}", report.alpha);
    println!("band: {:.1} to {:.1} kHz", p.band.0 / 1e3, p.band.1 / 1e3);
    println!("in-band noise, linear: {:.4e}", p.noise_linear);
    println!("in-band noise, andl:   {:.4e}", p.noise_andl);
    println!("suppression: {:.2} dB", p.suppression_db());
    println!("clean signal level difference: {:.3} dB", p.clean_difference_db());
    Ok(())
}

fn list_presets(show: Option<&str>) -> Result<(), Error> {
    if let Some(name) = show {
        match presets::source(name) {
            Some(text) => print!("{text}"),
            None => return Err(Error::Config(format!("unknown preset {name:?}"))),
        }
        return Ok(());
    }
    for name in presets::names() {
        let spec = presets::load(name)?;
        println!("{name:<6} {}", spec.description);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run { config, seed, workers, out, quiet } => run(config, *seed, *workers, out, *quiet),
        Command::Psd { config, out } => psd(config, out),
        Command::ListPresets { show } => list_presets(show.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}

//! Monte Carlo experiments: configs, the trial chain, sweeps and outputs.

pub mod config;
pub mod output;
pub mod presets;
pub mod psd;
pub mod stats;
pub mod sweep;
pub mod theory;
pub mod trial;

pub use config::{MitigatorKind, SweepSpec, SweepVariable};
pub use output::{emit_curve, emit_results, load_results, read_records, write_records, CSV_HEADER};
pub use psd::{emit_psd, psd_snapshot, PsdReport};
pub use stats::{wilson_interval, Z_99};
pub use sweep::{run_sweep, run_sweep_with, Progress, ResultRecord};
pub use trial::{FrontEnd, TrialChain};

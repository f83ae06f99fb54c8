//! Seeded Monte Carlo sweeps over SNR, training length and network load, and their output.

pub mod check;
pub mod cli;
pub mod config;
pub mod output;
pub mod recipes;
pub mod sweep;
pub mod trial;

pub use config::{CsitMode, ScenarioConfig, Scheme};
pub use output::{emit_results, read_csv, OutputFormat};
pub use sweep::{run_sweep, SweepPoint, SweepResult, Tier};
pub use trial::{run_trial, PointRates, TrialRecord};

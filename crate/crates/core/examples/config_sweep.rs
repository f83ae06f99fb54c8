//! Runs a sweep described by a TOML file and writes CSV (or JSON) to stdout or a file.
//!
//! cargo run --release --example config_sweep -- crates/core/configs/quick.toml [out.csv]

use std::path::PathBuf;

use muvfdm::experiments::{emit_results, run_sweep, OutputFormat, ScenarioConfig};

fn main() -> muvfdm::Result<()> {
    let mut args = std::env::args().skip(1);
    let Some(config) = args.next() else {
        eprintln!("usage: config_sweep <config.toml> [out.csv|out.json|-]");
        std::process::exit(1);
    };
    let out = PathBuf::from(args.next().unwrap_or_else(|| "-".into()));
    let format = if out.extension().is_some_and(|e| e == "json") { OutputFormat::Json } else { OutputFormat::Csv };

    let cfg = ScenarioConfig::default().overlay_file(config.as_ref())?;
    cfg.validate()?;
    let res = run_sweep(&cfg, None)?;
    eprintln!("{} points, {} resampled draws, config {}", res.points.len(), res.total_resamples(), &res.config_hash[..12]);
    emit_results(&[res], &out, format)
}

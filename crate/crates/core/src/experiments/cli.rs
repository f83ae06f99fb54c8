//! Command-line front end. Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::check::property_check;
use super::config::{CsitMode, ScenarioConfig, Scheme};
use super::output::{emit_results, OutputFormat};
use super::recipes::{csit_scenario, separation_scenario, sum_rate_scenario};
use super::sweep::{run_sweep, SweepResult, Tier};
use crate::error::Result;

#[derive(Parser, Debug)]
#[command(name = "muvfdm", version, about = "Two-tier spectrum sharing Monte Carlo simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Small-cell sum rate of the bound, regularized inverse and matched filter against SNR.
    SumRate {
        #[command(flatten)]
        common: Common,
        /// Load rates gamma_tx*L/N to sweep (whole numbers).
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        beta: Vec<usize>,
    },
    /// Rates under trained channel knowledge relative to perfect knowledge, over the training grid.
    CsitSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        beta: Vec<usize>,
        #[arg(long = "cells", value_delimiter = ',', default_value = "3")]
        k: Vec<usize>,
    },
    /// Spectrum sharing against a static band split between the tiers.
    CompareSeparation {
        #[command(flatten)]
        common: Common,
        /// Use trained instead of perfect channel knowledge.
        #[arg(long)]
        imperfect: bool,
    },
    /// Verify the structural invariants of the precoder chain on random draws.
    Check {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Flat TOML file with scenario keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Size preset: default, paper-small or paper-full.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// SNR grid in dB, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr: Option<Vec<f64>>,
    /// Output path, `-` for standard output.
    #[arg(long, default_value = "-")]
    out: PathBuf,
    #[arg(long, default_value = "csv")]
    format: String,
    /// Worker threads for the trial loop (all cores by default).
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn apply(&self, mut cfg: ScenarioConfig) -> Result<ScenarioConfig> {
        if let Some(name) = &self.preset {
            let p = ScenarioConfig::preset(name)?;
            let beta = cfg.load_rate().fraction();
            cfg = ScenarioConfig { n: p.n, l: p.l, bandwidth_hz: p.bandwidth_hz, ..cfg }.with_load_rate(beta.0, beta.1)?;
        }
        if let Some(path) = &self.config {
            cfg = cfg.overlay_file(path)?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(snr) = &self.snr {
            cfg.snr_db = snr.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn format(&self) -> Result<OutputFormat> {
        self.format.parse()
    }
}

/// Parses `args` (program name first), runs the command and returns the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::SumRate { common, beta } => {
            let configs = beta
                .iter()
                .map(|&b| common.apply(sum_rate_scenario(b)?))
                .collect::<Result<Vec<_>>>()?;
            sweep_and_emit(&common, &configs)?;
        }
        Command::CsitSweep { common, beta, k } => {
            let mut configs = Vec::new();
            for &b in &beta {
                for &cells in &k {
                    let mut cfg = common.apply(csit_scenario(cells, b)?)?;
                    cfg.csit = CsitMode::Imperfect;
                    configs.push(cfg);
                }
            }
            let results = sweep_and_emit(&common, &configs)?;
            print_ratio_table(&results);
        }
        Command::CompareSeparation { common, imperfect } => {
            let csit = if imperfect { CsitMode::Imperfect } else { CsitMode::Perfect };
            let cfg = common.apply(separation_scenario(csit)?)?;
            sweep_and_emit(&common, &[cfg])?;
        }
        Command::Check { common } => {
            let mut base = ScenarioConfig::default();
            base.schemes = vec![Scheme::Ribf];
            base.trials = 100;
            let cfg = common.apply(base)?;
            let report = property_check(&cfg, cfg.trials)?;
            eprintln!("{report:#?}");
            if !report.passes() {
                eprintln!("check FAILED");
                return Ok(2);
            }
            eprintln!("check passed");
        }
    }
    Ok(0)
}

fn sweep_and_emit(common: &Common, configs: &[ScenarioConfig]) -> Result<Vec<SweepResult>> {
    let format = common.format()?;
    let results = configs
        .iter()
        .map(|cfg| run_sweep(cfg, common.threads))
        .collect::<Result<Vec<_>>>()?;
    emit_results(&results, &common.out, format)?;
    Ok(results)
}

fn print_ratio_table(results: &[SweepResult]) {
    eprintln!("beta  K  snr_db  scheme      tier    best_tau  ratio");
    for r in results {
        for &snr in &r.config.snr_db {
            for &scheme in &r.config.schemes {
                for tier in [Tier::Macro, Tier::Small] {
                    if let (Some((tau, _)), Some(ratio)) =
                        (r.best_tau(scheme, tier, snr), r.best_tau_ratio(scheme, tier, snr))
                    {
                        eprintln!(
                            "{:<5} {:<2} {:<7} {:<11} {:<7} {:<9.2} {:.4}",
                            r.config.load_rate().to_string(),
                            r.config.k,
                            snr,
                            scheme,
                            tier,
                            tau,
                            ratio
                        );
                    }
                }
            }
        }
    }
}

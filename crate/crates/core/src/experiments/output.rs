use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::config::ScenarioConfig;
use super::sweep::{SweepPoint, SweepResult};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 11] = [
    "snr_db",
    "scheme",
    "tier",
    "tau_fraction",
    "beta",
    "K",
    "mean_rate_bps",
    "stderr_bps",
    "trials",
    "resamples",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown output format '{other}'"))),
        }
    }
}

/// 17 significant digits, enough to read back the exact same double.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Io { path: path.to_path_buf(), source: std::io::Error::other(e.to_string()) }
}

/// Writes the points of all results, in order, as CSV.
pub fn write_csv<W: Write>(results: &[SweepResult], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for p in results.iter().flat_map(|r| &r.points) {
        w.write_record([
            format_float(p.snr_db),
            p.scheme.to_string(),
            p.tier.to_string(),
            format_float(p.tau_fraction),
            format_float(p.beta),
            p.k.to_string(),
            format_float(p.mean_rate_bps),
            format_float(p.stderr_bps),
            p.trials.to_string(),
            p.resamples.to_string(),
            p.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct JsonRun<'a> {
    config: &'a ScenarioConfig,
    config_hash: &'a str,
    records: &'a [SweepPoint],
}

pub fn write_json<W: Write>(results: &[SweepResult], out: W) -> serde_json::Result<()> {
    let runs: Vec<JsonRun<'_>> = results
        .iter()
        .map(|r| JsonRun { config: &r.config, config_hash: &r.config_hash, records: &r.points })
        .collect();
    serde_json::to_writer_pretty(out, &runs)
}

/// Writes results to `path`; `-` means standard output.
pub fn emit_results(results: &[SweepResult], path: &Path, format: OutputFormat) -> Result<()> {
    let sink: Box<dyn Write> = if path == Path::new("-") {
        Box::new(std::io::stdout().lock())
    } else {
        Box::new(std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err(path))?))
    };
    match format {
        OutputFormat::Csv => write_csv(results, sink).map_err(csv_err(path)),
        OutputFormat::Json => write_json(results, sink)
            .map_err(|e| Error::Io { path: path.to_path_buf(), source: std::io::Error::other(e) }),
    }
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepPoint>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Config(format!("{}: unexpected header", path.display())));
    }
    r.deserialize().collect::<csv::Result<Vec<SweepPoint>>>().map_err(csv_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        for x in [0.1, 1.0 / 3.0, 123456.789e-7, f64::MIN_POSITIVE, 2.0f64.powi(60) + 1.0] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_float(0.5), "5.0000000000000000e-1");
    }
}

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ScenarioConfig, Scheme};
use super::trial::{run_trial, TrialRecord};
use crate::error::{Error, Result};
use crate::metrics::RatePair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Macro,
    Small,
    Total,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Macro, Tier::Small, Tier::Total];

    pub fn as_str(&self) -> &'static str {
        match self {
            Tier::Macro => "macro",
            Tier::Small => "small",
            Tier::Total => "total",
        }
    }

    pub fn pick(&self, r: &RatePair) -> f64 {
        match self {
            Tier::Macro => r.macro_bps,
            Tier::Small => r.small_bps,
            Tier::Total => r.total(),
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

/// Ergodic mean of one tier's rate at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub scheme: Scheme,
    pub tier: Tier,
    /// Training share of the coherence block; 0 means perfect channel knowledge.
    pub tau_fraction: f64,
    pub beta: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub mean_rate_bps: f64,
    pub stderr_bps: f64,
    pub trials: usize,
    pub resamples: u64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub config: ScenarioConfig,
    /// SHA-256 of the canonical JSON form of `config`.
    pub config_hash: String,
    pub points: Vec<SweepPoint>,
    /// Per-trial rates in trial order.
    pub records: Vec<TrialRecord>,
}

impl SweepResult {
    pub fn point(&self, scheme: Scheme, tier: Tier, snr_db: f64, tau_fraction: f64) -> Option<&SweepPoint> {
        self.points
            .iter()
            .find(|p| p.scheme == scheme && p.tier == tier && p.snr_db == snr_db && p.tau_fraction == tau_fraction)
    }

    pub fn mean(&self, scheme: Scheme, tier: Tier, snr_db: f64, tau_fraction: f64) -> Option<f64> {
        self.point(scheme, tier, snr_db, tau_fraction).map(|p| p.mean_rate_bps)
    }

    /// Training fraction with the largest mean rate for this scheme and tier, and that rate.
    pub fn best_tau(&self, scheme: Scheme, tier: Tier, snr_db: f64) -> Option<(f64, f64)> {
        self.config
            .tau_fractions
            .iter()
            .filter_map(|&f| self.mean(scheme, tier, snr_db, f).map(|m| (f, m)))
            .fold(None, |best: Option<(f64, f64)>, cur| match best {
                Some(b) if b.1 >= cur.1 => Some(b),
                _ => Some(cur),
            })
    }

    /// Best imperfect-knowledge rate over perfect-knowledge rate, both ergodic means.
    pub fn best_tau_ratio(&self, scheme: Scheme, tier: Tier, snr_db: f64) -> Option<f64> {
        let (_, best) = self.best_tau(scheme, tier, snr_db)?;
        Some(best / self.mean(scheme, tier, snr_db, 0.0)?)
    }

    pub fn total_resamples(&self) -> u64 {
        self.records.iter().map(|r| r.resamples as u64).sum()
    }
}

pub fn config_hash(cfg: &ScenarioConfig) -> String {
    let canonical = serde_json::to_vec(cfg).expect("config serializes");
    Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs every trial of `cfg` and reduces them to per-point means and standard errors.
///
/// Trials run on a pool of `threads` workers (all cores when `None`); each trial has its own
/// random streams and results are reduced in trial order, so the output does not depend on it.
pub fn run_sweep(cfg: &ScenarioConfig, threads: Option<usize>) -> Result<SweepResult> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder.build().map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let records: Vec<TrialRecord> =
        pool.install(|| (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, t)).collect::<Result<_>>())?;
    Ok(aggregate(cfg, records))
}

fn aggregate(cfg: &ScenarioConfig, records: Vec<TrialRecord>) -> SweepResult {
    let resamples: u64 = records.iter().map(|r| r.resamples as u64).sum();
    let beta = cfg.load_rate().value();
    let mut taus: Vec<(Option<usize>, f64)> = vec![(None, 0.0)];
    if cfg.csit == super::config::CsitMode::Imperfect {
        taus.extend(cfg.tau_fractions.iter().enumerate().map(|(i, &f)| (Some(i), f)));
    }
    let mut points = Vec::new();
    for &(tau_index, tau_fraction) in &taus {
        for (si, &snr_db) in cfg.snr_db.iter().enumerate() {
            for &scheme in &cfg.schemes {
                let samples: Vec<RatePair> = records.iter().filter_map(|r| r.get(scheme, si, tau_index)).collect();
                if samples.is_empty() {
                    continue;
                }
                for tier in Tier::ALL {
                    let values: Vec<f64> = samples.iter().map(|s| tier.pick(s)).collect();
                    let (mean, stderr) = mean_and_stderr(&values);
                    points.push(SweepPoint {
                        snr_db,
                        scheme,
                        tier,
                        tau_fraction,
                        beta,
                        k: cfg.k,
                        mean_rate_bps: mean,
                        stderr_bps: stderr,
                        trials: values.len(),
                        resamples,
                        seed: cfg.seed,
                    });
                }
            }
        }
    }
    SweepResult { config: cfg.clone(), config_hash: config_hash(cfg), points, records }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stderr_of_known_sample() {
        // sample variance of 1..=4 is 5/3, stderr sqrt(5/12)
        let (m, s) = mean_and_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_and_stderr(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn hash_tracks_config() {
        let a = ScenarioConfig::default();
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.seed += 1;
        assert_ne!(config_hash(&a), config_hash(&b));
    }
}

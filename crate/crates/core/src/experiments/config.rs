use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dims::Dimensions;
use crate::error::{Error, Result};
use crate::precoder::LoadRate;

/// Coherence block length used by the training experiments.
pub const DEFAULT_COHERENCE: usize = 1000;

/// Training fractions of the coherence block swept by default.
pub const DEFAULT_TAU_FRACTIONS: [f64; 6] = [0.05, 0.10, 0.15, 0.20, 0.25, 0.30];

/// A transmission scheme whose rates a sweep reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Log-det bound on the small-cell effective channel.
    Dpc,
    /// Null-space stage followed by regularized inversion.
    Ribf,
    /// Null-space stage followed by a matched filter.
    Mf,
    /// Static band split between the tiers, zero forcing in the small cells.
    Separation,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Dpc => "dpc",
            Scheme::Ribf => "ribf",
            Scheme::Mf => "mf",
            Scheme::Separation => "separation",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dpc" => Ok(Scheme::Dpc),
            "ribf" => Ok(Scheme::Ribf),
            "mf" => Ok(Scheme::Mf),
            "separation" => Ok(Scheme::Separation),
            other => Err(Error::Config(format!("unknown scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsitMode {
    Perfect,
    Imperfect,
}

/// Everything that defines a sweep. Two runs with equal configs produce identical output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n: usize,
    pub l: usize,
    pub m: usize,
    pub k: usize,
    pub gamma_tx: usize,
    pub gamma_rx: usize,
    pub bandwidth_hz: f64,
    pub snr_db: Vec<f64>,
    pub csit: CsitMode,
    pub coherence_symbols: usize,
    pub tau_fractions: Vec<f64>,
    /// Whether the macro station's signal reaches the small-cell users as interference.
    pub mbs_interference: bool,
    pub schemes: Vec<Scheme>,
    pub trials: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::preset("default").expect("built-in preset")
    }
}

impl ScenarioConfig {
    /// Built-in sizes: `default` (N=32, L=8), `paper-small` (N=64, L=16), `paper-full` (N=128, L=32).
    ///
    /// Bandwidth scales with N so the subcarrier spacing stays at 15 kHz.
    pub fn preset(name: &str) -> Result<Self> {
        let (n, l, bandwidth_hz) = match name {
            "default" => (32, 8, 0.48e6),
            "paper-small" => (64, 16, 0.96e6),
            "paper-full" => (128, 32, 1.92e6),
            other => return Err(Error::Config(format!("unknown preset '{other}'"))),
        };
        Ok(Self {
            n,
            l,
            m: 4,
            k: 3,
            gamma_tx: n / l,
            gamma_rx: 1,
            bandwidth_hz,
            snr_db: (0..=6).map(|i| 5.0 * i as f64).collect(),
            csit: CsitMode::Perfect,
            coherence_symbols: DEFAULT_COHERENCE,
            tau_fractions: DEFAULT_TAU_FRACTIONS.to_vec(),
            mbs_interference: false,
            schemes: vec![Scheme::Dpc, Scheme::Ribf, Scheme::Mf],
            trials: 200,
            seed: 1,
        })
    }

    pub fn dims(&self) -> Dimensions {
        Dimensions { n: self.n, l: self.l, m: self.m, k: self.k, gamma_tx: self.gamma_tx, gamma_rx: self.gamma_rx }
    }

    pub fn load_rate(&self) -> LoadRate {
        LoadRate::new(self.gamma_tx, self.l, self.gamma_rx, self.n)
    }

    /// Picks the transmit chains per cell that give load rate `numerator / denominator`.
    pub fn with_load_rate(mut self, numerator: usize, denominator: usize) -> Result<Self> {
        let chains_times_l = numerator * self.gamma_rx * self.n;
        if denominator == 0 || chains_times_l % (denominator * self.l) != 0 {
            return Err(Error::Config(format!(
                "load rate {numerator}/{denominator} is not reachable with N={} L={}",
                self.n, self.l
            )));
        }
        self.gamma_tx = chains_times_l / (denominator * self.l);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: String| Err(Error::Config(msg));
        self.dims().validate().map_err(|e| Error::Config(e.to_string()))?;
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return cfg(format!("bandwidth_hz must be positive, got {}", self.bandwidth_hz));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return cfg("snr_db must be a non-empty list of finite values".into());
        }
        if self.trials == 0 {
            return cfg("trials must be positive".into());
        }
        if self.schemes.is_empty() {
            return cfg("at least one scheme is required".into());
        }
        if self.schemes.contains(&Scheme::Ribf) && self.gamma_tx * self.l < self.gamma_rx * self.n {
            return cfg(format!(
                "ribf needs gamma_tx*L >= gamma_rx*N, got {}*{} < {}*{}",
                self.gamma_tx, self.l, self.gamma_rx, self.n
            ));
        }
        if self.csit == CsitMode::Imperfect {
            if self.tau_fractions.is_empty() {
                return cfg("imperfect CSIT needs at least one training fraction".into());
            }
            for &f in &self.tau_fractions {
                let symbols = (f * self.coherence_symbols as f64).round();
                if !(f > 0.0 && f < 1.0) || symbols < 1.0 || symbols >= self.coherence_symbols as f64 {
                    return cfg(format!(
                        "training fraction {f} leaves no training or no data in a block of {}",
                        self.coherence_symbols
                    ));
                }
            }
        }
        Ok(())
    }

    /// Parses a flat TOML file on top of `self`. Unknown keys are rejected.
    ///
    /// A `preset` key replaces the base before the other keys are applied.
    pub fn overlay_toml(self, text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        file.apply(self)
    }

    pub fn overlay_file(self, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        self.overlay_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg = Self::default().overlay_toml(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// On-disk form: every key optional, nothing else allowed.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    preset: Option<String>,
    n: Option<usize>,
    l: Option<usize>,
    m: Option<usize>,
    k: Option<usize>,
    gamma_tx: Option<usize>,
    gamma_rx: Option<usize>,
    bandwidth_hz: Option<f64>,
    snr_db: Option<Vec<f64>>,
    csit: Option<CsitMode>,
    coherence_symbols: Option<usize>,
    tau_fractions: Option<Vec<f64>>,
    mbs_interference: Option<bool>,
    schemes: Option<Vec<Scheme>>,
    trials: Option<usize>,
    seed: Option<u64>,
}

impl ConfigFile {
    fn apply(self, base: ScenarioConfig) -> Result<ScenarioConfig> {
        let mut c = match &self.preset {
            Some(name) => {
                let p = ScenarioConfig::preset(name)?;
                // a preset only resets the sizes; the scenario choices of the base survive
                ScenarioConfig { n: p.n, l: p.l, gamma_tx: p.gamma_tx, bandwidth_hz: p.bandwidth_hz, ..base }
            }
            None => base,
        };
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        set!(n, l, m, k, gamma_tx, gamma_rx, bandwidth_hz, snr_db, csit, coherence_symbols, tau_fractions,
             mbs_interference, schemes, trials, seed);
        Ok(c)
    }
}

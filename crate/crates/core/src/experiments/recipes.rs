//! Ready-made scenarios for the standard experiments. The CLI starts from these and
//! applies config files and flags on top.

use super::config::{CsitMode, ScenarioConfig, Scheme};
use crate::error::Result;

/// Bound vs. regularized inverse vs. matched filter at load rate `beta` (integer), perfect knowledge.
pub fn sum_rate_scenario(beta: usize) -> Result<ScenarioConfig> {
    let mut c = ScenarioConfig::preset("paper-small")?.with_load_rate(beta, 1)?;
    c.k = 3;
    c.schemes = vec![Scheme::Dpc, Scheme::Ribf, Scheme::Mf];
    Ok(c)
}

/// Imperfect-to-perfect rate ratios over the training grid, for `k` cells at load rate `beta`.
pub fn csit_scenario(k: usize, beta: usize) -> Result<ScenarioConfig> {
    let mut c = ScenarioConfig::preset("default")?.with_load_rate(beta, 1)?;
    c.k = k;
    c.csit = CsitMode::Imperfect;
    c.snr_db = vec![0.0, 10.0, 20.0];
    c.schemes = vec![Scheme::Ribf];
    Ok(c)
}

/// Spectrum sharing against a static band split, with the macro station interfering on the small users.
pub fn separation_scenario(csit: CsitMode) -> Result<ScenarioConfig> {
    let mut c = ScenarioConfig::preset("paper-small")?.with_load_rate(3, 1)?;
    c.k = 6;
    c.mbs_interference = true;
    c.csit = csit;
    c.schemes = vec![Scheme::Ribf, Scheme::Separation];
    if csit == CsitMode::Imperfect {
        c.snr_db = (0..=5).map(|i| 6.0 * i as f64).collect();
    }
    Ok(c)
}

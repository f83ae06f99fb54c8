//! Structural self-test: residuals that must vanish for every channel draw.

use super::config::ScenarioConfig;
use super::trial::substream;
use crate::channel::{AggregateChannels, ChannelRealization};
use crate::error::Result;
use crate::matrix::{distance, identity, trace_re};
use crate::metrics::{signal_path_check, PowerProfile};
use crate::precoder::{effective_channel, normalize_cascade, ribf_outer, InnerPrecoder};

/// Tolerances the check enforces.
pub const NULL_TOLERANCE: f64 = 1e-10;
pub const ORTHONORMALITY_TOLERANCE: f64 = 1e-12;
pub const TRACE_TOLERANCE: f64 = 1e-10;
pub const SIGNAL_PATH_TOLERANCE: f64 = 1e-9;
pub const CIRCULANT_TOLERANCE: f64 = 1e-10;

const PURPOSE_CHECK: u32 = 0xff_0000;

/// Worst residuals seen over all checked draws.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CheckReport {
    pub trials: usize,
    /// `||H_sm W|| / ||H_sm||`.
    pub null_residual: f64,
    /// `||E_c^H E_c - I||`.
    pub orthonormality: f64,
    /// `|tr(W^H W) - 1|`.
    pub trace: f64,
    pub signal_path: f64,
    /// Off-diagonal energy of the macro channel relative to its norm.
    pub circulant: f64,
}

impl CheckReport {
    pub fn passes(&self) -> bool {
        self.null_residual <= NULL_TOLERANCE
            && self.orthonormality <= ORTHONORMALITY_TOLERANCE
            && self.trace <= TRACE_TOLERANCE
            && self.signal_path <= SIGNAL_PATH_TOLERANCE
            && self.circulant <= CIRCULANT_TOLERANCE
    }
}

/// Builds the full cascade for `trials` draws of `cfg` at its first SNR point and records residuals.
pub fn property_check(cfg: &ScenarioConfig, trials: usize) -> Result<CheckReport> {
    cfg.validate()?;
    let d = cfg.dims();
    let profile = PowerProfile::from_snr_db(cfg.snr_db[0], d.k)?;
    let mut report = CheckReport { trials, ..Default::default() };
    for t in 0..trials {
        let mut rng = substream(cfg.seed, t, 0, PURPOSE_CHECK);
        let real = ChannelRealization::draw(&mut rng, &d);
        let agg = AggregateChannels::build(&real)?;
        let inner = InnerPrecoder::from_cross_blocks(&agg.cross_blocks)?;
        let h_bar = effective_channel(agg.small.as_ref(), &inner)?;
        let phi = ribf_outer(h_bar.as_ref(), profile.noise_to_small_power())?;
        let cas = normalize_cascade(&inner, phi.as_ref())?;
        let w = &cas.transmit;

        report.null_residual = report.null_residual.max((&agg.cross * w).norm_l2() / agg.cross.norm_l2());
        for e in &inner.blocks {
            let err = distance((e.adjoint() * e).as_ref(), identity(d.l).as_ref());
            report.orthonormality = report.orthonormality.max(err);
        }
        report.trace = report.trace.max((trace_re((w.adjoint() * w).as_ref()) - 1.0).abs());
        report.signal_path = report.signal_path.max(signal_path_check(&agg, w.as_ref(), &mut rng)?.macro_residual);
        let h = &agg.macro_channel;
        let mut off = 0.0;
        for r in 0..d.n {
            for c in 0..d.n {
                if r != c {
                    off += h[(r, c)].norm_sqr();
                }
            }
        }
        report.circulant = report.circulant.max(off.sqrt() / h.norm_l2());
    }
    Ok(report)
}

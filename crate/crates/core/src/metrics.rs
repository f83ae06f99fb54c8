//! Rates and SINRs for both tiers, the log-det bound, and the band-splitting baseline.

use faer::prelude::*;
use faer::{c64, MatRef, Side};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{complex_gaussian, AggregateChannels, ChannelRealization, TrainingBudget};
use crate::dims::Dimensions;
use crate::error::{Error, Result};
use crate::matrix::{regularized_inverse, ComplexMatrix};

/// Transmit powers and noise level at one SNR point; the macro power is the reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerProfile {
    pub macro_power: f64,
    pub noise: f64,
    /// Number of small cells splitting the macro power budget.
    pub small_cells: usize,
}

impl PowerProfile {
    /// `P_m = 1`, `sigma^2 = 10^(-snr/10)`, `P_s = P_m / K`.
    pub fn from_snr_db(snr_db: f64, small_cells: usize) -> Result<Self> {
        if !snr_db.is_finite() || small_cells == 0 {
            return Err(Error::InvalidParameter(format!("bad SNR {snr_db} dB or K={small_cells}")));
        }
        Ok(Self { macro_power: 1.0, noise: 10f64.powf(-snr_db / 10.0), small_cells })
    }

    /// Per-cell small-cell power.
    pub fn small_power(&self) -> f64 {
        self.macro_power / self.small_cells as f64
    }

    /// Regularization of the outer stage, `sigma^2 / P_s`.
    pub fn noise_to_small_power(&self) -> f64 {
        self.noise / self.small_power()
    }

    /// Energy the small-cell tier may spend per block, `P_s K (N + L)`.
    pub fn small_tier_energy(&self, block_len: usize) -> f64 {
        self.small_power() * (self.small_cells * block_len) as f64
    }
}

/// Rates of the two tiers in bit/s.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RatePair {
    pub macro_bps: f64,
    pub small_bps: f64,
}

impl RatePair {
    pub fn total(&self) -> f64 {
        self.macro_bps + self.small_bps
    }
}

/// `B / (N + L) * sum log2(1 + sinr)`.
pub fn sum_rate(sinrs: &[f64], bandwidth: f64, block_len: usize) -> f64 {
    bandwidth / block_len as f64 * sinrs.iter().map(|s| (1.0 + s).log2()).sum::<f64>()
}

/// Energy scale of the white input assumed by the log-det bound, per input dimension.
pub fn dpc_input_scale(profile: &PowerProfile, dims: &Dimensions) -> f64 {
    dims.block_len() as f64 * profile.small_power() / (profile.noise * (dims.l * dims.gamma_tx) as f64)
}

/// Sum capacity bound with a white input over the effective channel.
pub fn dpc_sum_rate(h_bar: MatRef<'_, c64>, profile: &PowerProfile, dims: &Dimensions, bandwidth: f64) -> Result<f64> {
    let s = dpc_input_scale(profile, dims);
    let mut m = h_bar * h_bar.adjoint() * faer::Scale(c64::new(s, 0.0));
    for i in 0..m.nrows() {
        m[(i, i)] += c64::new(1.0, 0.0);
    }
    let llt = m.llt(Side::Lower).map_err(|_| Error::SingularSystem { condition: f64::INFINITY })?;
    let l = llt.L();
    let logdet: f64 = (0..l.nrows()).map(|i| 2.0 * l[(i, i)].re.log2()).sum();
    Ok(bandwidth / dims.block_len() as f64 * logdet)
}

/// Same bound from the eigenvalues of `h_bar h_bar^H`.
pub fn dpc_sum_rate_from_eigenvalues(eigenvalues: &[f64], profile: &PowerProfile, dims: &Dimensions, bandwidth: f64) -> f64 {
    let s = dpc_input_scale(profile, dims);
    let bits: f64 = eigenvalues.iter().map(|&l| (1.0 + s * l.max(0.0)).log2()).sum();
    bandwidth / dims.block_len() as f64 * bits
}

/// Per-stream useful power `|p_jj|^2` and total received power `sum_i |p_ji|^2` of `P = h_bar * phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamGains {
    pub signal: Vec<f64>,
    pub total: Vec<f64>,
}

impl StreamGains {
    pub fn from_product(p: MatRef<'_, c64>) -> Self {
        let signal = (0..p.nrows()).map(|j| p[(j, j)].norm_sqr()).collect();
        let total = (0..p.nrows()).map(|j| (0..p.ncols()).map(|i| p[(j, i)].norm_sqr()).sum()).collect();
        Self { signal, total }
    }

    pub fn interference(&self, j: usize) -> f64 {
        (self.total[j] - self.signal[j]).max(0.0)
    }

    /// `scale * signal / (scale * interference + floor[j])`.
    pub fn sinrs(&self, scale: f64, floor: &[f64]) -> Vec<f64> {
        (0..self.signal.len())
            .map(|j| scale * self.signal[j] / (scale * self.interference(j) + floor[j]))
            .collect()
    }
}

pub fn stream_gains(h_bar: MatRef<'_, c64>, phi: MatRef<'_, c64>) -> Result<StreamGains> {
    if h_bar.ncols() != phi.nrows() || phi.ncols() != h_bar.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "outer precoder {}x{} does not fit effective channel {}x{}",
            phi.nrows(),
            phi.ncols(),
            h_bar.nrows(),
            h_bar.ncols()
        )));
    }
    Ok(StreamGains::from_product((h_bar * phi).as_ref()))
}

/// Small-cell user SINRs under perfect channel knowledge.
///
/// `phi` carries the stream amplitudes relative to the tier energy `P_s K (N + L)`;
/// `trace_ww` is the trace of the normalized transmit covariance that scales the noise.
pub fn sue_sinr_perfect(
    h_bar: MatRef<'_, c64>,
    phi: MatRef<'_, c64>,
    trace_ww: f64,
    profile: &PowerProfile,
    block_len: usize,
) -> Result<Vec<f64>> {
    let gains = stream_gains(h_bar, phi)?;
    let floor = trace_ww * profile.noise / profile.small_tier_energy(block_len);
    Ok(gains.sinrs(1.0, &vec![floor; h_bar.nrows()]))
}

/// Small-cell sum rate from per-stream SINRs.
pub fn ribf_sum_rate(sinrs: &[f64], bandwidth: f64, block_len: usize) -> f64 {
    sum_rate(sinrs, bandwidth, block_len)
}

/// Macro user SINRs when the small cells transmit with a precoder built from estimates.
///
/// `transmit` holds the small-cell transmit vectors in physical amplitude, one column per stream.
/// The useful term keeps the `K` factor of the shared-band power split.
pub fn mue_sinr_imperfect(
    macro_channel: MatRef<'_, c64>,
    cross: MatRef<'_, c64>,
    transmit: MatRef<'_, c64>,
    profile: &PowerProfile,
) -> Result<Vec<f64>> {
    if cross.ncols() != transmit.nrows() || macro_channel.nrows() != cross.nrows() {
        return Err(Error::DimensionMismatch("macro, cross and transmit matrices disagree".into()));
    }
    let leak = cross * transmit;
    let k = profile.small_cells as f64;
    Ok((0..macro_channel.nrows())
        .map(|j| {
            let useful: f64 = (0..macro_channel.ncols()).map(|i| macro_channel[(j, i)].norm_sqr()).sum();
            let interference: f64 = (0..leak.ncols()).map(|i| leak[(j, i)].norm_sqr()).sum();
            profile.macro_power * k * useful / (interference + profile.noise)
        })
        .collect())
}

/// Post-training SINR of a link whose raw SINR is `x` after `training` pilot symbols.
pub fn sue_effective_sinr(x: f64, training: usize) -> f64 {
    let tau = training as f64;
    x * x * tau / (1.0 + (1.0 + tau) * x)
}

/// Both tier rates with the training pre-log applied.
pub fn sum_rates_imperfect(
    mue_sinrs: &[f64],
    sue_effective_sinrs: &[f64],
    budget: &TrainingBudget,
    bandwidth: f64,
    block_len: usize,
) -> RatePair {
    let f = budget.data_fraction();
    RatePair {
        macro_bps: f * sum_rate(mue_sinrs, bandwidth, block_len),
        small_bps: f * sum_rate(sue_effective_sinrs, bandwidth, block_len),
    }
}

/// Small-cell bandwidth under band splitting: the share `L / N` of the band.
pub fn separation_small_bandwidth(bandwidth: f64, dims: &Dimensions) -> f64 {
    bandwidth * dims.l as f64 / dims.n as f64
}

/// Per-stream energy given to each small-cell stream, shared by every small-cell scheme.
pub fn small_stream_energy(profile: &PowerProfile, dims: &Dimensions) -> f64 {
    profile.small_power() * dims.block_len() as f64 / (dims.gamma_tx * dims.l) as f64
}

/// `[subcarrier]` matrices `K x chains` of small-cell frequency responses.
fn small_frequency_responses(real: &ChannelRealization) -> Vec<ComplexMatrix> {
    let d = real.dims;
    let resp: Vec<Vec<Vec<c64>>> = real
        .small_links
        .iter()
        .map(|row| row.iter().map(|t| t.frequency_response(d.n)).collect())
        .collect();
    (0..d.n).map(|q| Mat::from_fn(d.k, d.chains(), |k, c| resp[c][k][q])).collect()
}

/// Band-splitting baseline: the macro tier keeps `B (1 - L/N)` interference-free, the small
/// cells run per-subcarrier zero forcing on the rest.
///
/// With `estimate = Some((links, budget))` the small cells design zero forcing on the estimated
/// links, pay the training pre-log and see the post-training effective SINR.
pub fn complete_separation_rates(
    real: &ChannelRealization,
    estimate: Option<(&ChannelRealization, &TrainingBudget)>,
    profile: &PowerProfile,
    bandwidth: f64,
) -> Result<RatePair> {
    let d = real.dims;
    let small_band = separation_small_bandwidth(bandwidth, &d);
    let macro_band = bandwidth - small_band;
    let macro_sinrs: Vec<f64> = real
        .macro_gains()
        .iter()
        .map(|g| profile.macro_power * g.norm_sqr() / profile.noise)
        .collect();
    let macro_bps = sum_rate(&macro_sinrs, macro_band, d.block_len());

    let energy = d.k as f64 * small_stream_energy(profile, &d);
    let truth = small_frequency_responses(real);
    let design = match estimate {
        Some((est, _)) => small_frequency_responses(est),
        None => truth.clone(),
    };
    let mut sinrs = Vec::with_capacity(d.n * d.k);
    for (g, g_design) in truth.iter().zip(&design) {
        let zf = regularized_inverse(g_design.as_ref(), 0.0)?;
        let norm = zf.norm_l2();
        let gains = StreamGains::from_product((g * &zf).as_ref());
        let scale = energy / (norm * norm);
        let raw = gains.sinrs(scale, &vec![profile.noise; d.k]);
        match estimate {
            Some((_, budget)) => sinrs.extend(raw.iter().map(|&x| sue_effective_sinr(x, budget.training))),
            None => sinrs.extend(raw),
        }
    }
    let prelog = estimate.map_or(1.0, |(_, b)| b.data_fraction());
    Ok(RatePair { macro_bps, small_bps: prelog * sum_rate(&sinrs, small_band, d.block_len()) })
}

/// Outcome of pushing random symbols through both tiers with noise switched off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalPathReport {
    /// `||y_m - H_mm s_m|| / ||H_mm s_m||` at the macro users.
    pub macro_residual: f64,
    /// `||H_ss x_s|| / ||x_s||`, nonzero when the small cells actually reach their users.
    pub small_gain: f64,
}

/// Sends one random macro block and one random small-cell block through the aggregate channels.
pub fn signal_path_check<R: Rng + ?Sized>(
    channels: &AggregateChannels,
    transmit: MatRef<'_, c64>,
    rng: &mut R,
) -> Result<SignalPathReport> {
    if channels.cross.ncols() != transmit.nrows() {
        return Err(Error::DimensionMismatch("transmit precoder does not match the small-cell inputs".into()));
    }
    let n = channels.macro_channel.ncols();
    let s_m = Mat::from_fn(n, 1, |_, _| complex_gaussian(rng, 1.0));
    let u_s = Mat::from_fn(transmit.ncols(), 1, |_, _| complex_gaussian(rng, 1.0));
    let x_s = transmit * &u_s;
    let clean = &channels.macro_channel * &s_m;
    let received = &clean + &channels.cross * &x_s;
    let small = &channels.small * &x_s;
    Ok(SignalPathReport {
        macro_residual: (&received - &clean).norm_l2() / clean.norm_l2(),
        small_gain: small.norm_l2() / x_s.norm_l2(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::identity;

    #[test]
    fn perfect_sinr_with_identity_product() {
        // P_s / sigma^2 = 1 with K = 3 and N + L = 80: floor = 1 / 240
        let profile = PowerProfile { macro_power: 3.0, noise: 1.0, small_cells: 3 };
        let h = identity(4);
        let s = sue_sinr_perfect(h.as_ref(), identity(4).as_ref(), 1.0, &profile, 80).unwrap();
        for v in s {
            assert!((v - 240.0).abs() < 1e-9);
        }
    }

    #[test]
    fn power_profile_splits_macro_budget() {
        let p = PowerProfile::from_snr_db(10.0, 6).unwrap();
        assert!((p.small_power() * 6.0 - p.macro_power).abs() < 1e-15);
        assert!((p.noise - 0.1).abs() < 1e-15);
    }

    #[test]
    fn effective_sinr_stays_below_raw() {
        for &x in &[1e-3, 0.1, 1.0, 10.0, 1e3] {
            for &t in &[1usize, 50, 300] {
                let e = sue_effective_sinr(x, t);
                assert!(e < x && e > 0.0);
            }
        }
        // x = 1, tau = 50: 50 / 52
        assert!((sue_effective_sinr(1.0, 50) - 50.0 / 52.0).abs() < 1e-15);
    }

    #[test]
    fn logdet_routes_agree() {
        let d = Dimensions { n: 4, l: 4, m: 1, k: 1, gamma_tx: 2, gamma_rx: 1 };
        let h = Mat::from_fn(4, 8, |r, c| c64::new((r as f64 - c as f64).sin(), 0.3 * (r * c) as f64 / 8.0));
        let p = PowerProfile::from_snr_db(5.0, 1).unwrap();
        let direct = dpc_sum_rate(h.as_ref(), &p, &d, 1e6).unwrap();
        let eig = (&h * h.adjoint()).self_adjoint_eigenvalues(Side::Lower).unwrap();
        let spectral = dpc_sum_rate_from_eigenvalues(&eig, &p, &d, 1e6);
        assert!((direct - spectral).abs() < 1e-9 * direct);
    }
}

//! Random multipath links, the aggregate block channels they induce, and training-based estimates.

use faer::prelude::*;
use faer::{c64, MatRef};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dims::Dimensions;
use crate::error::{Error, Result};
use crate::matrix::{cp_insertion_matrix, dft_matrix, subcarrier_masks, toeplitz_channel, ComplexMatrix, SpectralMask};

/// Which pair of node classes a link connects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkKind {
    /// Macro base station to macro user.
    MacroToMacroUser,
    /// Small-cell transmit chain to macro user (the interference the inner precoder removes).
    SmallToMacroUser,
    /// Small-cell transmit chain to small-cell user.
    SmallToSmallUser,
    /// Macro base station to small-cell user.
    MacroToSmallUser,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Link {
    pub kind: LinkKind,
    /// Transmitter index (chain index for small-cell links, 0 for the macro station).
    pub tx: usize,
    /// Receiver index within its class.
    pub rx: usize,
}

/// `L + 1` impulse-response coefficients of one link.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTaps {
    pub link: Link,
    pub taps: Vec<c64>,
}

impl ChannelTaps {
    pub fn memory(&self) -> usize {
        self.taps.len() - 1
    }

    pub fn frequency_response(&self, n: usize) -> Vec<c64> {
        frequency_response(&self.taps, n)
    }
}

/// One circularly-symmetric complex Gaussian sample with the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> c64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64::new(re * s, im * s)
}

/// `L + 1` i.i.d. taps with a flat power delay profile of unit total power.
pub fn draw_taps<R: Rng + ?Sized>(rng: &mut R, l: usize) -> Vec<c64> {
    let var = 1.0 / (l + 1) as f64;
    (0..=l).map(|_| complex_gaussian(rng, var)).collect()
}

/// Unnormalized DFT of the zero-padded taps: the per-subcarrier gains of a circulant channel.
pub fn frequency_response(taps: &[c64], n: usize) -> Vec<c64> {
    let twiddle: Vec<c64> =
        (0..n).map(|i| c64::from_polar(1.0, -2.0 * std::f64::consts::PI * i as f64 / n as f64)).collect();
    (0..n)
        .map(|k| taps.iter().enumerate().map(|(t, h)| h * twiddle[(k * t) % n]).sum())
        .collect()
}

/// Every link of one network snapshot.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub dims: Dimensions,
    /// Macro station to each macro user.
    pub macro_links: Vec<ChannelTaps>,
    /// `[chain][macro user]`.
    pub cross_links: Vec<Vec<ChannelTaps>>,
    /// `[chain][small user]`.
    pub small_links: Vec<Vec<ChannelTaps>>,
    /// Macro station to each small user.
    pub macro_to_small_links: Vec<ChannelTaps>,
}

impl ChannelRealization {
    /// Draws all links in a fixed order so a given stream always yields the same snapshot.
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, dims: &Dimensions) -> Self {
        let l = dims.l;
        let mut link = |kind, tx, rx| ChannelTaps { link: Link { kind, tx, rx }, taps: draw_taps(rng, l) };
        let macro_links = (0..dims.m).map(|j| link(LinkKind::MacroToMacroUser, 0, j)).collect();
        let cross_links = (0..dims.chains())
            .map(|c| (0..dims.m).map(|j| link(LinkKind::SmallToMacroUser, c, j)).collect())
            .collect();
        let small_links = (0..dims.chains())
            .map(|c| (0..dims.k).map(|k| link(LinkKind::SmallToSmallUser, c, k)).collect())
            .collect();
        let macro_to_small_links = (0..dims.k).map(|k| link(LinkKind::MacroToSmallUser, 0, k)).collect();
        Self { dims: *dims, macro_links, cross_links, small_links, macro_to_small_links }
    }

    /// Per-subcarrier macro gains `g[n]`, each subcarrier taken from its owner's link.
    pub fn macro_gains(&self) -> Vec<c64> {
        masked_gains(&self.macro_links, self.dims.n, self.dims.m)
    }

    /// `[small user][subcarrier]` gains of the macro station's leakage into the small cells.
    pub fn macro_to_small_gains(&self) -> Vec<Vec<c64>> {
        self.macro_to_small_links.iter().map(|t| t.frequency_response(self.dims.n)).collect()
    }
}

fn masked_gains(links: &[ChannelTaps], n: usize, m: usize) -> Vec<c64> {
    let responses: Vec<Vec<c64>> = links.iter().map(|t| t.frequency_response(n)).collect();
    (0..n).map(|k| responses[crate::matrix::owner_of(k, n, m)][k]).collect()
}

fn check_links(links: &[ChannelTaps], count: usize, what: &str) -> Result<usize> {
    if links.len() != count {
        return Err(Error::DimensionMismatch(format!("{what}: expected {count} links, got {}", links.len())));
    }
    let l = links[0].memory();
    if links.iter().any(|t| t.memory() != l) {
        return Err(Error::DimensionMismatch(format!("{what}: links differ in memory")));
    }
    Ok(l)
}

/// Macro-tier channel in the frequency domain, `n x n`; diagonal once the prefix is removed.
pub fn build_macro_channel(links: &[ChannelTaps], masks: &[SpectralMask], n: usize) -> Result<ComplexMatrix> {
    let l = check_links(links, masks.len(), "macro channel")?;
    let f = dft_matrix(n);
    let cp = cp_insertion_matrix(n, l)?;
    let mut h = Mat::zeros(n, n);
    for (taps, mask) in links.iter().zip(masks) {
        let t = toeplitz_channel(&taps.taps, n)?;
        h += mask.selector() * &f * t * &cp * f.adjoint();
    }
    Ok(h)
}

/// Interference from one small-cell chain onto all macro users, `n x (n + L)`.
///
/// Each subcarrier row comes from the link of the macro user that owns it.
pub fn build_cross_channel_block(links: &[ChannelTaps], masks: &[SpectralMask], n: usize) -> Result<ComplexMatrix> {
    build_cross_channel_block_with(links, masks, dft_matrix(n).as_ref())
}

/// [`build_cross_channel_block`] with a precomputed DFT matrix.
pub fn build_cross_channel_block_with(
    links: &[ChannelTaps],
    masks: &[SpectralMask],
    dft: MatRef<'_, c64>,
) -> Result<ComplexMatrix> {
    let l = check_links(links, masks.len(), "cross channel")?;
    let n = dft.nrows();
    let mut h = Mat::zeros(n, n + l);
    for (taps, mask) in links.iter().zip(masks) {
        for &q in mask.indices() {
            dft_toeplitz_row(&taps.taps, dft, q, h.as_mut().row_mut(q));
        }
    }
    Ok(h)
}

/// Row `q` of `F * T(h)`.
///
/// Entry `c` is `F[q, c - s] h[L - s]` summed over the band; pulling out the phase of
/// column `c` leaves a prefix sum over `s`, so the row costs `O(n + L)`.
fn dft_toeplitz_row(taps: &[c64], dft: MatRef<'_, c64>, q: usize, mut out: faer::RowMut<'_, c64>) {
    let n = dft.nrows();
    let l = taps.len() - 1;
    let root_n = (n as f64).sqrt();
    let mut prefix = Vec::with_capacity(l + 2);
    prefix.push(c64::new(0.0, 0.0));
    for s in 0..=l {
        let back = dft[(q, s % n)].conj() * root_n;
        let next = prefix[s] + taps[l - s] * back;
        prefix.push(next);
    }
    for c in 0..n + l {
        let lo = c.saturating_sub(n - 1);
        let hi = c.min(l);
        out[c] = dft[(q, c % n)] * (prefix[hi + 1] - prefix[lo]);
    }
}

/// `F * T(h)`, `n x (n + L)`.
pub fn dft_times_toeplitz(taps: &[c64], dft: MatRef<'_, c64>) -> ComplexMatrix {
    let n = dft.nrows();
    let mut h = Mat::zeros(n, n + taps.len() - 1);
    for q in 0..n {
        dft_toeplitz_row(taps, dft, q, h.as_mut().row_mut(q));
    }
    h
}

/// Small-cell tier channel `(I_K (x) F) * blocks`, of size `K n x chains (n + L)`.
///
/// `links[c][k]` is the link from chain `c` to small user `k`.
pub fn build_small_cell_channel(links: &[Vec<ChannelTaps>], n: usize) -> Result<ComplexMatrix> {
    let chains = links.len();
    if chains == 0 {
        return Err(Error::DimensionMismatch("no small-cell chains".into()));
    }
    let k_users = links[0].len();
    let l = check_links(&links.concat(), chains * k_users, "small-cell channel")?;
    let f = dft_matrix(n);
    let mut h = Mat::zeros(k_users * n, chains * (n + l));
    for (c, row) in links.iter().enumerate() {
        if row.len() != k_users {
            return Err(Error::DimensionMismatch("ragged small-cell link grid".into()));
        }
        for (k, taps) in row.iter().enumerate() {
            let block = dft_times_toeplitz(&taps.taps, f.as_ref());
            h.submatrix_mut(k * n, c * (n + l), n, n + l).copy_from(&block);
        }
    }
    Ok(h)
}

/// Macro station leakage onto the small users, stacked `K n x n`.
pub fn build_macro_to_small_channel(links: &[ChannelTaps], n: usize) -> Result<ComplexMatrix> {
    let l = check_links(links, links.len().max(1), "macro-to-small channel")?;
    let f = dft_matrix(n);
    let cp = cp_insertion_matrix(n, l)?;
    let mut h = Mat::zeros(links.len() * n, n);
    for (k, taps) in links.iter().enumerate() {
        let block = &f * toeplitz_channel(&taps.taps, n)? * &cp * f.adjoint();
        h.submatrix_mut(k * n, 0, n, n).copy_from(&block);
    }
    Ok(h)
}

/// Fully materialized channel matrices of one snapshot.
#[derive(Debug, Clone)]
pub struct AggregateChannels {
    pub macro_channel: ComplexMatrix,
    /// One `n x (n + L)` block per small-cell chain.
    pub cross_blocks: Vec<ComplexMatrix>,
    /// The blocks side by side, `n x chains (n + L)`.
    pub cross: ComplexMatrix,
    pub small: ComplexMatrix,
    pub macro_to_small: ComplexMatrix,
}

impl AggregateChannels {
    pub fn build(real: &ChannelRealization) -> Result<Self> {
        let d = real.dims;
        d.validate()?;
        let masks = subcarrier_masks(d.n, d.m)?;
        let macro_channel = build_macro_channel(&real.macro_links, &masks, d.n)?;
        let cross_blocks = real
            .cross_links
            .iter()
            .map(|links| build_cross_channel_block(links, &masks, d.n))
            .collect::<Result<Vec<_>>>()?;
        let cross = hstack(&cross_blocks);
        let small = build_small_cell_channel(&real.small_links, d.n)?;
        let macro_to_small = build_macro_to_small_channel(&real.macro_to_small_links, d.n)?;
        Ok(Self { macro_channel, cross_blocks, cross, small, macro_to_small })
    }
}

pub(crate) fn hstack(blocks: &[ComplexMatrix]) -> ComplexMatrix {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.submatrix_mut(0, at, rows, b.ncols()).copy_from(b);
        at += b.ncols();
    }
    out
}

/// `F * T(h) * x` without forming the Toeplitz matrix; `x` has `n + L` rows.
pub fn dft_of_convolution(taps: &[c64], x: MatRef<'_, c64>, dft: MatRef<'_, c64>) -> ComplexMatrix {
    dft * banded_convolution(taps, x, dft.nrows())
}

/// `T(h) * x` for a Toeplitz operator with `n` rows.
pub fn banded_convolution(taps: &[c64], x: MatRef<'_, c64>, n: usize) -> ComplexMatrix {
    let l = taps.len() - 1;
    let reversed: Vec<c64> = taps.iter().rev().copied().collect();
    let mut conv = Mat::zeros(n, x.ncols());
    let mut column = vec![c64::new(0.0, 0.0); x.nrows()];
    for col in 0..x.ncols() {
        for (r, v) in column.iter_mut().enumerate() {
            *v = x[(r, col)];
        }
        let dst = conv.col_mut(col).try_as_col_major_mut().expect("owned columns are contiguous").as_slice_mut();
        for (r, out) in dst.iter_mut().enumerate() {
            let window = &column[r..=r + l];
            let mut acc = c64::new(0.0, 0.0);
            for (a, b) in window.iter().zip(&reversed) {
                acc += a * b;
            }
            *out = acc;
        }
    }
    conv
}

/// Length and power of the training phase that precedes data in each coherence block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingBudget {
    /// Coherence block length in symbols.
    pub coherence: usize,
    /// Symbols spent on training.
    pub training: usize,
    /// Pilot power per training symbol.
    pub power: f64,
}

impl TrainingBudget {
    pub fn new(coherence: usize, training: usize, power: f64) -> Result<Self> {
        if training == 0 || training >= coherence {
            return Err(Error::InvalidParameter(format!(
                "training length {training} must lie in 1..{coherence}"
            )));
        }
        if !(power.is_finite() && power > 0.0) {
            return Err(Error::InvalidParameter(format!("training power {power} must be positive")));
        }
        Ok(Self { coherence, training, power })
    }

    /// Budget for a training fraction of the coherence block, rounded to whole symbols.
    pub fn from_fraction(coherence: usize, fraction: f64, power: f64) -> Result<Self> {
        Self::new(coherence, (fraction * coherence as f64).round() as usize, power)
    }

    /// Share of the block left for data.
    pub fn data_fraction(&self) -> f64 {
        (self.coherence - self.training) as f64 / self.coherence as f64
    }

    /// Total pilot energy `rho * tau`.
    pub fn energy(&self) -> f64 {
        self.power * self.training as f64
    }
}

/// Linear MMSE estimator for one tap observed as `sqrt(E) h + noise`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmseEstimator {
    pub gain: f64,
    pub error_variance: f64,
    pub pilot_amplitude: f64,
}

impl MmseEstimator {
    pub fn new(pilot_energy: f64, prior_variance: f64, noise_variance: f64) -> Self {
        let denom = pilot_energy * prior_variance + noise_variance;
        Self {
            gain: pilot_energy.sqrt() * prior_variance / denom,
            error_variance: prior_variance * noise_variance / denom,
            pilot_amplitude: pilot_energy.sqrt(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CsitEstimate {
    pub estimate: ChannelTaps,
    /// Per-tap mean squared error predicted by the estimator.
    pub error_variance: f64,
}

/// Observes `taps` through one training phase and returns the MMSE estimate.
pub fn estimate_csit<R: Rng + ?Sized>(
    taps: &ChannelTaps,
    budget: &TrainingBudget,
    noise_variance: f64,
    rng: &mut R,
) -> CsitEstimate {
    let prior = 1.0 / taps.taps.len() as f64;
    let est = MmseEstimator::new(budget.energy(), prior, noise_variance);
    let estimate = taps
        .taps
        .iter()
        .map(|h| {
            let observed = h * est.pilot_amplitude + complex_gaussian(rng, noise_variance);
            observed * est.gain
        })
        .collect();
    CsitEstimate { estimate: ChannelTaps { link: taps.link, taps: estimate }, error_variance: est.error_variance }
}

//! Cascaded small-cell precoder: a per-chain null-space stage followed by a multi-user outer stage.

use std::fmt;

use faer::prelude::*;
use faer::{c64, MatRef};

use crate::channel::{banded_convolution, ChannelTaps};
use crate::error::{Error, Result};
use crate::matrix::{null_space_basis, regularized_inverse, ComplexMatrix};

/// Null-space basis of one chain's cross-tier channel, `(n + L) x L`.
pub fn vfdm_inner(cross_block: MatRef<'_, c64>) -> Result<ComplexMatrix> {
    null_space_basis(cross_block)
}

/// Block-diagonal inner precoder; blocks are kept separate and only materialized on request.
#[derive(Debug, Clone)]
pub struct InnerPrecoder {
    pub blocks: Vec<ComplexMatrix>,
}

impl InnerPrecoder {
    pub fn from_cross_blocks(cross_blocks: &[ComplexMatrix]) -> Result<Self> {
        let blocks = cross_blocks.iter().map(|b| vfdm_inner(b.as_ref())).collect::<Result<_>>()?;
        Ok(Self { blocks })
    }

    pub fn matrix(&self) -> ComplexMatrix {
        direct_sum(&self.blocks)
    }

    pub fn rows(&self) -> usize {
        self.blocks.iter().map(|b| b.nrows()).sum()
    }

    pub fn cols(&self) -> usize {
        self.blocks.iter().map(|b| b.ncols()).sum()
    }
}

/// Block-diagonal concatenation.
pub fn direct_sum(blocks: &[ComplexMatrix]) -> ComplexMatrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.submatrix_mut(r, c, b.nrows(), b.ncols()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Channel seen by the outer stage, `H_ss * E`.
pub fn effective_channel(small: MatRef<'_, c64>, inner: &InnerPrecoder) -> Result<ComplexMatrix> {
    if small.ncols() != inner.rows() {
        return Err(Error::DimensionMismatch(format!(
            "small-cell channel has {} columns, inner precoder {} rows",
            small.ncols(),
            inner.rows()
        )));
    }
    let mut out = Mat::zeros(small.nrows(), inner.cols());
    let (mut r, mut c) = (0, 0);
    for e in &inner.blocks {
        let part = small.submatrix(0, r, small.nrows(), e.nrows()) * e;
        out.submatrix_mut(0, c, small.nrows(), e.ncols()).copy_from(&part);
        r += e.nrows();
        c += e.ncols();
    }
    Ok(out)
}

/// Same product as [`effective_channel`], computed straight from the link taps.
///
/// `links[c][k]` connects chain `c` to small user `k`; `inner.blocks[c]` must belong to chain `c`.
pub fn effective_channel_from_links(
    links: &[Vec<ChannelTaps>],
    inner: &InnerPrecoder,
    dft: MatRef<'_, c64>,
) -> Result<ComplexMatrix> {
    let n = dft.nrows();
    if links.len() != inner.blocks.len() {
        return Err(Error::DimensionMismatch("one inner block per chain required".into()));
    }
    let users = links.first().map_or(0, |r| r.len());
    let mut out = Mat::zeros(users * n, inner.cols());
    let mut c0 = 0;
    for (row, e) in links.iter().zip(&inner.blocks) {
        let width = e.ncols();
        // convolve for every user first so one DFT product covers the whole chain
        let mut conv = Mat::zeros(n, users * width);
        for (k, taps) in row.iter().enumerate() {
            conv.submatrix_mut(0, k * width, n, width).copy_from(banded_convolution(&taps.taps, e.as_ref(), n));
        }
        let freq = dft * conv;
        for k in 0..users {
            out.submatrix_mut(k * n, c0, n, width).copy_from(freq.submatrix(0, k * width, n, width));
        }
        c0 += width;
    }
    Ok(out)
}

/// Ratio of transmit to receive dimensions in the small-cell tier, kept exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadRate {
    pub transmit: usize,
    pub receive: usize,
}

impl LoadRate {
    pub fn new(gamma_tx: usize, l: usize, gamma_rx: usize, n: usize) -> Self {
        Self { transmit: gamma_tx * l, receive: gamma_rx * n }
    }

    /// Reduced fraction `(numerator, denominator)`.
    pub fn fraction(&self) -> (usize, usize) {
        let g = gcd(self.transmit, self.receive).max(1);
        (self.transmit / g, self.receive / g)
    }

    pub fn value(&self) -> f64 {
        self.transmit as f64 / self.receive as f64
    }

    /// Share of the tier energy budget that lands on the used streams.
    ///
    /// Every stream gets the same per-dimension energy as the log-det bound's
    /// white input, so a tier with more inputs than streams leaves the excess unused.
    pub fn stream_share(&self) -> f64 {
        (self.receive as f64 / self.transmit as f64).min(1.0)
    }
}

impl fmt::Display for LoadRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.fraction() {
            (p, 1) => write!(f, "{p}"),
            (p, q) => write!(f, "{p}/{q}"),
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// An outer-stage design rule.
pub trait OuterPrecoder {
    fn name(&self) -> &'static str;
    /// Builds `Phi` for the effective channel at the given noise-to-power ratio.
    fn build(&self, h_bar: MatRef<'_, c64>, noise_to_power: f64) -> Result<ComplexMatrix>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Ribf;

#[derive(Debug, Clone, Copy, Default)]
pub struct MatchedFilter;

impl OuterPrecoder for Ribf {
    fn name(&self) -> &'static str {
        "ribf"
    }
    fn build(&self, h_bar: MatRef<'_, c64>, noise_to_power: f64) -> Result<ComplexMatrix> {
        ribf_outer(h_bar, noise_to_power)
    }
}

impl OuterPrecoder for MatchedFilter {
    fn name(&self) -> &'static str {
        "mf"
    }
    fn build(&self, h_bar: MatRef<'_, c64>, _noise_to_power: f64) -> Result<ComplexMatrix> {
        Ok(mf_outer(h_bar))
    }
}

/// Regularized inversion of the effective channel with regularization `sigma^2 / P_s`.
pub fn ribf_outer(h_bar: MatRef<'_, c64>, noise_to_power: f64) -> Result<ComplexMatrix> {
    if h_bar.ncols() < h_bar.nrows() {
        return Err(Error::InsufficientTransmitDimensions { transmit: h_bar.ncols(), receive: h_bar.nrows() });
    }
    if !(noise_to_power.is_finite() && noise_to_power > 0.0) {
        return Err(Error::InvalidParameter(format!("noise-to-power ratio {noise_to_power} must be positive")));
    }
    regularized_inverse(h_bar, noise_to_power)
}

pub fn mf_outer(h_bar: MatRef<'_, c64>) -> ComplexMatrix {
    h_bar.adjoint().to_owned()
}

/// The unit-trace transmit precoder `W = E Phi / sqrt(tr(E Phi Phi^H E^H))`.
#[derive(Debug, Clone)]
pub struct CascadedPrecoder {
    pub outer: ComplexMatrix,
    pub transmit: ComplexMatrix,
    /// `sqrt(tr(E Phi Phi^H E^H))` before normalization.
    pub norm: f64,
}

pub fn normalize_cascade(inner: &InnerPrecoder, outer: MatRef<'_, c64>) -> Result<CascadedPrecoder> {
    if outer.nrows() != inner.cols() {
        return Err(Error::DimensionMismatch(format!(
            "outer precoder has {} rows, inner precoder {} columns",
            outer.nrows(),
            inner.cols()
        )));
    }
    let mut w = Mat::zeros(inner.rows(), outer.ncols());
    let (mut r, mut c) = (0, 0);
    for e in &inner.blocks {
        let part = e * outer.submatrix(c, 0, e.ncols(), outer.ncols());
        w.submatrix_mut(r, 0, e.nrows(), outer.ncols()).copy_from(&part);
        r += e.nrows();
        c += e.ncols();
    }
    let norm = w.norm_l2();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::DegeneratePrecoder);
    }
    let scale = faer::Scale(c64::new(1.0 / norm, 0.0));
    Ok(CascadedPrecoder { outer: outer.to_owned(), transmit: w * scale, norm })
}

//! One Monte Carlo trial: draw a snapshot, build precoders, score every scheme at every grid point.

use faer::linalg::solvers::DenseSolveCore;
use faer::prelude::*;
use faer::{c64, MatRef, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{CsitMode, ScenarioConfig, Scheme};
use crate::channel::{
    build_cross_channel_block_with, estimate_csit, hstack, ChannelRealization, ChannelTaps, TrainingBudget,
};
use crate::dims::Dimensions;
use crate::error::{Error, Result};
use crate::matrix::{dft_matrix, lower_gram, subcarrier_masks, trace_re, ComplexMatrix, SpectralMask};
use crate::metrics::{
    complete_separation_rates, dpc_sum_rate_from_eigenvalues, sue_effective_sinr, sum_rate, sum_rates_imperfect,
    PowerProfile, RatePair, StreamGains,
};
use crate::precoder::{effective_channel_from_links, InnerPrecoder};

/// Degenerate draws tolerated per trial before giving up.
pub const MAX_RESAMPLES: u32 = 10;

const PURPOSE_CHANNELS: u32 = 0;

/// Independent random stream for one `(trial, attempt, purpose)` triple under a master seed.
///
/// Streams do not depend on how trials are scheduled, so results are identical for any thread count.
pub fn substream(seed: u64, trial: usize, attempt: u32, purpose: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((trial as u64) << 32) | ((attempt as u64) << 24) | purpose as u64);
    rng
}

fn training_purpose(tau_index: usize, snr_index: usize, snr_count: usize) -> u32 {
    (1 + tau_index * snr_count + snr_index) as u32
}

/// Rates of one scheme at one grid point of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointRates {
    pub snr_index: usize,
    /// `None` for perfect channel knowledge.
    pub tau_index: Option<usize>,
    pub scheme: Scheme,
    pub rates: RatePair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub resamples: u32,
    pub points: Vec<PointRates>,
}

impl TrialRecord {
    pub fn get(&self, scheme: Scheme, snr_index: usize, tau_index: Option<usize>) -> Option<RatePair> {
        self.points
            .iter()
            .find(|p| p.scheme == scheme && p.snr_index == snr_index && p.tau_index == tau_index)
            .map(|p| p.rates)
    }
}

/// Runs trial `trial` of the sweep, redrawing on degenerate channels.
pub fn run_trial(cfg: &ScenarioConfig, trial: usize) -> Result<TrialRecord> {
    let env = Env::new(cfg)?;
    for attempt in 0..=MAX_RESAMPLES {
        match evaluate(&env, trial, attempt) {
            Ok(points) => return Ok(TrialRecord { trial, resamples: attempt, points }),
            Err(e) if e.is_resamplable() => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::ResampleLimit { trial, attempts: MAX_RESAMPLES + 1 })
}

/// Per-sweep constants shared by every trial.
struct Env<'a> {
    cfg: &'a ScenarioConfig,
    dims: Dimensions,
    dft: ComplexMatrix,
    masks: Vec<SpectralMask>,
    share: f64,
}

impl<'a> Env<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let dims = cfg.dims();
        Ok(Self {
            cfg,
            dims,
            dft: dft_matrix(dims.n),
            masks: subcarrier_masks(dims.n, dims.m)?,
            share: cfg.load_rate().stream_share(),
        })
    }

    fn wants(&self, s: Scheme) -> bool {
        self.cfg.schemes.contains(&s)
    }

    fn cross_blocks(&self, links: &[Vec<ChannelTaps>]) -> Result<Vec<ComplexMatrix>> {
        links.iter().map(|l| build_cross_channel_block_with(l, &self.masks, self.dft.as_ref())).collect()
    }

    /// Noise plus macro leakage at each small-cell stream, relative to the tier energy.
    fn stream_floors(&self, real: &ChannelRealization, profile: &PowerProfile) -> Vec<f64> {
        let energy = profile.small_tier_energy(self.dims.block_len());
        let leak = self.cfg.mbs_interference.then(|| real.macro_to_small_gains());
        (0..self.dims.streams())
            .map(|j| {
                let macro_leak = leak.as_ref().map_or(0.0, |g| {
                    profile.macro_power * g[j / self.dims.n][j % self.dims.n].norm_sqr()
                });
                (profile.noise + macro_leak) / energy
            })
            .collect()
    }

    /// Macro users' SINR given the small-cell leakage power on each subcarrier.
    fn macro_sinrs(&self, real: &ChannelRealization, profile: &PowerProfile, leak: Option<&[f64]>) -> Vec<f64> {
        let k = profile.small_cells as f64;
        real.macro_gains()
            .iter()
            .enumerate()
            .map(|(q, g)| {
                let interference = leak.map_or(0.0, |l| l[q]);
                profile.macro_power * k * g.norm_sqr() / (interference + profile.noise)
            })
            .collect()
    }
}

fn evaluate(env: &Env<'_>, trial: usize, attempt: u32) -> Result<Vec<PointRates>> {
    let cfg = env.cfg;
    let mut rng = substream(cfg.seed, trial, attempt, PURPOSE_CHANNELS);
    let real = ChannelRealization::draw(&mut rng, &env.dims);
    let true_cross = env.cross_blocks(&real.cross_links)?;
    let mut points = Vec::new();
    perfect_points(env, &real, &true_cross, &mut points)?;
    if cfg.csit == CsitMode::Imperfect {
        for (ti, &fraction) in cfg.tau_fractions.iter().enumerate() {
            for (si, &snr) in cfg.snr_db.iter().enumerate() {
                let profile = PowerProfile::from_snr_db(snr, env.dims.k)?;
                let budget = TrainingBudget::from_fraction(cfg.coherence_symbols, fraction, profile.small_power())?;
                let mut rng = substream(cfg.seed, trial, attempt, training_purpose(ti, si, cfg.snr_db.len()));
                let est = estimate_realization(&real, &budget, profile.noise, &mut rng);
                for (scheme, rates) in imperfect_rates(env, &real, &true_cross, &est, &profile, &budget)? {
                    points.push(PointRates { snr_index: si, tau_index: Some(ti), scheme, rates });
                }
            }
        }
    }
    Ok(points)
}

/// Replaces every link the small cells must learn by its training-based estimate.
pub fn estimate_realization<R: Rng + ?Sized>(
    real: &ChannelRealization,
    budget: &TrainingBudget,
    noise: f64,
    rng: &mut R,
) -> ChannelRealization {
    let mut est = real.clone();
    for links in est.cross_links.iter_mut().chain(est.small_links.iter_mut()) {
        for taps in links.iter_mut() {
            *taps = estimate_csit(taps, budget, noise, rng).estimate;
        }
    }
    est
}

/// Eigen-decomposed Gram matrix of the effective channel, reused across SNR points.
struct Spectrum {
    eigenvalues: Vec<f64>,
    /// `|U[j, k]|^2`, row major.
    weights: Vec<f64>,
    size: usize,
}

impl Spectrum {
    fn new(gram: MatRef<'_, c64>) -> Result<Self> {
        let evd = gram
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::DegenerateChannel("eigendecomposition did not converge".into()))?;
        let size = gram.nrows();
        let s = evd.S().column_vector();
        let u = evd.U();
        let eigenvalues = (0..size).map(|k| s[k].re.max(0.0)).collect();
        let mut weights = vec![0.0; size * size];
        for j in 0..size {
            for k in 0..size {
                weights[j * size + k] = u[(j, k)].norm_sqr();
            }
        }
        Ok(Self { eigenvalues, weights, size })
    }

    /// Stream gains of the regularized inverse with regularization `alpha`, and `||Phi||_F^2`.
    fn ribf_gains(&self, alpha: f64) -> (StreamGains, f64) {
        let d: Vec<f64> = self.eigenvalues.iter().map(|&l| l / (l + alpha)).collect();
        let norm2 = self.eigenvalues.iter().map(|&l| l / ((l + alpha) * (l + alpha))).sum();
        let mut signal = Vec::with_capacity(self.size);
        let mut total = Vec::with_capacity(self.size);
        for j in 0..self.size {
            let w = &self.weights[j * self.size..(j + 1) * self.size];
            let diag: f64 = w.iter().zip(&d).map(|(a, b)| a * b).sum();
            signal.push(diag * diag);
            total.push(w.iter().zip(&d).map(|(a, b)| a * b * b).sum());
        }
        (StreamGains { signal, total }, norm2)
    }
}

fn perfect_points(
    env: &Env<'_>,
    real: &ChannelRealization,
    true_cross: &[ComplexMatrix],
    out: &mut Vec<PointRates>,
) -> Result<()> {
    let cfg = env.cfg;
    let d = env.dims;
    let linear = env.wants(Scheme::Dpc) || env.wants(Scheme::Ribf) || env.wants(Scheme::Mf);
    let mut spectrum = None;
    let mut matched = None;
    if linear {
        let inner = InnerPrecoder::from_cross_blocks(true_cross)?;
        let h_bar = effective_channel_from_links(&real.small_links, &inner, env.dft.as_ref())?;
        let gram = &h_bar * h_bar.adjoint();
        if env.wants(Scheme::Dpc) || env.wants(Scheme::Ribf) {
            spectrum = Some(Spectrum::new(gram.as_ref())?);
        }
        if env.wants(Scheme::Mf) {
            matched = Some((StreamGains::from_product(gram.as_ref()), trace_re(gram.as_ref())));
        }
    }
    for (si, &snr) in cfg.snr_db.iter().enumerate() {
        let profile = PowerProfile::from_snr_db(snr, d.k)?;
        let floors = env.stream_floors(real, &profile);
        let macro_bps = sum_rate(&env.macro_sinrs(real, &profile, None), cfg.bandwidth_hz, d.block_len());
        for &scheme in &cfg.schemes {
            let rates = match scheme {
                Scheme::Dpc => {
                    let s = spectrum.as_ref().expect("spectrum computed for dpc");
                    let small = dpc_sum_rate_from_eigenvalues(&s.eigenvalues, &profile, &d, cfg.bandwidth_hz);
                    RatePair { macro_bps, small_bps: small }
                }
                Scheme::Ribf => {
                    let s = spectrum.as_ref().expect("spectrum computed for ribf");
                    let (gains, norm2) = s.ribf_gains(profile.noise_to_small_power());
                    let sinrs = cascade_sinrs(&gains, norm2, env.share, &floors)?;
                    RatePair { macro_bps, small_bps: sum_rate(&sinrs, cfg.bandwidth_hz, d.block_len()) }
                }
                Scheme::Mf => {
                    let (gains, norm2) = matched.as_ref().expect("gram computed for mf");
                    let sinrs = cascade_sinrs(gains, *norm2, env.share, &floors)?;
                    RatePair { macro_bps, small_bps: sum_rate(&sinrs, cfg.bandwidth_hz, d.block_len()) }
                }
                Scheme::Separation => complete_separation_rates(real, None, &profile, cfg.bandwidth_hz)?,
            };
            out.push(PointRates { snr_index: si, tau_index: None, scheme, rates });
        }
    }
    Ok(())
}

/// SINRs of a cascade whose unnormalized outer stage has `||Phi||^2 = norm2`, transmitted
/// with `share` of the tier energy.
fn cascade_sinrs(gains: &StreamGains, norm2: f64, share: f64, floors: &[f64]) -> Result<Vec<f64>> {
    if !(norm2.is_finite() && norm2 > 0.0) {
        return Err(Error::DegeneratePrecoder);
    }
    Ok(gains.sinrs(share / norm2, floors))
}

/// Products of the true channels with a cascade designed on estimates.
struct Mismatch {
    /// `H_ss E_hat Phi_hat`.
    small: ComplexMatrix,
    /// `H_sm E_hat Phi_hat`.
    cross: ComplexMatrix,
    /// `||Phi_hat||_F^2`.
    norm2: f64,
}

fn imperfect_rates(
    env: &Env<'_>,
    real: &ChannelRealization,
    true_cross: &[ComplexMatrix],
    est: &ChannelRealization,
    profile: &PowerProfile,
    budget: &TrainingBudget,
) -> Result<Vec<(Scheme, RatePair)>> {
    let cfg = env.cfg;
    let d = env.dims;
    let mut out = Vec::new();
    let mut products = None;
    if env.wants(Scheme::Ribf) || env.wants(Scheme::Mf) {
        let inner = InnerPrecoder::from_cross_blocks(&env.cross_blocks(&est.cross_links)?)?;
        let h_hat = effective_channel_from_links(&est.small_links, &inner, env.dft.as_ref())?;
        let h_true = effective_channel_from_links(&real.small_links, &inner, env.dft.as_ref())?;
        let leak_blocks: Vec<ComplexMatrix> = true_cross.iter().zip(&inner.blocks).map(|(h, e)| h * e).collect();
        let leak = hstack(&leak_blocks);
        let s = d.streams();
        let mut stacked = Mat::zeros(s + d.n, h_hat.ncols());
        stacked.submatrix_mut(0, 0, s, h_hat.ncols()).copy_from(&h_true);
        stacked.submatrix_mut(s, 0, d.n, h_hat.ncols()).copy_from(&leak);
        products = Some((lower_gram(h_hat.as_ref()), &stacked * h_hat.adjoint()));
    }
    let floors = env.stream_floors(real, profile);
    for &scheme in &cfg.schemes {
        let mismatch = match (scheme, &products) {
            (Scheme::Ribf, Some((g_hat, tail))) => ribf_mismatch(g_hat.as_ref(), tail.as_ref(), profile, d.streams())?,
            (Scheme::Mf, Some((g_hat, tail))) => Mismatch {
                small: tail.submatrix(0, 0, d.streams(), d.streams()).to_owned(),
                cross: tail.submatrix(d.streams(), 0, d.n, d.streams()).to_owned(),
                norm2: trace_re(g_hat.as_ref()),
            },
            (Scheme::Separation, _) => {
                let rates = complete_separation_rates(real, Some((est, budget)), profile, cfg.bandwidth_hz)?;
                out.push((scheme, rates));
                continue;
            }
            // the log-det bound assumes perfect knowledge; it is reported at tau = 0 only
            _ => continue,
        };
        let (mue, sue) = mismatch_sinrs(env, real, &mismatch, profile, &floors, budget)?;
        out.push((scheme, sum_rates_imperfect(&mue, &sue, budget, cfg.bandwidth_hz, d.block_len())));
    }
    Ok(out)
}

fn ribf_mismatch(g_hat: MatRef<'_, c64>, tail: MatRef<'_, c64>, profile: &PowerProfile, streams: usize) -> Result<Mismatch> {
    let alpha = profile.noise_to_small_power();
    // only the lower triangle of g_hat is populated, which is all the factorization reads
    let mut a = g_hat.to_owned();
    for i in 0..a.nrows() {
        a[(i, i)] += c64::new(alpha, 0.0);
    }
    let llt = a.llt(Side::Lower).map_err(|_| Error::SingularSystem { condition: f64::INFINITY })?;
    let y = llt.inverse();
    // ||H^H Y||^2 = tr(Y G Y) = tr(Y) - alpha ||Y||^2
    let norm2 = trace_re(y.as_ref()) - alpha * y.squared_norm_l2();
    let p = tail * &y;
    Ok(Mismatch {
        small: p.submatrix(0, 0, streams, streams).to_owned(),
        cross: p.submatrix(streams, 0, p.nrows() - streams, streams).to_owned(),
        norm2,
    })
}

/// Macro and post-training small-cell SINRs of a mismatched cascade.
fn mismatch_sinrs(
    env: &Env<'_>,
    real: &ChannelRealization,
    m: &Mismatch,
    profile: &PowerProfile,
    floors: &[f64],
    budget: &TrainingBudget,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let raw = cascade_sinrs(&StreamGains::from_product(m.small.as_ref()), m.norm2, env.share, floors)?;
    let sue = raw.iter().map(|&x| sue_effective_sinr(x, budget.training)).collect();
    let scale = profile.small_tier_energy(env.dims.block_len()) * env.share / m.norm2;
    let leak: Vec<f64> = (0..m.cross.nrows())
        .map(|q| scale * (0..m.cross.ncols()).map(|i| m.cross[(q, i)].norm_sqr()).sum::<f64>())
        .collect();
    Ok((env.macro_sinrs(real, profile, Some(&leak)), sue))
}

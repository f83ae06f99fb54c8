//! Dense complex matrices and the structured operators the transceiver model is built from.

use faer::prelude::*;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::householder;
use faer::linalg::matmul::triangular::{self, BlockStructure};
use faer::{c64, Accum, Conj, MatRef, Side};

use crate::error::{Error, Result};

pub type ComplexMatrix = Mat<c64>;

/// Relative pivot threshold below which a channel is treated as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Condition number above which an unregularized inverse is refused.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Banded Toeplitz convolution matrix, `n x (n + L)` for `L + 1` taps.
///
/// Row `r` holds `taps[L], ..., taps[0]` in columns `r..=r+L`, so that
/// `T * [cp; block]` is the linear convolution restricted to the useful part.
pub fn toeplitz_channel(taps: &[c64], n: usize) -> Result<ComplexMatrix> {
    if taps.is_empty() {
        return Err(Error::InvalidParameter("channel needs at least one tap".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("block length must be positive".into()));
    }
    let l = taps.len() - 1;
    let mut t = Mat::zeros(n, n + l);
    for r in 0..n {
        for s in 0..=l {
            t[(r, r + s)] = taps[l - s];
        }
    }
    Ok(t)
}

/// Cyclic prefix insertion, `(n + l) x n`: the last `l` samples are copied in front.
pub fn cp_insertion_matrix(n: usize, l: usize) -> Result<ComplexMatrix> {
    if n == 0 || l > n {
        return Err(Error::InvalidParameter(format!(
            "cyclic prefix of length {l} does not fit a block of {n}"
        )));
    }
    let mut a = Mat::zeros(n + l, n);
    for r in 0..l {
        a[(r, n - l + r)] = c64::new(1.0, 0.0);
    }
    for r in 0..n {
        a[(l + r, r)] = c64::new(1.0, 0.0);
    }
    Ok(a)
}

/// Unitary DFT matrix, `F[k, m] = exp(-2 pi i k m / n) / sqrt(n)`.
pub fn dft_matrix(n: usize) -> ComplexMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    // reduce k*m mod n first so large indices keep full phase accuracy
    Mat::from_fn(n, n, |k, m| {
        let phase = -2.0 * std::f64::consts::PI * (((k * m) % n) as f64) / n as f64;
        c64::from_polar(scale, phase)
    })
}

/// The set of subcarriers owned by one macro user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectralMask {
    n: usize,
    indices: Vec<usize>,
}

impl SpectralMask {
    pub fn new(n: usize, indices: Vec<usize>) -> Result<Self> {
        if indices.iter().any(|&i| i >= n) {
            return Err(Error::InvalidParameter(format!("subcarrier index out of range 0..{n}")));
        }
        Ok(Self { n, indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.indices.contains(&k)
    }

    /// Diagonal 0/1 selector of size `n x n`.
    pub fn selector(&self) -> ComplexMatrix {
        let mut b = Mat::zeros(self.n, self.n);
        for &i in &self.indices {
            b[(i, i)] = c64::new(1.0, 0.0);
        }
        b
    }
}

/// Contiguous equal allocation of `n` subcarriers to `m` users, in user order.
pub fn subcarrier_masks(n: usize, m: usize) -> Result<Vec<SpectralMask>> {
    if m == 0 || n == 0 || n % m != 0 {
        return Err(Error::InvalidParameter(format!(
            "{n} subcarriers cannot be split evenly among {m} users"
        )));
    }
    let width = n / m;
    (0..m)
        .map(|j| SpectralMask::new(n, (j * width..(j + 1) * width).collect()))
        .collect()
}

/// Index of the user owning subcarrier `k` under [`subcarrier_masks`].
pub fn owner_of(k: usize, n: usize, m: usize) -> usize {
    k / (n / m)
}

/// Orthonormal basis of the right kernel of a wide, full-row-rank matrix.
///
/// For `h` of size `r x c` with `c > r` this returns `c x (c - r)` with
/// `h * E = 0` and `E^H E = I`. It runs Householder QR on `h^H` (i.e. an LQ
/// factorization of `h`) and applies the reflectors to the trailing unit
/// vectors, which yields the last columns of the full `Q` without forming it.
pub fn null_space_basis(h: MatRef<'_, c64>) -> Result<ComplexMatrix> {
    let rows = h.nrows();
    let cols = h.ncols();
    if rows >= cols {
        return Err(Error::DimensionMismatch(format!(
            "kernel of a {rows}x{cols} matrix is trivial"
        )));
    }
    let scale = h.norm_l2();
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::DegenerateChannel("channel matrix is zero or not finite".into()));
    }
    let qr = h.adjoint().qr();
    let r = qr.R();
    for j in 0..rows {
        let pivot = r[(j, j)].norm();
        if pivot <= RANK_TOLERANCE * scale {
            return Err(Error::DegenerateChannel(format!(
                "pivot {j} is {pivot:.3e} against norm {scale:.3e}"
            )));
        }
    }
    let kernel_dim = cols - rows;
    let mut basis = Mat::zeros(cols, kernel_dim);
    for c in 0..kernel_dim {
        basis[(rows + c, c)] = c64::new(1.0, 0.0);
    }
    let block = qr.Q_coeff().nrows();
    let mut mem = MemBuffer::new(householder::apply_block_householder_sequence_on_the_left_in_place_scratch::<c64>(
        cols, block, kernel_dim,
    ));
    householder::apply_block_householder_sequence_on_the_left_in_place_with_conj(
        qr.Q_basis(),
        qr.Q_coeff(),
        Conj::No,
        basis.as_mut(),
        Par::Seq,
        MemStack::new(&mut mem),
    );
    Ok(basis)
}

/// `h^H (alpha I + h h^H)^{-1}`, the regularized right inverse of a wide matrix.
///
/// With `alpha = 0` this is the zero-forcing pseudo-inverse and is refused
/// when the Gram matrix is numerically singular.
pub fn regularized_inverse(h: MatRef<'_, c64>, alpha: f64) -> Result<ComplexMatrix> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!("regularization {alpha} must be >= 0")));
    }
    let mut g = gram(h);
    for i in 0..g.nrows() {
        g[(i, i)] += c64::new(alpha, 0.0);
    }
    let llt = g.llt(Side::Lower).map_err(|_| Error::SingularSystem { condition: f64::INFINITY })?;
    if alpha == 0.0 {
        let condition = cholesky_condition(llt.L());
        if condition > CONDITION_LIMIT {
            return Err(Error::SingularSystem { condition });
        }
    }
    let x = llt.solve(h);
    Ok(x.adjoint().to_owned())
}

/// Cheap condition estimate of `L L^H` from the spread of the Cholesky diagonal.
pub fn cholesky_condition(l: MatRef<'_, c64>) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..l.nrows() {
        let d = l[(i, i)].re.abs();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if lo == 0.0 {
        f64::INFINITY
    } else {
        (hi / lo).powi(2)
    }
}

/// `h h^H`.
pub fn gram(h: MatRef<'_, c64>) -> ComplexMatrix {
    h * h.adjoint()
}

/// Lower triangle (diagonal included) of `h h^H`; the strict upper part is left at zero.
pub fn lower_gram(h: MatRef<'_, c64>) -> ComplexMatrix {
    let mut g = Mat::zeros(h.nrows(), h.nrows());
    triangular::matmul(
        g.as_mut(),
        BlockStructure::TriangularLower,
        Accum::Replace,
        h,
        BlockStructure::Rectangular,
        h.adjoint(),
        BlockStructure::Rectangular,
        c64::new(1.0, 0.0),
        Par::Seq,
    );
    g
}

/// `||a - b||_F`.
pub fn distance(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    (a - b).norm_l2()
}

pub fn identity(n: usize) -> ComplexMatrix {
    Mat::identity(n, n)
}

/// Real trace of a square matrix.
pub fn trace_re(a: MatRef<'_, c64>) -> f64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)].re).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::linalg::solvers::DenseSolveCore;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mat::from_fn(rows, cols, |_, _| c64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn toeplitz_matches_linear_convolution() {
        let taps: Vec<c64> = (0..4).map(|i| c64::new(i as f64 + 1.0, -(i as f64))).collect();
        let n = 6;
        let t = toeplitz_channel(&taps, n).unwrap();
        let x = random(n + 3, 1, 3);
        let y = &t * &x;
        // y[r] = sum_s taps[s] * x[r + L - s]
        for r in 0..n {
            let mut acc = c64::new(0.0, 0.0);
            for (s, h) in taps.iter().enumerate() {
                acc += h * x[(r + 3 - s, 0)];
            }
            assert!((acc - y[(r, 0)]).norm() < 1e-12);
        }
    }

    #[test]
    fn cyclic_prefix_turns_convolution_circular() {
        let taps: Vec<c64> = (0..3).map(|i| c64::new(0.5 - i as f64, 0.25 * i as f64)).collect();
        let n = 5;
        let tc = &toeplitz_channel(&taps, n).unwrap() * &cp_insertion_matrix(n, 2).unwrap();
        for r in 0..n {
            for c in 0..n {
                let lag = (r + n - c) % n;
                let expect = if lag < 3 { taps[lag] } else { c64::new(0.0, 0.0) };
                assert!((tc[(r, c)] - expect).norm() < 1e-14, "({r},{c})");
            }
        }
    }

    #[test]
    fn lower_gram_matches_full_product() {
        let h = random(7, 11, 31);
        let full = gram(h.as_ref());
        let low = lower_gram(h.as_ref());
        for r in 0..7 {
            for c in 0..7 {
                let want = if c <= r { full[(r, c)] } else { c64::new(0.0, 0.0) };
                assert!((low[(r, c)] - want).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn dft_is_unitary() {
        let f = dft_matrix(12);
        let err = distance((&f * f.adjoint()).as_ref(), identity(12).as_ref());
        assert!(err < 1e-13);
    }

    #[test]
    fn masks_partition_the_band() {
        let masks = subcarrier_masks(32, 4).unwrap();
        assert_eq!(masks[1].indices(), (8..16).collect::<Vec<_>>().as_slice());
        let total: ComplexMatrix = masks.iter().fold(Mat::zeros(32, 32), |acc, m| acc + m.selector());
        assert!(distance(total.as_ref(), identity(32).as_ref()) == 0.0);
        assert_eq!(owner_of(17, 32, 4), 2);
        assert!(subcarrier_masks(30, 4).is_err());
    }

    /// Unblocked Householder QR of `h^H`, written out reflector by reflector.
    fn householder_kernel_oracle(h: &ComplexMatrix) -> ComplexMatrix {
        let (rows, cols) = (h.nrows(), h.ncols());
        let mut a = h.adjoint().to_owned();
        let mut reflectors = Vec::new();
        for j in 0..rows {
            let x: Vec<c64> = (j..cols).map(|i| a[(i, j)]).collect();
            let alpha = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { c64::new(1.0, 0.0) };
            let mut v = x.clone();
            v[0] += phase * alpha;
            let tau = 2.0 / v.iter().map(|z| z.norm_sqr()).sum::<f64>();
            for k in j..rows {
                let dot: c64 = (j..cols).map(|i| v[i - j].conj() * a[(i, k)]).sum();
                for i in j..cols {
                    let upd = v[i - j] * dot * tau;
                    a[(i, k)] -= upd;
                }
            }
            reflectors.push((j, v, tau));
        }
        let mut e = Mat::from_fn(cols, cols - rows, |i, c| if i == rows + c { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) });
        for (j, v, tau) in reflectors.into_iter().rev() {
            for c in 0..e.ncols() {
                let dot: c64 = (j..cols).map(|i| v[i - j].conj() * e[(i, c)]).sum();
                for i in j..cols {
                    let upd = v[i - j] * dot * tau;
                    e[(i, c)] -= upd;
                }
            }
        }
        e
    }

    #[test]
    fn kernel_spans_same_space_as_unblocked_oracle() {
        for seed in 0..5 {
            let h = random(24, 30, 100 + seed);
            let got = null_space_basis(h.as_ref()).unwrap();
            let want = householder_kernel_oracle(&h);
            let p_got = &got * got.adjoint();
            let p_want = &want * want.adjoint();
            assert!(distance(p_got.as_ref(), p_want.as_ref()) < 1e-12);
        }
    }

    #[test]
    fn kernel_basis_is_orthonormal_and_annihilating() {
        let h = random(10, 14, 11);
        let e = null_space_basis(h.as_ref()).unwrap();
        assert_eq!((e.nrows(), e.ncols()), (14, 4));
        assert!((&h * &e).norm_l2() <= 1e-12 * h.norm_l2());
        assert!(distance((e.adjoint() * &e).as_ref(), identity(4).as_ref()) < 1e-13);
    }

    #[test]
    fn kernel_rejects_rank_deficiency() {
        let mut h = random(4, 7, 5);
        for c in 0..7 {
            let v = h[(0, c)] * 2.0;
            h[(3, c)] = v;
        }
        assert!(matches!(null_space_basis(h.as_ref()), Err(Error::DegenerateChannel(_))));
        assert!(matches!(null_space_basis(random(5, 5, 1).as_ref()), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn regularized_inverse_matches_direct_formula() {
        let h = random(5, 9, 21);
        let alpha = 0.3;
        let got = regularized_inverse(h.as_ref(), alpha).unwrap();
        // oracle: explicit inverse through faer's LU on the regularized Gram matrix
        let g = &h * h.adjoint() + identity(5) * faer::Scale(c64::new(alpha, 0.0));
        let want = h.adjoint().to_owned() * g.partial_piv_lu().inverse();
        assert!(distance(got.as_ref(), want.as_ref()) < 1e-12);
        let zf = regularized_inverse(h.as_ref(), 0.0).unwrap();
        assert!(distance((&h * &zf).as_ref(), identity(5).as_ref()) < 1e-12);
    }

    #[test]
    fn unregularized_singular_system_is_refused() {
        let mut h = random(3, 6, 8);
        for c in 0..6 {
            let v = h[(0, c)];
            h[(1, c)] = v;
        }
        assert!(matches!(regularized_inverse(h.as_ref(), 0.0), Err(Error::SingularSystem { .. })));
        assert!(regularized_inverse(h.as_ref(), 1e-3).is_ok());
        assert!(regularized_inverse(h.as_ref(), -1.0).is_err());
    }
}

//! Small dense complex kernels: LU with partial pivoting, banded LU and
//! eigenvalues.

use nalgebra::DMatrix;
use num_complex::Complex;
use num_traits::Zero;

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::scalar::{cast, to_f64, Real};

/// Largest matrix accepted by [`dense_spectrum`].
pub const SPECTRUM_SIZE_CAP: usize = 600;

/// LU factorization `P A = L U` of a square complex matrix.
#[derive(Debug, Clone)]
pub struct DenseLu<T> {
    n: usize,
    lu: Vec<Complex<T>>,
    pivots: Vec<usize>,
}

impl<T: Real> DenseLu<T> {
    /// Factors a row-major `n x n` matrix.
    pub fn new(a: Vec<Complex<T>>, n: usize) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: a.len() });
        }
        let mut lu = a;
        let scale = lu.iter().map(|z| z.norm()).fold(T::zero(), T::max);
        let tiny = scale * T::epsilon() * cast::<T>(n.max(1) as f64);
        let mut pivots = vec![0; n];
        for j in 0..n {
            let p = (j..n)
                .max_by(|&a, &b| {
                    lu[a * n + j].norm().partial_cmp(&lu[b * n + j].norm()).unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(j);
            pivots[j] = p;
            if !(lu[p * n + j].norm() > tiny) {
                return Err(Error::Singular);
            }
            if p != j {
                for c in 0..n {
                    lu.swap(p * n + c, j * n + c);
                }
            }
            let inv = lu[j * n + j].inv();
            for i in j + 1..n {
                let f = lu[i * n + j] * inv;
                lu[i * n + j] = f;
                if f.is_zero() {
                    continue;
                }
                for c in j + 1..n {
                    let u = lu[j * n + c];
                    lu[i * n + c] -= f * u;
                }
            }
        }
        Ok(DenseLu { n, lu, pivots })
    }

    pub fn from_csr(a: &CsrMatrix<Complex<T>>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch { expected: a.nrows(), found: a.ncols() });
        }
        Self::new(a.to_dense(), a.nrows())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: b.len() });
        }
        let mut x = b.to_vec();
        for j in 0..n {
            x.swap(j, self.pivots[j]);
        }
        for i in 0..n {
            let mut s = x[i];
            for c in 0..i {
                s -= self.lu[i * n + c] * x[c];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for c in i + 1..n {
                s -= self.lu[i * n + c] * x[c];
            }
            x[i] = s / self.lu[i * n + i];
        }
        Ok(x)
    }
}

/// Solves `A x = b` for a dense row-major square matrix.
pub fn dense_solve<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    DenseLu::new(a.to_vec(), b.len())?.solve(b)
}

/// All eigenvalues of a dense row-major square matrix via a complex Schur
/// decomposition (computed in double precision), sorted by real then
/// imaginary part.
pub fn dense_spectrum<T: Real>(a: &[Complex<T>], n: usize) -> Result<Vec<Complex<T>>> {
    if n > SPECTRUM_SIZE_CAP {
        return Err(Error::SizeCap { size: n, cap: SPECTRUM_SIZE_CAP });
    }
    if a.len() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, found: a.len() });
    }
    if a.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NonFinite("dense spectrum input"));
    }
    let m = DMatrix::<Complex<f64>>::from_fn(n, n, |i, j| {
        let z = a[i * n + j];
        Complex::new(to_f64(z.re), to_f64(z.im))
    });
    let schur = m.try_schur(1e-15, 10_000).ok_or(Error::NoConvergence)?;
    let (_, t) = schur.unpack();
    let mut eig: Vec<Complex<T>> = (0..n).map(|i| Complex::new(cast(t[(i, i)].re), cast(t[(i, i)].im))).collect();
    eig.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    Ok(eig)
}

/// Banded LU with partial pivoting for sparse matrices of moderate
/// bandwidth; fill stays inside `kl` below and `kl + ku` above the
/// diagonal.
#[derive(Debug, Clone)]
pub struct BandedLu<T> {
    n: usize,
    kl: usize,
    width: usize,
    /// Row `i` stores columns `i - kl ..= i + kl + ku` (offset by `kl`).
    band: Vec<Complex<T>>,
    pivots: Vec<usize>,
}

impl<T: Real> BandedLu<T> {
    pub fn new(a: &CsrMatrix<Complex<T>>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: a.ncols() });
        }
        let (kl, ku) = a.bandwidths();
        let width = 2 * kl + ku + 1;
        let mut band = vec![Complex::zero(); n * width];
        // Column c of row i lives at i*width + (c + kl - i).
        for (i, j, v) in a.triplets() {
            band[i * width + (j + kl - i)] = v;
        }
        let scale = a.values().iter().map(|z| z.norm()).fold(T::zero(), T::max);
        let tiny = scale * T::epsilon();
        let idx = |i: usize, c: usize| i * width + (c + kl - i);
        let mut pivots = vec![0; n];
        for j in 0..n {
            let last = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = band[idx(j, j)].norm();
            for i in j + 1..=last {
                let v = band[idx(i, j)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            pivots[j] = p;
            if !(best > tiny) {
                return Err(Error::Singular);
            }
            let cmax = (j + kl + ku).min(n - 1);
            if p != j {
                for c in j..=cmax {
                    band.swap(idx(p, c), idx(j, c));
                }
            }
            let inv = band[idx(j, j)].inv();
            for i in j + 1..=last {
                let f = band[idx(i, j)] * inv;
                band[idx(i, j)] = f;
                if f.is_zero() {
                    continue;
                }
                for c in j + 1..=cmax {
                    let u = band[idx(j, c)];
                    band[idx(i, c)] -= f * u;
                }
            }
        }
        Ok(BandedLu { n, kl, width, band, pivots })
    }

    pub fn solve(&self, b: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: b.len() });
        }
        let kl = self.kl;
        let ku_total = self.width - 1 - kl;
        let idx = |i: usize, c: usize| i * self.width + (c + kl - i);
        let mut x = b.to_vec();
        for j in 0..n {
            x.swap(j, self.pivots[j]);
            let xj = x[j];
            for i in j + 1..=(j + kl).min(n.saturating_sub(1)) {
                x[i] -= self.band[idx(i, j)] * xj;
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for c in i + 1..=(i + ku_total).min(n - 1) {
                s -= self.band[idx(i, c)] * x[c];
            }
            x[i] = s / self.band[idx(i, i)];
        }
        Ok(x)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entries stored by the factorization, for cost estimates.
    pub fn storage(&self) -> usize {
        self.band.len()
    }
}

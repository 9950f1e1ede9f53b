//! Compressed sparse row storage.

use std::ops::{Add, Mul};

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-compressed sparse matrix; column indices strictly increase per row
/// and no explicit zeros are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<S> {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<S>,
}

/// Complex CSR matrix over the real type `T`.
pub type SparseComplexMatrix<T> = CsrMatrix<Complex<T>>;

impl<S> CsrMatrix<S>
where
    S: Copy + Zero + PartialEq + Add<Output = S>,
{
    /// Builds from unordered triplets. Duplicates are summed in input order
    /// after a stable sort, so the result depends only on the triplet list.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, S)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= nrows || c >= ncols) {
            let (expected, found) = if r >= nrows { (nrows, r) } else { (ncols, c) };
            return Err(Error::DimensionMismatch { expected, found });
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_offsets = vec![0; nrows + 1];
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<S> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        let mut iter = triplets.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if r2 != r || c2 != c {
                    break;
                }
                v = v + v2;
                iter.next();
            }
            if v != S::zero() {
                rows.push(r);
                col_indices.push(c);
                values.push(v);
            }
        }
        for &r in &rows {
            row_offsets[r + 1] += 1;
        }
        for i in 0..nrows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(CsrMatrix { nrows, ncols, row_offsets, col_indices, values })
    }

    pub fn identity(n: usize) -> Self
    where
        S: num_traits::One,
    {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![S::one(); n],
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix { nrows, ncols, row_offsets: vec![0; nrows + 1], col_indices: Vec::new(), values: Vec::new() }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Stored entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[S]) {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[range.clone()], &self.values[range])
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(S::zero(), |p| vals[p])
    }

    pub fn diagonal(&self) -> Vec<S> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, S)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn transpose(&self) -> Self {
        let t = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, t).expect("transpose indices in range")
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<S> {
        let mut out = vec![S::zero(); self.nrows * self.ncols];
        for (i, j, v) in self.triplets() {
            out[i * self.ncols + j] = v;
        }
        out
    }

    /// `y = A x` for any vector type the entries can scale.
    pub fn matvec<V>(&self, x: &[V]) -> Result<Vec<V>>
    where
        V: Copy + Zero + Add<Output = V> + Mul<S, Output = V>,
    {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch { expected: self.ncols, found: x.len() });
        }
        Ok(self.matvec_unchecked(x))
    }

    pub(crate) fn matvec_unchecked<V>(&self, x: &[V]) -> Vec<V>
    where
        V: Copy + Zero + Add<Output = V> + Mul<S, Output = V>,
    {
        (0..self.nrows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).fold(V::zero(), |acc, (&j, &a)| acc + x[j] * a)
            })
            .collect()
    }

    /// Number of entries whose magnitude is at least `rel_tol` times the
    /// largest magnitude.
    pub fn count_significant(&self, rel_tol: f64, magnitude: impl Fn(&S) -> f64) -> usize {
        let max = self.values.iter().map(&magnitude).fold(0.0, f64::max);
        if max == 0.0 {
            return 0;
        }
        self.values.iter().filter(|v| magnitude(v) >= rel_tol * max).count()
    }

    /// Lower and upper bandwidth.
    pub fn bandwidths(&self) -> (usize, usize) {
        self.triplets().fold((0, 0), |(l, u), (i, j, _)| if i > j { (l.max(i - j), u) } else { (l, u.max(j - i)) })
    }
}

impl<T: Real> CsrMatrix<T> {
    /// Promotes a real matrix to complex storage.
    pub fn to_complex(&self) -> CsrMatrix<Complex<T>> {
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_offsets: self.row_offsets.clone(),
            col_indices: self.col_indices.clone(),
            values: self.values.iter().map(|&v| Complex::new(v, T::zero())).collect(),
        }
    }
}

impl<T: Real> CsrMatrix<Complex<T>> {
    /// Writes the matrix in Matrix Market coordinate format, complex general.
    pub fn write_matrix_market<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate complex general")?;
        writeln!(out, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (i, j, v) in self.triplets() {
            writeln!(out, "{} {} {:e} {:e}", i + 1, j + 1, v.re, v.im)?;
        }
        Ok(())
    }

    /// Largest entry of `|A - A^T|`.
    pub fn asymmetry(&self) -> T {
        self.triplets().map(|(i, j, v)| (v - self.get(j, i)).norm()).fold(T::zero(), T::max)
    }
}

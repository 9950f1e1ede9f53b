//! Left-preconditioned GMRES for complex systems.

use std::time::{Duration, Instant};

use num_complex::Complex;
use num_traits::Zero;
use serde::Serialize;

use super::dense::{BandedLu, DenseLu};
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::scalar::{cast, cdot, norm2, Real};

/// A fixed linear map on complex vectors.
pub trait LinearOperator<T: Real>: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>>;
}

impl<T: Real> LinearOperator<T> for CsrMatrix<Complex<T>> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        self.matvec_unchecked(x)
    }
}

impl<T: Real> LinearOperator<T> for CsrMatrix<T> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        self.matvec_unchecked(x)
    }
}

/// Exact inverse through a dense factorization.
impl<T: Real> LinearOperator<T> for DenseLu<T> {
    fn dim(&self) -> usize {
        DenseLu::dim(self)
    }

    fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        self.solve(x).expect("dimension checked by caller")
    }
}

impl<T: Real> LinearOperator<T> for BandedLu<T> {
    fn dim(&self) -> usize {
        BandedLu::dim(self)
    }

    fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        self.solve(x).expect("dimension checked by caller")
    }
}

/// The identity, i.e. no preconditioning.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl<T: Real> LinearOperator<T> for Identity {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        x.to_vec()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions<T> {
    /// Relative tolerance on the preconditioned residual.
    pub tol: T,
    pub max_iter: usize,
    /// Restart length; `None` runs full GMRES.
    pub restart: Option<usize>,
}

impl<T: Real> Default for GmresOptions<T> {
    fn default() -> Self {
        GmresOptions { tol: cast(1e-8), max_iter: 2000, restart: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Converged,
    MaxIterations,
    /// Krylov space became invariant before the tolerance was met.
    Breakdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub iterations: usize,
    /// Relative preconditioned residual, starting with 1 at iteration 0.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub status: SolverStatus,
    pub wall_time: Duration,
    pub preconditioner_applications: usize,
}

impl SolverReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(0.0)
    }

    /// `iter,relres` lines with a header.
    pub fn write_residual_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "iter,relres")?;
        for (i, r) in self.residual_history.iter().enumerate() {
            writeln!(out, "{i},{r:.12e}")?;
        }
        Ok(())
    }
}

/// Solves `A x = b` with GMRES applied to `M^{-1} A x = M^{-1} b`,
/// starting from zero. Orthogonalization is modified Gram-Schmidt with one
/// reorthogonalization pass.
pub fn gmres<T: Real>(
    a: &dyn LinearOperator<T>,
    b: &[Complex<T>],
    precond: &dyn LinearOperator<T>,
    options: &GmresOptions<T>,
) -> Result<(Vec<Complex<T>>, SolverReport)> {
    let start = Instant::now();
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.len() });
    }
    if precond.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: precond.dim() });
    }
    if !(options.tol > T::zero()) {
        return Err(Error::InvalidConfig("GMRES tolerance must be positive".into()));
    }
    let zero = Complex::<T>::zero();
    let mut x = vec![zero; n];
    let mut applications = 1;
    let pb = precond.apply(b);
    let beta0 = norm2(&pb);
    if !beta0.is_finite() {
        return Err(Error::NonFinite("preconditioned right-hand side"));
    }
    let mut history = vec![1.0];
    if beta0 == T::zero() {
        return Ok((x, report(0, history, SolverStatus::Converged, start, applications)));
    }
    let cycle_len = options.restart.unwrap_or(options.max_iter).max(1);
    let mut iterations = 0;
    let mut residual = pb;
    loop {
        let beta = norm2(&residual);
        let mut basis: Vec<Vec<Complex<T>>> = vec![residual.iter().map(|&r| r / beta).collect()];
        // Hessenberg columns, Givens rotations and rotated rhs.
        let mut h_cols: Vec<Vec<Complex<T>>> = Vec::new();
        let mut rotations: Vec<(T, Complex<T>)> = Vec::new();
        let mut g = vec![Complex::new(beta, T::zero())];
        let mut status = None;
        for _ in 0..cycle_len.min(options.max_iter - iterations) {
            let j = basis.len() - 1;
            let mut w = precond.apply(&a.apply(&basis[j]));
            applications += 1;
            let mut h = vec![zero; j + 2];
            for _pass in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = cdot(v, &w);
                    h[i] += c;
                    w.iter_mut().zip(v).for_each(|(wk, vk)| *wk -= *vk * c);
                }
            }
            let hnext = norm2(&w);
            if !hnext.is_finite() {
                return Err(Error::NonFinite("GMRES Arnoldi vector"));
            }
            h[j + 1] = Complex::new(hnext, T::zero());
            for (i, &(cs, sn)) in rotations.iter().enumerate() {
                let (hi, hi1) = (h[i], h[i + 1]);
                h[i] = hi * cs + sn * hi1;
                h[i + 1] = -sn.conj() * hi + hi1 * cs;
            }
            let (cs, sn, r) = givens(h[j], h[j + 1]);
            h[j] = r;
            h[j + 1] = zero;
            rotations.push((cs, sn));
            let gj = g[j];
            g[j] = gj * cs;
            g.push(-sn.conj() * gj);
            h_cols.push(h);
            iterations += 1;
            let relres = g[j + 1].norm() / beta0;
            history.push(crate::scalar::to_f64(relres));
            let scale = h_cols[j][j].norm().max(beta);
            if relres <= options.tol {
                status = Some(SolverStatus::Converged);
                break;
            }
            if hnext <= cast::<T>(1e-14) * scale {
                status = Some(SolverStatus::Breakdown);
                break;
            }
            basis.push(w.iter().map(|&wk| wk / hnext).collect());
        }
        // Back substitution for the update.
        let k = h_cols.len();
        let mut y = vec![zero; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for c in i + 1..k {
                s -= h_cols[c][i] * y[c];
            }
            y[i] = s / h_cols[i][i];
        }
        for (yi, v) in y.iter().zip(&basis) {
            x.iter_mut().zip(v).for_each(|(xk, vk)| *xk += *vk * *yi);
        }
        if let Some(st) = status {
            return Ok((x, report(iterations, history, st, start, applications)));
        }
        if iterations >= options.max_iter {
            return Ok((x, report(iterations, history, SolverStatus::MaxIterations, start, applications)));
        }
        // Restart from the true preconditioned residual.
        let ax = a.apply(&x);
        let r: Vec<Complex<T>> = b.iter().zip(&ax).map(|(&bi, &axi)| bi - axi).collect();
        residual = precond.apply(&r);
        applications += 1;
        let relres = norm2(&residual) / beta0;
        if relres <= options.tol {
            *history.last_mut().expect("history is nonempty") = crate::scalar::to_f64(relres);
            return Ok((x, report(iterations, history, SolverStatus::Converged, start, applications)));
        }
    }
}

fn report(
    iterations: usize,
    history: Vec<f64>,
    status: SolverStatus,
    start: Instant,
    applications: usize,
) -> SolverReport {
    SolverReport {
        iterations,
        residual_history: history,
        converged: status == SolverStatus::Converged,
        status,
        wall_time: start.elapsed(),
        preconditioner_applications: applications,
    }
}

/// Complex Givens rotation `[c s; -conj(s) c]` zeroing `b` against `a`.
fn givens<T: Real>(a: Complex<T>, b: Complex<T>) -> (T, Complex<T>, Complex<T>) {
    if b.norm() == T::zero() {
        return (T::one(), Complex::zero(), a);
    }
    if a.norm() == T::zero() {
        return (T::zero(), Complex::new(T::one(), T::zero()), b);
    }
    let an = a.norm();
    let r = an.hypot(b.norm());
    let phase = a / an;
    let c = an / r;
    let s = phase * b.conj() / r;
    (c, s, phase * r)
}

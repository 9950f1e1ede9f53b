//! Geometric multigrid V-cycle for the piecewise-constant preconditioner.

use num_complex::Complex;
use num_traits::Zero;
use serde::Serialize;

use super::dense::DenseLu;
use super::gmres::LinearOperator;
use super::sparse::CsrMatrix;
use crate::assembly::{assemble_p0_preconditioner, HelmholtzConfig};
use crate::error::{Error, Result};
use crate::mesh::{point_in_triangle, TriMesh};
use crate::scalar::{norm2, to_f64, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoother {
    /// Damped Jacobi.
    Jacobi,
    /// Forward Gauss-Seidel before, backward after the coarse correction.
    SymmetricGaussSeidel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoarseOperator {
    /// Reassemble the preconditioner on each coarse mesh.
    Rediscretized,
    /// `R P_fine R^T` with injection transfer.
    Galerkin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultigridOptions {
    pub pre_smooth: usize,
    pub post_smooth: usize,
    pub damping: f64,
    pub smoother: Smoother,
    pub coarse_operator: CoarseOperator,
}

impl Default for MultigridOptions {
    fn default() -> Self {
        MultigridOptions {
            pre_smooth: 2,
            post_smooth: 2,
            damping: 0.8,
            smoother: Smoother::Jacobi,
            coarse_operator: CoarseOperator::Rediscretized,
        }
    }
}

#[derive(Debug, Clone)]
struct Level<T> {
    matrix: CsrMatrix<T>,
    inv_diag: Vec<T>,
    /// Coarse parent of every element of this level (absent on level 0).
    parent: Option<Vec<usize>>,
    coarse_size: usize,
}

/// Nested levels, coarse to fine, with injection transfers.
#[derive(Debug, Clone)]
pub struct MultigridHierarchy<T> {
    levels: Vec<Level<T>>,
    coarse_lu: DenseLu<T>,
    options: MultigridOptions,
}

fn check_nested<T: Real>(coarse: &TriMesh<T>, fine: &TriMesh<T>) -> Result<Vec<usize>> {
    let parents = fine.parent_map().ok_or_else(|| Error::NotNested("finer mesh has no parent map".into()))?;
    if parents.len() != fine.num_elements() {
        return Err(Error::NotNested("parent map length differs from element count".into()));
    }
    for (child, &p) in parents.iter().enumerate() {
        if p >= coarse.num_elements() || !point_in_triangle(fine.barycenter(child), coarse.triangle(p)) {
            return Err(Error::NotNested(format!("element {child} does not lie in parent {p}")));
        }
    }
    Ok(parents.to_vec())
}

/// Injection transpose product `R A R^T` with `R` summing children.
fn galerkin_product<T: Real>(fine: &CsrMatrix<T>, parent: &[usize], coarse_size: usize) -> Result<CsrMatrix<T>> {
    let triplets = fine.triplets().map(|(i, j, v)| (parent[i], parent[j], v)).collect();
    CsrMatrix::from_triplets(coarse_size, coarse_size, triplets)
}

impl<T: Real> MultigridHierarchy<T> {
    /// Builds the hierarchy from nested meshes ordered coarse to fine.
    pub fn build(meshes: &[TriMesh<T>], cfg: &HelmholtzConfig<T>, options: MultigridOptions) -> Result<Self> {
        if meshes.is_empty() {
            return Err(Error::InvalidConfig("multigrid needs at least one mesh".into()));
        }
        if !(options.damping > 0.0 && options.damping <= 1.0) {
            return Err(Error::InvalidConfig(format!("smoother damping {} outside (0, 1]", options.damping)));
        }
        let parents: Vec<Vec<usize>> = meshes.windows(2).map(|w| check_nested(&w[0], &w[1])).collect::<Result<_>>()?;
        let finest = assemble_p0_preconditioner(meshes.last().expect("nonempty"), cfg)?;
        let mut matrices = vec![finest];
        for l in (0..meshes.len() - 1).rev() {
            let m = match options.coarse_operator {
                CoarseOperator::Rediscretized => assemble_p0_preconditioner(&meshes[l], cfg)?,
                CoarseOperator::Galerkin => {
                    galerkin_product(matrices.last().expect("nonempty"), &parents[l], meshes[l].num_elements())?
                }
            };
            matrices.push(m);
        }
        matrices.reverse();
        let levels: Vec<Level<T>> = matrices
            .into_iter()
            .enumerate()
            .map(|(l, matrix)| {
                let inv_diag = matrix.diagonal().iter().map(|&d| T::one() / d).collect();
                Level {
                    matrix,
                    inv_diag,
                    parent: if l == 0 { None } else { Some(parents[l - 1].clone()) },
                    coarse_size: if l == 0 { 0 } else { meshes[l - 1].num_elements() },
                }
            })
            .collect();
        let coarse_lu = DenseLu::from_csr(&levels[0].matrix.to_complex())?;
        Ok(MultigridHierarchy { levels, coarse_lu, options })
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn options(&self) -> &MultigridOptions {
        &self.options
    }

    /// Operator on level `l` (0 is coarsest).
    pub fn level_matrix(&self, l: usize) -> &CsrMatrix<T> {
        &self.levels[l].matrix
    }

    pub fn finest_matrix(&self) -> &CsrMatrix<T> {
        &self.levels.last().expect("nonempty").matrix
    }

    /// Injection prolongation from level `l - 1` to level `l`.
    pub fn prolongate(&self, l: usize, coarse: &[Complex<T>]) -> Vec<Complex<T>> {
        let parent = self.levels[l].parent.as_ref().expect("level above the coarsest");
        parent.iter().map(|&p| coarse[p]).collect()
    }

    /// Transpose of [`Self::prolongate`].
    pub fn restrict(&self, l: usize, fine: &[Complex<T>]) -> Vec<Complex<T>> {
        let level = &self.levels[l];
        let parent = level.parent.as_ref().expect("level above the coarsest");
        let mut out = vec![Complex::zero(); level.coarse_size];
        for (&p, &v) in parent.iter().zip(fine) {
            out[p] += v;
        }
        out
    }

    /// Largest entry of `R P_l R^T - P_{l-1}`; zero for Galerkin coarse
    /// operators.
    pub fn galerkin_defect(&self, l: usize) -> Result<T> {
        let level = &self.levels[l];
        let parent =
            level.parent.as_ref().ok_or_else(|| Error::InvalidConfig("coarsest level has no parent".into()))?;
        let g = galerkin_product(&level.matrix, parent, level.coarse_size)?;
        let c = &self.levels[l - 1].matrix;
        let diff = g.triplets().chain(c.triplets().map(|(i, j, v)| (i, j, -v))).collect();
        let d = CsrMatrix::from_triplets(level.coarse_size, level.coarse_size, diff)?;
        Ok(d.values().iter().fold(T::zero(), |a, v| a.max(v.abs())))
    }

    fn smooth(&self, l: usize, x: &mut [Complex<T>], b: &[Complex<T>], sweeps: usize, forward: bool) {
        let level = &self.levels[l];
        let a = &level.matrix;
        let n = a.nrows();
        let omega = crate::scalar::cast::<T>(self.options.damping);
        for _ in 0..sweeps {
            match self.options.smoother {
                Smoother::Jacobi => {
                    let ax = a.matvec_unchecked(x);
                    for i in 0..n {
                        x[i] += (b[i] - ax[i]) * (omega * level.inv_diag[i]);
                    }
                }
                Smoother::SymmetricGaussSeidel => {
                    let order: Box<dyn Iterator<Item = usize>> =
                        if forward { Box::new(0..n) } else { Box::new((0..n).rev()) };
                    for i in order {
                        let (cols, vals) = a.row(i);
                        let ax = cols.iter().zip(vals).fold(Complex::zero(), |acc, (&j, &v)| acc + x[j] * v);
                        x[i] += (b[i] - ax) * level.inv_diag[i];
                    }
                }
            }
        }
    }

    fn cycle(&self, l: usize, b: &[Complex<T>]) -> Vec<Complex<T>> {
        if l == 0 {
            return self.coarse_lu.solve(b).expect("coarse dimension matches");
        }
        let mut x = vec![Complex::zero(); b.len()];
        self.smooth(l, &mut x, b, self.options.pre_smooth, true);
        let ax = self.levels[l].matrix.matvec_unchecked(&x);
        let r: Vec<Complex<T>> = b.iter().zip(&ax).map(|(&bi, &a)| bi - a).collect();
        let ec = self.cycle(l - 1, &self.restrict(l, &r));
        for (xi, ei) in x.iter_mut().zip(self.prolongate(l, &ec)) {
            *xi += ei;
        }
        self.smooth(l, &mut x, b, self.options.post_smooth, false);
        x
    }

    /// One V-cycle approximating `P^{-1} r` from a zero initial guess.
    pub fn vcycle_apply(&self, r: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let n = self.finest_matrix().nrows();
        if r.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: r.len() });
        }
        Ok(self.cycle(self.levels.len() - 1, r))
    }

    /// `‖r - P V(r)‖ / ‖r‖`.
    pub fn residual_reduction(&self, r: &[Complex<T>]) -> Result<f64> {
        let y = self.vcycle_apply(r)?;
        let py = self.finest_matrix().matvec_unchecked(&y);
        let d: Vec<Complex<T>> = r.iter().zip(&py).map(|(&a, &b)| a - b).collect();
        Ok(to_f64(norm2(&d)) / to_f64(norm2(r)))
    }

    /// Stationary iteration `y += V(z - P y)` until the relative residual
    /// is below `tol`. Returns the solution and the number of cycles.
    pub fn solve_stationary(&self, z: &[Complex<T>], tol: f64, max_cycles: usize) -> Result<(Vec<Complex<T>>, usize)> {
        let p = self.finest_matrix();
        let mut y = vec![Complex::zero(); z.len()];
        let z_norm = to_f64(norm2(z));
        if z_norm == 0.0 {
            return Ok((y, 0));
        }
        for cycle in 1..=max_cycles {
            let py = p.matvec(&y)?;
            let r: Vec<Complex<T>> = z.iter().zip(&py).map(|(&a, &b)| a - b).collect();
            for (yi, ci) in y.iter_mut().zip(self.vcycle_apply(&r)?) {
                *yi += ci;
            }
            let py = p.matvec_unchecked(&y);
            let res: Vec<Complex<T>> = z.iter().zip(&py).map(|(&a, &b)| a - b).collect();
            if to_f64(norm2(&res)) <= tol * z_norm {
                return Ok((y, cycle));
            }
        }
        Err(Error::NoConvergence)
    }
}

impl<T: Real> LinearOperator<T> for MultigridHierarchy<T> {
    fn dim(&self) -> usize {
        self.finest_matrix().nrows()
    }

    fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        self.cycle(self.levels.len() - 1, x)
    }
}

/// Builds the hierarchy with the default V(2,2) damped-Jacobi options.
pub fn build_hierarchy<T: Real>(meshes: &[TriMesh<T>], cfg: &HelmholtzConfig<T>) -> Result<MultigridHierarchy<T>> {
    MultigridHierarchy::build(meshes, cfg, MultigridOptions::default())
}

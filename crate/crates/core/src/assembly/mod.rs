//! Interior-penalty assembly of the Helmholtz system on broken polynomial
//! spaces, the piecewise-constant preconditioner and error norms.

mod norms;
mod solution;

pub use norms::{compute_error_norms, discrete_norms, ErrorReport};
pub use solution::{bessel_j, ManufacturedSolution};

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linsolve::{CsrMatrix, SparseComplexMatrix};
use crate::mesh::TriMesh;
use crate::polybasis::{
    dim_pm, map_to_triangle, segment_quadrature, triangle_quadrature, Coefficient, PiecewisePolynomial, PolySpec,
    SegmentRule, TriangleRule,
};
use crate::reconstruction::ReconstructionOperator;
use crate::scalar::{cast, Point, Real};

/// Problem and discretization parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HelmholtzConfig<T> {
    pub k: T,
    /// Absorption `ε` in `k² - iε`.
    pub eps: T,
    /// Penalty scale; the face penalty is `η / h_e`.
    pub eta: T,
    /// Multiply the interior penalty by `i` (otherwise it is real).
    pub penalty_imag: bool,
    pub degree: usize,
    /// Polynomial exactness of all volume and face rules.
    pub quadrature_exactness: usize,
}

impl<T: Real> HelmholtzConfig<T> {
    /// Defaults: `η = 1`, imaginary penalty, exactness `2m + 2`.
    pub fn new(k: T, eps: T, degree: usize) -> Self {
        HelmholtzConfig { k, eps, eta: default_eta(), penalty_imag: true, degree, quadrature_exactness: 2 * degree + 2 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > T::zero() && self.k.is_finite()) {
            return Err(Error::InvalidConfig(format!("wavenumber must be positive, got {}", self.k)));
        }
        if !(self.eps >= T::zero() && self.eps.is_finite()) {
            return Err(Error::InvalidConfig(format!("absorption must be non-negative, got {}", self.eps)));
        }
        if !(self.eta > T::zero() && self.eta.is_finite()) {
            return Err(Error::InvalidConfig(format!("penalty scale must be positive, got {}", self.eta)));
        }
        Ok(())
    }

    /// `k² - iε`.
    pub fn shifted_k2(&self) -> Complex<T> {
        Complex::new(self.k * self.k, -self.eps)
    }

    fn penalty_unit(&self) -> Complex<T> {
        if self.penalty_imag {
            Complex::new(T::zero(), T::one())
        } else {
            Complex::new(T::one(), T::zero())
        }
    }
}

/// Penalty scale used unless overridden. The reconstructed space needs
/// no large penalty; larger values add an `O(η h^{m+2})` error term that
/// dominates on moderate meshes.
pub fn default_eta<T: Real>() -> T {
    T::one()
}

/// A broken polynomial space given by local monomial expansions: on
/// element `k` the global basis functions `element_dofs(k)` have monomial
/// coefficients given by the columns of `coefficient_map(k)`.
pub trait DiscreteSpace<T: Real>: Sync {
    fn num_dofs(&self) -> usize;
    fn num_elements(&self) -> usize;
    fn spec(&self, k: usize) -> &PolySpec<T>;
    fn element_dofs(&self, k: usize) -> &[usize];
    /// Row-major `dim x element_dofs(k).len()` map; `None` is the identity.
    fn coefficient_map(&self, k: usize) -> Option<&[T]>;

    /// Piecewise polynomial with global coefficient vector `x`.
    fn expand<S: Coefficient<T>>(&self, x: &[S]) -> Result<PiecewisePolynomial<T, S>>
    where
        Self: Sized,
    {
        if x.len() != self.num_dofs() {
            return Err(Error::DimensionMismatch { expected: self.num_dofs(), found: x.len() });
        }
        let specs = (0..self.num_elements()).map(|k| *self.spec(k)).collect();
        let coefficients = (0..self.num_elements())
            .map(|k| {
                let dofs = self.element_dofs(k);
                match self.coefficient_map(k) {
                    None => dofs.iter().map(|&d| x[d]).collect(),
                    Some(m) => m
                        .chunks_exact(dofs.len())
                        .map(|row| row.iter().zip(dofs).fold(S::zero(), |acc, (&w, &d)| acc + x[d] * w))
                        .collect(),
                }
            })
            .collect();
        Ok(PiecewisePolynomial::new(specs, coefficients))
    }
}

impl<T: Real> DiscreteSpace<T> for ReconstructionOperator<T> {
    fn num_dofs(&self) -> usize {
        ReconstructionOperator::num_elements(self)
    }

    fn num_elements(&self) -> usize {
        ReconstructionOperator::num_elements(self)
    }

    fn spec(&self, k: usize) -> &PolySpec<T> {
        ReconstructionOperator::spec(self, k)
    }

    fn element_dofs(&self, k: usize) -> &[usize] {
        &self.patch(k).members
    }

    fn coefficient_map(&self, k: usize) -> Option<&[T]> {
        Some(self.matrix(k))
    }
}

/// The full broken space with modal (scaled monomial) unknowns, centred at
/// barycenters and scaled by element diameters.
#[derive(Debug, Clone)]
pub struct DgSpace<T> {
    specs: Vec<PolySpec<T>>,
    dofs: Vec<Vec<usize>>,
}

impl<T: Real> DgSpace<T> {
    pub fn new(mesh: &TriMesh<T>, degree: usize) -> Self {
        let n = dim_pm(degree);
        DgSpace {
            specs: (0..mesh.num_elements())
                .map(|k| PolySpec::new(degree, mesh.barycenter(k), mesh.diameter(k)))
                .collect(),
            dofs: (0..mesh.num_elements()).map(|k| (k * n..(k + 1) * n).collect()).collect(),
        }
    }
}

impl<T: Real> DiscreteSpace<T> for DgSpace<T> {
    fn num_dofs(&self) -> usize {
        self.dofs.iter().map(Vec::len).sum()
    }

    fn num_elements(&self) -> usize {
        self.specs.len()
    }

    fn spec(&self, k: usize) -> &PolySpec<T> {
        &self.specs[k]
    }

    fn element_dofs(&self, k: usize) -> &[usize] {
        &self.dofs[k]
    }

    fn coefficient_map(&self, _k: usize) -> Option<&[T]> {
        None
    }
}

/// Assembled linear system `A x = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalSystem<T> {
    pub matrix: SparseComplexMatrix<T>,
    pub rhs: Vec<Complex<T>>,
}

impl<T: Real> GlobalSystem<T> {
    pub fn num_dofs(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn nnz(&self) -> usize {
        count_nnz(&self.matrix)
    }
}

/// Stored entries with magnitude at least `1e-14` times the largest.
pub fn count_nnz<T: Real>(matrix: &SparseComplexMatrix<T>) -> usize {
    matrix.count_significant(1e-14, |z| crate::scalar::to_f64(z.norm()))
}

pub(crate) struct Rules<T> {
    pub triangle: TriangleRule<T>,
    pub segment: SegmentRule<T>,
}

impl<T: Real> Rules<T> {
    pub fn new(exactness: usize) -> Result<Self> {
        Ok(Rules { triangle: triangle_quadrature(exactness)?, segment: segment_quadrature(exactness)? })
    }

    /// Physical points and weights on element `k`.
    pub fn element_points(&self, mesh: &TriMesh<T>, k: usize) -> impl Iterator<Item = (Point<T>, T)> + '_ {
        let tri = mesh.triangle(k);
        let jac = mesh.area(k) * cast(2.0);
        self.triangle.points.iter().zip(&self.triangle.weights).map(move |(&r, &w)| (map_to_triangle(&tri, r), w * jac))
    }

    /// Physical points and weights on face `f`.
    pub fn face_points(&self, mesh: &TriMesh<T>, f: usize) -> impl Iterator<Item = (Point<T>, T)> + '_ {
        let face = &mesh.faces()[f];
        let a = mesh.vertices()[face.vertices[0]];
        let b = mesh.vertices()[face.vertices[1]];
        let len = face.length;
        self.segment
            .points
            .iter()
            .zip(&self.segment.weights)
            .map(move |(&t, &w)| ([a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t], w * len))
    }
}

fn check_space<T: Real>(mesh: &TriMesh<T>, space: &impl DiscreteSpace<T>, cfg: &HelmholtzConfig<T>) -> Result<()> {
    cfg.validate()?;
    if space.num_elements() != mesh.num_elements() {
        return Err(Error::DimensionMismatch { expected: mesh.num_elements(), found: space.num_elements() });
    }
    if (0..space.num_elements()).any(|k| space.spec(k).degree != cfg.degree) {
        return Err(Error::InvalidConfig("space degree differs from the configured degree".into()));
    }
    Ok(())
}

/// Local monomial data of one side of a face or of an element.
struct Side<'a, T> {
    dofs: &'a [usize],
    map: Option<&'a [T]>,
    dim: usize,
}

impl<'a, T: Real> Side<'a, T> {
    fn of(space: &'a impl DiscreteSpace<T>, k: usize) -> Self {
        Side { dofs: space.element_dofs(k), map: space.coefficient_map(k), dim: space.spec(k).dim() }
    }

    /// `M[a][p]`.
    #[inline]
    fn coef(&self, a: usize, p: usize) -> T {
        match self.map {
            Some(m) => m[a * self.dofs.len() + p],
            None => {
                if a == p {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }
}

/// Emits triplets of `M_s^T L_st M_t` for a block local matrix `L` in
/// monomial coordinates (rows: test side and index, cols: trial).
fn push_congruence<T: Real>(sides: &[Side<'_, T>], local: &[Complex<T>], out: &mut Vec<(usize, usize, Complex<T>)>) {
    let total: usize = sides.iter().map(|s| s.dim).sum();
    let offsets: Vec<usize> = sides
        .iter()
        .scan(0, |acc, s| {
            let o = *acc;
            *acc += s.dim;
            Some(o)
        })
        .collect();
    for (s, side_s) in sides.iter().enumerate() {
        for (t, side_t) in sides.iter().enumerate() {
            // tmp[a][q] = Σ_b L[(s,a),(t,b)] M_t[b][q]
            let nq = side_t.dofs.len();
            let mut tmp = vec![Complex::<T>::zero(); side_s.dim * nq];
            for a in 0..side_s.dim {
                let row =
                    &local[(offsets[s] + a) * total + offsets[t]..(offsets[s] + a) * total + offsets[t] + side_t.dim];
                match side_t.map {
                    None => tmp[a * nq..(a + 1) * nq].copy_from_slice(row),
                    Some(_) => {
                        for (b, &l) in row.iter().enumerate() {
                            if l.is_zero() {
                                continue;
                            }
                            for q in 0..nq {
                                tmp[a * nq + q] += l * side_t.coef(b, q);
                            }
                        }
                    }
                }
            }
            for (p, &gi) in side_s.dofs.iter().enumerate() {
                for (q, &gj) in side_t.dofs.iter().enumerate() {
                    let v = match side_s.map {
                        None => tmp[p * nq + q],
                        Some(_) => {
                            (0..side_s.dim).fold(Complex::zero(), |acc, a| acc + tmp[a * nq + q] * side_s.coef(a, p))
                        }
                    };
                    out.push((gi, gj, v));
                }
            }
        }
    }
}

/// Maps a local monomial load vector to global entries: `M^T l`.
fn push_load<T: Real>(side: &Side<'_, T>, local: &[Complex<T>], out: &mut Vec<(usize, Complex<T>)>) {
    for (p, &gi) in side.dofs.iter().enumerate() {
        let v = local.iter().enumerate().fold(Complex::zero(), |acc, (a, &l)| acc + l * side.coef(a, p));
        out.push((gi, v));
    }
}

fn monomials<T: Real>(spec: &PolySpec<T>, x: Point<T>) -> (Vec<T>, Vec<Point<T>>) {
    crate::polybasis::eval_scaled_monomials(x, spec)
}

struct LocalContribution<T> {
    triplets: Vec<(usize, usize, Complex<T>)>,
    load: Vec<(usize, Complex<T>)>,
}

fn element_contribution<T: Real>(
    mesh: &TriMesh<T>,
    space: &impl DiscreteSpace<T>,
    cfg: &HelmholtzConfig<T>,
    sol: &ManufacturedSolution<T>,
    rules: &Rules<T>,
    k: usize,
) -> LocalContribution<T> {
    let spec = space.spec(k);
    let n = spec.dim();
    let kk = cfg.shifted_k2();
    let mut local = vec![Complex::<T>::zero(); n * n];
    let mut load = vec![Complex::<T>::zero(); n];
    for (x, w) in rules.element_points(mesh, k) {
        let (v, g) = monomials(spec, x);
        let f = sol.f(x) * w;
        for a in 0..n {
            load[a] += f * v[a];
            for b in 0..n {
                let stiff = (g[a][0] * g[b][0] + g[a][1] * g[b][1]) * w;
                local[a * n + b] += Complex::new(stiff, T::zero()) - kk * (v[a] * v[b] * w);
            }
        }
    }
    let side = Side::of(space, k);
    let mut out = LocalContribution { triplets: Vec::new(), load: Vec::new() };
    push_congruence(std::slice::from_ref(&side), &local, &mut out.triplets);
    push_load(&side, &load, &mut out.load);
    out
}

fn face_contribution<T: Real>(
    mesh: &TriMesh<T>,
    space: &impl DiscreteSpace<T>,
    cfg: &HelmholtzConfig<T>,
    sol: &ManufacturedSolution<T>,
    rules: &Rules<T>,
    f: usize,
) -> LocalContribution<T> {
    let face = &mesh.faces()[f];
    let normal = face.normal;
    let mut out = LocalContribution { triplets: Vec::new(), load: Vec::new() };
    match face.minus {
        None => {
            let spec = space.spec(face.plus);
            let n = spec.dim();
            let ik = Complex::new(T::zero(), cfg.k);
            let mut local = vec![Complex::<T>::zero(); n * n];
            let mut load = vec![Complex::<T>::zero(); n];
            for (x, w) in rules.face_points(mesh, f) {
                let (v, _) = monomials(spec, x);
                let g = sol.g(x, normal) * w;
                for a in 0..n {
                    load[a] += g * v[a];
                    for b in 0..n {
                        local[a * n + b] += ik * (v[a] * v[b] * w);
                    }
                }
            }
            let side = Side::of(space, face.plus);
            push_congruence(std::slice::from_ref(&side), &local, &mut out.triplets);
            push_load(&side, &load, &mut out.load);
        }
        Some(minus) => {
            let plus = face.plus;
            let (sp, sm) = (space.spec(plus), space.spec(minus));
            let (np, nm) = (sp.dim(), sm.dim());
            let total = np + nm;
            let penalty = cfg.penalty_unit() * (cfg.eta / face.length);
            let mut local = vec![Complex::<T>::zero(); total * total];
            // jump coefficient and normal derivative average per block index
            let mut jump = vec![T::zero(); total];
            let mut avg_dn = vec![T::zero(); total];
            let half = cast::<T>(0.5);
            for (x, w) in rules.face_points(mesh, f) {
                let (vp, gp) = monomials(sp, x);
                let (vm, gm) = monomials(sm, x);
                for a in 0..np {
                    jump[a] = vp[a];
                    avg_dn[a] = half * (gp[a][0] * normal[0] + gp[a][1] * normal[1]);
                }
                for a in 0..nm {
                    jump[np + a] = -vm[a];
                    avg_dn[np + a] = half * (gm[a][0] * normal[0] + gm[a][1] * normal[1]);
                }
                for i in 0..total {
                    for j in 0..total {
                        let consistency = -(jump[j] * avg_dn[i] + jump[i] * avg_dn[j]) * w;
                        local[i * total + j] +=
                            Complex::new(consistency, T::zero()) + penalty * (jump[i] * jump[j] * w);
                    }
                }
            }
            let sides = [Side::of(space, plus), Side::of(space, minus)];
            push_congruence(&sides, &local, &mut out.triplets);
        }
    }
    out
}

fn assemble_space<T: Real>(
    mesh: &TriMesh<T>,
    space: &impl DiscreteSpace<T>,
    cfg: &HelmholtzConfig<T>,
    sol: &ManufacturedSolution<T>,
) -> Result<GlobalSystem<T>> {
    check_space(mesh, space, cfg)?;
    let rules = Rules::new(cfg.quadrature_exactness)?;
    let elements: Vec<_> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|k| element_contribution(mesh, space, cfg, sol, &rules, k))
        .collect();
    let faces: Vec<_> =
        (0..mesh.num_faces()).into_par_iter().map(|f| face_contribution(mesh, space, cfg, sol, &rules, f)).collect();
    let n = space.num_dofs();
    let mut rhs: Vec<Complex<T>> = vec![Complex::zero(); n];
    let mut triplets = Vec::with_capacity(elements.iter().chain(&faces).map(|c| c.triplets.len()).sum());
    for c in elements.into_iter().chain(faces) {
        for (i, v) in c.load {
            rhs[i] += v;
        }
        triplets.extend(c.triplets);
    }
    if rhs.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NonFinite("assembled right-hand side"));
    }
    let matrix = CsrMatrix::from_triplets(n, n, triplets)?;
    Ok(GlobalSystem { matrix, rhs })
}

/// RDA system on the reconstructed space: one unknown per element.
pub fn assemble_rda_system<T: Real>(
    mesh: &TriMesh<T>,
    recon: &ReconstructionOperator<T>,
    cfg: &HelmholtzConfig<T>,
    sol: &ManufacturedSolution<T>,
) -> Result<GlobalSystem<T>> {
    if recon.degree() != cfg.degree {
        return Err(Error::InvalidConfig(format!(
            "reconstruction degree {} differs from configured degree {}",
            recon.degree(),
            cfg.degree
        )));
    }
    assemble_space(mesh, recon, cfg, sol)
}

/// Conventional DG system with `dim_pm(m)` modal unknowns per element.
pub fn assemble_dg_system<T: Real>(
    mesh: &TriMesh<T>,
    cfg: &HelmholtzConfig<T>,
    sol: &ManufacturedSolution<T>,
) -> Result<(DgSpace<T>, GlobalSystem<T>)> {
    let space = DgSpace::new(mesh, cfg.degree);
    let system = assemble_space(mesh, &space, cfg, sol)?;
    Ok((space, system))
}

/// Assembles on an arbitrary discrete space.
pub fn assemble_system<T: Real>(
    mesh: &TriMesh<T>,
    space: &impl DiscreteSpace<T>,
    cfg: &HelmholtzConfig<T>,
    sol: &ManufacturedSolution<T>,
) -> Result<GlobalSystem<T>> {
    assemble_space(mesh, space, cfg, sol)
}

/// `a_h(u, φ_i)` for the exact solution `u` and every basis function.
/// Jumps of `u` vanish, so only the volume terms, the `[φ_i]·∇u` face term
/// and the boundary mass remain.
pub fn exact_solution_functional<T: Real>(
    mesh: &TriMesh<T>,
    space: &impl DiscreteSpace<T>,
    cfg: &HelmholtzConfig<T>,
    sol: &ManufacturedSolution<T>,
) -> Result<Vec<Complex<T>>> {
    check_space(mesh, space, cfg)?;
    let rules = Rules::new(cfg.quadrature_exactness)?;
    let kk = cfg.shifted_k2();
    let ik = Complex::new(T::zero(), cfg.k);
    let mut entries: Vec<(usize, Complex<T>)> = Vec::new();
    for k in 0..mesh.num_elements() {
        let spec = space.spec(k);
        let mut load = vec![Complex::zero(); spec.dim()];
        for (x, w) in rules.element_points(mesh, k) {
            let (v, g) = monomials(spec, x);
            let (u, gu) = (sol.u(x), sol.grad(x));
            for a in 0..spec.dim() {
                load[a] += (gu[0] * g[a][0] + gu[1] * g[a][1] - kk * u * v[a]) * w;
            }
        }
        push_load(&Side::of(space, k), &load, &mut entries);
    }
    for (f, face) in mesh.faces().iter().enumerate() {
        let sides: Vec<(usize, T)> = match face.minus {
            None => vec![(face.plus, T::one())],
            Some(m) => vec![(face.plus, T::one()), (m, -T::one())],
        };
        for &(k, sign) in &sides {
            let spec = space.spec(k);
            let mut load = vec![Complex::zero(); spec.dim()];
            for (x, w) in rules.face_points(mesh, f) {
                let (v, _) = monomials(spec, x);
                let value = if face.is_boundary() {
                    ik * sol.u(x)
                } else {
                    let gu = sol.grad(x);
                    -(gu[0] * face.normal[0] + gu[1] * face.normal[1]) * sign
                };
                for a in 0..spec.dim() {
                    load[a] += value * (v[a] * w);
                }
            }
            push_load(&Side::of(space, k), &load, &mut entries);
        }
    }
    let mut out = vec![Complex::zero(); space.num_dofs()];
    for (i, v) in entries {
        out[i] += v;
    }
    Ok(out)
}

/// Lowest-order preconditioner on piecewise constants:
/// `Σ_e^i (η/h)|e| [u][v] + Σ_K k²|K| u v + Σ_e^b k|e| u v` (real SPD).
pub fn assemble_p0_preconditioner<T: Real>(mesh: &TriMesh<T>, cfg: &HelmholtzConfig<T>) -> Result<CsrMatrix<T>> {
    cfg.validate()?;
    let h = mesh.h();
    let mut triplets = Vec::with_capacity(mesh.num_elements() + 4 * mesh.num_faces());
    for k in 0..mesh.num_elements() {
        triplets.push((k, k, cfg.k * cfg.k * mesh.area(k)));
    }
    for face in mesh.faces() {
        match face.minus {
            None => triplets.push((face.plus, face.plus, cfg.k * face.length)),
            Some(m) => {
                let w = cfg.eta / h * face.length;
                let p = face.plus;
                triplets.extend([(p, p, w), (m, m, w), (p, m, -w), (m, p, -w)]);
            }
        }
    }
    CsrMatrix::from_triplets(mesh.num_elements(), mesh.num_elements(), triplets)
}

/// Broken polynomial interpolating `values` as constants (degree 0).
pub fn piecewise_constant<T: Real, S: Coefficient<T>>(mesh: &TriMesh<T>, values: &[S]) -> PiecewisePolynomial<T, S> {
    let specs = (0..mesh.num_elements()).map(|k| PolySpec::new(0, mesh.barycenter(k), mesh.diameter(k))).collect();
    PiecewisePolynomial::new(specs, values.iter().map(|&v| vec![v]).collect())
}

#[cfg(test)]
mod tests;

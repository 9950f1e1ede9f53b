//! L2, DG and energy norms of broken functions.

use num_complex::Complex;
use serde::Serialize;

use super::{HelmholtzConfig, ManufacturedSolution, Rules};
use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::polybasis::PiecewisePolynomial;
use crate::scalar::{cast, Point, Real};

/// Norms of an error (or any broken function) with the squared terms
/// that make up the DG and energy norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorReport<T> {
    pub l2: T,
    pub dg: T,
    pub energy: T,
    /// `Σ_K ‖∇v‖²`.
    pub volume_gradient_sq: T,
    /// `Σ_{interior e} h_e⁻¹ ‖[v]‖²`.
    pub interior_jump_sq: T,
    /// `Σ_{boundary e} k ‖v‖²`.
    pub boundary_sq: T,
    /// `Σ_{interior e} h ‖{∇v}‖²`.
    pub face_average_sq: T,
}

/// Value and gradient of the measured function on element `k` at `x`.
type Field<'a, T> = dyn Fn(usize, Point<T>) -> (Complex<T>, [Complex<T>; 2]) + Sync + 'a;

fn norms_of<T: Real>(mesh: &TriMesh<T>, cfg: &HelmholtzConfig<T>, field: &Field<'_, T>) -> Result<ErrorReport<T>> {
    let rules = Rules::new(cfg.quadrature_exactness)?;
    let mut l2 = T::zero();
    let mut grad = T::zero();
    for k in 0..mesh.num_elements() {
        for (x, w) in rules.element_points(mesh, k) {
            let (v, g) = field(k, x);
            l2 += v.norm_sqr() * w;
            grad += (g[0].norm_sqr() + g[1].norm_sqr()) * w;
        }
    }
    let h = mesh.h();
    let half = cast::<T>(0.5);
    let (mut jump, mut boundary, mut average) = (T::zero(), T::zero(), T::zero());
    for (f, face) in mesh.faces().iter().enumerate() {
        for (x, w) in rules.face_points(mesh, f) {
            let (vp, gp) = field(face.plus, x);
            match face.minus {
                None => boundary += cfg.k * vp.norm_sqr() * w,
                Some(m) => {
                    let (vm, gm) = field(m, x);
                    jump += (vp - vm).norm_sqr() * w / face.length;
                    let avg = [(gp[0] + gm[0]) * half, (gp[1] + gm[1]) * half];
                    average += h * (avg[0].norm_sqr() + avg[1].norm_sqr()) * w;
                }
            }
        }
    }
    let dg_sq = grad + jump + boundary;
    let report = ErrorReport {
        l2: l2.sqrt(),
        dg: dg_sq.sqrt(),
        energy: (dg_sq + average).sqrt(),
        volume_gradient_sq: grad,
        interior_jump_sq: jump,
        boundary_sq: boundary,
        face_average_sq: average,
    };
    if !(report.energy.is_finite() && report.l2.is_finite()) {
        return Err(Error::NonFinite("error norms"));
    }
    Ok(report)
}

/// Norms of `u - u_h` with the exact solution evaluated at the quadrature
/// nodes.
pub fn compute_error_norms<T: Real>(
    mesh: &TriMesh<T>,
    uh: &PiecewisePolynomial<T, Complex<T>>,
    sol: &ManufacturedSolution<T>,
    cfg: &HelmholtzConfig<T>,
) -> Result<ErrorReport<T>> {
    if uh.num_elements() != mesh.num_elements() {
        return Err(Error::DimensionMismatch { expected: mesh.num_elements(), found: uh.num_elements() });
    }
    norms_of(mesh, cfg, &|k, x| {
        let (v, g) = uh.eval_with_grad(k, x);
        let gu = sol.grad(x);
        (sol.u(x) - v, [gu[0] - g[0], gu[1] - g[1]])
    })
}

/// Norms of a broken polynomial.
pub fn discrete_norms<T: Real>(
    mesh: &TriMesh<T>,
    v: &PiecewisePolynomial<T, Complex<T>>,
    cfg: &HelmholtzConfig<T>,
) -> Result<ErrorReport<T>> {
    if v.num_elements() != mesh.num_elements() {
        return Err(Error::DimensionMismatch { expected: mesh.num_elements(), found: v.num_elements() });
    }
    norms_of(mesh, cfg, &|k, x| v.eval_with_grad(k, x))
}

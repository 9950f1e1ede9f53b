//! Scaled monomial bases and Gauss-type quadrature on triangles and segments.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::{cast, from_usize, Point, Real};

/// Highest quadrature exactness the rule generators accept.
pub const MAX_QUADRATURE_EXACTNESS: usize = 40;

/// Dimension of the bivariate polynomials of total degree at most `m`.
pub const fn dim_pm(m: usize) -> usize {
    (m + 1) * (m + 2) / 2
}

/// Degree, centre and length scale of a local monomial basis
/// `((x - c) / L)^alpha`, `|alpha| <= m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolySpec<T> {
    pub degree: usize,
    pub center: Point<T>,
    pub scale: T,
}

impl<T: Real> PolySpec<T> {
    pub fn new(degree: usize, center: Point<T>, scale: T) -> Self {
        assert!(scale > T::zero(), "monomial scaling length must be positive");
        PolySpec { degree, center, scale }
    }

    pub fn dim(&self) -> usize {
        dim_pm(self.degree)
    }

    /// Exponents in graded lexicographic order: `1, x, y, x^2, xy, y^2, ...`.
    pub fn exponents(&self) -> impl Iterator<Item = (usize, usize)> {
        let m = self.degree;
        (0..=m).flat_map(|d| (0..=d).map(move |q| (d - q, q)))
    }

    /// Evaluates all basis functions at `x` into `values`.
    pub fn eval_into(&self, x: Point<T>, values: &mut [T]) {
        let (px, py) = self.powers(x);
        for (slot, (a, b)) in values.iter_mut().zip(self.exponents()) {
            *slot = px[a] * py[b];
        }
    }

    /// Evaluates values and gradients at `x`.
    pub fn eval_with_grad_into(&self, x: Point<T>, values: &mut [T], grads: &mut [Point<T>]) {
        let (px, py) = self.powers(x);
        let inv = T::one() / self.scale;
        for ((v, g), (a, b)) in values.iter_mut().zip(grads.iter_mut()).zip(self.exponents()) {
            *v = px[a] * py[b];
            let dx = if a == 0 { T::zero() } else { from_usize::<T>(a) * px[a - 1] * py[b] * inv };
            let dy = if b == 0 { T::zero() } else { from_usize::<T>(b) * px[a] * py[b - 1] * inv };
            *g = [dx, dy];
        }
    }

    fn powers(&self, x: Point<T>) -> (Vec<T>, Vec<T>) {
        let xi = (x[0] - self.center[0]) / self.scale;
        let eta = (x[1] - self.center[1]) / self.scale;
        let mut px = vec![T::one(); self.degree + 1];
        let mut py = vec![T::one(); self.degree + 1];
        for i in 1..=self.degree {
            px[i] = px[i - 1] * xi;
            py[i] = py[i - 1] * eta;
        }
        (px, py)
    }

    /// Sums `coefficients[i] * phi_i(x)`.
    pub fn eval_poly<S>(&self, coefficients: &[S], x: Point<T>) -> S
    where
        S: Copy + std::ops::Add<Output = S> + std::ops::Mul<T, Output = S> + num_traits::Zero,
    {
        let mut vals = vec![T::zero(); self.dim()];
        self.eval_into(x, &mut vals);
        coefficients.iter().zip(&vals).fold(S::zero(), |acc, (&c, &v)| acc + c * v)
    }
}

/// Scalar type usable as polynomial coefficients over the real field `T`
/// (the real type itself or `Complex<T>`).
pub trait Coefficient<T>:
    Copy
    + Send
    + Sync
    + num_traits::Zero
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<T, Output = Self>
{
}

impl<T, S> Coefficient<T> for S where
    S: Copy
        + Send
        + Sync
        + num_traits::Zero
        + std::ops::Add<Output = S>
        + std::ops::Sub<Output = S>
        + std::ops::Mul<T, Output = S>
{
}

/// A broken polynomial: one local monomial expansion per element.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePolynomial<T, S> {
    specs: Vec<PolySpec<T>>,
    coefficients: Vec<Vec<S>>,
}

impl<T: Real, S: Coefficient<T>> PiecewisePolynomial<T, S> {
    pub fn new(specs: Vec<PolySpec<T>>, coefficients: Vec<Vec<S>>) -> Self {
        assert_eq!(specs.len(), coefficients.len());
        debug_assert!(specs.iter().zip(&coefficients).all(|(s, c)| s.dim() == c.len()));
        PiecewisePolynomial { specs, coefficients }
    }

    pub fn num_elements(&self) -> usize {
        self.specs.len()
    }

    pub fn spec(&self, k: usize) -> &PolySpec<T> {
        &self.specs[k]
    }

    pub fn coefficients(&self, k: usize) -> &[S] {
        &self.coefficients[k]
    }

    pub fn eval(&self, k: usize, x: Point<T>) -> S {
        self.specs[k].eval_poly(&self.coefficients[k], x)
    }

    /// Value and gradient on element `k`.
    pub fn eval_with_grad(&self, k: usize, x: Point<T>) -> (S, [S; 2]) {
        let (v, g) = eval_scaled_monomials(x, &self.specs[k]);
        let mut val = S::zero();
        let mut grad = [S::zero(), S::zero()];
        for ((&c, &vi), gi) in self.coefficients[k].iter().zip(&v).zip(&g) {
            val = val + c * vi;
            grad[0] = grad[0] + c * gi[0];
            grad[1] = grad[1] + c * gi[1];
        }
        (val, grad)
    }

    /// Pointwise difference with another expansion on the same elements.
    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.specs, other.specs);
        let coefficients = self
            .coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| x - y).collect())
            .collect();
        PiecewisePolynomial { specs: self.specs.clone(), coefficients }
    }
}

/// Values and gradients of all scaled monomials of `spec` at `x`.
pub fn eval_scaled_monomials<T: Real>(x: Point<T>, spec: &PolySpec<T>) -> (Vec<T>, Vec<Point<T>>) {
    let mut values = vec![T::zero(); spec.dim()];
    let mut grads = vec![[T::zero(); 2]; spec.dim()];
    spec.eval_with_grad_into(x, &mut values, &mut grads);
    (values, grads)
}

/// Reference-element quadrature: points, positive weights and the
/// polynomial degree integrated exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<P, T> {
    pub points: Vec<P>,
    pub weights: Vec<T>,
    pub exactness: usize,
}

/// Rule on the reference triangle `{x, y >= 0, x + y <= 1}` (area 1/2).
pub type TriangleRule<T> = QuadratureRule<Point<T>, T>;
/// Rule on the unit segment `[0, 1]`.
pub type SegmentRule<T> = QuadratureRule<T, T>;

impl<P, T: Real> QuadratureRule<P, T> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Gauss-Jacobi nodes and weights on `[-1, 1]` for the weight
/// `(1 - t)^alpha (1 + t)^beta` (Golub-Welsch).
fn gauss_jacobi(q: usize, alpha: f64, beta: f64) -> (Vec<f64>, Vec<f64>) {
    let ab = alpha + beta;
    let mut jacobi = DMatrix::<f64>::zeros(q, q);
    for n in 0..q {
        let nf = n as f64;
        jacobi[(n, n)] = if n == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * nf + ab) * (2.0 * nf + ab + 2.0))
        };
        if n + 1 < q {
            let k = nf + 1.0;
            let s = 2.0 * k + ab;
            let b2 = 4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0));
            jacobi[(n, n + 1)] = b2.sqrt();
            jacobi[(n + 1, n)] = b2.sqrt();
        }
    }
    // Total mass of the weight; only the cases used here are needed.
    let mu0 = match (alpha as i32, beta as i32) {
        (0, 0) => 2.0,
        (1, 0) => 2.0,
        _ => unreachable!("unsupported Jacobi weight"),
    };
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> =
        (0..q).map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

fn check_exactness(exactness: usize) -> Result<()> {
    if exactness > MAX_QUADRATURE_EXACTNESS {
        return Err(Error::Unsupported {
            what: "quadrature exactness",
            requested: exactness,
            supported: format!("0..={MAX_QUADRATURE_EXACTNESS}"),
        });
    }
    Ok(())
}

/// Gauss-Legendre rule on `[0, 1]` exact for polynomials of degree
/// `exactness`.
pub fn segment_quadrature<T: Real>(exactness: usize) -> Result<SegmentRule<T>> {
    check_exactness(exactness)?;
    let q = exactness / 2 + 1;
    let (nodes, weights) = gauss_jacobi(q, 0.0, 0.0);
    // Symmetrize node pairs so the rule is exactly symmetric about 1/2.
    let mut points = vec![0.0; q];
    let mut w = vec![0.0; q];
    for i in 0..q {
        let j = q - 1 - i;
        let t = 0.5 * (nodes[i] - nodes[j]);
        points[i] = 0.5 * (1.0 + t);
        w[i] = 0.25 * (weights[i] + weights[j]);
    }
    Ok(QuadratureRule {
        points: points.into_iter().map(cast).collect(),
        weights: w.into_iter().map(cast).collect(),
        exactness,
    })
}

/// Fully symmetric rule on the reference triangle exact for total degree
/// `exactness`: a collapsed Gauss-Legendre x Gauss-Jacobi(1,0) product
/// rule averaged over the six affine symmetries of the triangle.
pub fn triangle_quadrature<T: Real>(exactness: usize) -> Result<TriangleRule<T>> {
    check_exactness(exactness)?;
    let q = exactness / 2 + 1;
    let (un, uw) = gauss_jacobi(q, 0.0, 0.0);
    let (vn, vw) = gauss_jacobi(q, 1.0, 0.0);
    let mut raw: Vec<([f64; 2], f64)> = Vec::with_capacity(6 * q * q);
    for (&tu, &wu) in un.iter().zip(&uw) {
        for (&tv, &wv) in vn.iter().zip(&vw) {
            let u = 0.5 * (1.0 + tu);
            let v = 0.5 * (1.0 + tv);
            let w = 0.5 * wu * 0.25 * wv;
            let x = u * (1.0 - v);
            let bary = [1.0 - x - v, x, v];
            for perm in [[0, 1, 2], [1, 2, 0], [2, 0, 1], [0, 2, 1], [2, 1, 0], [1, 0, 2]] {
                raw.push(([bary[perm[1]], bary[perm[2]]], w / 6.0));
            }
        }
    }
    // Orbits of points on symmetry lines contain repeated points.
    let mut merged: Vec<([f64; 2], f64)> = Vec::with_capacity(raw.len());
    for (p, w) in raw {
        match merged.iter_mut().find(|(lp, _)| (lp[0] - p[0]).abs() < 1e-13 && (lp[1] - p[1]).abs() < 1e-13) {
            Some((_, lw)) => *lw += w,
            None => merged.push((p, w)),
        }
    }
    merged.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]).then(a.0[1].total_cmp(&b.0[1])));
    Ok(QuadratureRule {
        points: merged.iter().map(|(p, _)| [cast(p[0]), cast(p[1])]).collect(),
        weights: merged.iter().map(|&(_, w)| cast(w)).collect(),
        exactness,
    })
}

/// Maps a reference-triangle point onto the triangle `tri`.
#[inline]
pub fn map_to_triangle<T: Real>(tri: &[Point<T>; 3], r: Point<T>) -> Point<T> {
    let [a, b, c] = *tri;
    [a[0] + (b[0] - a[0]) * r[0] + (c[0] - a[0]) * r[1], a[1] + (b[1] - a[1]) * r[0] + (c[1] - a[1]) * r[1]]
}

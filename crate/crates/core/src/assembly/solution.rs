//! Exact solutions with their derived source and boundary data.

use std::f64::consts::PI;

use num_complex::Complex;

use crate::scalar::{cast, to_f64, Point, Real};

type ScalarField<T> = Box<dyn Fn(Point<T>) -> Complex<T> + Send + Sync>;
type VectorField<T> = Box<dyn Fn(Point<T>) -> [Complex<T>; 2] + Send + Sync>;

/// An exact solution `u` of `-Δu - (k² - iε)u = f` with Robin data
/// `g = ∂u/∂n + iku`.
pub struct ManufacturedSolution<T> {
    name: String,
    k: T,
    eps: T,
    u: ScalarField<T>,
    grad: VectorField<T>,
    laplacian: ScalarField<T>,
}

impl<T: Real> std::fmt::Debug for ManufacturedSolution<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManufacturedSolution")
            .field("name", &self.name)
            .field("k", &self.k)
            .field("eps", &self.eps)
            .finish()
    }
}

impl<T: Real> ManufacturedSolution<T> {
    pub fn from_closures(
        name: impl Into<String>,
        k: T,
        eps: T,
        u: impl Fn(Point<T>) -> Complex<T> + Send + Sync + 'static,
        grad: impl Fn(Point<T>) -> [Complex<T>; 2] + Send + Sync + 'static,
        laplacian: impl Fn(Point<T>) -> Complex<T> + Send + Sync + 'static,
    ) -> Self {
        ManufacturedSolution {
            name: name.into(),
            k,
            eps,
            u: Box::new(u),
            grad: Box::new(grad),
            laplacian: Box::new(laplacian),
        }
    }

    /// `u = exp(ik(x cos θ + y sin θ))` with `θ = π/5`.
    pub fn plane_wave(k: T, eps: T) -> Self {
        let theta = T::PI() / cast(5.0);
        let d = [theta.cos(), theta.sin()];
        let i = Complex::new(T::zero(), T::one());
        let u = move |x: Point<T>| (i * k * (x[0] * d[0] + x[1] * d[1])).exp();
        Self::from_closures(
            "plane_wave",
            k,
            eps,
            u,
            move |x| {
                let v = u(x) * i * k;
                [v * d[0], v * d[1]]
            },
            move |x| u(x) * (-k * k),
        )
    }

    /// The zero solution (homogeneous data).
    pub fn zero(k: T, eps: T) -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Self::from_closures("zero", k, eps, move |_| z, move |_| [z, z], move |_| z)
    }

    /// A global polynomial `Σ c_ab x^a y^b`.
    pub fn polynomial(k: T, eps: T, terms: Vec<((u32, u32), Complex<T>)>) -> Self {
        let mono = |x: Point<T>, a: u32, b: u32| -> T { x[0].powi(a as i32) * x[1].powi(b as i32) };
        let t1 = terms.clone();
        let t2 = terms.clone();
        let t3 = terms;
        let c = |n: u32| -> T { cast(n as f64) };
        Self::from_closures(
            "polynomial",
            k,
            eps,
            move |x| t1.iter().fold(Complex::new(T::zero(), T::zero()), |acc, &((a, b), cf)| acc + cf * mono(x, a, b)),
            move |x| {
                let z = Complex::new(T::zero(), T::zero());
                t2.iter().fold([z, z], |acc, &((a, b), cf)| {
                    let dx = if a == 0 { T::zero() } else { c(a) * mono(x, a - 1, b) };
                    let dy = if b == 0 { T::zero() } else { c(b) * mono(x, a, b - 1) };
                    [acc[0] + cf * dx, acc[1] + cf * dy]
                })
            },
            move |x| {
                t3.iter().fold(Complex::new(T::zero(), T::zero()), |acc, &((a, b), cf)| {
                    let dxx = if a < 2 { T::zero() } else { c(a) * c(a - 1) * mono(x, a - 2, b) };
                    let dyy = if b < 2 { T::zero() } else { c(b) * c(b - 1) * mono(x, a, b - 2) };
                    acc + cf * (dxx + dyy)
                })
            },
        )
    }

    /// Radial solution centred at `(1/2, 1/2)`:
    /// `u = cos(kr)/k - e^{ik} / (k (J0(k) + i J1(k))) J0(kr)`.
    pub fn radial_bessel(k: T, eps: T) -> Self {
        let kf = to_f64(k);
        let denom = Complex::new(bessel_j(0, kf), bessel_j(1, kf)) * kf;
        let coef64 = Complex::new(kf.cos(), kf.sin()) / denom;
        let coef = Complex::new(cast::<T>(coef64.re), cast::<T>(coef64.im));
        let half = cast::<T>(0.5);
        let radius = move |x: Point<T>| (x[0] - half).hypot(x[1] - half);
        let j = move |n: u32, r: T| cast::<T>(bessel_j(n, to_f64(k * r)));
        Self::from_closures(
            "radial_bessel",
            k,
            eps,
            move |x| {
                let r = radius(x);
                Complex::new((k * r).cos() / k, T::zero()) - coef * j(0, r)
            },
            move |x| {
                let r = radius(x);
                if r == T::zero() {
                    let z = Complex::new(T::zero(), T::zero());
                    return [z, z];
                }
                let dr = Complex::new(-(k * r).sin(), T::zero()) + coef * k * j(1, r);
                [dr * ((x[0] - half) / r), dr * ((x[1] - half) / r)]
            },
            move |x| {
                let r = radius(x);
                // sin(kr)/r -> k as r -> 0
                let sinc = if r == T::zero() { k } else { (k * r).sin() / r };
                Complex::new(-k * (k * r).cos() - sinc, T::zero()) + coef * (k * k) * j(0, r)
            },
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn wavenumber(&self) -> T {
        self.k
    }

    pub fn absorption(&self) -> T {
        self.eps
    }

    pub fn u(&self, x: Point<T>) -> Complex<T> {
        (self.u)(x)
    }

    pub fn grad(&self, x: Point<T>) -> [Complex<T>; 2] {
        (self.grad)(x)
    }

    pub fn laplacian(&self, x: Point<T>) -> Complex<T> {
        (self.laplacian)(x)
    }

    /// Source term `-Δu - (k² - iε)u`.
    pub fn f(&self, x: Point<T>) -> Complex<T> {
        -self.laplacian(x) - self.u(x) * Complex::new(self.k * self.k, -self.eps)
    }

    /// Robin data `∂u/∂n + iku` for outward normal `normal`.
    pub fn g(&self, x: Point<T>, normal: Point<T>) -> Complex<T> {
        let gu = self.grad(x);
        gu[0] * normal[0] + gu[1] * normal[1] + self.u(x) * Complex::new(T::zero(), self.k)
    }
}

/// Bessel function of the first kind `J_n(x)` from its integral
/// representation `(1/2π) ∫_{-π}^{π} cos(nτ - x sin τ) dτ`; the trapezoid
/// rule is spectrally accurate for this periodic integrand.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    let points = 2 * (x.abs().ceil() as usize + 40);
    let h = 2.0 * PI / points as f64;
    (0..points)
        .map(|j| {
            let tau = -PI + j as f64 * h;
            (n as f64 * tau - x * tau.sin()).cos()
        })
        .sum::<f64>()
        / points as f64
}

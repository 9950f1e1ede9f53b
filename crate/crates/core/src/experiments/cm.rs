//! One-dimensional efficiency constants of the reconstruction versus
//! standard interpolation with equal numbers of unknowns.

use crate::error::{Error, Result};
use crate::polybasis::segment_quadrature;

fn node_polynomial(m: usize, x: f64) -> f64 {
    (0..=m).map(|i| x - (i as f64 + 0.5)).product()
}

/// `∫_a^b ω(x)² dx` for `ω(x) = Π_{i=0}^{m} (x - (i + 1/2))`, exact by
/// Gauss-Legendre quadrature of degree `2(m + 1)`.
fn node_polynomial_sq_integral(m: usize, a: f64, b: f64) -> Result<f64> {
    let rule = segment_quadrature::<f64>(2 * (m + 1))?;
    Ok(rule
        .points
        .iter()
        .zip(&rule.weights)
        .map(|(&t, &w)| {
            let x = a + (b - a) * t;
            w * (b - a) * node_polynomial(m, x).powi(2)
        })
        .sum())
}

/// Ratio of the reconstruction error bound to the interpolation error bound
/// with equal unknown counts:
/// `C_m = ((m + 1) ∫_c^{c+1} ω² / ∫_0^{m+1} ω²)^{1/2}` with `c = ⌊m/2⌋`.
pub fn cm_theoretical(m: usize) -> Result<f64> {
    if !(2..=6).contains(&m) {
        return Err(Error::Unsupported { what: "degree for C_m", requested: m, supported: "2..=6".into() });
    }
    let centre = (m / 2) as f64;
    let local = node_polynomial_sq_integral(m, centre, centre + 1.0)?;
    let full = node_polynomial_sq_integral(m, 0.0, (m + 1) as f64)?;
    Ok(((m + 1) as f64 * local / full).sqrt())
}

/// Outcome of the 1D interpolation comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmEmpirical {
    pub reconstruction_error: f64,
    pub interpolation_error: f64,
    /// `None` when both errors vanish (the function is reproduced exactly).
    pub ratio: Option<f64>,
}

impl CmEmpirical {
    pub fn exact_reproduction(&self) -> bool {
        self.ratio.is_none()
    }
}

fn lagrange(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    nodes
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            let basis: f64 =
                nodes.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &xj)| (x - xj) / (xi - xj)).product();
            values[i] * basis
        })
        .sum()
}

/// `‖g − Rg‖ / ‖g − Ig‖` on `[0, 1]` with `n_cells` interpolation cells of
/// width `h` and `n_cells (m + 1)` reconstruction cells of width
/// `h / (m + 1)`. The reconstruction on a cell interpolates the midpoints
/// of `m + 1` consecutive cells with the cell at offset `⌊m/2⌋`; patches
/// near the ends reach past `[0, 1]` and sample `g` there, so every cell
/// sees the same centred stencil. The interpolant on a wide cell uses the
/// midpoints of its `m + 1` subcells as nodes.
pub fn cm_empirical_1d_with(m: usize, n_cells: usize, g: impl Fn(f64) -> f64) -> Result<CmEmpirical> {
    if m == 0 || n_cells == 0 {
        return Err(Error::InvalidConfig("degree and cell count must be positive".into()));
    }
    let rule = segment_quadrature::<f64>(30)?;
    let fine = n_cells * (m + 1);
    let hr = 1.0 / fine as f64;
    let mid = |j: i64| (j as f64 + 0.5) * hr;
    let cell_error = |a: f64, b: f64, p: &dyn Fn(f64) -> f64| -> f64 {
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(&t, &w)| {
                let x = a + (b - a) * t;
                w * (b - a) * (g(x) - p(x)).powi(2)
            })
            .sum()
    };
    let mut rda = 0.0;
    let (m_i, fine_i) = (m as i64, fine as i64);
    for j in 0..fine_i {
        let start = j - m_i / 2;
        let nodes: Vec<f64> = (start..=start + m_i).map(mid).collect();
        let values: Vec<f64> = nodes.iter().map(|&x| g(x)).collect();
        rda += cell_error(j as f64 * hr, (j + 1) as f64 * hr, &|x| lagrange(&nodes, &values, x));
    }
    let mut interp = 0.0;
    for c in 0..n_cells as i64 {
        let nodes: Vec<f64> = (c * (m_i + 1)..(c + 1) * (m_i + 1)).map(mid).collect();
        let values: Vec<f64> = nodes.iter().map(|&x| g(x)).collect();
        let h = 1.0 / n_cells as f64;
        interp += cell_error(c as f64 * h, (c + 1) as f64 * h, &|x| lagrange(&nodes, &values, x));
    }
    let (rda, interp) = (rda.sqrt(), interp.sqrt());
    let ratio = if rda <= 1e-12 && interp <= 1e-12 { None } else { Some(rda / interp) };
    Ok(CmEmpirical { reconstruction_error: rda, interpolation_error: interp, ratio })
}

/// Wavenumber of the reference test function `sin(20πx)`.
pub const CM_TEST_FREQUENCY: f64 = 20.0 * std::f64::consts::PI;

/// [`cm_empirical_1d_with`] for `g(x) = sin(20πx)`; requires at least ten
/// reconstruction cells per wavelength.
pub fn cm_empirical_1d(m: usize, n_cells: usize) -> Result<CmEmpirical> {
    let per_wavelength = n_cells as f64 * (m + 1) as f64 * (2.0 * std::f64::consts::PI / CM_TEST_FREQUENCY);
    if per_wavelength < 10.0 {
        return Err(Error::InsufficientResolution(format!(
            "{per_wavelength:.1} reconstruction cells per wavelength, need at least 10"
        )));
    }
    cm_empirical_1d_with(m, n_cells, |x| (CM_TEST_FREQUENCY * x).sin())
}

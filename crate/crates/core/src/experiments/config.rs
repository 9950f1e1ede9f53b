use std::fmt;
use std::str::FromStr;

use num_complex::Complex;

use crate::assembly::{default_eta, HelmholtzConfig, ManufacturedSolution};
use crate::error::{Error, Result};
use crate::linsolve::{GmresOptions, MultigridOptions};

/// Absorption used in `k² - iε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsMode {
    Zero,
    KSquared,
}

impl EpsMode {
    pub fn absorption(self, k: f64) -> f64 {
        match self {
            EpsMode::Zero => 0.0,
            EpsMode::KSquared => k * k,
        }
    }
}

impl fmt::Display for EpsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EpsMode::Zero => "zero",
            EpsMode::KSquared => "ksq",
        })
    }
}

impl FromStr for EpsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" | "0" => Ok(EpsMode::Zero),
            "ksq" | "k2" => Ok(EpsMode::KSquared),
            other => Err(Error::InvalidConfig(format!("unknown absorption mode '{other}' (expected zero or ksq)"))),
        }
    }
}

/// Exact solution used by error studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionKind {
    /// `exp(ik(x cos θ + y sin θ))`, `θ = π/5`.
    PlaneWave,
    /// A global polynomial of the reconstruction degree.
    Polynomial,
}

impl SolutionKind {
    pub fn build(self, k: f64, eps: f64, degree: usize) -> ManufacturedSolution<f64> {
        match self {
            SolutionKind::PlaneWave => ManufacturedSolution::plane_wave(k, eps),
            SolutionKind::Polynomial => {
                let mut terms = Vec::new();
                for total in 0..=degree as u32 {
                    for a in 0..=total {
                        let c = Complex::new(1.0 / (1.0 + total as f64 + a as f64), 0.25 * (a as f64 - 1.0));
                        terms.push(((a, total - a), c));
                    }
                }
                ManufacturedSolution::polynomial(k, eps, terms)
            }
        }
    }
}

impl fmt::Display for SolutionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolutionKind::PlaneWave => "plane-wave",
            SolutionKind::Polynomial => "polynomial",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Banded LU up to `direct_max_dofs` unknowns, preconditioned GMRES beyond.
    Auto,
    Direct,
    Iterative,
}

impl fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveMethod::Auto => "auto",
            SolveMethod::Direct => "direct",
            SolveMethod::Iterative => "pgmres",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub method: SolveMethod,
    pub tol: f64,
    pub max_iter: usize,
    pub restart: Option<usize>,
    pub direct_max_dofs: usize,
    pub multigrid: MultigridOptions,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            method: SolveMethod::Auto,
            tol: 1e-8,
            max_iter: 2000,
            restart: None,
            direct_max_dofs: 5000,
            multigrid: MultigridOptions::default(),
        }
    }
}

impl SolverSettings {
    pub fn gmres_options(&self) -> GmresOptions<f64> {
        GmresOptions { tol: self.tol, max_iter: self.max_iter, restart: self.restart }
    }
}

/// Parameters shared by all studies.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub k: f64,
    pub eps: EpsMode,
    pub degrees: Vec<usize>,
    /// Mesh resolutions: `n x n` squares, each split into two triangles.
    pub resolutions: Vec<usize>,
    /// Penalty override; `None` uses the library default.
    pub eta: Option<f64>,
    pub penalty_imag: bool,
    pub solution: SolutionKind,
    pub solver: SolverSettings,
}

impl ExperimentConfig {
    pub fn new(name: &str, k: f64, degrees: Vec<usize>, resolutions: Vec<usize>) -> Self {
        ExperimentConfig {
            name: name.to_string(),
            k,
            eps: EpsMode::Zero,
            degrees,
            resolutions,
            eta: None,
            penalty_imag: true,
            solution: SolutionKind::PlaneWave,
            solver: SolverSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidConfig(format!("wavenumber must be positive, got {}", self.k)));
        }
        if self.degrees.is_empty() || self.resolutions.is_empty() {
            return Err(Error::InvalidConfig("degree and resolution lists must be non-empty".into()));
        }
        if let Some(&m) = self.degrees.iter().find(|m| !(2..=6).contains(*m)) {
            return Err(Error::Unsupported { what: "degree", requested: m, supported: "2..=6".into() });
        }
        if self.resolutions[0] == 0 || self.resolutions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("resolutions must be positive and strictly increasing".into()));
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::InvalidConfig(format!("penalty scale must be positive, got {eta}")));
            }
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return Err(Error::InvalidConfig("solver tolerance and iteration cap must be positive".into()));
        }
        Ok(())
    }

    pub fn absorption(&self) -> f64 {
        self.eps.absorption(self.k)
    }

    pub fn helmholtz(&self, degree: usize, eps: f64) -> HelmholtzConfig<f64> {
        HelmholtzConfig {
            eta: self.eta.unwrap_or_else(default_eta),
            penalty_imag: self.penalty_imag,
            ..HelmholtzConfig::new(self.k, eps, degree)
        }
    }

    /// Key/value echo of the configuration for table metadata.
    pub fn echo(&self) -> Vec<(String, String)> {
        let list = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        let mg = &self.solver.multigrid;
        vec![
            ("experiment".into(), self.name.clone()),
            ("k".into(), format!("{}", self.k)),
            ("eps".into(), self.eps.to_string()),
            ("degrees".into(), list(&self.degrees)),
            ("resolutions".into(), list(&self.resolutions)),
            ("eta".into(), format!("{}", self.eta.unwrap_or_else(default_eta))),
            ("penalty".into(), if self.penalty_imag { "imaginary" } else { "real" }.into()),
            ("solution".into(), self.solution.to_string()),
            ("solver".into(), self.solver.method.to_string()),
            ("tol".into(), format!("{:e}", self.solver.tol)),
            ("max_iter".into(), self.solver.max_iter.to_string()),
            ("restart".into(), self.solver.restart.map_or("none".into(), |r| r.to_string())),
            ("direct_max_dofs".into(), self.solver.direct_max_dofs.to_string()),
            (
                "multigrid".into(),
                format!(
                    "V({},{}) {:?} damping {} {:?} coarse operators, injection transfer",
                    mg.pre_smooth, mg.post_smooth, mg.smoother, mg.damping, mg.coarse_operator
                ),
            ),
            ("version".into(), env!("CARGO_PKG_VERSION").into()),
        ]
    }
}

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use num_complex::Complex;

use super::cm::{cm_empirical_1d, cm_theoretical};
use super::config::{ExperimentConfig, SolveMethod, SolverSettings};
use super::table::{Cell, ResultTable};
use crate::assembly::{
    assemble_dg_system, assemble_p0_preconditioner, assemble_rda_system, compute_error_norms, count_nnz, DiscreteSpace,
    ErrorReport, GlobalSystem, HelmholtzConfig,
};
use crate::error::{Error, Result};
use crate::linsolve::{
    dense_spectrum, gmres, BandedLu, DenseLu, Identity, LinearOperator, MultigridHierarchy, SolverReport,
    SPECTRUM_SIZE_CAP,
};
use crate::mesh::{nested_square_hierarchy, TriMesh};
use crate::reconstruction::{ReconstructionOperator, ReconstructionOptions};

/// Optional side outputs, written for the last case a study processes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub dump_matrix: Option<PathBuf>,
    pub trace_residual: Option<PathBuf>,
    pub dump_mesh: Option<PathBuf>,
}

impl Artifacts {
    fn write_system(&self, mesh: &TriMesh<f64>, system: &GlobalSystem<f64>) -> Result<()> {
        if let Some(path) = &self.dump_matrix {
            system.matrix.write_matrix_market(BufWriter::new(File::create(path)?))?;
        }
        if let Some(path) = &self.dump_mesh {
            mesh.write_dump(BufWriter::new(File::create(path)?))?;
        }
        Ok(())
    }

    fn write_trace(&self, report: Option<&SolverReport>) -> Result<()> {
        if let (Some(path), Some(report)) = (&self.trace_residual, report) {
            report.write_residual_csv(BufWriter::new(File::create(path)?))?;
        }
        Ok(())
    }
}

/// Solution of one linear system with the method that produced it.
#[derive(Debug, Clone)]
pub struct Solved {
    pub x: Vec<Complex<f64>>,
    pub method: SolveMethod,
    /// Present for iterative solves.
    pub report: Option<SolverReport>,
}

impl Solved {
    pub fn converged(&self) -> bool {
        self.report.as_ref().is_none_or(|r| r.converged)
    }
}

/// Largest coarsest level factorized densely inside the multigrid cycle.
const MAX_DENSE_COARSE: usize = 2048;

/// Preconditioner `P⁻¹` for the RDA system on the finest of `meshes`:
/// a multigrid V-cycle, or an exact banded solve when no hierarchy exists.
pub fn rda_preconditioner(
    meshes: &[TriMesh<f64>],
    cfg: &HelmholtzConfig<f64>,
    settings: &SolverSettings,
) -> Result<Box<dyn LinearOperator<f64>>> {
    if meshes.len() > 1 && meshes[0].num_elements() <= MAX_DENSE_COARSE {
        Ok(Box::new(MultigridHierarchy::build(meshes, cfg, settings.multigrid)?))
    } else {
        let finest = meshes.last().ok_or_else(|| Error::InvalidConfig("empty mesh hierarchy".into()))?;
        Ok(Box::new(BandedLu::new(&assemble_p0_preconditioner(finest, cfg)?.to_complex())?))
    }
}

/// Solves an RDA system: banded LU or GMRES preconditioned by the
/// lowest-order operator, per `method` (`Auto` decides by size).
pub fn solve_rda(
    meshes: &[TriMesh<f64>],
    cfg: &HelmholtzConfig<f64>,
    system: &GlobalSystem<f64>,
    settings: &SolverSettings,
    method: SolveMethod,
) -> Result<Solved> {
    let method = match method {
        SolveMethod::Auto if system.num_dofs() <= settings.direct_max_dofs => SolveMethod::Direct,
        SolveMethod::Auto => SolveMethod::Iterative,
        other => other,
    };
    match method {
        SolveMethod::Direct => {
            let x = BandedLu::new(&system.matrix)?.solve(&system.rhs)?;
            Ok(Solved { x, method, report: None })
        }
        _ => {
            let precond = rda_preconditioner(meshes, cfg, settings)?;
            let (x, report) = gmres(&system.matrix, &system.rhs, precond.as_ref(), &settings.gmres_options())?;
            Ok(Solved { x, method, report: Some(report) })
        }
    }
}

/// RDA discretization of one `(m, n)` case on the nested hierarchy whose
/// finest level is `n x n`.
pub struct RdaCase {
    pub meshes: Vec<TriMesh<f64>>,
    pub recon: ReconstructionOperator<f64>,
    pub cfg: HelmholtzConfig<f64>,
    pub system: GlobalSystem<f64>,
}

impl RdaCase {
    pub fn build(exp: &ExperimentConfig, m: usize, n: usize, eps: f64) -> Result<Self> {
        let meshes = nested_square_hierarchy::<f64>(n);
        let mesh = meshes.last().expect("nonempty hierarchy");
        let recon =
            ReconstructionOperator::build(mesh, m, ReconstructionOptions { patch_size: None, lambda_samples: 0 })?;
        let cfg = exp.helmholtz(m, eps);
        let sol = exp.solution.build(exp.k, eps, m);
        let system = assemble_rda_system(mesh, &recon, &cfg, &sol)?;
        Ok(RdaCase { meshes, recon, cfg, system })
    }

    pub fn mesh(&self) -> &TriMesh<f64> {
        self.meshes.last().expect("nonempty hierarchy")
    }

    pub fn solve(&self, settings: &SolverSettings, method: SolveMethod) -> Result<Solved> {
        solve_rda(&self.meshes, &self.cfg, &self.system, settings, method)
    }

    pub fn errors(&self, exp: &ExperimentConfig, x: &[Complex<f64>]) -> Result<ErrorReport<f64>> {
        let sol = exp.solution.build(exp.k, self.cfg.eps, self.cfg.degree);
        compute_error_norms(self.mesh(), &self.recon.expand(x)?, &sol, &self.cfg)
    }
}

/// `log(e_coarse / e_fine) / log(n_fine / n_coarse)`, or `None` when either
/// error is at round-off level.
pub fn observed_order(e_coarse: f64, e_fine: f64, n_coarse: usize, n_fine: usize) -> Option<f64> {
    let floor = 1e2 * f64::EPSILON;
    if e_coarse > floor && e_fine > floor && n_fine > n_coarse {
        Some((e_coarse / e_fine).ln() / (n_fine as f64 / n_coarse as f64).ln())
    } else {
        None
    }
}

fn status_text(solved: &Solved) -> String {
    match &solved.report {
        Some(r) if !r.converged => format!("not converged ({:?})", r.status),
        _ => "ok".into(),
    }
}

fn table_with_echo(title: &str, columns: &[&str], exp: &ExperimentConfig) -> ResultTable {
    let mut table = ResultTable::new(title, columns);
    for (k, v) in exp.echo() {
        table.set_metadata(&k, v);
    }
    table
}

fn empty_row(table: &ResultTable, lead: Vec<Cell>, status: String) -> Vec<Cell> {
    let mut row = lead;
    row.resize(table.columns().len() - 1, Cell::Empty);
    row.push(Cell::Text(status));
    row
}

/// Rows whose status column is not `ok`.
pub fn failed_rows(table: &ResultTable) -> Vec<usize> {
    match table.column_index("status") {
        Some(c) => (0..table.len()).filter(|&i| table.rows()[i][c].as_text() != Some("ok")).collect(),
        None => Vec::new(),
    }
}

pub const CONVERGENCE_COLUMNS: [&str; 13] = [
    "m",
    "n",
    "dofs",
    "nnz",
    "l2",
    "dg",
    "energy",
    "order_l2",
    "order_dg",
    "solver",
    "iterations",
    "final_residual",
    "status",
];

/// Error norms and observed orders of the RDA solution for every `(m, n)`.
pub fn run_convergence(exp: &ExperimentConfig, artifacts: &Artifacts) -> Result<ResultTable> {
    exp.validate()?;
    let mut table = table_with_echo("convergence", &CONVERGENCE_COLUMNS, exp);
    table.set_metadata("order_definition", "log(e_prev/e)/log(n/n_prev), omitted below 1e2*machine epsilon");
    let eps = exp.absorption();
    for &m in &exp.degrees {
        let mut prev: Option<(usize, f64, f64)> = None;
        for &n in &exp.resolutions {
            let outcome = RdaCase::build(exp, m, n, eps).and_then(|case| {
                let solved = case.solve(&exp.solver, exp.solver.method)?;
                let errors = case.errors(exp, &solved.x)?;
                artifacts.write_system(case.mesh(), &case.system)?;
                artifacts.write_trace(solved.report.as_ref())?;
                Ok((case, solved, errors))
            });
            let row = match outcome {
                Ok((case, solved, e)) => {
                    let orders =
                        prev.map(|(np, l2, dg)| (observed_order(l2, e.l2, np, n), observed_order(dg, e.dg, np, n)));
                    prev = Some((n, e.l2, e.dg));
                    vec![
                        m.into(),
                        n.into(),
                        case.system.num_dofs().into(),
                        count_nnz(&case.system.matrix).into(),
                        e.l2.into(),
                        e.dg.into(),
                        e.energy.into(),
                        orders.and_then(|o| o.0).into(),
                        orders.and_then(|o| o.1).into(),
                        solved.method.to_string().into(),
                        solved.report.as_ref().map_or(Cell::Empty, |r| r.iterations.into()),
                        solved.report.as_ref().map_or(Cell::Empty, |r| r.final_residual().into()),
                        status_text(&solved).into(),
                    ]
                }
                Err(err) => {
                    prev = None;
                    empty_row(&table, vec![m.into(), n.into()], err.to_string())
                }
            };
            table.push_row(row)?;
        }
    }
    Ok(table)
}

/// Piecewise-linear interpolation of `log y` against `log x` through the
/// sample points; `None` outside the sampled range.
pub fn loglog_interpolate(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> =
        xs.iter().zip(ys).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(&a, &b)| (a, b)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.is_empty() || x <= 0.0 {
        return None;
    }
    for w in pts.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x >= x0 && x <= x1 && x1 > x0 {
            let t = (x.ln() - x0.ln()) / (x1.ln() - x0.ln());
            return Some((y0.ln() + t * (y1.ln() - y0.ln())).exp());
        }
    }
    pts.iter().find(|p| p.0 == x).map(|p| p.1)
}

/// Error/cost curve of one method: `(dofs, nnz, l2)` per mesh.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CostCurve {
    pub dofs: Vec<f64>,
    pub nnz: Vec<f64>,
    pub l2: Vec<f64>,
}

/// Comparison of `candidate` against one reference point `(dofs, nnz, l2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedRatios {
    /// Candidate error at the reference DOF count over the reference error.
    pub error_ratio: Option<f64>,
    /// DOFs the candidate needs for the reference error, relative.
    pub dof_ratio: Option<f64>,
    pub nnz_ratio: Option<f64>,
}

pub fn match_against(candidate: &CostCurve, dofs: f64, nnz: f64, l2: f64) -> MatchedRatios {
    MatchedRatios {
        error_ratio: loglog_interpolate(&candidate.dofs, &candidate.l2, dofs).map(|e| e / l2),
        dof_ratio: loglog_interpolate(&candidate.l2, &candidate.dofs, l2).map(|d| d / dofs),
        nnz_ratio: loglog_interpolate(&candidate.l2, &candidate.nnz, l2).map(|z| z / nnz),
    }
}

pub const COMPARISON_COLUMNS: [&str; 11] =
    ["m", "method", "n", "dofs", "nnz", "l2", "error_ratio", "dof_ratio", "nnz_ratio", "solver", "status"];

/// DG resolutions used when none are given: a quarter of each RDA one.
pub fn default_dg_resolutions(resolutions: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = resolutions.iter().map(|&n| (n / 4).max(1)).collect();
    out.dedup();
    out
}

/// RDA versus conventional DG at equal numbers of unknowns. For each DG
/// mesh inside the RDA DOF range the table reports the RDA error at the
/// same DOF count over the DG error, and the DOF and nonzero ratios needed
/// by RDA to reach the DG error, all by log-log interpolation of the RDA
/// curve.
pub fn run_dg_comparison(
    exp: &ExperimentConfig,
    dg_resolutions: &[usize],
    artifacts: &Artifacts,
) -> Result<ResultTable> {
    exp.validate()?;
    if dg_resolutions.is_empty() || dg_resolutions.windows(2).any(|w| w[0] >= w[1]) || dg_resolutions[0] == 0 {
        return Err(Error::InvalidConfig("DG resolutions must be positive and strictly increasing".into()));
    }
    let mut table = table_with_echo("compare-dg", &COMPARISON_COLUMNS, exp);
    table.set_metadata("dg_resolutions", dg_resolutions.iter().map(usize::to_string).collect::<Vec<_>>().join(" "));
    table.set_metadata("matching", "log-log piecewise-linear interpolation of the RDA curve; no extrapolation");
    let eps = exp.absorption();
    for &m in &exp.degrees {
        let mut rda = CostCurve::default();
        for &n in &exp.resolutions {
            let outcome = RdaCase::build(exp, m, n, eps).and_then(|case| {
                let solved = case.solve(&exp.solver, exp.solver.method)?;
                let e = case.errors(exp, &solved.x)?;
                artifacts.write_trace(solved.report.as_ref())?;
                Ok((case, solved, e))
            });
            let row = match outcome {
                Ok((case, solved, e)) => {
                    let (dofs, nnz) = (case.system.num_dofs(), count_nnz(&case.system.matrix));
                    if solved.converged() {
                        rda.dofs.push(dofs as f64);
                        rda.nnz.push(nnz as f64);
                        rda.l2.push(e.l2);
                    }
                    vec![
                        m.into(),
                        "rda".into(),
                        n.into(),
                        dofs.into(),
                        nnz.into(),
                        e.l2.into(),
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Empty,
                        solved.method.to_string().into(),
                        status_text(&solved).into(),
                    ]
                }
                Err(err) => empty_row(&table, vec![m.into(), "rda".into(), n.into()], err.to_string()),
            };
            table.push_row(row)?;
        }
        for &n in dg_resolutions {
            let outcome = (|| {
                let mesh = nested_square_hierarchy::<f64>(n).pop().expect("nonempty hierarchy");
                let cfg = exp.helmholtz(m, eps);
                let sol = exp.solution.build(exp.k, eps, m);
                let (space, system) = assemble_dg_system(&mesh, &cfg, &sol)?;
                let x = BandedLu::new(&system.matrix)?.solve(&system.rhs)?;
                let e = compute_error_norms(&mesh, &space.expand(&x)?, &sol, &cfg)?;
                artifacts.write_system(&mesh, &system)?;
                Ok::<_, Error>((system.num_dofs(), count_nnz(&system.matrix), e.l2))
            })();
            let row = match outcome {
                Ok((dofs, nnz, l2)) => {
                    let r = match_against(&rda, dofs as f64, nnz as f64, l2);
                    vec![
                        m.into(),
                        "dg".into(),
                        n.into(),
                        dofs.into(),
                        nnz.into(),
                        l2.into(),
                        r.error_ratio.into(),
                        r.dof_ratio.into(),
                        r.nnz_ratio.into(),
                        SolveMethod::Direct.to_string().into(),
                        "ok".into(),
                    ]
                }
                Err(err) => empty_row(&table, vec![m.into(), "dg".into(), n.into()], err.to_string()),
            };
            table.push_row(row)?;
        }
    }
    Ok(table)
}

/// Headline error ratio per degree: the finest DG mesh with a matched ratio.
pub fn comparison_summary(table: &ResultTable) -> Vec<(usize, Option<f64>)> {
    let (Some(mc), Some(kind), Some(ratio)) =
        (table.column_index("m"), table.column_index("method"), table.column_index("error_ratio"))
    else {
        return Vec::new();
    };
    let mut out: Vec<(usize, Option<f64>)> = Vec::new();
    for row in table.rows() {
        let m = row[mc].as_int().unwrap_or_default() as usize;
        if out.last().is_none_or(|e| e.0 != m) {
            out.push((m, None));
        }
        if row[kind].as_text() == Some("dg") {
            if let Some(r) = row[ratio].as_real() {
                out.last_mut().expect("pushed").1 = Some(r);
            }
        }
    }
    out
}

pub const PRECOND_COLUMNS: [&str; 11] = [
    "m",
    "n",
    "dofs",
    "iters_eps0",
    "iters_ksq",
    "counts",
    "converged_eps0",
    "converged_ksq",
    "baseline_iters_ksq",
    "baseline_converged",
    "status",
];

/// PGMRES iteration counts with the multigrid preconditioner for `ε = 0`
/// and `ε = k²`, optionally against unpreconditioned GMRES for `ε = k²`.
pub fn run_precond_study(exp: &ExperimentConfig, baseline: bool, artifacts: &Artifacts) -> Result<ResultTable> {
    exp.validate()?;
    let mut table = table_with_echo("precond-study", &PRECOND_COLUMNS, exp);
    table.set_metadata("counts", "iterations eps=0 / eps=k^2");
    table.set_metadata("residual", "relative preconditioned residual");
    let ksq = exp.k * exp.k;
    for &m in &exp.degrees {
        for &n in &exp.resolutions {
            let outcome = (|| {
                let zero = RdaCase::build(exp, m, n, 0.0)?;
                let absorbing = RdaCase::build(exp, m, n, ksq)?;
                let r0 = zero.solve(&exp.solver, SolveMethod::Iterative)?.report.expect("iterative");
                let rk = absorbing.solve(&exp.solver, SolveMethod::Iterative)?.report.expect("iterative");
                let base = if baseline {
                    let id = Identity(absorbing.system.num_dofs());
                    Some(gmres(&absorbing.system.matrix, &absorbing.system.rhs, &id, &exp.solver.gmres_options())?.1)
                } else {
                    None
                };
                artifacts.write_system(absorbing.mesh(), &absorbing.system)?;
                artifacts.write_trace(Some(&rk))?;
                Ok::<_, Error>((absorbing.system.num_dofs(), r0, rk, base))
            })();
            let row = match outcome {
                Ok((dofs, r0, rk, base)) => {
                    let ok = r0.converged && rk.converged;
                    vec![
                        m.into(),
                        n.into(),
                        dofs.into(),
                        r0.iterations.into(),
                        rk.iterations.into(),
                        format!("{}/{}", r0.iterations, rk.iterations).into(),
                        r0.converged.into(),
                        rk.converged.into(),
                        base.as_ref().map_or(Cell::Empty, |b| b.iterations.into()),
                        base.as_ref().map_or(Cell::Empty, |b| b.converged.into()),
                        if ok { "ok".into() } else { "not converged".into() },
                    ]
                }
                Err(err) => empty_row(&table, vec![m.into(), n.into()], err.to_string()),
            };
            table.push_row(row)?;
        }
    }
    Ok(table)
}

/// Eigenvalues of the RDA matrix and of the preconditioned matrix, each
/// sorted by real then imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub n: usize,
    pub degree: usize,
    pub operator: Vec<Complex<f64>>,
    pub preconditioned: Vec<Complex<f64>>,
}

fn modulus_range(values: &[Complex<f64>]) -> (f64, f64) {
    values.iter().fold((f64::INFINITY, 0.0), |(lo, hi), z| (lo.min(z.norm()), hi.max(z.norm())))
}

impl SpectrumReport {
    /// `(min |λ|, max |λ|)` of the unpreconditioned matrix.
    pub fn operator_modulus(&self) -> (f64, f64) {
        modulus_range(&self.operator)
    }

    pub fn preconditioned_modulus(&self) -> (f64, f64) {
        modulus_range(&self.preconditioned)
    }

    pub fn table(&self, exp: &ExperimentConfig) -> Result<ResultTable> {
        let mut table = table_with_echo("spectrum", &["operator", "index", "re", "im"], exp);
        let (a_lo, a_hi) = self.operator_modulus();
        let (p_lo, p_hi) = self.preconditioned_modulus();
        for (key, v) in [("min_abs_a", a_lo), ("max_abs_a", a_hi), ("min_abs_pinv_a", p_lo), ("max_abs_pinv_a", p_hi)] {
            table.set_metadata(key, format!("{v:e}"));
        }
        for (name, values) in [("a", &self.operator), ("pinv_a", &self.preconditioned)] {
            for (i, z) in values.iter().enumerate() {
                table.push_row(vec![name.into(), i.into(), z.re.into(), z.im.into()])?;
            }
        }
        Ok(table)
    }
}

/// Dense `P⁻¹ A` (row-major) for a square `a` and an invertible `p`.
pub fn preconditioned_dense(p: &DenseLu<f64>, a: &[Complex<f64>], n: usize) -> Result<Vec<Complex<f64>>> {
    let mut out = vec![Complex::new(0.0, 0.0); n * n];
    for j in 0..n {
        let column: Vec<Complex<f64>> = (0..n).map(|i| a[i * n + j]).collect();
        for (i, v) in p.solve(&column)?.into_iter().enumerate() {
            out[i * n + j] = v;
        }
    }
    Ok(out)
}

/// Spectra of `A_ε` and `P⁻¹ A_ε` on the `n x n` mesh (dense path).
pub fn spectrum_report(exp: &ExperimentConfig, m: usize, n: usize, artifacts: &Artifacts) -> Result<SpectrumReport> {
    exp.validate()?;
    let size = 2 * n * n;
    if size > SPECTRUM_SIZE_CAP {
        return Err(Error::SizeCap { size, cap: SPECTRUM_SIZE_CAP });
    }
    let case = RdaCase::build(exp, m, n, exp.absorption())?;
    artifacts.write_system(case.mesh(), &case.system)?;
    let a = case.system.matrix.to_dense();
    let p = DenseLu::from_csr(&assemble_p0_preconditioner(case.mesh(), &case.cfg)?.to_complex())?;
    let pa = preconditioned_dense(&p, &a, size)?;
    Ok(SpectrumReport { n, degree: m, operator: dense_spectrum(&a, size)?, preconditioned: dense_spectrum(&pa, size)? })
}

pub const CM_COLUMNS: [&str; 7] =
    ["m", "cm_theory", "cm_empirical", "reconstruction_error", "interpolation_error", "n_cells", "status"];

/// Theoretical and empirical 1D efficiency constants.
pub fn cm_table(degrees: &[usize], n_cells: usize) -> Result<ResultTable> {
    let mut table = ResultTable::new("cm-table", &CM_COLUMNS);
    table.set_metadata("test_function", "sin(20 pi x) on [0,1]");
    table.set_metadata("version", env!("CARGO_PKG_VERSION"));
    for &m in degrees {
        let row = match cm_theoretical(m).and_then(|c| Ok((c, cm_empirical_1d(m, n_cells)?))) {
            Ok((c, e)) => vec![
                m.into(),
                c.into(),
                e.ratio.into(),
                e.reconstruction_error.into(),
                e.interpolation_error.into(),
                n_cells.into(),
                "ok".into(),
            ],
            Err(err) => empty_row(&table, vec![m.into()], err.to_string()),
        };
        table.push_row(row)?;
    }
    Ok(table)
}

//! Parameter studies: 1D efficiency constants, convergence, comparison
//! with conventional DG, preconditioner iteration counts and spectra.

mod cm;
mod config;
mod studies;
mod table;

pub use cm::{cm_empirical_1d, cm_empirical_1d_with, cm_theoretical, CmEmpirical, CM_TEST_FREQUENCY};
pub use config::{EpsMode, ExperimentConfig, SolutionKind, SolveMethod, SolverSettings};
pub use studies::{
    cm_table, comparison_summary, default_dg_resolutions, failed_rows, loglog_interpolate, match_against,
    observed_order, preconditioned_dense, rda_preconditioner, run_convergence, run_dg_comparison, run_precond_study,
    solve_rda, spectrum_report, Artifacts, CostCurve, MatchedRatios, RdaCase, Solved, SpectrumReport, CM_COLUMNS,
    COMPARISON_COLUMNS, CONVERGENCE_COLUMNS, PRECOND_COLUMNS,
};
pub use table::{format_complex, Cell, OutputFormat, ResultTable};

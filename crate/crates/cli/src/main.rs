use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rda::experiments::{
    cm_table, default_dg_resolutions, failed_rows, run_convergence, run_dg_comparison, run_precond_study,
    spectrum_report, Artifacts, EpsMode, ExperimentConfig, OutputFormat, ResultTable, SolutionKind, SolveMethod,
};

/// Exit status for invalid arguments or a study that could not run at all.
const EXIT_FATAL: u8 = 101;
/// Failed rows are reported as their count, capped here.
const MAX_ROW_EXIT: usize = 100;
/// Largest resolution accepted without `--expensive`.
const DESK_MAX_N: usize = 80;

#[derive(Parser, Debug)]
#[command(
    name = "rda",
    version,
    about = "Reconstructed discontinuous approximation studies for the 2D Helmholtz equation"
)]
struct Cli {
    #[command(flatten)]
    shared: Shared,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Shared {
    /// Output file (standard output when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// GMRES relative residual tolerance.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 2000)]
    max_iter: usize,
    /// Multiply the interior penalty by i (on) or keep it real (off).
    #[arg(long, global = true, value_enum, default_value_t = Switch::On)]
    penalty_imag: Switch,
    /// Matrix Market dump of the last assembled system.
    #[arg(long, global = true)]
    dump_matrix: Option<PathBuf>,
    /// Residual history (iter,relres) of the last iterative solve.
    #[arg(long, global = true)]
    trace_residual: Option<PathBuf>,
    /// Plain-text dump of the last mesh.
    #[arg(long, global = true)]
    dump_mesh: Option<PathBuf>,
    /// Allow large runs; switches the default case to k = 40, n = 160.
    #[arg(long, global = true)]
    expensive: bool,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Eps {
    Zero,
    Ksq,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Solver {
    Auto,
    Direct,
    Pgmres,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Solution {
    PlaneWave,
    Polynomial,
}

#[derive(Args, Debug)]
struct Case {
    /// Wavenumber.
    #[arg(long)]
    k: Option<f64>,
    /// Reconstruction degrees, comma separated.
    #[arg(long = "m", value_delimiter = ',')]
    degrees: Option<Vec<usize>>,
    /// Mesh resolutions (n x n squares), comma separated, increasing.
    #[arg(long = "n", value_delimiter = ',')]
    resolutions: Option<Vec<usize>>,
    /// Penalty scale override.
    #[arg(long)]
    eta: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Theoretical and empirical 1D efficiency constants.
    CmTable {
        #[arg(long = "m", value_delimiter = ',', default_values_t = vec![2usize, 3, 4, 5, 6])]
        degrees: Vec<usize>,
        /// Interpolation cells on [0, 1] for the empirical ratio.
        #[arg(long, default_value_t = 100)]
        n_cells: usize,
    },
    /// Errors and observed orders for a plane wave (defaults k=5, m=2,3, n=10,20,40).
    Convergence {
        #[command(flatten)]
        case: Case,
        #[arg(long, value_enum, default_value_t = Eps::Zero)]
        eps: Eps,
        #[arg(long, value_enum, default_value_t = Solver::Auto)]
        solver: Solver,
        #[arg(long, value_enum, default_value_t = Solution::PlaneWave)]
        solution: Solution,
    },
    /// RDA versus DG at matched unknowns (defaults k=20, m=2,3,4, n=20,40,80).
    CompareDg {
        #[command(flatten)]
        case: Case,
        /// DG resolutions (default: a quarter of each RDA resolution).
        #[arg(long = "dg-n", value_delimiter = ',')]
        dg_resolutions: Option<Vec<usize>>,
        #[arg(long, value_enum, default_value_t = Solver::Auto)]
        solver: Solver,
    },
    /// PGMRES iteration counts for eps=0 and eps=k^2 (defaults k=5, m=2, n=10,20,40).
    PrecondStudy {
        #[command(flatten)]
        case: Case,
        /// Also run unpreconditioned GMRES for eps=k^2.
        #[arg(long)]
        baseline: bool,
    },
    /// Eigenvalues of A and P^-1 A on a small mesh (defaults k=10, m=3, n=8).
    Spectrum {
        #[command(flatten)]
        case: Case,
        #[arg(long, value_enum, default_value_t = Eps::Ksq)]
        eps: Eps,
    },
}

struct Defaults {
    k: f64,
    degrees: Vec<usize>,
    resolutions: Vec<usize>,
}

fn experiment(name: &str, case: &Case, shared: &Shared, defaults: Defaults) -> Result<ExperimentConfig, String> {
    let (k, resolutions) = if shared.expensive { (40.0, vec![160]) } else { (defaults.k, defaults.resolutions) };
    let mut cfg = ExperimentConfig::new(
        name,
        case.k.unwrap_or(k),
        case.degrees.clone().unwrap_or(defaults.degrees),
        case.resolutions.clone().unwrap_or(resolutions),
    );
    cfg.eta = case.eta;
    cfg.penalty_imag = shared.penalty_imag == Switch::On;
    cfg.solver.tol = shared.tol;
    cfg.solver.max_iter = shared.max_iter;
    if !shared.expensive {
        if let Some(&n) = cfg.resolutions.iter().find(|&&n| n > DESK_MAX_N) {
            return Err(format!("resolution {n} exceeds {DESK_MAX_N}; pass --expensive for large runs"));
        }
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn eps_mode(eps: Eps) -> EpsMode {
    match eps {
        Eps::Zero => EpsMode::Zero,
        Eps::Ksq => EpsMode::KSquared,
    }
}

fn solve_method(solver: Solver) -> SolveMethod {
    match solver {
        Solver::Auto => SolveMethod::Auto,
        Solver::Direct => SolveMethod::Direct,
        Solver::Pgmres => SolveMethod::Iterative,
    }
}

fn run(cli: &Cli) -> Result<ResultTable, String> {
    let shared = &cli.shared;
    let artifacts = Artifacts {
        dump_matrix: shared.dump_matrix.clone(),
        trace_residual: shared.trace_residual.clone(),
        dump_mesh: shared.dump_mesh.clone(),
    };
    let table = match &cli.command {
        Command::CmTable { degrees, n_cells } => cm_table(degrees, *n_cells),
        Command::Convergence { case, eps, solver, solution } => {
            let defaults = Defaults { k: 5.0, degrees: vec![2, 3], resolutions: vec![10, 20, 40] };
            let mut cfg = experiment("convergence", case, shared, defaults)?;
            cfg.eps = eps_mode(*eps);
            cfg.solver.method = solve_method(*solver);
            cfg.solution = match solution {
                Solution::PlaneWave => SolutionKind::PlaneWave,
                Solution::Polynomial => SolutionKind::Polynomial,
            };
            run_convergence(&cfg, &artifacts)
        }
        Command::CompareDg { case, dg_resolutions, solver } => {
            let defaults = Defaults { k: 20.0, degrees: vec![2, 3, 4], resolutions: vec![20, 40, 80] };
            let mut cfg = experiment("compare-dg", case, shared, defaults)?;
            cfg.solver.method = solve_method(*solver);
            let dg = dg_resolutions.clone().unwrap_or_else(|| default_dg_resolutions(&cfg.resolutions));
            run_dg_comparison(&cfg, &dg, &artifacts)
        }
        Command::PrecondStudy { case, baseline } => {
            let defaults = Defaults { k: 5.0, degrees: vec![2], resolutions: vec![10, 20, 40] };
            let cfg = experiment("precond-study", case, shared, defaults)?;
            run_precond_study(&cfg, *baseline, &artifacts)
        }
        Command::Spectrum { case, eps } => {
            let defaults = Defaults { k: 10.0, degrees: vec![3], resolutions: vec![8] };
            let mut cfg = experiment("spectrum", case, shared, defaults)?;
            cfg.eps = eps_mode(*eps);
            if cfg.degrees.len() != 1 || cfg.resolutions.len() != 1 {
                return Err("spectrum takes a single --m and a single --n".into());
            }
            let (m, n) = (cfg.degrees[0], cfg.resolutions[0]);
            spectrum_report(&cfg, m, n, &artifacts).and_then(|r| r.table(&cfg))
        }
    };
    table.map_err(|e| e.to_string())
}

fn write_table(table: &ResultTable, shared: &Shared) -> io::Result<()> {
    let format = match shared.format {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    let result = match &shared.out {
        Some(path) => {
            let mut out = BufWriter::new(File::create(path)?);
            table.write(format, &mut out).and_then(|_| Ok(out.flush()?))
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            table.write(format, &mut out).and_then(|_| Ok(out.flush()?))
        }
    };
    result.map_err(|e| io::Error::other(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_FATAL);
        }
    };
    let start = Instant::now();
    let table = match run(&cli) {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_FATAL);
        }
    };
    if let Err(e) = write_table(&table, &cli.shared) {
        eprintln!("error: writing output: {e}");
        return ExitCode::from(EXIT_FATAL);
    }
    let failed = failed_rows(&table);
    eprintln!("{}: {} rows in {:.2?}", table.title(), table.len(), start.elapsed());
    if failed.is_empty() {
        return ExitCode::SUCCESS;
    }
    let status = table.column_index("status").expect("failed rows need a status column");
    for &i in &failed {
        let row = &table.rows()[i];
        let key: Vec<String> = table
            .columns()
            .iter()
            .zip(row)
            .filter(|(c, _)| matches!(c.as_str(), "m" | "n" | "method"))
            .map(|(c, v)| format!("{c}={v}"))
            .collect();
        eprintln!("failed row {i} ({}): {}", key.join(" "), row[status]);
    }
    eprintln!("{} of {} rows failed", failed.len(), table.len());
    ExitCode::from(failed.len().min(MAX_ROW_EXIT) as u8)
}

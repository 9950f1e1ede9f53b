//! Study drivers end to end on small cases.

use rda::experiments::{
    cm_table, failed_rows, run_convergence, run_dg_comparison, run_precond_study, spectrum_report, Artifacts,
    ExperimentConfig, OutputFormat, ResultTable, SolutionKind, SolveMethod,
};

fn csv(table: &ResultTable) -> String {
    let mut out = Vec::new();
    table.write(OutputFormat::Csv, &mut out).unwrap();
    String::from_utf8(out).unwrap()
}

fn ints(table: &ResultTable, column: &str) -> Vec<i64> {
    (0..table.len()).map(|i| table.get(i, column).and_then(|c| c.as_int()).unwrap()).collect()
}

#[test]
fn polynomial_solution_solved_to_roundoff() {
    let mut exp = ExperimentConfig::new("poly", 5.0, vec![2, 3], vec![4, 8]);
    exp.solution = SolutionKind::Polynomial;
    exp.solver.method = SolveMethod::Direct;
    let table = run_convergence(&exp, &Artifacts::default()).unwrap();
    assert_eq!(table.len(), 4);
    assert!(failed_rows(&table).is_empty());
    for e in table.column_values("l2").into_iter().chain(table.column_values("dg")) {
        assert!(e.unwrap() <= 1e-8, "error {e:?}");
    }
    // orders are omitted once errors hit roundoff
    assert!(table.column_values("order_l2").iter().all(|o| o.is_none()));
}

#[test]
fn iterative_and_direct_agree() {
    let mut exp = ExperimentConfig::new("agree", 5.0, vec![2], vec![10, 20]);
    exp.solver.tol = 1e-11;
    let mut errors = Vec::new();
    for method in [SolveMethod::Direct, SolveMethod::Iterative] {
        exp.solver.method = method;
        let table = run_convergence(&exp, &Artifacts::default()).unwrap();
        assert!(failed_rows(&table).is_empty());
        errors.push(table.column_values("l2"));
    }
    for (d, i) in errors[0].iter().zip(&errors[1]) {
        assert!((d.unwrap() - i.unwrap()).abs() <= 1e-6 * d.unwrap());
    }
}

#[test]
fn higher_degree_costs_more_iterations() {
    let exp = ExperimentConfig::new("degrees", 5.0, vec![2, 6], vec![10, 20]);
    let table = run_precond_study(&exp, false, &Artifacts::default()).unwrap();
    assert!(failed_rows(&table).is_empty());
    let iters = ints(&table, "iters_ksq");
    // rows: (2,10) (2,20) (6,10) (6,20)
    assert!(iters[2] > iters[0] && iters[3] > iters[1], "{iters:?}");
    let eps0 = ints(&table, "iters_eps0");
    assert!(eps0.iter().zip(&iters).all(|(a, b)| a >= b), "absorption should not slow convergence");
}

#[test]
fn preconditioner_beats_plain_gmres() {
    let mut exp = ExperimentConfig::new("baseline", 5.0, vec![2], vec![20]);
    exp.solver.max_iter = 300;
    let table = run_precond_study(&exp, true, &Artifacts::default()).unwrap();
    let pre = table.get(0, "iters_ksq").unwrap().as_int().unwrap();
    let plain = table.get(0, "baseline_iters_ksq").unwrap().as_int().unwrap();
    assert!(plain > 2 * pre, "plain {plain} vs preconditioned {pre}");
}

#[test]
fn rda_beats_dg_at_matched_dofs() {
    let exp = ExperimentConfig::new("cmp", 5.0, vec![3], vec![10, 20, 40]);
    let table = run_dg_comparison(&exp, &[5, 10], &Artifacts::default()).unwrap();
    assert!(failed_rows(&table).is_empty());
    let dg: Vec<usize> =
        (0..table.len()).filter(|&i| table.get(i, "method").unwrap().as_text() == Some("dg")).collect();
    assert_eq!(dg.len(), 2);
    let mut matched = 0;
    for i in dg {
        for column in ["error_ratio", "dof_ratio"] {
            if let Some(r) = table.get(i, column).unwrap().as_real() {
                assert!(r < 1.0, "{column} = {r}");
                matched += 1;
            }
        }
        // denser RDA rows roughly cancel the DOF savings at this size
        if let Some(r) = table.get(i, "nnz_ratio").unwrap().as_real() {
            assert!(r > 0.5 && r < 2.0, "nnz_ratio = {r}");
        }
    }
    assert!(matched >= 3);
}

#[test]
fn spectrum_respects_size_cap() {
    let exp = ExperimentConfig::new("spec", 10.0, vec![3], vec![4]);
    let report = spectrum_report(&exp, 3, 4, &Artifacts::default()).unwrap();
    assert_eq!(report.operator.len(), 32);
    assert!(report.preconditioned_modulus().0 > 0.0);
    assert!(spectrum_report(&exp, 3, 20, &Artifacts::default()).is_err());
}

#[test]
fn cm_table_rows() {
    let table = cm_table(&[2, 3, 4, 5, 6], 100).unwrap();
    assert!(failed_rows(&table).is_empty());
    let theory: Vec<f64> = table.column_values("cm_theory").into_iter().map(Option::unwrap).collect();
    assert!(theory.windows(2).all(|w| w[1] < w[0]));
    let empirical = table.column_values("cm_empirical");
    for (t, e) in theory.iter().zip(empirical) {
        assert!((e.unwrap() - t).abs() < 0.01 * t);
    }
}

#[test]
fn tables_are_deterministic() {
    let exp = ExperimentConfig::new("det", 5.0, vec![2, 3], vec![5, 10]);
    let a = csv(&run_convergence(&exp, &Artifacts::default()).unwrap());
    let b = csv(&run_convergence(&exp, &Artifacts::default()).unwrap());
    assert_eq!(a, b);
    let first_line = a.lines().next().unwrap();
    assert!(first_line.starts_with("m,n,dofs,nnz,l2,dg,energy"));
}

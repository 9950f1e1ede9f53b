use super::*;
use crate::linsolve::{dense_spectrum, DenseLu};
use crate::reconstruction::{ReconstructionOperator, ReconstructionOptions};
use rand::{Rng, SeedableRng};

type C = Complex<f64>;

fn recon(mesh: &TriMesh<f64>, m: usize) -> ReconstructionOperator<f64> {
    ReconstructionOperator::build(mesh, m, ReconstructionOptions { patch_size: None, lambda_samples: 0 }).unwrap()
}

#[test]
fn zero_data_gives_zero_rhs() {
    let mesh = TriMesh::uniform_square(4);
    let op = recon(&mesh, 2);
    let cfg = HelmholtzConfig::new(5.0, 0.0, 2);
    let sys = assemble_rda_system(&mesh, &op, &cfg, &ManufacturedSolution::zero(5.0, 0.0)).unwrap();
    assert!(sys.rhs.iter().all(|z| z.norm() == 0.0));
    let x = DenseLu::from_csr(&sys.matrix).unwrap().solve(&sys.rhs).unwrap();
    assert!(x.iter().all(|z| z.norm() == 0.0));
}

#[test]
fn rda_size_independent_of_degree() {
    let mesh = TriMesh::uniform_square(10);
    for m in 2..=4 {
        let op = recon(&mesh, m);
        let cfg = HelmholtzConfig::new(5.0, 0.0, m);
        let sys = assemble_rda_system(&mesh, &op, &cfg, &ManufacturedSolution::plane_wave(5.0, 0.0)).unwrap();
        assert_eq!(sys.num_dofs(), 200);
    }
}

#[test]
fn degree_mismatch_rejected() {
    let mesh = TriMesh::uniform_square(4);
    let op = recon(&mesh, 2);
    let cfg = HelmholtzConfig::new(5.0, 0.0, 3);
    assert!(assemble_rda_system(&mesh, &op, &cfg, &ManufacturedSolution::zero(5.0, 0.0)).is_err());
    let bad = HelmholtzConfig { k: -1.0, ..HelmholtzConfig::new(5.0, 0.0, 2) };
    assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
}

#[test]
fn dg_dofs_and_sparsity_pattern() {
    let mesh = TriMesh::uniform_square(10);
    let cfg = HelmholtzConfig::new(5.0, 0.0, 2);
    let (_, sys) = assemble_dg_system(&mesh, &cfg, &ManufacturedSolution::plane_wave(5.0, 0.0)).unwrap();
    assert_eq!(sys.num_dofs(), 1200);
    // Pattern oracle: one diagonal block per element and two coupling
    // blocks per interior face.
    let interior = mesh.num_faces() - mesh.num_boundary_faces();
    let pattern = 36 * (mesh.num_elements() + 2 * interior);
    assert_eq!(pattern, 4 * 36 * 200 - 36 * mesh.num_boundary_faces());
    for (i, j, _) in sys.matrix.triplets() {
        let (a, b) = (i / 6, j / 6);
        assert!(a == b || mesh.neighbors(a).any(|n| n == b));
    }
    // On an element without boundary faces the (1, x) and (1, y) couplings
    // vanish identically: Σ|e| n_e = 0, and linear monomials centred at
    // the barycenter average to zero over the edge midpoints.
    let closed = (0..mesh.num_elements())
        .filter(|&k| mesh.element_faces(k).iter().all(|&f| !mesh.faces()[f].is_boundary()))
        .count();
    assert_eq!(sys.nnz(), pattern - 4 * closed);
    // Same count on a perturbed mesh, so it is not a grid-symmetry artifact.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    let verts: Vec<Point<f64>> = mesh
        .vertices()
        .iter()
        .map(|&[x, y]| {
            let interior = x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0;
            if interior {
                [x + rng.random_range(-0.01..0.01), y + rng.random_range(-0.01..0.01)]
            } else {
                [x, y]
            }
        })
        .collect();
    let jittered = TriMesh::from_elements(verts, mesh.elements().to_vec()).unwrap();
    let (_, sys) = assemble_dg_system(&jittered, &cfg, &ManufacturedSolution::plane_wave(5.0, 0.0)).unwrap();
    assert_eq!(sys.nnz(), pattern - 4 * closed);
}

#[test]
fn complex_symmetric_without_absorption() {
    let mesh = TriMesh::uniform_square(5);
    let op = recon(&mesh, 2);
    for imag in [false, true] {
        let cfg = HelmholtzConfig { penalty_imag: imag, ..HelmholtzConfig::new(5.0, 0.0, 2) };
        let sys = assemble_rda_system(&mesh, &op, &cfg, &ManufacturedSolution::plane_wave(5.0, 0.0)).unwrap();
        let max = sys.matrix.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(sys.matrix.asymmetry() <= 1e-12 * max);
    }
}

#[test]
fn assembly_is_deterministic() {
    let mesh = TriMesh::uniform_square(6);
    let op = recon(&mesh, 3);
    let cfg = HelmholtzConfig::new(5.0, 25.0, 3);
    let sol = ManufacturedSolution::plane_wave(5.0, 25.0);
    let a = assemble_rda_system(&mesh, &op, &cfg, &sol).unwrap();
    let b = assemble_rda_system(&mesh, &op, &cfg, &sol).unwrap();
    assert_eq!(a.matrix.row_offsets(), b.matrix.row_offsets());
    assert_eq!(a.matrix.col_indices(), b.matrix.col_indices());
    assert!(a
        .matrix
        .values()
        .iter()
        .zip(b.matrix.values())
        .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
    assert_eq!(a.rhs, b.rhs);
}

fn quadratic_solution(k: f64, eps: f64) -> ManufacturedSolution<f64> {
    ManufacturedSolution::polynomial(
        k,
        eps,
        vec![
            ((0, 0), C::new(1.0, 0.5)),
            ((1, 0), C::new(-2.0, 0.0)),
            ((1, 1), C::new(0.0, 3.0)),
            ((0, 2), C::new(1.5, -1.0)),
        ],
    )
}

#[test]
fn polynomial_solution_reproduced_by_rda() {
    let mesh = TriMesh::uniform_square(4);
    let op = recon(&mesh, 2);
    let cfg = HelmholtzConfig::new(3.0, 0.0, 2);
    let sol = quadratic_solution(3.0, 0.0);
    let sys = assemble_rda_system(&mesh, &op, &cfg, &sol).unwrap();
    let x = DenseLu::from_csr(&sys.matrix).unwrap().solve(&sys.rhs).unwrap();
    let uh = op.expand(&x).unwrap();
    let err = compute_error_norms(&mesh, &uh, &sol, &cfg).unwrap();
    assert!(err.l2 <= 1e-8 && err.dg <= 1e-8 && err.energy <= 1e-8, "{err:?}");
    // The unknowns are the barycenter values.
    for k in 0..mesh.num_elements() {
        assert!((x[k] - sol.u(mesh.barycenter(k))).norm() < 1e-8);
    }
}

#[test]
fn polynomial_solution_reproduced_by_dg() {
    let mesh = TriMesh::uniform_square(3);
    let cfg = HelmholtzConfig::new(3.0, 1.0, 2);
    let sol = quadratic_solution(3.0, 1.0);
    let (space, sys) = assemble_dg_system(&mesh, &cfg, &sol).unwrap();
    let x = DenseLu::from_csr(&sys.matrix).unwrap().solve(&sys.rhs).unwrap();
    let err = compute_error_norms(&mesh, &space.expand(&x).unwrap(), &sol, &cfg).unwrap();
    assert!(err.energy <= 1e-8, "{err:?}");
}

#[test]
fn zero_approximation_of_plane_wave() {
    let mesh = TriMesh::uniform_square(4);
    let cfg = HelmholtzConfig::new(5.0, 0.0, 2);
    let sol = ManufacturedSolution::plane_wave(5.0, 0.0);
    let zero = DgSpace::new(&mesh, 2).expand(&vec![C::new(0.0, 0.0); mesh.num_elements() * 6]).unwrap();
    let err = compute_error_norms(&mesh, &zero, &sol, &cfg).unwrap();
    assert!((err.l2 - 1.0).abs() < 1e-10);
    // |∇u| = k, no jumps, |u| = 1 on the boundary of length 4.
    assert!((err.volume_gradient_sq - 25.0).abs() < 1e-8);
    assert!(err.interior_jump_sq.abs() < 1e-20);
    assert!((err.boundary_sq - 5.0 * 4.0).abs() < 1e-10);
    assert!(err.energy >= err.dg && err.dg >= 0.0);
}

#[test]
fn norms_of_zero_function() {
    let mesh = TriMesh::uniform_square(3);
    let cfg = HelmholtzConfig::new(5.0, 0.0, 2);
    let v = piecewise_constant(&mesh, &vec![C::new(0.0, 0.0); mesh.num_elements()]);
    let r = discrete_norms(&mesh, &v, &cfg).unwrap();
    assert_eq!(r.dg, 0.0);
    assert_eq!(r.energy, 0.0);
}

#[test]
fn single_triangle_preconditioner() {
    let mesh = TriMesh::from_elements(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap();
    let cfg = HelmholtzConfig::new(5.0, 0.0, 2);
    let p = assemble_p0_preconditioner(&mesh, &cfg).unwrap();
    let perimeter = 2.0 + 2f64.sqrt();
    assert!((p.get(0, 0) - (25.0 * 0.5 + 5.0 * perimeter)).abs() < 1e-12);
}

#[test]
fn preconditioner_spd() {
    for k in [5.0, 10.0, 20.0] {
        let mesh = TriMesh::<f64>::uniform_square(2);
        let cfg = HelmholtzConfig { eta: 10.0, ..HelmholtzConfig::new(k, 0.0, 2) };
        let p = assemble_p0_preconditioner(&mesh, &cfg).unwrap();
        let n = p.nrows();
        let dense = p.to_dense();
        for i in 0..n {
            assert!(dense[i * n + i] > 0.0);
            for j in 0..n {
                assert_eq!(dense[i * n + j], dense[j * n + i]);
            }
            // Gershgorin: strict diagonal dominance from the mass terms.
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| dense[i * n + j].abs()).sum();
            assert!(dense[i * n + i] - off > 0.0);
        }
        let eig = dense_spectrum(&p.to_complex().to_dense(), n).unwrap();
        assert!(eig.iter().all(|z| z.re > 0.0 && z.im.abs() < 1e-10));
        // Row pattern: self plus face neighbors.
        for e in 0..n {
            assert_eq!(p.row(e).0.len(), 1 + mesh.neighbors(e).count());
        }
    }
}

#[test]
fn exact_functional_matches_rhs_for_polynomials() {
    // For u in the space, a_h(u, φ_i) = l_h(φ_i) holds exactly.
    let mesh = TriMesh::uniform_square(4);
    let op = recon(&mesh, 2);
    let cfg = HelmholtzConfig::new(4.0, 2.0, 2);
    let sol = quadratic_solution(4.0, 2.0);
    let sys = assemble_rda_system(&mesh, &op, &cfg, &sol).unwrap();
    let lhs = exact_solution_functional(&mesh, &op, &cfg, &sol).unwrap();
    for (a, b) in lhs.iter().zip(&sys.rhs) {
        assert!((a - b).norm() <= 1e-11 * (1.0 + b.norm()));
    }
}

#[test]
fn count_nnz_basics() {
    assert_eq!(count_nnz(&SparseComplexMatrix::<f64>::zeros(4, 4)), 0);
    assert_eq!(count_nnz(&SparseComplexMatrix::<f64>::identity(5)), 5);
}

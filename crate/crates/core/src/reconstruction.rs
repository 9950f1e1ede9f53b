//! Patch-wise constrained least-squares reconstruction.
//!
//! Every element `K` owns a patch `S(K)` of face-connected elements and the
//! collocation set `I(K)` of their barycenters. The reconstruction `R_K`
//! maps the piecewise-constant values on `S(K)` to the polynomial of degree
//! `m` that interpolates the value of `K` at its own barycenter and fits the
//! remaining values in the least-squares sense. Columns of the stored
//! coefficient matrices are the basis functions `lambda_K` restricted to
//! each element.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::polybasis::{dim_pm, Coefficient, PiecewisePolynomial, PolySpec};
use crate::scalar::{cast, dist, from_usize, Point, Real};

/// Default patch size `#S` for degree `m` on triangles.
pub fn patch_size_table(m: usize) -> Result<usize> {
    match m {
        2 => Ok(9),
        3 => Ok(16),
        4 => Ok(21),
        5 => Ok(29),
        6 => Ok(38),
        _ => Err(Error::Unsupported {
            what: "reconstruction degree for the patch-size table",
            requested: m,
            supported: "2..=6".into(),
        }),
    }
}

/// The patch `S(K)` of one element and its collocation points.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementPatch<T> {
    pub owner: usize,
    /// Members ordered by recursion round, then element index; `owner` first.
    pub members: Vec<usize>,
    pub points: Vec<Point<T>>,
    pub depth: usize,
}

impl<T: Real> ElementPatch<T> {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.members.contains(&k)
    }
}

/// Grows `S_t(K)` by whole face-neighbor rounds until it has at least
/// `target` members.
pub fn build_patch<T: Real>(mesh: &TriMesh<T>, owner: usize, target: usize) -> Result<ElementPatch<T>> {
    let mut members = vec![owner];
    let mut in_patch = std::collections::HashSet::from([owner]);
    let mut frontier_start = 0;
    let mut depth = 0;
    while members.len() < target {
        let mut round: Vec<usize> = members[frontier_start..]
            .iter()
            .flat_map(|&k| mesh.neighbors(k))
            .filter(|k| !in_patch.contains(k))
            .collect();
        round.sort_unstable();
        round.dedup();
        if round.is_empty() {
            return Err(Error::PatchExhausted { element: owner, target, reached: members.len() });
        }
        frontier_start = members.len();
        in_patch.extend(round.iter().copied());
        members.extend(round);
        depth += 1;
    }
    let points = members.iter().map(|&k| mesh.barycenter(k)).collect();
    Ok(ElementPatch { owner, members, points, depth })
}

/// Householder QR with column pivoting of a tall row-major matrix.
#[derive(Debug, Clone)]
pub(crate) struct PivotedQr<T> {
    rows: usize,
    cols: usize,
    /// Householder vectors below the diagonal, `R` on and above it.
    qr: Vec<T>,
    tau: Vec<T>,
    perm: Vec<usize>,
    rank: usize,
}

impl<T: Real> PivotedQr<T> {
    pub(crate) fn new(a: &[T], rows: usize, cols: usize) -> Self {
        assert_eq!(a.len(), rows * cols);
        assert!(rows >= cols);
        let mut qr = a.to_vec();
        let mut tau = vec![T::zero(); cols];
        let mut perm: Vec<usize> = (0..cols).collect();
        let col_norm2 =
            |qr: &[T], j: usize, from: usize| -> T { (from..rows).map(|i| qr[i * cols + j] * qr[i * cols + j]).sum() };
        for j in 0..cols {
            let (p, _) = (j..cols).map(|c| (c, col_norm2(&qr, c, j))).fold((j, -T::one()), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            });
            if p != j {
                perm.swap(p, j);
                for i in 0..rows {
                    qr.swap(i * cols + p, i * cols + j);
                }
            }
            let norm = col_norm2(&qr, j, j).sqrt();
            if norm == T::zero() {
                continue;
            }
            let alpha = if qr[j * cols + j] > T::zero() { -norm } else { norm };
            let v0 = qr[j * cols + j] - alpha;
            // v = [1, x_{j+1..}/v0], tau = -v0/alpha
            for i in j + 1..rows {
                qr[i * cols + j] /= v0;
            }
            tau[j] = -v0 / alpha;
            qr[j * cols + j] = alpha;
            for c in j + 1..cols {
                let mut s = qr[j * cols + c];
                for i in j + 1..rows {
                    s += qr[i * cols + j] * qr[i * cols + c];
                }
                s *= tau[j];
                qr[j * cols + c] -= s;
                for i in j + 1..rows {
                    let vij = qr[i * cols + j];
                    qr[i * cols + c] -= s * vij;
                }
            }
        }
        let r00 = if cols > 0 { qr[0].abs() } else { T::zero() };
        let tol = T::rank_tolerance(rows) * r00;
        let rank = (0..cols).take_while(|&j| qr[j * cols + j].abs() > tol).count();
        PivotedQr { rows, cols, qr, tau, perm, rank }
    }

    pub(crate) fn rank(&self) -> usize {
        self.rank
    }

    /// Applies `Q^T` to a column vector in place.
    fn apply_qt(&self, b: &mut [T]) {
        let cols = self.cols;
        for j in 0..cols {
            if self.tau[j] == T::zero() {
                continue;
            }
            let mut s = b[j];
            for i in j + 1..self.rows {
                s += self.qr[i * cols + j] * b[i];
            }
            s *= self.tau[j];
            b[j] -= s;
            for i in j + 1..self.rows {
                b[i] -= s * self.qr[i * cols + j];
            }
        }
    }

    /// Least-squares solution of `A x = b` (full column rank assumed).
    pub(crate) fn solve_ls(&self, b: &[T]) -> Vec<T> {
        let mut work = b.to_vec();
        self.apply_qt(&mut work);
        let z = self.back_substitute(&work[..self.cols]);
        let mut x = vec![T::zero(); self.cols];
        for (j, &p) in self.perm.iter().enumerate() {
            x[p] = z[j];
        }
        x
    }

    fn back_substitute(&self, y: &[T]) -> Vec<T> {
        let cols = self.cols;
        let mut z = y.to_vec();
        for j in (0..cols).rev() {
            let mut s = z[j];
            for c in j + 1..cols {
                s -= self.qr[j * cols + c] * z[c];
            }
            z[j] = s / self.qr[j * cols + j];
        }
        z
    }

    /// `(A^T A)^{-1} v` through `P R^{-1} R^{-T} P^T`.
    pub(crate) fn gram_inverse_apply(&self, v: &[T]) -> Vec<T> {
        let cols = self.cols;
        let mut y: Vec<T> = self.perm.iter().map(|&p| v[p]).collect();
        for j in 0..cols {
            let mut s = y[j];
            for i in 0..j {
                s -= self.qr[i * cols + j] * y[i];
            }
            y[j] = s / self.qr[j * cols + j];
        }
        let z = self.back_substitute(&y);
        let mut x = vec![T::zero(); cols];
        for (j, &p) in self.perm.iter().enumerate() {
            x[p] = z[j];
        }
        x
    }

    /// Explicit pseudo-inverse, `cols x rows`, row-major.
    pub(crate) fn pseudo_inverse(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols * self.rows];
        let mut e = vec![T::zero(); self.rows];
        for r in 0..self.rows {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[r] = T::one();
            let x = self.solve_ls(&e);
            for (c, v) in x.into_iter().enumerate() {
                out[c * self.rows + r] = v;
            }
        }
        out
    }
}

/// Scaling length of the local monomials: largest distance from the owner's
/// barycenter to a vertex of the patch.
fn patch_scale<T: Real>(mesh: &TriMesh<T>, patch: &ElementPatch<T>) -> T {
    let center = mesh.barycenter(patch.owner);
    patch.members.iter().flat_map(|&k| mesh.triangle(k)).map(|v| dist(v, center)).fold(T::zero(), T::max)
}

/// Solves the constrained least-squares problem of one patch for every
/// right-hand side at once. Returns the `dim_pm(m) x #S` row-major matrix
/// mapping patch values (in member order) to monomial coefficients of `spec`.
///
/// The basis is centred at the owner's barycenter, so every non-constant
/// monomial vanishes there and the constraint fixes the constant
/// coefficient to the owner's value. The remaining coefficients solve the
/// reduced problem against the differences `g_j - g_K`.
pub fn fit_constrained_ls<T: Real>(patch: &ElementPatch<T>, spec: &PolySpec<T>) -> Result<Vec<T>> {
    let n = spec.dim();
    let s = patch.len();
    let reduced = n - 1;
    let others = s - 1;
    if others < reduced {
        return Err(Error::Unisolvence { element: patch.owner, rank: others, expected: reduced });
    }
    let mut vals = vec![T::zero(); n];
    let mut v = Vec::with_capacity(others * reduced);
    for &p in &patch.points[1..] {
        spec.eval_into(p, &mut vals);
        v.extend_from_slice(&vals[1..]);
    }
    let qr = PivotedQr::new(&v, others, reduced);
    if qr.rank() < reduced {
        return Err(Error::Unisolvence { element: patch.owner, rank: qr.rank(), expected: reduced });
    }
    let pinv = qr.pseudo_inverse();
    let mut m = vec![T::zero(); n * s];
    m[0] = T::one();
    for r in 0..reduced {
        let row = &pinv[r * others..(r + 1) * others];
        let out = &mut m[(r + 1) * s..(r + 2) * s];
        let mut owner_weight = T::zero();
        for (j, &w) in row.iter().enumerate() {
            out[j + 1] = w;
            owner_weight -= w;
        }
        out[0] = owner_weight;
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy)]
pub struct ReconstructionOptions {
    /// Patch size threshold `#S`; the degree's table value when `None`.
    pub patch_size: Option<usize>,
    /// Sample points per patch element for the Lambda estimate; 0 skips it.
    pub lambda_samples: usize,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        ReconstructionOptions { patch_size: None, lambda_samples: 30 }
    }
}

/// The global reconstruction operator of degree `m` on a mesh.
#[derive(Debug, Clone)]
pub struct ReconstructionOperator<T> {
    degree: usize,
    patches: Vec<ElementPatch<T>>,
    specs: Vec<PolySpec<T>>,
    matrices: Vec<Vec<T>>,
    lambdas: Vec<Option<T>>,
    num_elements: usize,
}

/// Builds patches and local least-squares maps for every element.
pub fn build_reconstruction_operator<T: Real>(mesh: &TriMesh<T>, m: usize) -> Result<ReconstructionOperator<T>> {
    ReconstructionOperator::build(mesh, m, ReconstructionOptions::default())
}

impl<T: Real> ReconstructionOperator<T> {
    pub fn build(mesh: &TriMesh<T>, m: usize, options: ReconstructionOptions) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidConfig("reconstruction degree must be at least 1".into()));
        }
        let target = match options.patch_size {
            Some(t) => t,
            None => patch_size_table(m)?,
        };
        if target < dim_pm(m) {
            return Err(Error::InvalidConfig(format!("patch size {target} is below dim P^{m} = {}", dim_pm(m))));
        }
        let local: Vec<_> = (0..mesh.num_elements())
            .into_par_iter()
            .map(|k| -> Result<_> {
                let patch = build_patch(mesh, k, target)?;
                let spec = PolySpec::new(m, mesh.barycenter(k), patch_scale(mesh, &patch));
                let matrix = fit_constrained_ls(&patch, &spec)?;
                let lambda = if options.lambda_samples > 0 {
                    Some(estimate_lambda(mesh, &patch, &spec, options.lambda_samples).0)
                } else {
                    None
                };
                Ok((patch, spec, matrix, lambda))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut op = ReconstructionOperator {
            degree: m,
            patches: Vec::with_capacity(local.len()),
            specs: Vec::with_capacity(local.len()),
            matrices: Vec::with_capacity(local.len()),
            lambdas: Vec::with_capacity(local.len()),
            num_elements: mesh.num_elements(),
        };
        for (patch, spec, matrix, lambda) in local {
            op.patches.push(patch);
            op.specs.push(spec);
            op.matrices.push(matrix);
            op.lambdas.push(lambda);
        }
        Ok(op)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn patch(&self, k: usize) -> &ElementPatch<T> {
        &self.patches[k]
    }

    pub fn spec(&self, k: usize) -> &PolySpec<T> {
        &self.specs[k]
    }

    /// Coefficient matrix `M_K` (`dim_pm(m) x #S(K)`, row-major).
    pub fn matrix(&self, k: usize) -> &[T] {
        &self.matrices[k]
    }

    pub fn lambda(&self, k: usize) -> Option<T> {
        self.lambdas[k]
    }

    /// `Lambda_m = max_K (1 + Lambda(m, S(K)) sqrt(#S(K)))`, if estimated.
    pub fn lambda_m(&self) -> Option<T> {
        self.lambdas
            .iter()
            .zip(&self.patches)
            .map(|(l, p)| l.map(|l| T::one() + l * from_usize::<T>(p.len()).sqrt()))
            .try_fold(T::zero(), |acc, v| v.map(|v| acc.max(v)))
    }

    /// Applies `R` to one value per element.
    pub fn reconstruct<S: Coefficient<T>>(&self, values: &[S]) -> Result<PiecewisePolynomial<T, S>> {
        if values.len() != self.num_elements {
            return Err(Error::DimensionMismatch { expected: self.num_elements, found: values.len() });
        }
        let coefficients = (0..self.num_elements)
            .map(|k| {
                let members = &self.patches[k].members;
                let s = members.len();
                self.matrices[k]
                    .chunks_exact(s)
                    .map(|row| row.iter().zip(members).fold(S::zero(), |acc, (&w, &j)| acc + values[j] * w))
                    .collect()
            })
            .collect();
        Ok(PiecewisePolynomial::new(self.specs.clone(), coefficients))
    }

    /// Reconstruction of a function from its barycenter samples.
    pub fn reconstruct_from_point_values<S: Coefficient<T>>(&self, values: &[S]) -> Result<PiecewisePolynomial<T, S>> {
        self.reconstruct(values)
    }
}

/// Lower-bound estimate of
/// `Lambda(m, S(K)) = max_p max_{S(K)} |p| / max_{I(K)} |p|`
/// by sampling `samples_per_element` points in each patch element.
///
/// Candidates are the least-squares-optimal polynomials peaking at each
/// sample, seeded random polynomials, and Lawson reweighting of the best
/// candidate towards the max-norm optimum. Returns the estimate and
/// `1 + Lambda sqrt(#S(K))`.
pub fn estimate_lambda<T: Real>(
    mesh: &TriMesh<T>,
    patch: &ElementPatch<T>,
    spec: &PolySpec<T>,
    samples_per_element: usize,
) -> (T, T) {
    let n = spec.dim();
    let s = patch.len();
    let samples = lambda_sample_points(mesh, patch, samples_per_element);
    let mut vals = vec![T::zero(); n];
    let mut colloc = Vec::with_capacity(s * n);
    for &p in &patch.points {
        spec.eval_into(p, &mut vals);
        colloc.extend_from_slice(&vals);
    }
    let mut eval = Vec::with_capacity(samples.len() * n);
    for &p in &samples {
        spec.eval_into(p, &mut vals);
        eval.extend_from_slice(&vals);
    }
    let rows_dot = |mat: &[T], c: &[T]| -> Vec<T> {
        mat.chunks_exact(n).map(|r| r.iter().zip(c).map(|(a, b)| *a * *b).sum()).collect()
    };
    let ratio = |c: &[T]| -> T {
        let top = rows_dot(&eval, c).into_iter().fold(T::zero(), |a, v| a.max(v.abs()));
        let bottom = rows_dot(&colloc, c).into_iter().fold(T::zero(), |a, v| a.max(v.abs()));
        if bottom > T::zero() {
            top / bottom
        } else {
            T::zero()
        }
    };

    let qr = PivotedQr::new(&colloc, s, n);
    if qr.rank() < n {
        return (T::infinity(), T::infinity());
    }
    // The peak value at its own sample is a cheap lower bound on each
    // candidate's ratio; only the leading candidates get the full scan.
    let mut gram_inv = vec![T::zero(); n * n];
    let mut unit = vec![T::zero(); n];
    for j in 0..n {
        unit[j] = T::one();
        for (i, v) in qr.gram_inverse_apply(&unit).into_iter().enumerate() {
            gram_inv[i * n + j] = v;
        }
        unit[j] = T::zero();
    }
    let mut colloc_gram = vec![T::zero(); s * n];
    for i in 0..s {
        for l in 0..n {
            let a = colloc[i * n + l];
            for j in 0..n {
                colloc_gram[i * n + j] += a * gram_inv[l * n + j];
            }
        }
    }
    let mut scored: Vec<(T, usize)> = eval
        .chunks_exact(n)
        .enumerate()
        .map(|(i, row)| {
            // Values of the candidate on I(K) and at its own sample.
            let bottom = colloc_gram
                .chunks_exact(n)
                .map(|r| r.iter().zip(row).map(|(a, b)| *a * *b).sum::<T>().abs())
                .fold(T::zero(), T::max);
            let peak: T = (0..n).map(|a| row[a] * (0..n).map(|b| gram_inv[a * n + b] * row[b]).sum::<T>()).sum();
            (if bottom > T::zero() { peak.abs() / bottom } else { T::zero() }, i)
        })
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
    let best_sample = scored.first().map_or(0, |s| s.1);
    let mut best = T::one();
    for &(_, i) in scored.iter().take(4) {
        let c = qr.gram_inverse_apply(&eval[i * n..(i + 1) * n]);
        best = best.max(ratio(&c));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(patch.owner as u64);
    for _ in 0..20 {
        let c: Vec<T> = (0..n).map(|_| cast(rng.random_range(-1.0..1.0))).collect();
        best = best.max(ratio(&c));
    }
    // Lawson iteration: reweight collocation rows by |p| to move from the
    // least-squares towards the max-norm constrained maximizer.
    let target = &eval[best_sample * n..(best_sample + 1) * n];
    let mut weights = vec![T::one(); s];
    for _ in 0..10 {
        let weighted: Vec<T> =
            colloc.chunks_exact(n).zip(&weights).flat_map(|(row, &w)| row.iter().map(move |&a| a * w.sqrt())).collect();
        let wqr = PivotedQr::new(&weighted, s, n);
        if wqr.rank() < n {
            break;
        }
        let c = wqr.gram_inverse_apply(target);
        best = best.max(ratio(&c));
        let pc = rows_dot(&colloc, &c);
        let total: T = weights.iter().zip(&pc).map(|(w, p)| *w * p.abs()).sum();
        if total <= T::zero() {
            break;
        }
        for (w, p) in weights.iter_mut().zip(&pc) {
            *w = (*w * p.abs() / total).max(T::epsilon());
        }
    }
    (best, T::one() + best * from_usize::<T>(s).sqrt())
}

/// Deterministic samples: the collocation points followed by
/// `per_element` seeded uniform points in every patch element. Sample sets
/// for increasing `per_element` are nested.
fn lambda_sample_points<T: Real>(mesh: &TriMesh<T>, patch: &ElementPatch<T>, per_element: usize) -> Vec<Point<T>> {
    let mut pts = patch.points.clone();
    for &k in &patch.members {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ k as u64);
        let [a, b, c] = mesh.triangle(k);
        for _ in 0..per_element {
            let (mut r1, mut r2): (f64, f64) = (rng.random(), rng.random());
            if r1 + r2 > 1.0 {
                r1 = 1.0 - r1;
                r2 = 1.0 - r2;
            }
            let (r1, r2) = (cast::<T>(r1), cast::<T>(r2));
            pts.push([a[0] + (b[0] - a[0]) * r1 + (c[0] - a[0]) * r2, a[1] + (b[1] - a[1]) * r1 + (c[1] - a[1]) * r2]);
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::TriMesh;
    use rand::Rng;

    /// Independent patch oracle: repeated full neighbor closure over an
    /// adjacency matrix built from shared vertex pairs.
    fn brute_force_patch(mesh: &TriMesh<f64>, k: usize, target: usize) -> (Vec<usize>, usize) {
        let ne = mesh.num_elements();
        let shares_edge = |a: usize, b: usize| {
            let ta = mesh.elements()[a];
            let tb = mesh.elements()[b];
            a != b && ta.iter().filter(|v| tb.contains(v)).count() == 2
        };
        let mut set = vec![false; ne];
        set[k] = true;
        let mut t = 0;
        while set.iter().filter(|&&b| b).count() < target {
            let prev = set.clone();
            for a in 0..ne {
                if prev[a] {
                    for b in 0..ne {
                        if shares_edge(a, b) {
                            set[b] = true;
                        }
                    }
                }
            }
            t += 1;
        }
        ((0..ne).filter(|&i| set[i]).collect(), t)
    }

    #[test]
    fn table_values() {
        assert_eq!(patch_size_table(2).unwrap(), 9);
        assert_eq!(patch_size_table(3).unwrap(), 16);
        assert_eq!(patch_size_table(4).unwrap(), 21);
        assert_eq!(patch_size_table(5).unwrap(), 29);
        assert_eq!(patch_size_table(6).unwrap(), 38);
        assert!(patch_size_table(1).is_err());
        assert!(patch_size_table(7).is_err());
    }

    #[test]
    fn trivial_patch() {
        let mesh = TriMesh::<f64>::uniform_square(3);
        let p = build_patch(&mesh, 4, 1).unwrap();
        assert_eq!(p.members, vec![4]);
        assert_eq!(p.depth, 0);
    }

    #[test]
    fn interior_patch_matches_brute_force() {
        let mesh = TriMesh::<f64>::uniform_square(10);
        // Lower triangle of square (4, 4).
        let k = 2 * (4 * 10 + 4);
        let p = build_patch(&mesh, k, 9).unwrap();
        assert_eq!(p.depth, 2);
        assert_eq!(p.len(), 10);
        let (oracle, t) = brute_force_patch(&mesh, k, 9);
        assert_eq!(t, 2);
        let mut sorted = p.members.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, oracle);
        assert_eq!(p.points.len(), p.len());
    }

    #[test]
    fn corner_patch_needs_more_rounds() {
        let mesh = TriMesh::<f64>::uniform_square(10);
        let corner = build_patch(&mesh, 0, 9).unwrap();
        let (oracle, t) = brute_force_patch(&mesh, 0, 9);
        assert!(corner.len() >= 9);
        assert!(corner.depth > 2);
        assert_eq!(corner.depth, t);
        let mut sorted = corner.members.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, oracle);
    }

    #[test]
    fn patch_exhaustion() {
        let mesh = TriMesh::<f64>::uniform_square(1);
        assert!(matches!(build_patch(&mesh, 0, 9), Err(Error::PatchExhausted { .. })));
    }

    #[test]
    fn patch_round_ordering() {
        let mesh = TriMesh::<f64>::uniform_square(8);
        let p = build_patch(&mesh, 40, 16).unwrap();
        assert_eq!(p.members[0], 40);
        let mut first_round: Vec<_> = mesh.neighbors(40).collect();
        first_round.sort_unstable();
        assert_eq!(&p.members[1..4], &first_round[..]);
    }

    fn setup(m: usize, n: usize) -> (TriMesh<f64>, ReconstructionOperator<f64>) {
        let mesh = TriMesh::uniform_square(n);
        let op = ReconstructionOperator::build(&mesh, m, ReconstructionOptions { patch_size: None, lambda_samples: 0 })
            .unwrap();
        (mesh, op)
    }

    #[test]
    fn constants_reproduced() {
        let (mesh, op) = setup(2, 6);
        let p = op.reconstruct(&vec![3.5; mesh.num_elements()]).unwrap();
        for k in 0..mesh.num_elements() {
            assert!((p.coefficients(k)[0] - 3.5).abs() < 1e-12);
            assert!(p.coefficients(k)[1..].iter().all(|c| c.abs() < 1e-12));
        }
    }

    #[test]
    fn quadratic_recovered_exactly() {
        let (mesh, op) = setup(2, 10);
        let q = |x: Point<f64>| x[0] * x[0] - x[1];
        let vals: Vec<f64> = mesh.barycenters().iter().map(|&x| q(x)).collect();
        let p = op.reconstruct(&vals).unwrap();
        for k in 0..mesh.num_elements() {
            for v in mesh.triangle(k) {
                assert!((p.eval(k, v) - q(v)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn residual_orthogonal_to_reduced_columns() {
        let (mesh, op) = setup(2, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vals: Vec<f64> = (0..mesh.num_elements()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = op.reconstruct(&vals).unwrap();
        for k in [0, 57, 111, 199] {
            let patch = op.patch(k);
            let spec = op.spec(k);
            // Normal-equations oracle: V^T (V c - (g - g_K)) = 0.
            let mut vals_m = vec![0.0; spec.dim()];
            let mut grad = vec![0.0; spec.dim() - 1];
            for (&j, &x) in patch.members.iter().zip(&patch.points).skip(1) {
                spec.eval_into(x, &mut vals_m);
                let resid = p.eval(k, x) - vals[j];
                for (g, v) in grad.iter_mut().zip(&vals_m[1..]) {
                    *g += v * resid;
                }
            }
            assert!(grad.iter().all(|g| g.abs() <= 1e-8), "{grad:?}");
            assert!((p.eval(k, mesh.barycenter(k)) - vals[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn support_of_basis_function() {
        let (mesh, op) = setup(2, 8);
        let target = 37;
        let mut e = vec![0.0; mesh.num_elements()];
        e[target] = 1.0;
        let p = op.reconstruct(&e).unwrap();
        for k in 0..mesh.num_elements() {
            let nonzero = p.coefficients(k).iter().any(|c| c.abs() > 0.0);
            assert_eq!(nonzero, op.patch(k).contains(target), "element {k}");
        }
    }

    #[test]
    fn length_mismatch() {
        let (_, op) = setup(2, 4);
        assert!(matches!(op.reconstruct(&[1.0; 3]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn degenerate_collocation_rejected() {
        // All barycenters on one line cannot determine a quadratic.
        let verts: Vec<Point<f64>> = (0..12).map(|i| [i as f64, (i % 2) as f64]).collect();
        let elements: Vec<[usize; 3]> = (0..10).map(|i| [i, i + 1, i + 2]).collect();
        let mesh = TriMesh::from_elements(verts, elements).unwrap();
        let patch = build_patch(&mesh, 5, 9).unwrap();
        let spec = PolySpec::new(2, mesh.barycenter(5), 5.0);
        assert!(matches!(fit_constrained_ls(&patch, &spec), Err(Error::Unisolvence { element: 5, .. })));
    }

    #[test]
    fn lambda_bounds() {
        let mesh = TriMesh::<f64>::uniform_square(10);
        let k = 2 * (4 * 10 + 4);
        let patch = build_patch(&mesh, k, 9).unwrap();
        let spec = PolySpec::new(2, mesh.barycenter(k), patch_scale(&mesh, &patch));
        let (lam, big) = estimate_lambda(&mesh, &patch, &spec, 30);
        assert!((1.0..=50.0).contains(&lam), "lambda {lam}");
        assert!((big - (1.0 + lam * 10f64.sqrt())).abs() < 1e-12);
        // Denser sampling oracle.
        let (dense, _) = estimate_lambda(&mesh, &patch, &spec, 300);
        assert!(dense >= lam);
        assert!(dense <= 50.0);
        let mut prev = 0.0;
        for per in [1, 5, 10, 30, 60] {
            let (l, _) = estimate_lambda(&mesh, &patch, &spec, per);
            assert!(l >= prev);
            prev = l;
        }
    }

    #[test]
    fn lambda_m_populated() {
        let mesh = TriMesh::<f64>::uniform_square(6);
        let op = build_reconstruction_operator(&mesh, 2).unwrap();
        let lm = op.lambda_m().unwrap();
        assert!(lm.is_finite() && lm > 1.0);
    }

    #[test]
    fn pivoted_qr_solves_least_squares() {
        let a: [f64; 8] = [1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0];
        let qr = PivotedQr::new(&a, 4, 2);
        assert_eq!(qr.rank(), 2);
        // Fit y = 1 + 2x exactly.
        let x = qr.solve_ls(&[1.0, 3.0, 5.0, 7.0]);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
        // Gram inverse oracle for A^T A = [[4, 6], [6, 14]].
        let g = qr.gram_inverse_apply(&[1.0, 0.0]);
        assert!((g[0] - 14.0 / 20.0).abs() < 1e-14 && (g[1] + 6.0 / 20.0).abs() < 1e-14);
    }

    #[test]
    fn single_precision_reconstruction() {
        let mesh = TriMesh::<f32>::uniform_square(6);
        let op = ReconstructionOperator::build(&mesh, 2, ReconstructionOptions { patch_size: None, lambda_samples: 0 })
            .unwrap();
        let vals: Vec<f32> = mesh.barycenters().iter().map(|x| 1.0 + x[0] - 2.0 * x[1]).collect();
        let p = op.reconstruct(&vals).unwrap();
        let x = mesh.triangle(13)[0];
        assert!((p.eval(13, x) - (1.0 + x[0] - 2.0 * x[1])).abs() < 1e-4);
    }
}

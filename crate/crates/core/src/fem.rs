//! Conforming P1 finite elements for the torsion problem and the first
//! Dirichlet eigenvalue, with Richardson extrapolation over nested meshes.
//!
//! Raw values on any mesh are one-sided: the discrete eigenvalue is a
//! Rayleigh quotient over a subspace, so it bounds `lambda_1` from above, and
//! the discrete torsion is a supremum over the same subspace, so it bounds
//! `T` from below. Both are reported as quotients of the computed vectors,
//! which keeps the bounds exact regardless of iterative solver tolerance.

use thiserror::Error;

use crate::geometry::{ConvexPolygon, GeometryError, Vec2};
use crate::mesh::{quality_mesh, refine, triangulate, MeshError, TriMesh};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FemError {
    #[error("triangle {0} has non-positive area")]
    SingularMesh(usize),
    #[error("linear solver failed: {0}")]
    SolverFailure(String),
    #[error("inverse iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("mesh has no interior nodes")]
    NoInteriorNodes,
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub type Result<T> = std::result::Result<T, FemError>;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate entries.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .binary_search(&j)
            .map(|k| self.vals[range.start + k])
            .unwrap_or(0.0)
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.vals[self.row_ptr[i]..self.row_ptr[i + 1]].iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.vals.iter().sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi = acc;
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_into(x, &mut y);
        y
    }

    /// `self + s * other` for a matrix with the same sparsity pattern.
    pub fn add_scaled(&self, other: &CsrMatrix, s: f64) -> CsrMatrix {
        assert!(self.row_ptr == other.row_ptr && self.cols == other.cols, "sparsity patterns differ");
        let vals = self.vals.iter().zip(&other.vals).map(|(a, b)| a + s * b).collect();
        CsrMatrix { vals, ..self.clone() }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).all(|k| (self.vals[k] - self.get(self.cols[k], i)).abs() <= tol)
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients on an SPD matrix. Stops when
/// `||b - Ax|| <= tol ||b||`.
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], x0: Option<&[f64]>, tol: f64) -> Result<Vec<f64>> {
    let n = a.dim();
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    if inv_diag.iter().any(|d| !d.is_finite() || *d <= 0.0) {
        return Err(FemError::SolverFailure("matrix diagonal is not positive".into()));
    }
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = a.mul(&x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let target = tol * dot(b, b).sqrt();
    if dot(&r, &r).sqrt() <= target {
        return Ok(x);
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, d)| ri * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let max_iter = 20 * n + 100;
    for _ in 0..max_iter {
        a.mul_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(FemError::SolverFailure("matrix is not positive definite".into()));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if dot(&r, &r).sqrt() <= target {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(FemError::SolverFailure(format!("CG did not reach {tol:e} in {max_iter} iterations")))
}

/// P1 element matrices of one triangle: stiffness, mass.
fn element(p: [Vec2; 3]) -> ([[f64; 3]; 3], [[f64; 3]; 3], f64) {
    let area = 0.5 * crate::geometry::cross(p[1] - p[0], p[2] - p[0]);
    let b = [p[1].y - p[2].y, p[2].y - p[0].y, p[0].y - p[1].y];
    let c = [p[2].x - p[1].x, p[0].x - p[2].x, p[1].x - p[0].x];
    let mut k = [[0.0; 3]; 3];
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
            m[i][j] = if i == j { area / 6.0 } else { area / 12.0 };
        }
    }
    (k, m, area)
}

/// Stiffness and mass over all nodes, before boundary elimination.
pub fn assemble_full(mesh: &TriMesh) -> Result<(CsrMatrix, CsrMatrix)> {
    let n = mesh.nodes.len();
    let mut kt = Vec::with_capacity(9 * mesh.triangles.len());
    let mut mt = Vec::with_capacity(9 * mesh.triangles.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let (k, m, area) = element(tri.map(|i| mesh.nodes[i]));
        if area <= 0.0 {
            return Err(FemError::SingularMesh(t));
        }
        for i in 0..3 {
            for j in 0..3 {
                kt.push((tri[i], tri[j], k[i][j]));
                mt.push((tri[i], tri[j], m[i][j]));
            }
        }
    }
    Ok((CsrMatrix::from_triplets(n, kt), CsrMatrix::from_triplets(n, mt)))
}

/// Discrete Dirichlet problem on the interior nodes of a mesh.
#[derive(Debug, Clone)]
pub struct FemSystem {
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    /// `int phi_i` for every interior hat function.
    pub load: Vec<f64>,
    /// Node index of each degree of freedom.
    pub dof_nodes: Vec<usize>,
}

pub fn assemble(mesh: &TriMesh) -> Result<FemSystem> {
    let mut dof_of = vec![usize::MAX; mesh.nodes.len()];
    let mut dof_nodes = Vec::new();
    for (i, &b) in mesh.boundary.iter().enumerate() {
        if !b {
            dof_of[i] = dof_nodes.len();
            dof_nodes.push(i);
        }
    }
    let nd = dof_nodes.len();
    if nd == 0 {
        return Err(FemError::NoInteriorNodes);
    }
    let mut kt = Vec::with_capacity(9 * mesh.triangles.len());
    let mut mt = Vec::with_capacity(9 * mesh.triangles.len());
    let mut load = vec![0.0; nd];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let (k, m, area) = element(tri.map(|i| mesh.nodes[i]));
        if area <= 0.0 {
            return Err(FemError::SingularMesh(t));
        }
        for i in 0..3 {
            let di = dof_of[tri[i]];
            if di == usize::MAX {
                continue;
            }
            load[di] += area / 3.0;
            for j in 0..3 {
                let dj = dof_of[tri[j]];
                if dj != usize::MAX {
                    kt.push((di, dj, k[i][j]));
                    mt.push((di, dj, m[i][j]));
                }
            }
        }
    }
    Ok(FemSystem {
        stiffness: CsrMatrix::from_triplets(nd, kt),
        mass: CsrMatrix::from_triplets(nd, mt),
        load,
        dof_nodes,
    })
}

/// Nodal values on a mesh; zero on boundary nodes.
#[derive(Debug, Clone)]
pub struct ScalarField<'a> {
    pub mesh: &'a TriMesh,
    pub values: Vec<f64>,
}

impl<'a> ScalarField<'a> {
    fn from_dofs(mesh: &'a TriMesh, sys: &FemSystem, dofs: &[f64]) -> Self {
        let mut values = vec![0.0; mesh.nodes.len()];
        for (&node, &v) in sys.dof_nodes.iter().zip(dofs) {
            values[node] = v;
        }
        Self { mesh, values }
    }
}

/// Tolerances for the linear and eigenvalue solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative residual of linear solves.
    pub cg_tol: f64,
    /// Relative residual of the correction solves inside the eigensolver.
    pub correction_tol: f64,
    /// Relative eigen-residual `|K u - lambda M u| / |K u|` at convergence.
    pub eig_tol: f64,
    pub eig_max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { cg_tol: 1e-12, correction_tol: 1e-6, eig_tol: 1e-10, eig_max_iter: 500 }
    }
}

/// Torsion function and `T = (int w)^2 / int |grad w|^2`.
pub fn solve_torsion(mesh: &TriMesh) -> Result<(ScalarField<'_>, f64)> {
    let sys = assemble(mesh)?;
    let (w, t) = torsion_dofs(&sys, None, &SolverOptions::default())?;
    Ok((ScalarField::from_dofs(mesh, &sys, &w), t))
}

fn torsion_dofs(sys: &FemSystem, guess: Option<&[f64]>, opts: &SolverOptions) -> Result<(Vec<f64>, f64)> {
    let w = conjugate_gradient(&sys.stiffness, &sys.load, guess, opts.cg_tol)?;
    let num = dot(&sys.load, &w);
    let den = dot(&w, &sys.stiffness.mul(&w));
    Ok((w, num * num / den))
}

/// First eigenpair by inverse iteration. The eigenfunction has unit L2
/// norm and is positive at the interior node nearest the centroid.
pub fn solve_lambda1(mesh: &TriMesh) -> Result<(ScalarField<'_>, f64)> {
    let sys = assemble(mesh)?;
    let shift = eigen_shift(mesh);
    let (u, lambda) = lambda1_dofs(&sys, None, shift, &SolverOptions::default())?;
    let mut field = ScalarField::from_dofs(mesh, &sys, &u);
    orient_positive(&mut field);
    Ok((field, lambda))
}

fn orient_positive(field: &mut ScalarField<'_>) {
    let mesh = field.mesh;
    let c = mesh.nodes.iter().sum::<Vec2>() / mesh.nodes.len() as f64;
    let pivot = (0..mesh.nodes.len())
        .filter(|&i| !mesh.boundary[i])
        .min_by(|&i, &j| (mesh.nodes[i] - c).norm().total_cmp(&(mesh.nodes[j] - c).norm()));
    if let Some(i) = pivot {
        if field.values[i] < 0.0 {
            field.values.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

/// A guaranteed lower bound for the discrete first eigenvalue: the
/// Hersh-Protter bound `pi^2 / (4 rho^2)` of the convex hull of the boundary
/// nodes, which contains the meshed domain. Shifting by it keeps the shifted
/// operator positive definite while separating nearly equal eigenvalues of
/// elongated shapes.
pub fn eigen_shift(mesh: &TriMesh) -> f64 {
    let pts: Vec<Vec2> = mesh.nodes.iter().zip(&mesh.boundary).filter(|(_, &b)| b).map(|(p, _)| *p).collect();
    match ConvexPolygon::new(crate::geometry::convex_hull(&pts)) {
        Ok(hull) => 0.99 * std::f64::consts::PI.powi(2) / (4.0 * hull.inradius().powi(2)),
        Err(_) => 0.0,
    }
}

fn lambda1_dofs(sys: &FemSystem, start: Option<&[f64]>, shift: f64, opts: &SolverOptions) -> Result<(Vec<f64>, f64)> {
    let m = &sys.mass;
    let shifted = sys.stiffness.add_scaled(m, -shift);
    let k = &sys.stiffness;
    let mut u = match start {
        Some(s) => s.to_vec(),
        // The torsion function is already close to the ground state.
        None => conjugate_gradient(k, &sys.load, None, 1e-8)?,
    };
    let m_norm = |v: &[f64]| dot(v, &m.mul(v)).sqrt();
    let norm = m_norm(&u);
    u.iter_mut().for_each(|x| *x /= norm);
    let mut direction: Option<Vec<f64>> = None;
    let mut residual = f64::INFINITY;
    for _ in 0..opts.eig_max_iter {
        let ku = k.mul(&u);
        let mu = m.mul(&u);
        let lambda = dot(&u, &ku) / dot(&u, &mu);
        let r: f64 = ku.iter().zip(&mu).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        residual = r / dot(&ku, &ku).sqrt();
        if residual <= opts.eig_tol {
            return Ok((u, lambda));
        }
        // Rayleigh-Ritz over the current vector, the shifted-inverse
        // correction (K - shift M)^-1 r and the previous search direction.
        // span{u, (K - shift M)^-1 r} is the span of u and one step of
        // shifted inverse iteration. The correction acts as a preconditioned
        // residual, so a moderately accurate solve suffices; the eigenvalue
        // itself is always an exact Rayleigh quotient.
        let r: Vec<f64> = ku.iter().zip(&mu).map(|(a, b)| a - lambda * b).collect();
        let w = conjugate_gradient(&shifted, &r, None, opts.correction_tol)?;
        let mut basis = vec![u.clone()];
        for v in std::iter::once(w).chain(direction.take()) {
            if let Some(q) = m_orthonormalize(m, &basis, v) {
                basis.push(q);
            }
        }
        // Couplings to u go through the explicit residual: q_j' K u = q_j' r
        // when q_j is M-orthogonal to u, which avoids cancellation near
        // convergence.
        let kq: Vec<Vec<f64>> = basis.iter().skip(1).map(|q| k.mul(q)).collect();
        let dim = basis.len();
        let a = nalgebra::DMatrix::from_fn(dim, dim, |i, j| match (i, j) {
            (0, 0) => lambda,
            (0, j) => dot(&basis[j], &r),
            (i, 0) => dot(&basis[i], &r),
            (i, j) => 0.5 * (dot(&basis[i], &kq[j - 1]) + dot(&basis[j], &kq[i - 1])),
        });
        let c = smallest_ritz_vector(&a);
        let mut next = vec![0.0; u.len()];
        let mut step = vec![0.0; u.len()];
        for (i, q) in basis.iter().enumerate() {
            for (j, &qj) in q.iter().enumerate() {
                next[j] += c[i] * qj;
                if i > 0 {
                    step[j] += c[i] * qj;
                }
            }
        }
        let norm = m_norm(&next);
        next.iter_mut().for_each(|x| *x /= norm);
        u = next;
        direction = (dim > 1).then_some(step);
    }
    Err(FemError::NonConvergence { iterations: opts.eig_max_iter, residual })
}

/// Eigenvector of the smallest eigenvalue of a small symmetric matrix whose
/// first basis vector is already a good approximation, scaled so that its
/// first component is positive. A dense eigensolver resolves the remaining
/// components only to `eps * |A|`, which near convergence is coarser than
/// the components themselves, so the result is polished by fixed-point
/// iteration on `c' = -(B - theta)^-1 a`, `theta = a_00 + a' c'`.
fn smallest_ritz_vector(a: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let eig = a.clone().symmetric_eigen();
    let imin = eig.eigenvalues.imin();
    let mut c: Vec<f64> = eig.eigenvectors.column(imin).iter().copied().collect();
    if c[0] < 0.0 {
        c.iter_mut().for_each(|x| *x = -*x);
    }
    if n == 1 || c[0] < 0.9 {
        return c;
    }
    let coupling = a.view((1, 0), (n - 1, 1)).clone_owned();
    let block = a.view((1, 1), (n - 1, n - 1)).clone_owned();
    let mut theta = eig.eigenvalues[imin];
    let mut tail = nalgebra::DMatrix::<f64>::zeros(n - 1, 1);
    for _ in 0..3 {
        let shifted = &block - nalgebra::DMatrix::<f64>::identity(n - 1, n - 1) * theta;
        match shifted.cholesky() {
            Some(ch) => tail = -ch.solve(&coupling),
            None => return c,
        }
        theta = a[(0, 0)] + (coupling.transpose() * &tail)[(0, 0)];
    }
    let norm = (1.0 + tail.norm_squared()).sqrt();
    std::iter::once(1.0 / norm).chain(tail.iter().map(|t| t / norm)).collect()
}

/// Removes the M-projection onto an M-orthonormal basis (twice, for
/// stability) and normalizes; `None` if nothing independent is left.
fn m_orthonormalize(m: &CsrMatrix, basis: &[Vec<f64>], mut v: Vec<f64>) -> Option<Vec<f64>> {
    let original = dot(&v, &m.mul(&v)).sqrt();
    for _ in 0..2 {
        let mv = m.mul(&v);
        for q in basis {
            let c = dot(q, &mv);
            v.iter_mut().zip(q).for_each(|(x, qi)| *x -= c * qi);
        }
    }
    let norm = dot(&v, &m.mul(&v)).sqrt();
    if !(norm > 1e-13 * original) {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(v)
}

/// Richardson extrapolation over a sequence of values on meshes whose size
/// halves at every level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolation {
    pub value: f64,
    /// Absolute error estimate.
    pub error: f64,
    /// Convergence order used.
    pub order: f64,
}

/// Assumes order 2 unless three or more levels give an observed order that
/// differs from 2 by more than 0.3. The error estimate is the difference of
/// the last two order-2 extrapolants plus the shift caused by switching to
/// the observed order.
pub fn richardson(values: &[f64]) -> Extrapolation {
    let ext = |coarse: f64, fine: f64, p: f64| fine + (fine - coarse) / (2f64.powf(p) - 1.0);
    match values.len() {
        0 => Extrapolation { value: f64::NAN, error: f64::NAN, order: f64::NAN },
        1 => Extrapolation { value: values[0], error: f64::NAN, order: f64::NAN },
        2 => {
            let v = ext(values[0], values[1], 2.0);
            Extrapolation { value: v, error: (v - values[1]).abs(), order: 2.0 }
        }
        n => {
            let (f0, f1, f2) = (values[n - 3], values[n - 2], values[n - 1]);
            let e1 = ext(f0, f1, 2.0);
            let e2 = ext(f1, f2, 2.0);
            let ratio = (f1 - f0) / (f2 - f1);
            let observed = if ratio > 1.0 && ratio.is_finite() { ratio.log2() } else { f64::NAN };
            let order = if observed.is_finite() && (observed - 2.0).abs() > 0.3 {
                observed.clamp(0.5, 4.0)
            } else {
                2.0
            };
            let value = ext(f1, f2, order);
            Extrapolation { value, error: (e2 - e1).abs() + (value - e2).abs(), order }
        }
    }
}

/// How the coarsest mesh of the hierarchy is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshKind {
    /// Constrained Delaunay with a minimum angle.
    Quality,
    /// Fan from the centroid with uniform splits.
    Fan,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FemConfig {
    /// Number of nested meshes, each a midpoint refinement of the previous.
    pub levels: usize,
    /// Coarsest mesh size is `diameter / base_h_divisor`, capped at the
    /// inradius.
    pub base_h_divisor: f64,
    pub mesh: MeshKind,
    pub solver: SolverOptions,
}

impl Default for FemConfig {
    fn default() -> Self {
        Self { levels: 3, base_h_divisor: 12.0, mesh: MeshKind::Quality, solver: SolverOptions::default() }
    }
}

impl FemConfig {
    pub fn with_levels(levels: usize) -> Self {
        Self { levels, ..Self::default() }
    }
}

/// Scale-invariant diagram coordinates of a shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeMetrics {
    pub area: f64,
    pub lambda1: f64,
    pub torsion: f64,
    /// `lambda1 * area`.
    pub x: f64,
    /// `area^2 / torsion`.
    pub y: f64,
    /// Relative error estimates of the extrapolated values.
    pub lambda1_err: f64,
    pub torsion_err: f64,
    /// Unextrapolated values on the finest mesh, at the original scale.
    pub raw_lambda1: f64,
    pub raw_torsion: f64,
    pub lambda1_order: f64,
    pub torsion_order: f64,
}

impl ShapeMetrics {
    pub fn raw_x(&self) -> f64 {
        self.raw_lambda1 * self.area
    }

    pub fn raw_y(&self) -> f64 {
        self.area * self.area / self.raw_torsion
    }
}

/// Solves on `levels` nested meshes and extrapolates.
pub fn evaluate_shape(polygon: &ConvexPolygon, levels: usize) -> Result<ShapeMetrics> {
    evaluate_shape_with(polygon, &FemConfig::with_levels(levels))
}

pub fn evaluate_shape_with(polygon: &ConvexPolygon, config: &FemConfig) -> Result<ShapeMetrics> {
    let area = polygon.area();
    let unit = polygon.normalize_to_unit_area().centered();
    // Thin shapes need a few elements across their width as well, and the
    // coarsest mesh needs at least one interior node.
    let mut h = (unit.diameter() / config.base_h_divisor).min(unit.inradius());
    let base = loop {
        let mesh = match config.mesh {
            MeshKind::Quality => quality_mesh(&unit, h)?,
            MeshKind::Fan => triangulate(&unit, h),
        };
        if mesh.boundary.iter().any(|&b| !b) || h < 1e-3 * unit.inradius() {
            break mesh;
        }
        h *= 0.5;
    };
    let unit_metrics = evaluate_hierarchy(base, config)?;
    Ok(rescale(&unit_metrics, area))
}

/// Metrics of a unit-area domain reported at area `area`.
fn rescale(m: &ShapeMetrics, area: f64) -> ShapeMetrics {
    ShapeMetrics {
        area,
        lambda1: m.x / area,
        torsion: area * area / m.y,
        raw_lambda1: m.raw_lambda1 / area,
        raw_torsion: m.raw_torsion * area * area,
        ..*m
    }
}

/// Solves on `base` and its successive midpoint refinements. The mesh must
/// discretize a unit-area domain.
pub fn evaluate_hierarchy(base: TriMesh, config: &FemConfig) -> Result<ShapeMetrics> {
    let levels = config.levels.max(1);
    let mut lambdas = Vec::with_capacity(levels);
    let mut torsions = Vec::with_capacity(levels);
    let mut mesh = base;
    let mut prev: Option<(TriMesh, Vec<f64>, Vec<f64>)> = None;
    let shift = eigen_shift(&mesh);
    for level in 0..levels {
        if level > 0 {
            let next = refine(&mesh);
            prev = prev.map(|(_, u, w)| (std::mem::replace(&mut mesh, next), u, w));
            if prev.is_none() {
                mesh = refine(&mesh);
            }
        }
        let sys = assemble(&mesh)?;
        let (guess_u, guess_w) = match &prev {
            Some((coarse, u, w)) => {
                let parents = coarse.midpoint_parents();
                (
                    Some(restrict(&sys, &prolong(coarse, &parents, u))),
                    Some(restrict(&sys, &prolong(coarse, &parents, w))),
                )
            }
            None => (None, None),
        };
        let (w, t) = torsion_dofs(&sys, guess_w.as_deref(), &config.solver)?;
        let (u, l) = lambda1_dofs(&sys, guess_u.as_deref().or(Some(&w)), shift, &config.solver)?;
        lambdas.push(l);
        torsions.push(t);
        let field_u = ScalarField::from_dofs(&mesh, &sys, &u).values;
        let field_w = ScalarField::from_dofs(&mesh, &sys, &w).values;
        prev = Some((mesh.clone(), field_u, field_w));
    }
    let area = mesh.area();
    let le = richardson(&lambdas);
    let te = richardson(&torsions);
    Ok(ShapeMetrics {
        area,
        lambda1: le.value,
        torsion: te.value,
        x: le.value * area,
        y: area * area / te.value,
        lambda1_err: le.error / le.value.abs(),
        torsion_err: te.error / te.value.abs(),
        raw_lambda1: *lambdas.last().unwrap(),
        raw_torsion: *torsions.last().unwrap(),
        lambda1_order: le.order,
        torsion_order: te.order,
    })
}

/// Linear interpolation of nodal values onto the midpoint refinement.
fn prolong(coarse: &TriMesh, parents: &[(usize, usize)], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(coarse.nodes.len() + parents.len());
    out.extend_from_slice(values);
    out.extend(parents.iter().map(|&(i, j)| 0.5 * (values[i] + values[j])));
    out
}

fn restrict(sys: &FemSystem, nodal: &[f64]) -> Vec<f64> {
    sys.dof_nodes.iter().map(|&n| nodal[n]).collect()
}

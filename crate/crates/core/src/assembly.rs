//! P1 discretization of the truncated DtN problem and its direct solution.

use std::f64::consts::PI;
use std::fmt::Write as _;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use num_complex::Complex64;

use crate::dtn::{mat_vec, DtnSpectrum, FourierProjector, Material, Vec2};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, VertexTag};
use crate::problem::{Incident, ProblemConfig};
use crate::specfun::hankel1;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Which terms of the sesquilinear form to assemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Terms {
    pub stiffness: bool,
    pub mass: bool,
    pub dtn: bool,
}

impl Terms {
    pub const ALL: Terms = Terms { stiffness: true, mass: true, dtn: true };
}

/// Compressed-column matrix with unique, row-sorted entries per column.
#[derive(Clone, Debug)]
pub struct CscMatrix {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<Complex64>,
}

impl CscMatrix {
    /// Sums duplicates; the result does not depend on the triplet order.
    pub fn from_triplets(n: usize, mut entries: Vec<(usize, usize, Complex64)>) -> Self {
        entries.sort_by_key(|e| (e.1, e.0));
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(i);
                values.push(v);
                col_ptr[j + 1] += 1;
                last = Some((i, j));
            }
        }
        for j in 0..n {
            col_ptr[j + 1] += col_ptr[j];
        }
        CscMatrix { n, col_ptr, row_idx, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let rows = &self.row_idx[self.col_ptr[j]..self.col_ptr[j + 1]];
        match rows.binary_search(&i) {
            Ok(k) => self.values[self.col_ptr[j] + k],
            Err(_) => ZERO,
        }
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![ZERO; self.n];
        for j in 0..self.n {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[k]] += self.values[k] * x[j];
            }
        }
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max |A_ij - A_ji|` over the stored pattern.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.n {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                let i = self.row_idx[k];
                worst = worst.max((self.values[k] - self.get(j, i)).norm());
            }
        }
        worst
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, Complex64>> {
        let mut trip = Vec::with_capacity(self.nnz());
        for j in 0..self.n {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                trip.push(Triplet::new(self.row_idx[k], j, self.values[k]));
            }
        }
        SparseColMat::try_new_from_triplets(self.n, self.n, &trip)
            .map_err(|e| Error::SingularSystem(format!("sparse matrix creation failed: {e:?}")))
    }
}

/// Discrete system over the free (non-Dirichlet) vertices. Unknown `2 f + c`
/// is Cartesian component `c` at the vertex with free index `f`.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub generation: u64,
    pub matrix: CscMatrix,
    pub rhs: Vec<Complex64>,
    pub free_index: Vec<Option<usize>>,
    /// Prescribed values, `Some` exactly on Dirichlet vertices.
    pub dirichlet: Vec<Option<Vec2>>,
    /// Unknown indices of the outer-boundary block, in angle order.
    pub outer_dofs: Vec<usize>,
}

impl LinearSystem {
    pub fn dimension(&self) -> usize {
        self.matrix.n
    }

    /// `||A x - b|| / ||b||` (or `||A x||` when `b = 0`).
    pub fn relative_residual(&self, x: &[Complex64]) -> f64 {
        let ax = self.matrix.mul_vec(x);
        let r: f64 = ax.iter().zip(&self.rhs).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let b: f64 = self.rhs.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if b > 0.0 {
            r / b
        } else {
            r
        }
    }
}

/// Nodal P1 field with Cartesian components.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionField {
    pub generation: u64,
    pub values: Vec<Vec2>,
    pub dirichlet: Vec<bool>,
}

impl SolutionField {
    pub fn zeros(mesh: &Mesh) -> Self {
        SolutionField {
            generation: mesh.generation,
            values: vec![[ZERO; 2]; mesh.vertex_count()],
            dirichlet: mesh.tags.iter().map(|&t| t == VertexTag::Obstacle).collect(),
        }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: &Mesh, f: impl Fn([f64; 2]) -> Vec2) -> Self {
        SolutionField {
            generation: mesh.generation,
            values: mesh.vertices.iter().map(|&p| f(p)).collect(),
            dirichlet: mesh.tags.iter().map(|&t| t == VertexTag::Obstacle).collect(),
        }
    }

    pub fn difference(&self, other: &SolutionField) -> Result<SolutionField> {
        if self.generation != other.generation || self.values.len() != other.values.len() {
            return Err(Error::MeshMismatch { expected: self.generation, found: other.generation });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| [a[0] - b[0], a[1] - b[1]])
            .collect();
        Ok(SolutionField { generation: self.generation, values, dirichlet: self.dirichlet.clone() })
    }

    /// Constant gradient on a triangle: `grad[c][d] = d u_c / d x_d`.
    pub fn gradient(&self, mesh: &Mesh, t: usize) -> [[Complex64; 2]; 2] {
        let (g, _) = basis_gradients(mesh, t);
        let tri = mesh.triangles[t];
        let mut out = [[ZERO; 2]; 2];
        for (k, &v) in tri.iter().enumerate() {
            for c in 0..2 {
                for d in 0..2 {
                    out[c][d] += self.values[v][c] * g[k][d];
                }
            }
        }
        out
    }

    pub fn divergence(&self, mesh: &Mesh, t: usize) -> Complex64 {
        let g = self.gradient(mesh, t);
        g[0][0] + g[1][1]
    }

    fn check(&self, mesh: &Mesh) -> Result<()> {
        if self.generation != mesh.generation || self.values.len() != mesh.vertex_count() {
            return Err(Error::MeshMismatch { expected: mesh.generation, found: self.generation });
        }
        Ok(())
    }
}

/// Gradients of the three barycentric basis functions and the area.
pub fn basis_gradients(mesh: &Mesh, t: usize) -> ([[f64; 2]; 3], f64) {
    let p = mesh.corners(t);
    let area = mesh.area(t);
    let mut g = [[0.0; 2]; 3];
    for k in 0..3 {
        let (a, b) = (p[(k + 1) % 3], p[(k + 2) % 3]);
        g[k] = [(a[1] - b[1]) / (2.0 * area), (b[0] - a[0]) / (2.0 * area)];
    }
    (g, area)
}

/// `(int_K |u|^2, int_K |grad u|^2, int_K |div u|^2)` for a P1 field, exact.
fn element_integrals(mesh: &Mesh, field: &SolutionField, t: usize) -> (f64, f64, f64) {
    let area = mesh.area(t);
    let tri = mesh.triangles[t];
    let mut l2 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let w = if i == j { area / 6.0 } else { area / 12.0 };
            let (ui, uj) = (field.values[tri[i]], field.values[tri[j]]);
            l2 += w * (ui[0] * uj[0].conj() + ui[1] * uj[1].conj()).re;
        }
    }
    let g = field.gradient(mesh, t);
    let grad = area * g.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>();
    let div = area * (g[0][0] + g[1][1]).norm_sqr();
    (l2, grad, div)
}

pub fn h1_norm(mesh: &Mesh, field: &SolutionField) -> Result<f64> {
    field.check(mesh)?;
    let mut total = 0.0;
    for t in 0..mesh.triangle_count() {
        let (l2, grad, _) = element_integrals(mesh, field, t);
        total += l2 + grad;
    }
    Ok(total.sqrt())
}

/// `(mu ||grad u||^2 + (lambda + mu) ||div u||^2 + omega^2 ||u||^2)^{1/2}`.
pub fn energy_norm(mesh: &Mesh, field: &SolutionField, material: &Material) -> Result<f64> {
    field.check(mesh)?;
    let mut total = 0.0;
    for t in 0..mesh.triangle_count() {
        let (l2, grad, div) = element_integrals(mesh, field, t);
        total += material.mu * grad + (material.lambda + material.mu) * div + material.omega.powi(2) * l2;
    }
    Ok(total.sqrt())
}

/// Incident wave at the given points.
pub fn incident_field(config: &ProblemConfig, points: &[[f64; 2]]) -> Result<Vec<Vec2>> {
    let (k1, k2) = (config.kappa1(), config.kappa2());
    points
        .iter()
        .map(|&[x, y]| match config.incident {
            Incident::PlaneWave { direction: d } => {
                let phase = Complex64::from_polar(1.0, k1 * (x * d[0] + y * d[1]));
                Ok([phase * d[0], phase * d[1]])
            }
            Incident::Radial => {
                let r = x.hypot(y);
                if r == 0.0 {
                    return Err(Error::OriginEvaluation);
                }
                let a = k1 * hankel1(0, k1 * r)?.h_prime / r;
                let b = k2 * hankel1(0, k2 * r)?.h_prime / r;
                Ok([-(a * x) - b * y, -(a * y) + b * x])
            }
        })
        .collect()
}

/// `||u_inc||_{H^1}` of the nodal interpolant on `mesh`.
pub fn incident_h1(config: &ProblemConfig, mesh: &Mesh) -> Result<f64> {
    let values = incident_field(config, &mesh.vertices)?;
    let field = SolutionField {
        generation: mesh.generation,
        values,
        dirichlet: vec![false; mesh.vertex_count()],
    };
    h1_norm(mesh, &field)
}

/// Scattered-field Dirichlet data `-u_inc` on the obstacle vertices.
pub fn obstacle_data(config: &ProblemConfig, mesh: &Mesh) -> Result<Vec<Option<Vec2>>> {
    let mut out = vec![None; mesh.vertex_count()];
    let idx: Vec<usize> = (0..mesh.vertex_count()).filter(|&v| mesh.tags[v] == VertexTag::Obstacle).collect();
    let pts: Vec<[f64; 2]> = idx.iter().map(|&v| mesh.vertices[v]).collect();
    for (&v, u) in idx.iter().zip(incident_field(config, &pts)?) {
        out[v] = Some([-u[0], -u[1]]);
    }
    Ok(out)
}

/// Per-triangle local matrix: entry `[2i + a][2j + b]` is the form applied to
/// trial `phi_j e_b` and test `phi_i e_a`.
fn local_matrix(mesh: &Mesh, t: usize, material: &Material, terms: Terms) -> [[f64; 6]; 6] {
    let (g, area) = basis_gradients(mesh, t);
    let (mu, lm) = (material.mu, material.lambda + material.mu);
    let w2 = material.omega * material.omega;
    let mut k = [[0.0; 6]; 6];
    for i in 0..3 {
        for j in 0..3 {
            for a in 0..2 {
                for b in 0..2 {
                    let mut v = 0.0;
                    if terms.stiffness {
                        if a == b {
                            v += mu * area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                        }
                        v += lm * area * g[i][a] * g[j][b];
                    }
                    if terms.mass && a == b {
                        v -= w2 * area * if i == j { 1.0 / 6.0 } else { 1.0 / 12.0 };
                    }
                    k[2 * i + a][2 * j + b] = v;
                }
            }
        }
    }
    k
}

/// Rotation taking Cartesian to polar components at `theta`.
fn polar_rotation(theta: f64) -> [[f64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    [[c, s], [-s, c]]
}

/// `2 pi R * C^H blockdiag(M_n) C` where `C` maps the Cartesian outer nodal
/// values to polar Fourier coefficients.
pub fn dtn_block(spectrum: &DtnSpectrum, angles: &[f64]) -> Result<Mat<Complex64>> {
    let projector = FourierProjector::new(angles, spectrum.truncation_n)?;
    let m = angles.len();
    let modes = 2 * spectrum.truncation_n + 1;
    let rot: Vec<[[f64; 2]; 2]> = angles.iter().map(|&t| polar_rotation(t)).collect();
    let mut c = Mat::<Complex64>::zeros(2 * modes, 2 * m);
    for (mi, mode) in spectrum.modes.iter().enumerate() {
        for k in 0..m {
            let w = projector.weight(mode.n, k);
            for i in 0..2 {
                for a in 0..2 {
                    c[(2 * mi + i, 2 * k + a)] = w * rot[k][i][a];
                }
            }
        }
    }
    let mut g = Mat::<Complex64>::zeros(2 * modes, 2 * m);
    for (mi, mode) in spectrum.modes.iter().enumerate() {
        let mm = mode.matrix;
        for col in 0..2 * m {
            let (c0, c1) = (c[(2 * mi, col)], c[(2 * mi + 1, col)]);
            g[(2 * mi, col)] = mm[0][0] * c0 + mm[0][1] * c1;
            g[(2 * mi + 1, col)] = mm[1][0] * c0 + mm[1][1] * c1;
        }
    }
    let scale = Complex64::new(2.0 * PI * spectrum.radius, 0.0);
    let d = c.adjoint() * &g;
    Ok(Mat::from_fn(2 * m, 2 * m, |i, j| d[(i, j)] * scale))
}

/// General assembly: `dirichlet[v]` prescribes the value at vertex `v`.
pub fn assemble_with(
    mesh: &Mesh,
    material: &Material,
    spectrum: Option<&DtnSpectrum>,
    terms: Terms,
    dirichlet: &[Option<Vec2>],
) -> Result<LinearSystem> {
    if dirichlet.len() != mesh.vertex_count() {
        return Err(Error::MeshMismatch { expected: mesh.vertex_count() as u64, found: dirichlet.len() as u64 });
    }
    let mut free_index = vec![None; mesh.vertex_count()];
    let mut n_free = 0;
    for v in 0..mesh.vertex_count() {
        if dirichlet[v].is_none() {
            free_index[v] = Some(n_free);
            n_free += 1;
        }
    }
    let n = 2 * n_free;
    let mut rhs = vec![ZERO; n];
    let mut entries: Vec<(usize, usize, Complex64)> = Vec::with_capacity(36 * mesh.triangle_count());

    // Adds the form value for trial dof (vj, b), test dof (vi, a).
    let mut add = |vi: usize, a: usize, vj: usize, b: usize, value: Complex64, entries: &mut Vec<_>| {
        let Some(fi) = free_index[vi] else { return };
        let row = 2 * fi + a;
        match (free_index[vj], dirichlet[vj]) {
            (Some(fj), _) => entries.push((row, 2 * fj + b, value)),
            (None, Some(g)) => rhs[row] -= value * g[b],
            (None, None) => unreachable!(),
        }
    };

    for t in 0..mesh.triangle_count() {
        if mesh.area(t) < 1e-16 {
            return Err(Error::SingularElement(t));
        }
        let k = local_matrix(mesh, t, material, terms);
        let tri = mesh.triangles[t];
        for i in 0..3 {
            for j in 0..3 {
                for a in 0..2 {
                    for b in 0..2 {
                        let v = k[2 * i + a][2 * j + b];
                        if v != 0.0 {
                            add(tri[i], a, tri[j], b, Complex64::new(v, 0.0), &mut entries);
                        }
                    }
                }
            }
        }
    }

    let (outer, angles) = mesh.outer_vertices();
    let mut outer_dofs = Vec::new();
    if let (Some(spectrum), true) = (spectrum, terms.dtn) {
        let d = dtn_block(spectrum, &angles)?;
        for (k, &vk) in outer.iter().enumerate() {
            for (l, &vl) in outer.iter().enumerate() {
                for a in 0..2 {
                    for b in 0..2 {
                        add(vk, a, vl, b, -d[(2 * k + a, 2 * l + b)], &mut entries);
                    }
                }
            }
        }
    }
    for &v in &outer {
        if let Some(f) = free_index[v] {
            outer_dofs.extend([2 * f, 2 * f + 1]);
        }
    }

    Ok(LinearSystem {
        generation: mesh.generation,
        matrix: CscMatrix::from_triplets(n, entries),
        rhs,
        free_index,
        dirichlet: dirichlet.to_vec(),
        outer_dofs,
    })
}

/// Scattering system: all terms, `g = -u_inc` on the obstacle.
pub fn assemble(mesh: &Mesh, config: &ProblemConfig, spectrum: &DtnSpectrum) -> Result<LinearSystem> {
    config.validate()?;
    let g = obstacle_data(config, mesh)?;
    assemble_with(mesh, &Material::from(config), Some(spectrum), Terms::ALL, &g)
}

/// Sparse LU solve of `A x = b`; fails when the residual check does not hold.
pub fn solve_linear(matrix: &CscMatrix, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    if matrix.n == 0 {
        return Ok(Vec::new());
    }
    let a = matrix.to_faer()?;
    let lu = a.sp_lu().map_err(|e| Error::SingularSystem(format!("{e:?}")))?;
    let b = Mat::from_fn(matrix.n, 1, |i, _| rhs[i]);
    let x = lu.solve(&b);
    let x: Vec<Complex64> = (0..matrix.n).map(|i| x[(i, 0)]).collect();
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::SingularSystem("non-finite solution".into()));
    }
    Ok(x)
}

pub fn solve(system: &LinearSystem) -> Result<SolutionField> {
    let x = solve_linear(&system.matrix, &system.rhs)?;
    let residual = system.relative_residual(&x);
    if !(residual <= 1e-10) {
        return Err(Error::SingularSystem(format!("relative residual {residual:e} after factorization")));
    }
    let values = system
        .free_index
        .iter()
        .zip(&system.dirichlet)
        .map(|(f, g)| match (f, g) {
            (Some(f), _) => [x[2 * f], x[2 * f + 1]],
            (None, Some(g)) => *g,
            (None, None) => unreachable!(),
        })
        .collect();
    Ok(SolutionField {
        generation: system.generation,
        values,
        dirichlet: system.dirichlet.iter().map(Option::is_some).collect(),
    })
}

/// `max_i |b_N(u, phi_i)|` over free basis functions, and the matching scale
/// `max_i sum |terms|`, evaluated from element gradients and the boundary
/// Fourier coefficients rather than from the assembled matrix.
pub fn galerkin_residual(
    mesh: &Mesh,
    material: &Material,
    spectrum: &DtnSpectrum,
    field: &SolutionField,
) -> Result<(f64, f64)> {
    field.check(mesh)?;
    let nv = mesh.vertex_count();
    let mut res = vec![[ZERO; 2]; nv];
    let mut scale = vec![[0.0f64; 2]; nv];
    let (mu, lm, w2) = (material.mu, material.lambda + material.mu, material.omega.powi(2));
    for t in 0..mesh.triangle_count() {
        let (g, area) = basis_gradients(mesh, t);
        let tri = mesh.triangles[t];
        let grad = field.gradient(mesh, t);
        let div = grad[0][0] + grad[1][1];
        let u = &field.values;
        // edge-midpoint rule for the mass term
        let mids: Vec<([f64; 3], Vec2)> = (0..3)
            .map(|k| {
                let (i, j) = ((k + 1) % 3, (k + 2) % 3);
                let mut lam = [0.0; 3];
                lam[i] = 0.5;
                lam[j] = 0.5;
                (lam, [0.5 * (u[tri[i]][0] + u[tri[j]][0]), 0.5 * (u[tri[i]][1] + u[tri[j]][1])])
            })
            .collect();
        for i in 0..3 {
            for a in 0..2 {
                let stiff = mu * area * (grad[a][0] * g[i][0] + grad[a][1] * g[i][1]);
                let divt = lm * area * div * g[i][a];
                let mass: Complex64 = mids.iter().map(|(lam, u)| u[a] * lam[i]).sum::<Complex64>() * (w2 * area / 3.0);
                res[tri[i]][a] += stiff + divt - mass;
                scale[tri[i]][a] += stiff.norm() + divt.norm() + mass.norm();
            }
        }
    }
    let (outer, angles) = mesh.outer_vertices();
    let projector = FourierProjector::new(&angles, spectrum.truncation_n)?;
    let polar: Vec<Vec2> = outer
        .iter()
        .zip(&angles)
        .map(|(&v, &t)| crate::dtn::to_polar(&field.values[v], t))
        .collect();
    let un = projector.project(&polar);
    let mun: Vec<Vec2> = spectrum.modes.iter().zip(&un.values).map(|(m, u)| mat_vec(&m.matrix, u)).collect();
    let two_pi_r = 2.0 * PI * spectrum.radius;
    for (k, (&v, &theta)) in outer.iter().zip(&angles).enumerate() {
        let rot = polar_rotation(theta);
        for a in 0..2 {
            let mut acc = ZERO;
            let mut mag = 0.0;
            for (mode, mu_n) in spectrum.modes.iter().zip(&mun) {
                let w = projector.weight(mode.n, k).conj();
                let term = (mu_n[0] * rot[0][a] + mu_n[1] * rot[1][a]) * w;
                acc += term;
                mag += term.norm();
            }
            res[v][a] -= acc * two_pi_r;
            scale[v][a] += mag * two_pi_r;
        }
    }
    let mut worst: f64 = 0.0;
    let mut worst_scale: f64 = 0.0;
    for v in (0..nv).filter(|&v| !field.dirichlet[v]) {
        for a in 0..2 {
            worst = worst.max(res[v][a].norm());
            worst_scale = worst_scale.max(scale[v][a]);
        }
    }
    Ok((worst, worst_scale))
}

/// `vertex,x,y,re_ux,im_ux,re_uy,im_uy` lines with a header.
pub fn solution_csv(mesh: &Mesh, field: &SolutionField) -> String {
    let mut out = String::from("vertex,x,y,re_ux,im_ux,re_uy,im_uy\n");
    for (v, (p, u)) in mesh.vertices.iter().zip(&field.values).enumerate() {
        let _ = writeln!(out, "{v},{:?},{:?},{:?},{:?},{:?},{:?}", p[0], p[1], u[0].re, u[0].im, u[1].re, u[1].im);
    }
    out
}

/// `|u|` at each triangle centroid.
pub fn triangle_magnitudes(mesh: &Mesh, field: &SolutionField) -> Vec<f64> {
    mesh.triangles
        .iter()
        .map(|tri| {
            let mut u = [ZERO; 2];
            for &v in tri {
                u[0] += field.values[v][0] / 3.0;
                u[1] += field.values[v][1] / 3.0;
            }
            (u[0].norm_sqr() + u[1].norm_sqr()).sqrt()
        })
        .collect()
}

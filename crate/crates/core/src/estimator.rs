//! Residual a posteriori indicators for the P1 DtN solution.
//!
//! `eta_K = h_K ||R u||_K + (1/2 sum_e h_e ||J_e||_e^2)^{1/2}`, where the sum
//! runs over interior and outer-circle edges of `K` (obstacle edges carry
//! Dirichlet data and contribute nothing).

use crate::assembly::SolutionField;
use crate::dtn::{to_cartesian, to_polar, truncation_error, DtnSpectrum, FourierCoefficients, FourierProjector, Material, Vec2};
use crate::error::{Error, Result};
use crate::mesh::{polar_angle, EdgeTag, Mesh, Point};
use crate::problem::ProblemConfig;


/// Gauss-Legendre nodes and weights on `[-1, 1]`.
const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateReport {
    pub eta: Vec<f64>,
    pub eps_h: f64,
    pub eps_n: f64,
    pub dof: usize,
    pub e_h: Option<f64>,
    pub energy_error: Option<f64>,
}

/// `h_K ||omega^2 u||_{L^2(K)}`; the other residual terms vanish for P1.
pub fn element_residual(mesh: &Mesh, field: &SolutionField, material: &Material, t: usize) -> f64 {
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
    mesh.diameter(t) * material.omega.powi(2) * l2.max(0.0).sqrt()
}

/// `mu (grad u) nu + (lambda + mu) (div u) nu` on triangle `t`.
fn traction(field: &SolutionField, mesh: &Mesh, material: &Material, t: usize, nu: Point) -> Vec2 {
    let g = field.gradient(mesh, t);
    let div = g[0][0] + g[1][1];
    let lm = material.lambda + material.mu;
    [
        (g[0][0] * nu[0] + g[0][1] * nu[1]) * material.mu + div * nu[0] * lm,
        (g[1][0] * nu[0] + g[1][1] * nu[1]) * material.mu + div * nu[1] * lm,
    ]
}

/// Unit normal of edge `e` pointing out of triangle `t`.
fn outward_normal(mesh: &Mesh, t: usize, e: usize) -> Point {
    let [a, b] = mesh.edges[e].vertices;
    let (p, q) = (mesh.vertices[a], mesh.vertices[b]);
    let len = mesh.edge_length(e);
    let n = [(q[1] - p[1]) / len, -(q[0] - p[0]) / len];
    let c = mesh.centroid(t);
    let m = mesh.edge_midpoint(e);
    if n[0] * (m[0] - c[0]) + n[1] * (m[1] - c[1]) >= 0.0 {
        n
    } else {
        [-n[0], -n[1]]
    }
}

/// `||J_e||_{L^2(e)}` for an interior edge; the jump is constant along it.
pub fn interior_jump(mesh: &Mesh, field: &SolutionField, material: &Material, e: usize) -> Result<f64> {
    let edge = &mesh.edges[e];
    if edge.tag != EdgeTag::Interior {
        return Err(Error::NotInteriorEdge(e));
    }
    let [t1, t2] = edge.triangles;
    let s1 = traction(field, mesh, material, t1, outward_normal(mesh, t1, e));
    let s2 = traction(field, mesh, material, t2, outward_normal(mesh, t2, e));
    let j = [s1[0] + s2[0], s1[1] + s2[1]];
    Ok((j[0].norm_sqr() + j[1].norm_sqr()).sqrt() * mesh.edge_length(e).sqrt())
}

/// `M_n u_n` for the current boundary trace, evaluable at any angle.
#[derive(Clone, Debug)]
pub struct DtnTrace {
    coeffs: FourierCoefficients,
}

impl DtnTrace {
    pub fn new(mesh: &Mesh, field: &SolutionField, spectrum: &DtnSpectrum) -> Result<Self> {
        let (outer, angles) = mesh.outer_vertices();
        let projector = FourierProjector::new(&angles, spectrum.truncation_n)?;
        let polar: Vec<Vec2> = outer.iter().zip(&angles).map(|(&v, &t)| to_polar(&field.values[v], t)).collect();
        Ok(DtnTrace { coeffs: spectrum.apply(&projector.project(&polar)) })
    }

    /// `T_N u` at angle `theta`, Cartesian components.
    pub fn evaluate(&self, theta: f64) -> Vec2 {
        to_cartesian(&self.coeffs.evaluate(theta), theta)
    }
}

fn outer_jump_sqr(mesh: &Mesh, field: &SolutionField, material: &Material, trace: &DtnTrace, e: usize) -> f64 {
    let edge = &mesh.edges[e];
    let t = edge.triangles[0];
    let [a, b] = edge.vertices;
    let ta = polar_angle(mesh.vertices[a]);
    let mut tb = polar_angle(mesh.vertices[b]);
    // the shorter arc between the endpoints
    if tb - ta > std::f64::consts::PI {
        tb -= 2.0 * std::f64::consts::PI;
    } else if ta - tb > std::f64::consts::PI {
        tb += 2.0 * std::f64::consts::PI;
    }
    let g = field.gradient(mesh, t);
    let div = g[0][0] + g[1][1];
    let lm = material.lambda + material.mu;
    let h = mesh.edge_length(e);
    let mut acc = 0.0;
    for (x, w) in GAUSS4 {
        let theta = 0.5 * (ta + tb) + 0.5 * (tb - ta) * x;
        let er = [theta.cos(), theta.sin()];
        let tn = trace.evaluate(theta);
        let mut jsq = 0.0;
        for c in 0..2 {
            let discrete = (g[c][0] * er[0] + g[c][1] * er[1]) * material.mu + div * er[c] * lm;
            jsq += (2.0 * (tn[c] - discrete)).norm_sqr();
        }
        acc += w * jsq;
    }
    0.5 * h * acc
}

/// `||J_e||_{L^2(e)}` on an outer-circle edge, with `T_N` applied to the
/// discrete trace and a 4-point Gauss rule in the angle.
pub fn boundary_jump(
    mesh: &Mesh,
    field: &SolutionField,
    material: &Material,
    spectrum: &DtnSpectrum,
    e: usize,
) -> Result<f64> {
    if mesh.edges[e].tag != EdgeTag::Outer {
        return Err(Error::NotOuterEdge(e));
    }
    let trace = DtnTrace::new(mesh, field, spectrum)?;
    Ok(outer_jump_sqr(mesh, field, material, &trace, e).sqrt())
}

/// `||J_e||^2` for every edge (zero on the obstacle).
fn edge_jumps_sqr(mesh: &Mesh, field: &SolutionField, material: &Material, spectrum: &DtnSpectrum) -> Result<Vec<f64>> {
    let trace = DtnTrace::new(mesh, field, spectrum)?;
    (0..mesh.edges.len())
        .map(|e| match mesh.edges[e].tag {
            EdgeTag::Interior => interior_jump(mesh, field, material, e).map(|j| j * j),
            EdgeTag::Outer => Ok(outer_jump_sqr(mesh, field, material, &trace, e)),
            EdgeTag::Obstacle => Ok(0.0),
        })
        .collect()
}

fn combine(mesh: &Mesh, field: &SolutionField, material: &Material, jumps: &[f64], t: usize) -> f64 {
    let edges: f64 = mesh.triangle_edges[t].iter().map(|&e| mesh.edge_length(e) * jumps[e]).sum();
    element_residual(mesh, field, material, t) + (0.5 * edges).sqrt()
}

/// `eta_K` for a single triangle.
pub fn local_estimator(
    mesh: &Mesh,
    field: &SolutionField,
    material: &Material,
    spectrum: &DtnSpectrum,
    t: usize,
) -> Result<f64> {
    if t >= mesh.triangle_count() {
        return Err(Error::InvalidTriangle(t));
    }
    let trace = DtnTrace::new(mesh, field, spectrum)?;
    let mut jumps = vec![0.0; mesh.edges.len()];
    for &e in &mesh.triangle_edges[t] {
        jumps[e] = match mesh.edges[e].tag {
            EdgeTag::Interior => interior_jump(mesh, field, material, e)?.powi(2),
            EdgeTag::Outer => outer_jump_sqr(mesh, field, material, &trace, e),
            EdgeTag::Obstacle => 0.0,
        };
    }
    Ok(combine(mesh, field, material, &jumps, t))
}

/// All `eta_K`, `eps_h` and the truncation bound for `||u_inc||_{H^1}`.
pub fn global_estimate(
    mesh: &Mesh,
    field: &SolutionField,
    spectrum: &DtnSpectrum,
    config: &ProblemConfig,
    u_inc_h1: f64,
) -> Result<EstimateReport> {
    if field.generation != mesh.generation || field.values.len() != mesh.vertex_count() {
        return Err(Error::MeshMismatch { expected: mesh.generation, found: field.generation });
    }
    let material = Material::from(config);
    let jumps = edge_jumps_sqr(mesh, field, &material, spectrum)?;
    let eta: Vec<f64> = (0..mesh.triangle_count()).map(|t| combine(mesh, field, &material, &jumps, t)).collect();
    let eps_h = eta.iter().map(|e| e * e).sum::<f64>().sqrt();
    let eps_n = truncation_error(spectrum.truncation_n, config.r_hat, config.r, u_inc_h1)?;
    Ok(EstimateReport { eta, eps_h, eps_n, dof: mesh.vertex_count(), e_h: None, energy_error: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    use crate::mesh::ObstacleShape;

    const ZERO: Complex64 = Complex64::new(0.0, 0.0);
    use crate::mesh::VertexTag;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn material() -> Material {
        Material { omega: std::f64::consts::PI, lambda: 2.0, mu: 1.0 }
    }

    #[test]
    fn zero_field_gives_zero_indicators() {
        let mesh = Mesh::annulus(0.5, 1.0, 16, 2).unwrap();
        let config = ProblemConfig::example1();
        let spectrum = DtnSpectrum::new(material(), 1.0, 10).unwrap();
        let field = SolutionField::zeros(&mesh);
        let rep = global_estimate(&mesh, &field, &spectrum, &config, 1.0).unwrap();
        assert!(rep.eta.iter().all(|&e| e == 0.0));
        assert_eq!(rep.eps_h, 0.0);
        assert_eq!(rep.dof, mesh.vertex_count());
    }

    #[test]
    fn constant_field_element_residual() {
        let mesh = Mesh::annulus(0.5, 1.0, 16, 2).unwrap();
        let u = [c(0.6, 0.2), c(-0.3, 1.1)];
        let field = SolutionField::interpolate(&mesh, |_| u);
        let m = material();
        let norm_u = (u[0].norm_sqr() + u[1].norm_sqr()).sqrt();
        for t in [0, 7, 31] {
            let want = mesh.diameter(t) * m.omega.powi(2) * norm_u * mesh.area(t).sqrt();
            assert!((element_residual(&mesh, &field, &m, t) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn linear_field_element_residual_against_quadrature() {
        // symmetric 7-point rule, exact for degree 5
        let (a1, b1) = (0.059_715_871_789_769_8, 0.470_142_064_105_115_1);
        let (a2, b2) = (0.797_426_985_353_087_3, 0.101_286_507_323_456_3);
        let (w0, w1, w2) = (0.225, 0.132_394_152_788_506_2, 0.125_939_180_544_827_1);
        let mut rule = vec![([1.0 / 3.0; 3], w0)];
        for p in [[a1, b1, b1], [b1, a1, b1], [b1, b1, a1]] {
            rule.push((p, w1));
        }
        for p in [[a2, b2, b2], [b2, a2, b2], [b2, b2, a2]] {
            rule.push((p, w2));
        }
        let mesh = Mesh::annulus(0.5, 1.0, 16, 2).unwrap();
        let field = SolutionField::interpolate(&mesh, |p| {
            [c(1.0 + 2.0 * p[0], -p[1]), c(0.5 * p[1] - p[0], 3.0 - p[0])]
        });
        let m = material();
        for t in 0..mesh.triangle_count() {
            let tri = mesh.triangles[t];
            let mut l2 = 0.0;
            for (lam, w) in &rule {
                let mut u = [ZERO; 2];
                for k in 0..3 {
                    u[0] += field.values[tri[k]][0] * lam[k];
                    u[1] += field.values[tri[k]][1] * lam[k];
                }
                l2 += w * mesh.area(t) * (u[0].norm_sqr() + u[1].norm_sqr());
            }
            let want = mesh.diameter(t) * m.omega.powi(2) * l2.sqrt();
            let got = element_residual(&mesh, &field, &m, t);
            assert!((got - want).abs() <= 1e-12 * want, "{got} vs {want}");
        }
    }

    /// Unit square split along the diagonal (0,0)-(1,1), built by hand since
    /// it has no outer circle; the diagonal is the only interior edge.
    fn two_triangles() -> Mesh {
        use crate::mesh::Edge;
        let vertices = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let triangles = vec![[1, 2, 0], [3, 0, 2]];
        let e = |a: usize, b: usize, tag: EdgeTag, t: [usize; 2], n: usize| Edge {
            vertices: [a, b],
            tag,
            triangles: t,
            triangle_count: n,
        };
        let edges = vec![
            e(0, 2, EdgeTag::Interior, [0, 1], 2),
            e(0, 1, EdgeTag::Obstacle, [0, usize::MAX], 1),
            e(1, 2, EdgeTag::Obstacle, [0, usize::MAX], 1),
            e(2, 3, EdgeTag::Obstacle, [1, usize::MAX], 1),
            e(0, 3, EdgeTag::Obstacle, [1, usize::MAX], 1),
        ];
        Mesh {
            vertices,
            tags: vec![VertexTag::Obstacle; 4],
            triangles,
            edges,
            triangle_edges: vec![[0, 1, 2], [0, 3, 4]],
            outer_radius: 1.0,
            obstacle: ObstacleShape::Polygon,
            generation: 0,
        }
    }

    #[test]
    fn globally_linear_field_has_no_jump() {
        let mesh = two_triangles();
        let field = SolutionField::interpolate(&mesh, |p| [c(2.0 * p[0] - p[1], 0.3), c(p[1], -p[0])]);
        assert!(interior_jump(&mesh, &field, &material(), 0).unwrap() < 1e-14);
        assert!(matches!(interior_jump(&mesh, &field, &material(), 1), Err(Error::NotInteriorEdge(1))));
    }

    #[test]
    fn kinked_field_jump_by_hand() {
        let mesh = two_triangles();
        // u_x = max(x - y, 0): gradient (1, -1) below the diagonal, zero above
        let field = SolutionField::interpolate(&mesh, |p| [c((p[0] - p[1]).max(0.0), 0.0), ZERO]);
        let m = material();
        // lower triangle outward normal on the diagonal is (-1, 1)/sqrt 2;
        // grad u . nu = (-1 - 1)/sqrt 2 in the x component, div u = 1
        let s = 2f64.sqrt();
        let jx = m.mu * (-2.0 / s) + (m.lambda + m.mu) * (-1.0 / s);
        let jy = (m.lambda + m.mu) * (1.0 / s);
        let want = (jx * jx + jy * jy).sqrt() * s.sqrt();
        let got = interior_jump(&mesh, &field, &m, 0).unwrap();
        assert!((got - want).abs() < 1e-13, "{got} vs {want}");
    }

    #[test]
    fn boundary_jump_only_on_outer_edges() {
        let mesh = Mesh::annulus(0.5, 1.0, 16, 2).unwrap();
        let spectrum = DtnSpectrum::new(material(), 1.0, 4).unwrap();
        let field = SolutionField::zeros(&mesh);
        let inner = mesh.edges_tagged(EdgeTag::Interior).next().unwrap();
        assert!(matches!(
            boundary_jump(&mesh, &field, &material(), &spectrum, inner),
            Err(Error::NotOuterEdge(_))
        ));
        let outer = mesh.edges_tagged(EdgeTag::Outer).next().unwrap();
        assert_eq!(boundary_jump(&mesh, &field, &material(), &spectrum, outer).unwrap(), 0.0);
    }

    #[test]
    fn local_matches_global_and_sums() {
        let mesh = Mesh::annulus(0.5, 1.0, 16, 2).unwrap();
        let config = ProblemConfig::example1();
        let spectrum = DtnSpectrum::new(material(), 1.0, 8).unwrap();
        let field = SolutionField::interpolate(&mesh, |p| [c(p[0] * p[1], 1.0), c(p[0], p[1].sin())]);
        let rep = global_estimate(&mesh, &field, &spectrum, &config, 1.0).unwrap();
        let sum: f64 = rep.eta.iter().map(|e| e * e).sum();
        assert!((rep.eps_h.powi(2) - sum).abs() <= 1e-12 * sum);
        for t in [0, 5, 40] {
            let local = local_estimator(&mesh, &field, &material(), &spectrum, t).unwrap();
            assert!((local - rep.eta[t]).abs() <= 1e-14 * local);
        }
    }
}

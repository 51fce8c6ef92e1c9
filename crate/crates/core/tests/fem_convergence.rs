use std::f64::consts::PI;

use num_complex::Complex64;

use elastic_dtn::assembly::{assemble, assemble_with, incident_h1, solve, SolutionField, Terms};
use elastic_dtn::dtn::{DtnSpectrum, Material, Vec2};
use elastic_dtn::mesh::{Mesh, VertexTag};
use elastic_dtn::problem::ProblemConfig;
use elastic_dtn::verify::{exact_solution_example1, h1_error, PointValue};
use elastic_dtn::Result;

fn levels(inner: f64, outer: f64) -> Vec<Mesh> {
    let mut mesh = Mesh::annulus(inner, outer, 32, 2).unwrap();
    let mut out = vec![mesh.clone()];
    for _ in 0..3 {
        mesh = mesh.refine_uniform().unwrap();
        out.push(mesh.clone());
    }
    out
}

fn assert_first_order(errors: &[f64]) {
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.6..2.6).contains(&ratio), "error ratio {ratio} in {errors:?}");
    }
}

/// Plane P wave `d exp(i k1 d.x)` and S wave `d_perp exp(i k2 d.x)`, both
/// free-space solutions of the Navier equation.
fn plane_wave(m: &Material, shear: bool) -> impl Fn(&[[f64; 2]]) -> Result<Vec<PointValue>> {
    let d = [0.6, 0.8];
    let (k, pol) = if shear { (m.kappa2(), [-d[1], d[0]]) } else { (m.kappa1(), d) };
    move |pts: &[[f64; 2]]| {
        Ok(pts
            .iter()
            .map(|p| {
                let e = Complex64::new(0.0, k * (d[0] * p[0] + d[1] * p[1])).exp();
                let i = Complex64::new(0.0, k);
                PointValue {
                    u: [e * pol[0], e * pol[1]],
                    grad: [
                        [i * d[0] * pol[0] * e, i * d[1] * pol[0] * e],
                        [i * d[0] * pol[1] * e, i * d[1] * pol[1] * e],
                    ],
                }
            })
            .collect())
    }
}

fn value_at(f: &impl Fn(&[[f64; 2]]) -> Result<Vec<PointValue>>, p: [f64; 2]) -> Vec2 {
    f(&[p]).unwrap()[0].u
}

#[test]
fn disk_scattering_converges_at_first_order() {
    let config = ProblemConfig { truncation: Some(35), ..ProblemConfig::example1() };
    let material = Material::from(&config);
    let spectrum = DtnSpectrum::new(material, 1.0, 35).unwrap();
    let mut errors = Vec::new();
    for mesh in levels(0.5, 1.0) {
        let field = solve(&assemble(&mesh, &config, &spectrum).unwrap()).unwrap();
        let (h1, _) = h1_error(&mesh, &field, &material, |p| exact_solution_example1(&material, p)).unwrap();
        errors.push(h1);
    }
    assert_first_order(&errors);
    let scale = incident_h1(&config, &levels(0.5, 1.0)[3]).unwrap();
    assert!(errors[3] / scale < 0.05, "{errors:?}");
}

#[test]
fn dirichlet_plane_waves_converge_at_first_order() {
    let material = Material { omega: PI, lambda: 2.0, mu: 1.0 };
    for shear in [false, true] {
        let exact = plane_wave(&material, shear);
        let mut errors = Vec::new();
        let mut interp_errors = Vec::new();
        for mesh in levels(0.5, 1.0) {
            let g: Vec<Option<Vec2>> = (0..mesh.vertex_count())
                .map(|v| (mesh.tags[v] != VertexTag::Interior).then(|| value_at(&exact, mesh.vertices[v])))
                .collect();
            let terms = Terms { dtn: false, ..Terms::ALL };
            let field = solve(&assemble_with(&mesh, &material, None, terms, &g).unwrap()).unwrap();
            errors.push(h1_error(&mesh, &field, &material, &exact).unwrap().0);
            let interp = SolutionField::interpolate(&mesh, |p| value_at(&exact, p));
            interp_errors.push(h1_error(&mesh, &interp, &material, &exact).unwrap().0);
        }
        assert_first_order(&errors);
        assert_first_order(&interp_errors);
        // quasi-optimality: the Galerkin error stays within a modest factor
        // of the interpolation error
        for (e, i) in errors.iter().zip(&interp_errors) {
            assert!(e / i < 3.0, "shear={shear}: {errors:?} vs {interp_errors:?}");
        }
    }
}

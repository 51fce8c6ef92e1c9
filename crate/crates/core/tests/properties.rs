use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use elastic_dtn::driver::Example;
use elastic_dtn::mesh::{mark, LoadOptions, MarkedSet, Mesh};
use elastic_dtn::specfun::{bessel_jy_scaled, hankel1, mode_scalars};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scaled_wronskian(z in 0.05f64..60.0, n in 0usize..400) {
        let pairs = bessel_jy_scaled(n + 1, z).unwrap();
        let a = pairs[n + 1].j.mul(pairs[n].y).to_f64();
        let b = pairs[n].j.mul(pairs[n + 1].y).to_f64();
        let expect = 2.0 / (PI * z);
        prop_assert!(((a - b) - expect).abs() <= 1e-10 * expect, "n={} z={}", n, z);
    }

    #[test]
    fn hankel_derivative_matches_difference_quotient(z in 0.5f64..30.0, n in -20i64..20) {
        let h = 1e-5 * z;
        let fd = (hankel1(n, z + h).unwrap().h - hankel1(n, z - h).unwrap().h) / (2.0 * h);
        let exact = hankel1(n, z).unwrap().h_prime;
        prop_assert!((fd - exact).norm() <= 1e-6 * exact.norm().max(1.0));
    }

    #[test]
    fn mode_scalars_are_even_in_n(n in 0i64..300, r in 0.3f64..4.0) {
        let a = mode_scalars(n, PI / 2.0, PI, r).unwrap();
        let b = mode_scalars(-n, PI / 2.0, PI, r).unwrap();
        prop_assert!((a.lambda_n - b.lambda_n).norm() <= 1e-12 * a.lambda_n.norm().max(1.0));
    }
}

fn random_refinements(mut mesh: Mesh, seed: u64, rounds: usize) -> Vec<Mesh> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for _ in 0..rounds {
        let marked: Vec<usize> = (0..mesh.triangle_count()).filter(|_| rng.gen_bool(0.2)).collect();
        let before = mesh.triangle_count();
        let count = marked.len();
        mesh = mesh.refine(&MarkedSet::new(marked)).unwrap();
        assert!(mesh.triangle_count() >= before + count);
        out.push(mesh.clone());
    }
    out
}

#[test]
fn random_refinement_keeps_mesh_valid() {
    for seed in 0..4 {
        let mesh = Mesh::annulus(0.5, 1.0, 16, 2).unwrap();
        for m in random_refinements(mesh, seed, 8) {
            m.check_invariants().unwrap();
            assert_eq!(m.euler_characteristic(), 0);
        }
    }
}

#[test]
fn bisection_keeps_angles_bounded() {
    // newest-vertex bisection produces finitely many similarity classes, so
    // angles stay bounded away from zero; they may still drop below the
    // initial minimum
    for ex in [Example::Disk, Example::UShape] {
        let config = ex.config();
        let initial = ex.mesh(&config).unwrap();
        for (round, m) in random_refinements(initial, 3, 8).into_iter().enumerate() {
            assert!(m.min_angle_degrees() >= 10.0, "{ex:?} round {round}: {}", m.min_angle_degrees());
        }
    }
}

#[test]
fn maximum_marking_on_refined_meshes() {
    let mesh = Mesh::annulus(0.5, 1.0, 16, 2).unwrap();
    let eta: Vec<f64> = (0..mesh.triangle_count()).map(|t| mesh.centroid(t)[0].abs()).collect();
    let marked = mark(&eta, 0.5).unwrap();
    let max = eta.iter().cloned().fold(0.0, f64::max);
    assert!(marked.indices().iter().all(|&t| eta[t] >= 0.5 * max));
    let refined = mesh.refine(&marked).unwrap();
    refined.check_invariants().unwrap();
}

#[test]
fn refined_mesh_survives_a_file_round_trip() {
    let mesh = random_refinements(Mesh::annulus(0.5, 1.0, 16, 2).unwrap(), 9, 3).pop().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.txt");
    mesh.save(&path).unwrap();
    let back = Mesh::load(&path, mesh.obstacle, LoadOptions::default()).unwrap();
    assert_eq!(back.vertex_count(), mesh.vertex_count());
    assert_eq!(back.triangle_count(), mesh.triangle_count());
    for (a, b) in back.vertices.iter().zip(&mesh.vertices) {
        assert_eq!(a, b);
    }
    back.check_invariants().unwrap();
}

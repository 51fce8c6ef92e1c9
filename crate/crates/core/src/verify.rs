//! Independent checks: the exact disk solution, finite-difference residuals,
//! an unsimplified DtN construction, H^1 errors and rate fits.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::assembly::SolutionField;
use crate::driver::RunHistory;
use crate::dtn::{Mat2, Material, Vec2};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::specfun::{bessel_jy, hankel1};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// `(H_0(z), H_1(z))` of the first kind.
fn h01(z: f64) -> Result<(Complex64, Complex64)> {
    let p = bessel_jy(1, z)?;
    Ok((Complex64::new(p[0].j, p[0].y), Complex64::new(p[1].j, p[1].y)))
}

/// Value and gradient (`grad[c][d] = d u_c / d x_d`) of a field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointValue {
    pub u: Vec2,
    pub grad: [[Complex64; 2]; 2],
}

/// `u = [k1 H0'(k1 r)/r] (x, y) + [k2 H0'(k2 r)/r] (y, -x)` and its gradient,
/// using `H0' = -H1` and `H1' = H0 - H1/z`.
pub fn exact_solution_example1(material: &Material, points: &[[f64; 2]]) -> Result<Vec<PointValue>> {
    let (k1, k2) = (material.kappa1(), material.kappa2());
    points
        .iter()
        .map(|&[x, y]| {
            let r = x.hypot(y);
            if r == 0.0 {
                return Err(Error::OriginEvaluation);
            }
            // f(r) = -k H1(k r)/r and its derivative
            let radial = |k: f64| -> Result<(Complex64, Complex64)> {
                let (h0, h1) = h01(k * r)?;
                let h1p = h0 - h1 / (k * r);
                Ok((-k * h1 / r, -k * k * h1p / r + k * h1 / (r * r)))
            };
            let (a, da) = radial(k1)?;
            let (b, db) = radial(k2)?;
            let pos = [x, y];
            let w = [y, -x];
            let dw = [[0.0, 1.0], [-1.0, 0.0]];
            let u = [a * x + b * w[0], a * y + b * w[1]];
            let mut grad = [[ZERO; 2]; 2];
            for c in 0..2 {
                for d in 0..2 {
                    let delta = if c == d { 1.0 } else { 0.0 };
                    grad[c][d] = da * (pos[d] * pos[c] / r) + a * delta + db * (pos[d] * w[c] / r) + b * dw[c][d];
                }
            }
            Ok(PointValue { u, grad })
        })
        .collect()
}

/// `M_n` built from the unsimplified entries, with `H''` taken from Bessel's
/// equation.
pub fn dtn_matrix_unsimplified(n: i64, material: &Material, radius: f64) -> Result<Mat2> {
    let (k1, k2) = (material.kappa1(), material.kappa2());
    let (lambda, mu) = (material.lambda, material.mu);
    let r = radius;
    let nf = n as f64;
    let a1 = hankel1(n, k1 * r)?.h_prime / hankel1(n, k1 * r)?.h * k1;
    let a2 = hankel1(n, k2 * r)?.h_prime / hankel1(n, k2 * r)?.h * k2;
    // k^2 H''(kR)/H(kR)
    let h2 = |a: Complex64, k: f64| -a / r - k * k + nf * nf / (r * r);
    let (h2_1, h2_2) = (h2(a1, k1), h2(a2, k2));
    let n_r = nf / r;
    let i_n_r = I * n_r;
    let bracket = (lambda + 2.0 * mu) * h2_1 + (lambda + mu) * (a1 / r - n_r * n_r);
    let n11 = mu * n_r * n_r * (a2 - 1.0 / r) - a2 * bracket;
    let n12 = mu * i_n_r * a1 * (a2 - 1.0 / r) - i_n_r * bracket;
    let n21 = -mu * i_n_r * a2 * (a1 - 1.0 / r) + mu * i_n_r * h2_2;
    let n22 = mu * n_r * n_r * (a1 - 1.0 / r) - mu * a1 * h2_2;
    let lam = n_r * n_r - a1 * a2;
    Ok([[n11 / lam, n12 / lam], [n21 / lam, n22 / lam]])
}

/// Zeroth polar Fourier mode of the exact disk solution at `r = R` and the
/// analytic traction `mu d_r u + (lambda + mu) (div u) e_r` there, using
/// `H0'' = -H0 + H1/z`.
pub fn example1_mode0_traction(material: &Material, radius: f64) -> Result<(Vec2, Vec2)> {
    let (k1, k2) = (material.kappa1(), material.kappa2());
    let (mu, lm) = (material.mu, material.lambda + material.mu);
    let (h0a, h1a) = h01(k1 * radius)?;
    let (h0b, h1b) = h01(k2 * radius)?;
    let u0 = [-k1 * h1a, k2 * h1b];
    let dd_a = -h0a + h1a / (k1 * radius);
    let dd_b = -h0b + h1b / (k2 * radius);
    let t_r = mu * k1 * k1 * dd_a - lm * k1 * k1 * h0a;
    let t_theta = -mu * k2 * k2 * dd_b;
    Ok((u0, [t_r, t_theta]))
}

/// `mu lap u + (lambda + mu) grad div u + omega^2 u` by central differences.
pub fn navier_residual(material: &Material, f: impl Fn([f64; 2]) -> Vec2, p: [f64; 2], h: f64) -> Vec2 {
    let at = |dx: f64, dy: f64| f([p[0] + dx * h, p[1] + dy * h]);
    let c = at(0.0, 0.0);
    let (e, w, n, s) = (at(1.0, 0.0), at(-1.0, 0.0), at(0.0, 1.0), at(0.0, -1.0));
    let (ne, nw, se, sw) = (at(1.0, 1.0), at(-1.0, 1.0), at(1.0, -1.0), at(-1.0, -1.0));
    let h2 = h * h;
    let mut out = [ZERO; 2];
    for k in 0..2 {
        let dxx = (e[k] - 2.0 * c[k] + w[k]) / h2;
        let dyy = (n[k] - 2.0 * c[k] + s[k]) / h2;
        out[k] = material.mu * (dxx + dyy) + material.omega.powi(2) * c[k];
    }
    let uxx = (e[0] - 2.0 * c[0] + w[0]) / h2;
    let vyy = (n[1] - 2.0 * c[1] + s[1]) / h2;
    let uxy = (ne[0] - nw[0] - se[0] + sw[0]) / (4.0 * h2);
    let vxy = (ne[1] - nw[1] - se[1] + sw[1]) / (4.0 * h2);
    let lm = material.lambda + material.mu;
    out[0] += lm * (uxx + vxy);
    out[1] += lm * (uxy + vyy);
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct HelmholtzReport {
    /// `max |lap div u + k1^2 div u| / (k1^2 max |div u|)`.
    pub divergence_residual: f64,
    /// Same for `curl u` with `k2`.
    pub curl_residual: f64,
    pub max_divergence: f64,
    pub max_curl: f64,
}

/// Finite-difference check that `div u` and `curl u` solve the Helmholtz
/// equations with `k1` and `k2` at the sample points.
pub fn helmholtz_check(material: &Material, f: impl Fn([f64; 2]) -> Vec2, points: &[[f64; 2]]) -> HelmholtzReport {
    let (k1, k2) = (material.kappa1(), material.kappa2());
    let h = 1e-5;
    let (big, small) = (2e-3, h);
    let div_curl = |p: [f64; 2]| -> (Complex64, Complex64) {
        let (e, w) = (f([p[0] + small, p[1]]), f([p[0] - small, p[1]]));
        let (n, s) = (f([p[0], p[1] + small]), f([p[0], p[1] - small]));
        let ux = (e[0] - w[0]) / (2.0 * small);
        let vy = (n[1] - s[1]) / (2.0 * small);
        let vx = (e[1] - w[1]) / (2.0 * small);
        let uy = (n[0] - s[0]) / (2.0 * small);
        (ux + vy, vx - uy)
    };
    let mut report = HelmholtzReport { divergence_residual: 0.0, curl_residual: 0.0, max_divergence: 0.0, max_curl: 0.0 };
    let mut worst = (0.0f64, 0.0f64);
    for &p in points {
        let c = div_curl(p);
        let nb = [
            div_curl([p[0] + big, p[1]]),
            div_curl([p[0] - big, p[1]]),
            div_curl([p[0], p[1] + big]),
            div_curl([p[0], p[1] - big]),
        ];
        let lap_d = (nb.iter().map(|x| x.0).sum::<Complex64>() - 4.0 * c.0) / (big * big);
        let lap_c = (nb.iter().map(|x| x.1).sum::<Complex64>() - 4.0 * c.1) / (big * big);
        worst.0 = worst.0.max((lap_d + k1 * k1 * c.0).norm());
        worst.1 = worst.1.max((lap_c + k2 * k2 * c.1).norm());
        report.max_divergence = report.max_divergence.max(c.0.norm());
        report.max_curl = report.max_curl.max(c.1.norm());
    }
    let rel = |r: f64, k: f64, m: f64| if m > 0.0 { r / (k * k * m) } else { r };
    report.divergence_residual = rel(worst.0, k1, report.max_divergence);
    report.curl_residual = rel(worst.1, k2, report.max_curl);
    report
}

/// Symmetric 7-point rule on the reference triangle (barycentrics, weight
/// as a fraction of the area), exact for degree 5.
pub fn quadrature7() -> [([f64; 3], f64); 7] {
    let (a1, b1) = (0.059_715_871_789_769_8, 0.470_142_064_105_115_1);
    let (a2, b2) = (0.797_426_985_353_087_3, 0.101_286_507_323_456_3);
    let (w1, w2) = (0.132_394_152_788_506_2, 0.125_939_180_544_827_1);
    [
        ([1.0 / 3.0; 3], 0.225),
        ([a1, b1, b1], w1),
        ([b1, a1, b1], w1),
        ([b1, b1, a1], w1),
        ([a2, b2, b2], w2),
        ([b2, a2, b2], w2),
        ([b2, b2, a2], w2),
    ]
}

/// `(||u - u_h||_{H^1}, |||u - u_h|||)` against a field given with its
/// gradient, integrated with the 7-point rule on each triangle.
pub fn h1_error(
    mesh: &Mesh,
    field: &SolutionField,
    material: &Material,
    exact: impl Fn(&[[f64; 2]]) -> Result<Vec<PointValue>>,
) -> Result<(f64, f64)> {
    if field.generation != mesh.generation || field.values.len() != mesh.vertex_count() {
        return Err(Error::MeshMismatch { expected: mesh.generation, found: field.generation });
    }
    let rule = quadrature7();
    let mut h1 = 0.0;
    let mut energy = 0.0;
    let mut pts = Vec::with_capacity(7);
    for t in 0..mesh.triangle_count() {
        let p = mesh.corners(t);
        let tri = mesh.triangles[t];
        pts.clear();
        for (lam, _) in &rule {
            pts.push([
                lam[0] * p[0][0] + lam[1] * p[1][0] + lam[2] * p[2][0],
                lam[0] * p[0][1] + lam[1] * p[1][1] + lam[2] * p[2][1],
            ]);
        }
        let ex = exact(&pts)?;
        let gh = field.gradient(mesh, t);
        let area = mesh.area(t);
        for ((lam, w), e) in rule.iter().zip(&ex) {
            let mut du = [ZERO; 2];
            for c in 0..2 {
                let uh: Complex64 = (0..3).map(|k| field.values[tri[k]][c] * lam[k]).sum();
                du[c] = e.u[c] - uh;
            }
            let mut dg = [[ZERO; 2]; 2];
            for c in 0..2 {
                for d in 0..2 {
                    dg[c][d] = e.grad[c][d] - gh[c][d];
                }
            }
            let l2 = du[0].norm_sqr() + du[1].norm_sqr();
            let grad = dg.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>();
            let div = (dg[0][0] + dg[1][1]).norm_sqr();
            h1 += w * area * (l2 + grad);
            energy += w
                * area
                * (material.mu * grad + (material.lambda + material.mu) * div + material.omega.powi(2) * l2);
        }
    }
    Ok((h1.sqrt(), energy.sqrt()))
}

/// Which error column of a history to fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitTarget {
    TrueError,
    Estimate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(log dof, log error)`.
pub fn fit_points(data: &[(f64, f64)]) -> Result<ConvergenceFit> {
    let points: Vec<(f64, f64)> = data
        .iter()
        .filter(|(d, e)| *d > 0.0 && *e > 0.0 && e.is_finite())
        .map(|&(d, e)| (d.ln(), e.ln()))
        .collect();
    if points.len() < 3 {
        return Err(Error::InsufficientData(points.len()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData(1));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(ConvergenceFit { points, slope, intercept, r_squared })
}

/// Rate fit over a run history, skipping the first (pre-asymptotic) record.
pub fn fit_rate(history: &RunHistory, target: FitTarget) -> Result<ConvergenceFit> {
    let data: Vec<(f64, f64)> = history
        .records
        .iter()
        .skip(1)
        .filter_map(|r| {
            let e = match target {
                FitTarget::TrueError => r.e_h?,
                FitTarget::Estimate => r.eps_h,
            };
            Some((r.dof as f64, e))
        })
        .collect();
    fit_points(&data)
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len()) as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Adaptive and uniform histories side by side: `DoF e_h eps_h` for each.
pub fn comparison_table(adaptive: &RunHistory, uniform: &RunHistory) -> String {
    let fmt_e = |e: Option<f64>| e.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>8} {:>10} {:>10}   {:>8} {:>10} {:>10}",
        "DoF", "e_h", "eps_h", "DoF", "e_h", "eps_h"
    );
    let _ = writeln!(out, "{:-^30}   {:-^30}", " adaptive ", " uniform ");
    let rows = adaptive.records.len().max(uniform.records.len());
    for i in 0..rows {
        let side = |h: &RunHistory| match h.records.get(i) {
            Some(r) => format!("{:>8} {:>10} {:>10.4}", r.dof, fmt_e(r.e_h), r.eps_h),
            None => format!("{:>8} {:>10} {:>10}", "", "", ""),
        };
        let _ = writeln!(out, "{}   {}", side(adaptive), side(uniform));
    }
    out
}

/// DoF at which the error first reaches `level`, interpolated linearly in
/// log-log coordinates between consecutive records.
pub fn dof_at_error(history: &RunHistory, level: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = history.records.iter().filter_map(|r| Some((r.dof as f64, r.e_h?))).collect();
    for w in pts.windows(2) {
        let ((d0, e0), (d1, e1)) = (w[0], w[1]);
        if e0 >= level && e1 <= level {
            if e0 == e1 {
                return Some(d0);
            }
            let s = (level.ln() - e0.ln()) / (e1.ln() - e0.ln());
            return Some((d0.ln() + s * (d1.ln() - d0.ln())).exp());
        }
    }
    pts.first().filter(|p| p.1 <= level).map(|p| p.0)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::dtn::{mode_matrix, to_polar};
    use crate::specfun::mode_scalars;

    fn bench() -> Material {
        Material { omega: PI, lambda: 2.0, mu: 1.0 }
    }

    fn u_exact(m: &Material) -> impl Fn([f64; 2]) -> Vec2 + '_ {
        move |p| exact_solution_example1(m, &[p]).unwrap()[0].u
    }

    #[test]
    fn polar_form_of_exact_solution() {
        let m = bench();
        let (k1, k2) = (m.kappa1(), m.kappa2());
        for (r, t) in [(0.6, 0.3), (0.9, 2.0), (1.0, 5.5)] {
            let u = exact_solution_example1(&m, &[[r * f64::cos(t), r * f64::sin(t)]]).unwrap()[0].u;
            let p = to_polar(&u, t);
            assert!((p[0] - k1 * hankel1(0, k1 * r).unwrap().h_prime).norm() < 1e-13);
            assert!((p[1] + k2 * hankel1(0, k2 * r).unwrap().h_prime).norm() < 1e-13);
        }
        assert!(matches!(exact_solution_example1(&m, &[[0.0, 0.0]]), Err(Error::OriginEvaluation)));
    }

    #[test]
    fn exact_gradient_matches_differences() {
        let m = bench();
        let f = u_exact(&m);
        let h = 1e-6;
        for p in [[0.7, 0.1], [-0.4, 0.55], [0.2, -0.9]] {
            let g = exact_solution_example1(&m, &[p]).unwrap()[0].grad;
            for d in 0..2 {
                let mut a = p;
                let mut b = p;
                a[d] += h;
                b[d] -= h;
                let (ua, ub) = (f(a), f(b));
                for c in 0..2 {
                    let fd = (ua[c] - ub[c]) / (2.0 * h);
                    assert!((fd - g[c][d]).norm() < 1e-7 * (1.0 + g[c][d].norm()));
                }
            }
        }
    }

    #[test]
    fn exact_solution_solves_navier() {
        let m = bench();
        let f = u_exact(&m);
        for p in [[0.7, 0.1], [-0.4, 0.55], [0.2, -0.9], [0.0, 0.8]] {
            let res = navier_residual(&m, &f, p, 5e-4);
            let u = f(p);
            let mag = (u[0].norm_sqr() + u[1].norm_sqr()).sqrt();
            assert!((res[0].norm_sqr() + res[1].norm_sqr()).sqrt() <= 1e-5 * mag);
        }
    }

    #[test]
    fn plane_wave_is_curl_free() {
        let m = bench();
        let k1 = m.kappa1();
        let f = |p: [f64; 2]| {
            let e = Complex64::from_polar(1.0, k1 * p[0]);
            [e, ZERO]
        };
        let rep = helmholtz_check(&m, f, &[[0.3, 0.2], [1.0, -0.5]]);
        assert!(rep.max_curl <= 1e-8);
        assert!(rep.divergence_residual <= 1e-4);
        let zero = helmholtz_check(&m, |_| [ZERO; 2], &[[0.3, 0.2]]);
        assert_eq!(zero.divergence_residual, 0.0);
        assert_eq!(zero.curl_residual, 0.0);
    }

    #[test]
    fn simplified_and_unsimplified_agree() {
        let m = bench();
        for n in [-7, -1, 0, 1, 2, 15] {
            let s = mode_scalars(n, m.kappa1(), m.kappa2(), 1.0).unwrap();
            let a = mode_matrix(&s, &m);
            let b = dtn_matrix_unsimplified(n, &m, 1.0).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert!((a[i][j] - b[i][j]).norm() <= 1e-9 * a[i][j].norm().max(1e-300), "n={n}");
                }
            }
        }
    }

    #[test]
    fn exact_power_law_fit() {
        let data: Vec<(f64, f64)> = [100.0, 400.0, 1600.0, 6400.0].iter().map(|&d| (d, 3.0 / f64::sqrt(d))).collect();
        let fit = fit_points(&data).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(matches!(fit_points(&data[..2]), Err(Error::InsufficientData(2))));
    }

    #[test]
    fn pearson_of_affine_data() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
    }
}

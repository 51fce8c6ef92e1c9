//! Truncated Dirichlet-to-Neumann operator on the circle `r = R`.
//!
//! Mode `n` of the displacement trace, written in the polar frame
//! `(u_n^r, u_n^theta)`, is mapped to the traction-like quantity
//! `mu d_r u + (lambda + mu)(div u) e_r` by the 2x2 matrix `M_n`. Traces of
//! finite element functions are piecewise linear in `theta`, so their Fourier
//! coefficients are computed arc by arc in closed form.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::problem::ProblemConfig;
use crate::specfun::{mode_scalars, ModeScalars};

pub type Mat2 = [[Complex64; 2]; 2];
pub type Vec2 = [Complex64; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Material {
    pub omega: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl Material {
    pub fn kappa1(&self) -> f64 {
        self.omega / (self.lambda + 2.0 * self.mu).sqrt()
    }

    pub fn kappa2(&self) -> f64 {
        self.omega / self.mu.sqrt()
    }
}

impl From<&ProblemConfig> for Material {
    fn from(c: &ProblemConfig) -> Self {
        Material { omega: c.omega, lambda: c.lambda, mu: c.mu }
    }
}

/// One Fourier mode of the DtN operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DtnMode {
    pub n: i64,
    pub matrix: Mat2,
    pub scalars: ModeScalars,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DtnSpectrum {
    pub truncation_n: usize,
    pub radius: f64,
    pub material: Material,
    /// Modes `-N..=N` in increasing order.
    pub modes: Vec<DtnMode>,
}

/// `M_n` from the simplified entries
/// `N11 = -(mu/R) L + a2 w^2`, `N12 = -(i n mu/R) L + (i n/R) w^2`,
/// `N21 = -N12`, `N22 = -(mu/R) L + a1 w^2`, all divided by `L = Lambda_n`.
pub fn mode_matrix(s: &ModeScalars, material: &Material) -> Mat2 {
    let mu = material.mu;
    let w2 = material.omega * material.omega;
    let r = s.radius;
    let lam = s.lambda_n;
    let i_n_over_r = Complex64::new(0.0, s.n as f64 / r);
    let n11 = -lam * (mu / r) + s.alpha2 * w2;
    let n12 = -i_n_over_r * mu * lam + i_n_over_r * w2;
    let n21 = -n12;
    let n22 = -lam * (mu / r) + s.alpha1 * w2;
    [[n11 / lam, n12 / lam], [n21 / lam, n22 / lam]]
}

impl DtnSpectrum {
    pub fn new(material: Material, radius: f64, truncation_n: usize) -> Result<Self> {
        if !(material.mu > 0.0 && material.lambda + material.mu > 0.0 && material.omega > 0.0) {
            return Err(Error::InvalidMaterial(format!("{material:?}")));
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidRadii(format!("radius must be positive, got {radius}")));
        }
        let n_max = truncation_n as i64;
        let modes = (-n_max..=n_max)
            .map(|n| {
                let scalars = mode_scalars(n, material.kappa1(), material.kappa2(), radius)?;
                Ok(DtnMode { n, matrix: mode_matrix(&scalars, &material), scalars })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DtnSpectrum { truncation_n, radius, material, modes })
    }

    pub fn mode(&self, n: i64) -> &DtnMode {
        &self.modes[(n + self.truncation_n as i64) as usize]
    }

    /// `M_n u_n` for every mode.
    pub fn apply(&self, coeffs: &FourierCoefficients) -> FourierCoefficients {
        assert_eq!(coeffs.n_max, self.truncation_n);
        let values = self.modes.iter().zip(&coeffs.values).map(|(m, u)| mat_vec(&m.matrix, u)).collect();
        FourierCoefficients { n_max: self.truncation_n, values }
    }

    /// Plain-text dump: `n`, real/imaginary parts of the four entries, `Lambda_n`.
    pub fn table(&self) -> String {
        let mut out = String::from(
            "# n re_M11 im_M11 re_M12 im_M12 re_M21 im_M21 re_M22 im_M22 re_Lambda im_Lambda\n",
        );
        for m in &self.modes {
            let e = m.matrix;
            let _ = writeln!(
                out,
                "{} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e}",
                m.n,
                e[0][0].re,
                e[0][0].im,
                e[0][1].re,
                e[0][1].im,
                e[1][0].re,
                e[1][0].im,
                e[1][1].re,
                e[1][1].im,
                m.scalars.lambda_n.re,
                m.scalars.lambda_n.im
            );
        }
        out
    }
}

/// Spectrum for a configuration, selecting `N` from the truncation bound
/// when it is not fixed explicitly.
pub fn build_spectrum(config: &ProblemConfig, u_inc_h1: f64) -> Result<DtnSpectrum> {
    config.validate()?;
    let n = match config.truncation {
        Some(n) => n,
        None => select_truncation(config.r_hat, config.r, u_inc_h1, config.truncation_tolerance)?,
    };
    DtnSpectrum::new(Material::from(config), config.r, n)
}

pub fn mat_vec(m: &Mat2, u: &Vec2) -> Vec2 {
    [m[0][0] * u[0] + m[0][1] * u[1], m[1][0] * u[0] + m[1][1] * u[1]]
}

/// Cartesian to polar `(r, theta)` components at angle `theta`.
pub fn to_polar(u: &Vec2, theta: f64) -> Vec2 {
    let (s, c) = theta.sin_cos();
    [u[0] * c + u[1] * s, -u[0] * s + u[1] * c]
}

pub fn to_cartesian(u: &Vec2, theta: f64) -> Vec2 {
    let (s, c) = theta.sin_cos();
    [u[0] * c - u[1] * s, u[0] * s + u[1] * c]
}

/// Truncated Fourier coefficients of a polar vector trace, modes `-N..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierCoefficients {
    pub n_max: usize,
    pub values: Vec<Vec2>,
}

impl FourierCoefficients {
    pub fn get(&self, n: i64) -> Vec2 {
        self.values[(n + self.n_max as i64) as usize]
    }

    /// Evaluates the truncated series at `theta` (polar components).
    pub fn evaluate(&self, theta: f64) -> Vec2 {
        let mut out = [ZERO; 2];
        for (k, v) in self.values.iter().enumerate() {
            let n = k as i64 - self.n_max as i64;
            let e = Complex64::from_polar(1.0, n as f64 * theta);
            out[0] += v[0] * e;
            out[1] += v[1] * e;
        }
        out
    }
}

/// Nodal values on the outer circle, sorted by angle.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTrace {
    pub node_angles: Vec<f64>,
    /// Cartesian components at each node.
    pub values: Vec<Vec2>,
}

impl BoundaryTrace {
    pub fn new(node_angles: Vec<f64>, values: Vec<Vec2>) -> Result<Self> {
        if node_angles.len() != values.len() {
            return Err(Error::NodeSetMismatch);
        }
        if node_angles.len() < 3 {
            return Err(Error::EmptyBoundary(node_angles.len()));
        }
        let ok = node_angles.windows(2).all(|w| w[0] < w[1])
            && node_angles[0] >= 0.0
            && *node_angles.last().unwrap() < 2.0 * PI;
        if !ok {
            return Err(Error::UnsortedBoundary);
        }
        Ok(BoundaryTrace { node_angles, values })
    }

    /// Polar components at the nodes.
    pub fn polar_values(&self) -> Vec<Vec2> {
        self.values.iter().zip(&self.node_angles).map(|(u, &t)| to_polar(u, t)).collect()
    }

    /// `int |u|^2 R dtheta` of the piecewise-linear (in `theta`) interpolant of
    /// the polar values.
    pub fn circle_l2_norm_sqr(&self, radius: f64) -> f64 {
        let polar = self.polar_values();
        let m = polar.len();
        let mut total = 0.0;
        for a in 0..m {
            let b = (a + 1) % m;
            let width = arc_width(&self.node_angles, a);
            for c in 0..2 {
                let (ua, ub) = (polar[a][c], polar[b][c]);
                total += width * (ua.norm_sqr() + ub.norm_sqr() + (ua * ub.conj()).re) / 3.0;
            }
        }
        total * radius
    }
}

fn arc_width(angles: &[f64], a: usize) -> f64 {
    let m = angles.len();
    if a + 1 < m {
        angles[a + 1] - angles[a]
    } else {
        angles[0] + 2.0 * PI - angles[a]
    }
}

/// `(e^x - 1)/x` and `(e^x - 1 - x)/x^2`, with a series near zero.
fn phi12(x: Complex64) -> (Complex64, Complex64) {
    if x.norm() < 0.5 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut p1 = ZERO;
        let mut p2 = ZERO;
        // term = x^k / k!
        for k in 0..24 {
            let kf = k as f64;
            p1 += term / (kf + 1.0);
            p2 += term / ((kf + 1.0) * (kf + 2.0));
            term *= x / (kf + 1.0);
        }
        (p1, p2)
    } else {
        let ex = x.exp();
        ((ex - 1.0) / x, (ex - 1.0 - x) / (x * x))
    }
}

/// Maps nodal values of a piecewise-linear trace to its Fourier coefficients:
/// `hat_n = sum_k weight(n, k) * value_k`, with the `1/(2 pi)` included.
#[derive(Clone, Debug)]
pub struct FourierProjector {
    pub n_max: usize,
    nodes: usize,
    /// Mode-major, `(2N+1) x nodes`.
    weights: Vec<Complex64>,
}

impl FourierProjector {
    pub fn new(node_angles: &[f64], n_max: usize) -> Result<Self> {
        let m = node_angles.len();
        if m < 3 {
            return Err(Error::EmptyBoundary(m));
        }
        let modes = 2 * n_max + 1;
        let mut weights = vec![ZERO; modes * m];
        for (mi, n) in (-(n_max as i64)..=n_max as i64).enumerate() {
            let row = &mut weights[mi * m..(mi + 1) * m];
            for a in 0..m {
                let b = (a + 1) % m;
                let width = arc_width(node_angles, a);
                let s = Complex64::new(0.0, -(n as f64));
                let (p1, p2) = phi12(s * width);
                let phase = (s * node_angles[a]).exp() * width;
                // int over the arc of (hat function) * exp(-i n theta)
                row[a] += phase * p2;
                row[b] += phase * (p1 - p2);
            }
            for w in row.iter_mut() {
                *w /= 2.0 * PI;
            }
        }
        Ok(FourierProjector { n_max, nodes: m, weights })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// Weight of node `k` in coefficient `n`.
    pub fn weight(&self, n: i64, k: usize) -> Complex64 {
        let mi = (n + self.n_max as i64) as usize;
        self.weights[mi * self.nodes + k]
    }

    /// Coefficients of a polar nodal trace.
    pub fn project(&self, polar: &[Vec2]) -> FourierCoefficients {
        assert_eq!(polar.len(), self.nodes);
        let values = (0..2 * self.n_max + 1)
            .map(|mi| {
                let row = &self.weights[mi * self.nodes..(mi + 1) * self.nodes];
                let mut acc = [ZERO; 2];
                for (w, u) in row.iter().zip(polar) {
                    acc[0] += w * u[0];
                    acc[1] += w * u[1];
                }
                acc
            })
            .collect();
        FourierCoefficients { n_max: self.n_max, values }
    }
}

/// Polar Fourier coefficients `|n| <= N` of the piecewise-linear interpolant
/// of a boundary trace.
pub fn fourier_coefficients(trace: &BoundaryTrace, n_max: usize) -> Result<FourierCoefficients> {
    let projector = FourierProjector::new(&trace.node_angles, n_max)?;
    Ok(projector.project(&trace.polar_values()))
}

/// `int_{r=R} (T_N u) . conj(v) ds = 2 pi R sum_n (M_n u_n) . conj(v_n)`.
pub fn dtn_boundary_form(spectrum: &DtnSpectrum, u: &BoundaryTrace, v: &BoundaryTrace) -> Result<Complex64> {
    if u.node_angles != v.node_angles {
        return Err(Error::NodeSetMismatch);
    }
    let projector = FourierProjector::new(&u.node_angles, spectrum.truncation_n)?;
    let un = projector.project(&u.polar_values());
    let vn = projector.project(&v.polar_values());
    Ok(coefficient_form(spectrum, &un, &vn))
}

/// `2 pi R sum_n (M_n u_n) . conj(v_n)` on precomputed coefficients.
pub fn coefficient_form(spectrum: &DtnSpectrum, un: &FourierCoefficients, vn: &FourierCoefficients) -> Complex64 {
    let mut acc = ZERO;
    for (mode, (u, v)) in spectrum.modes.iter().zip(un.values.iter().zip(&vn.values)) {
        let mu = mat_vec(&mode.matrix, u);
        acc += mu[0] * v[0].conj() + mu[1] * v[1].conj();
    }
    acc * (2.0 * PI * spectrum.radius)
}

fn check_radii(r_hat: f64, r: f64) -> Result<f64> {
    if !(r_hat > 0.0 && r_hat < r) {
        return Err(Error::InvalidRadii(format!("need 0 < R_hat < R, got R_hat = {r_hat}, R = {r}")));
    }
    Ok(r_hat / r)
}

/// `max_{|n| >= N} |n| (R_hat/R)^|n|` times `||u_inc||_{H^1}`.
///
/// `f(n) = n q^n` increases up to `1/ln(1/q)` and decreases after, so the
/// maximum lies within a short scan past `max(N, 1/ln(1/q))`.
pub fn truncation_error(n: usize, r_hat: f64, r: f64, u_inc_h1: f64) -> Result<f64> {
    let q = check_radii(r_hat, r)?;
    let decay = (1.0 / q).ln();
    let peak = (1.0 / decay).ceil() as usize;
    let end = n.max(peak) + (2.0 / decay).ceil() as usize + 1;
    let best = (n.max(1)..=end).map(|k| k as f64 * q.powi(k as i32)).fold(0.0, f64::max);
    Ok(best * u_inc_h1)
}

/// Smallest `N >= 0` with `truncation_error(N) <= tolerance`.
pub fn select_truncation(r_hat: f64, r: f64, u_inc_h1: f64, tolerance: f64) -> Result<usize> {
    check_radii(r_hat, r)?;
    if !(tolerance > 0.0) {
        return Err(Error::Config(format!("truncation tolerance must be positive, got {tolerance}")));
    }
    let mut n = 0;
    while truncation_error(n, r_hat, r, u_inc_h1)? > tolerance {
        n += 1;
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn material() -> Material {
        Material { omega: PI, lambda: 2.0, mu: 1.0 }
    }

    fn equispaced(m: usize) -> Vec<f64> {
        (0..m).map(|k| 2.0 * PI * k as f64 / m as f64).collect()
    }

    #[test]
    fn zero_mode_has_no_coupling() {
        let s = DtnSpectrum::new(material(), 1.0, 0).unwrap();
        assert_eq!(s.modes.len(), 1);
        let m = s.mode(0).matrix;
        assert_eq!(m[0][1], ZERO);
        assert_eq!(m[1][0], ZERO);
    }

    #[test]
    fn parity_structure() {
        let s = DtnSpectrum::new(material(), 1.0, 8).unwrap();
        for n in 1..=8 {
            let p = s.mode(n).matrix;
            let m = s.mode(-n).matrix;
            assert_eq!(p[0][0], m[0][0]);
            assert_eq!(p[1][1], m[1][1]);
            assert!((p[0][1] + m[0][1]).norm() <= 1e-14 * p[0][1].norm());
            assert!((p[1][0] + m[1][0]).norm() <= 1e-14 * p[1][0].norm());
            assert_eq!(p[1][0], -p[0][1]);
        }
    }

    #[test]
    fn constant_cartesian_trace() {
        let angles = equispaced(64);
        let values = vec![[Complex64::new(1.0, 0.0), ZERO]; 64];
        let trace = BoundaryTrace::new(angles, values).unwrap();
        let c = fourier_coefficients(&trace, 6).unwrap();
        let expect = |n: i64| -> Vec2 {
            match n {
                1 => [Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.5)],
                -1 => [Complex64::new(0.5, 0.0), Complex64::new(0.0, -0.5)],
                _ => [ZERO, ZERO],
            }
        };
        for n in -6..=6 {
            let got = c.get(n);
            let want = expect(n);
            let err = (got[0] - want[0]).norm().max((got[1] - want[1]).norm());
            assert!(err <= 1e-3, "n = {n}: {got:?}");
        }
    }

    #[test]
    fn single_mode_trace_converges_quadratically() {
        let err_at = |m: usize| {
            let angles = equispaced(m);
            // polar (e^{3i theta}, 0) written in Cartesian components
            let values: Vec<Vec2> = angles
                .iter()
                .map(|&t| to_cartesian(&[Complex64::from_polar(1.0, 3.0 * t), ZERO], t))
                .collect();
            let trace = BoundaryTrace::new(angles, values).unwrap();
            let c = fourier_coefficients(&trace, 4).unwrap();
            // interpolating e^{in theta} on a uniform grid damps it by sinc^2(n h / 2)
            let x = 3.0 * PI / m as f64;
            let damped = (x.sin() / x).powi(2);
            assert!((c.get(3)[0] - damped).norm() < 1e-12);
            (c.get(3)[0] - 1.0).norm()
        };
        let (e1, e2) = (err_at(32), err_at(64));
        assert!(e1 < 0.03);
        let ratio = e1 / e2;
        assert!(ratio > 3.8 && ratio < 4.2, "ratio {ratio}");
    }

    #[test]
    fn zero_trace_has_zero_coefficients() {
        let trace = BoundaryTrace::new(equispaced(10), vec![[ZERO; 2]; 10]).unwrap();
        let c = fourier_coefficients(&trace, 3).unwrap();
        assert!(c.values.iter().all(|v| v[0] == ZERO && v[1] == ZERO));
    }

    #[test]
    fn trace_validation() {
        assert!(matches!(
            BoundaryTrace::new(vec![0.0, 1.0], vec![[ZERO; 2]; 2]),
            Err(Error::EmptyBoundary(2))
        ));
        assert!(matches!(
            BoundaryTrace::new(vec![0.0, 2.0, 1.0], vec![[ZERO; 2]; 3]),
            Err(Error::UnsortedBoundary)
        ));
    }

    #[test]
    fn boundary_form_linearity_and_mismatch() {
        let s = DtnSpectrum::new(material(), 1.0, 5).unwrap();
        let angles = equispaced(40);
        let u: Vec<Vec2> = angles
            .iter()
            .map(|&t| [Complex64::new(t.cos(), 0.3), Complex64::new((2.0 * t).sin(), -t)])
            .collect();
        let v: Vec<Vec2> = angles.iter().map(|&t| [Complex64::new(1.0, t), Complex64::new(0.5, 0.0)]).collect();
        let a = Complex64::new(0.7, -1.3);
        let au: Vec<Vec2> = u.iter().map(|x| [x[0] * a, x[1] * a]).collect();
        let tu = BoundaryTrace::new(angles.clone(), u).unwrap();
        let tau = BoundaryTrace::new(angles.clone(), au).unwrap();
        let tv = BoundaryTrace::new(angles.clone(), v).unwrap();
        let base = dtn_boundary_form(&s, &tu, &tv).unwrap();
        let scaled = dtn_boundary_form(&s, &tau, &tv).unwrap();
        assert!((scaled - a * base).norm() <= 1e-12 * base.norm());

        let zero = BoundaryTrace::new(angles.clone(), vec![[ZERO; 2]; 40]).unwrap();
        assert_eq!(dtn_boundary_form(&s, &zero, &tv).unwrap(), ZERO);

        let other = BoundaryTrace::new(equispaced(41), vec![[ZERO; 2]; 41]).unwrap();
        assert!(matches!(dtn_boundary_form(&s, &tu, &other), Err(Error::NodeSetMismatch)));
    }

    #[test]
    fn truncation_error_examples() {
        assert!((truncation_error(4, 0.5, 1.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        let e30 = truncation_error(30, 0.5, 1.0, 1.0).unwrap();
        assert!((e30 - 30.0 * 0.5f64.powi(30)).abs() < 1e-22);
        assert!((e30 - 2.794e-8).abs() < 1e-11);
        assert!(matches!(truncation_error(3, 1.0, 1.0, 1.0), Err(Error::InvalidRadii(_))));
    }

    #[test]
    fn selection_examples() {
        // 31 * 2^-31 = 1.44e-8 > 1e-8 >= 32 * 2^-32 = 7.45e-9
        assert_eq!(select_truncation(0.5, 1.0, 1.0, 1e-8).unwrap(), 32);
        let e0 = truncation_error(0, 0.5, 1.0, 1.0).unwrap();
        assert_eq!(select_truncation(0.5, 1.0, 1.0, e0).unwrap(), 0);
        assert_eq!(select_truncation(0.5, 1.0, 1.0, 10.0).unwrap(), 0);
    }

    #[test]
    fn spectrum_table_rows() {
        let s = DtnSpectrum::new(material(), 1.0, 5).unwrap();
        let rows = s.table().lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(rows, 11);
    }
}

//! Browser bindings: build a problem, solve and estimate on the current
//! mesh, refine adaptively, and tabulate the DtN symbol.

use wasm_bindgen::prelude::*;

use elastic_dtn::assembly::{incident_h1, triangle_magnitudes};
use elastic_dtn::driver::{check_mesh, solve_step, Example, Step};
use elastic_dtn::dtn::{build_spectrum, DtnSpectrum};
use elastic_dtn::mesh::{mark, Mesh};
use elastic_dtn::problem::ProblemConfig;
use elastic_dtn::specfun::mode_scalars;

fn js(e: elastic_dtn::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

#[wasm_bindgen]
pub struct Session {
    config: ProblemConfig,
    mesh: Mesh,
    spectrum: DtnSpectrum,
    u_inc_h1: f64,
    step: Option<Step>,
}

#[wasm_bindgen]
impl Session {
    /// `example` is 1 (disk) or 2 (U shape).
    #[wasm_bindgen(constructor)]
    pub fn new(example: u32, omega: f64) -> Result<Session, JsValue> {
        let example = Example::from_number(example).map_err(js)?;
        let mut config = example.config();
        config.omega = omega;
        config.validate().map_err(js)?;
        let mesh = example.mesh(&config).map_err(js)?;
        check_mesh(&mesh, &config).map_err(js)?;
        let u_inc_h1 = incident_h1(&config, &mesh).map_err(js)?;
        let spectrum = build_spectrum(&config, u_inc_h1).map_err(js)?;
        Ok(Session { config, mesh, spectrum, u_inc_h1, step: None })
    }

    /// Solves on the current mesh and returns `[dof, eps_h, e_h]`, with
    /// `e_h = NaN` when no exact solution is known.
    pub fn solve(&mut self) -> Result<Vec<f64>, JsValue> {
        let step = solve_step(&self.mesh, &self.config, &self.spectrum, self.u_inc_h1).map_err(js)?;
        let out = vec![step.report.dof as f64, step.report.eps_h, step.report.e_h.unwrap_or(f64::NAN)];
        self.step = Some(step);
        Ok(out)
    }

    /// Marks with the maximum strategy and bisects; solves first if needed.
    pub fn refine(&mut self) -> Result<(), JsValue> {
        if self.step.is_none() {
            self.solve()?;
        }
        let eta = &self.step.as_ref().expect("solved").report.eta;
        let marked = mark(eta, self.config.theta).map_err(js)?;
        self.mesh = self.mesh.refine(&marked).map_err(js)?;
        self.step = None;
        Ok(())
    }

    pub fn truncation(&self) -> usize {
        self.spectrum.truncation_n
    }

    /// Vertex coordinates as `x0, y0, x1, y1, ...`.
    pub fn vertices(&self) -> Vec<f64> {
        self.mesh.vertices.iter().flatten().copied().collect()
    }

    pub fn triangles(&self) -> Vec<u32> {
        self.mesh.triangles.iter().flatten().map(|&v| v as u32).collect()
    }

    /// Per-triangle `|u_h|` of the last solve, empty before solving.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.step.as_ref().map_or_else(Vec::new, |s| triangle_magnitudes(&self.mesh, &s.field))
    }

    /// Per-triangle error indicators of the last solve, empty before solving.
    pub fn indicators(&self) -> Vec<f64> {
        self.step.as_ref().map_or_else(Vec::new, |s| s.report.eta.clone())
    }
}

/// `Re Lambda_n, Im Lambda_n` for `n = 0..=n_max` at radius `r`, flattened.
#[wasm_bindgen]
pub fn lambda_curve(omega: f64, lambda: f64, mu: f64, r: f64, n_max: u32) -> Result<Vec<f64>, JsValue> {
    let k1 = omega / (lambda + 2.0 * mu).sqrt();
    let k2 = omega / mu.sqrt();
    let mut out = Vec::with_capacity(2 * n_max as usize + 2);
    for n in 0..=n_max as i64 {
        let s = mode_scalars(n, k1, k2, r).map_err(js)?;
        out.extend([s.lambda_n.re, s.lambda_n.im]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refine_grows_the_mesh() {
        let mut s = Session::new(1, std::f64::consts::PI).unwrap();
        let first = s.solve().unwrap();
        assert_eq!(first[0], 320.0);
        assert!(first[2] > 0.0);
        let before = s.triangles().len();
        s.refine().unwrap();
        assert!(s.triangles().len() > before);
        assert!(s.magnitudes().is_empty());
        s.solve().unwrap();
        assert_eq!(s.magnitudes().len() * 3, s.triangles().len());
        assert_eq!(s.indicators().len() * 3, s.triangles().len());
    }

    #[test]
    fn lambda_curve_approaches_its_limit() {
        let c = lambda_curve(std::f64::consts::PI, 2.0, 1.0, 1.0, 200).unwrap();
        let limit = 5.0 * std::f64::consts::PI.powi(2) / 8.0;
        assert!((c[400] - limit).abs() < 0.1);
    }
}

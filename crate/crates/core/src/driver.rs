//! The adaptive loop, uniform-refinement baseline, configuration files and
//! run artifacts.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use crate::assembly::{self, incident_h1, SolutionField};
use crate::dtn::{build_spectrum, DtnSpectrum, Material};
use crate::error::{Error, Result};
use crate::estimator::{global_estimate, EstimateReport};
use crate::mesh::{mark, LoadOptions, Mesh, ObstacleShape, Point, VertexTag};
use crate::problem::{Incident, ProblemConfig};
use crate::verify::{exact_solution_example1, h1_error};

/// U-shaped obstacle inside the circle of radius 3.
pub const USHAPE_MESH: &str = include_str!("../fixtures/ushape.mesh");

/// Obstacle radius of the disk benchmark.
pub const EXAMPLE1_OBSTACLE_RADIUS: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub dof: usize,
    pub triangles: usize,
    pub eps_h: f64,
    pub eps_n: f64,
    pub e_h: Option<f64>,
    pub energy_error: Option<f64>,
    /// Centroid of the triangle with the largest indicator.
    pub max_eta_at: Point,
    pub wall_seconds: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    DofBudget,
    RoundsDone,
}

#[derive(Clone, Debug)]
pub struct RunHistory {
    pub records: Vec<IterationRecord>,
    pub config: ProblemConfig,
    pub truncation_n: usize,
    pub u_inc_h1: f64,
    pub stop: Option<StopReason>,
    pub final_mesh: Mesh,
    pub final_field: SolutionField,
    pub final_eta: Vec<f64>,
}

impl RunHistory {
    /// `iter,dof,eps_h,eps_N,e_h`; wall time is left out so identical runs
    /// give identical files.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,dof,eps_h,eps_N,e_h\n");
        for r in &self.records {
            let e = r.e_h.map_or_else(String::new, |v| format!("{v:.12e}"));
            let _ = writeln!(out, "{},{},{:.12e},{:.12e},{}", r.iteration, r.dof, r.eps_h, r.eps_n, e);
        }
        out
    }
}

/// Solution and estimate on one mesh.
#[derive(Clone, Debug)]
pub struct Step {
    pub field: SolutionField,
    pub report: EstimateReport,
}

/// Assemble, solve and estimate; fills `e_h` when the exact solution is known.
pub fn solve_step(mesh: &Mesh, config: &ProblemConfig, spectrum: &DtnSpectrum, u_inc_h1: f64) -> Result<Step> {
    let system = assembly::assemble(mesh, config, spectrum)?;
    let field = assembly::solve(&system)?;
    let mut report = global_estimate(mesh, &field, spectrum, config, u_inc_h1)?;
    if config.incident == Incident::Radial {
        let material = Material::from(config);
        let (e_h, energy) = h1_error(mesh, &field, &material, |p| exact_solution_example1(&material, p))?;
        report.e_h = Some(e_h);
        report.energy_error = Some(energy);
    }
    Ok(Step { field, report })
}

/// Checks the mesh against the configuration: outer circle of radius `R` and
/// obstacle inside the disk of radius `R_hat`.
pub fn check_mesh(mesh: &Mesh, config: &ProblemConfig) -> Result<()> {
    if (mesh.outer_radius - config.r).abs() > 1e-12 * config.r {
        return Err(Error::InvalidRadii(format!(
            "mesh outer radius {} does not match R = {}",
            mesh.outer_radius, config.r
        )));
    }
    for (p, _) in mesh.vertices.iter().zip(&mesh.tags).filter(|(_, &t)| t == VertexTag::Obstacle) {
        let r = p[0].hypot(p[1]);
        if r > config.r_hat * (1.0 + 1e-12) {
            return Err(Error::InvalidRadii(format!(
                "obstacle vertex at radius {r} lies outside R_hat = {}",
                config.r_hat
            )));
        }
    }
    Ok(())
}

struct Setup {
    spectrum: DtnSpectrum,
    u_inc_h1: f64,
}

fn setup(config: &ProblemConfig, mesh: &Mesh) -> Result<Setup> {
    config.validate()?;
    check_mesh(mesh, config)?;
    let u_inc_h1 = incident_h1(config, mesh)?;
    let spectrum = build_spectrum(config, u_inc_h1)?;
    Ok(Setup { spectrum, u_inc_h1 })
}

fn record(iteration: usize, mesh: &Mesh, step: &Step, started: Instant) -> IterationRecord {
    let (mut best, mut at) = (-1.0, 0);
    for (t, &e) in step.report.eta.iter().enumerate() {
        if e > best {
            best = e;
            at = t;
        }
    }
    IterationRecord {
        iteration,
        dof: step.report.dof,
        triangles: mesh.triangle_count(),
        eps_h: step.report.eps_h,
        eps_n: step.report.eps_n,
        e_h: step.report.e_h,
        energy_error: step.report.energy_error,
        max_eta_at: mesh.centroid(at),
        wall_seconds: started.elapsed().as_secs_f64(),
    }
}

/// Solve, estimate, stop when `eps_h <= tol` or the DoF budget is reached,
/// otherwise mark with the maximum strategy and refine. Reaching the
/// iteration cap first is an error carrying the partial history.
pub fn adaptive_solve(config: &ProblemConfig, initial_mesh: Mesh) -> Result<RunHistory> {
    adaptive_solve_with(config, initial_mesh, |_, _, _| {})
}

/// `adaptive_solve` with a callback seeing every iteration's mesh and step.
pub fn adaptive_solve_with(
    config: &ProblemConfig,
    initial_mesh: Mesh,
    mut observe: impl FnMut(&IterationRecord, &Mesh, &Step),
) -> Result<RunHistory> {
    let Setup { spectrum, u_inc_h1 } = setup(config, &initial_mesh)?;
    let mut mesh = initial_mesh;
    let mut records = Vec::new();
    for iteration in 0.. {
        let started = Instant::now();
        let step = solve_step(&mesh, config, &spectrum, u_inc_h1)?;
        let rec = record(iteration, &mesh, &step, started);
        observe(&rec, &mesh, &step);
        records.push(rec);
        let stop = if step.report.eps_h <= config.tolerance {
            Some(StopReason::Converged)
        } else if config.max_dofs.is_some_and(|m| step.report.dof >= m) {
            Some(StopReason::DofBudget)
        } else {
            None
        };
        let done = |stop| RunHistory {
            records: records.clone(),
            config: config.clone(),
            truncation_n: spectrum.truncation_n,
            u_inc_h1,
            stop,
            final_mesh: mesh.clone(),
            final_field: step.field.clone(),
            final_eta: step.report.eta.clone(),
        };
        if stop.is_some() {
            return Ok(done(stop));
        }
        if iteration + 1 >= config.max_iterations {
            return Err(Error::IterationCapReached(Box::new(done(None))));
        }
        let marked = mark(&step.report.eta, config.theta)?;
        mesh = mesh.refine(&marked)?;
    }
    unreachable!()
}

/// Same pipeline with every triangle refined in each of `rounds` rounds.
pub fn uniform_solve(config: &ProblemConfig, initial_mesh: Mesh, rounds: usize) -> Result<RunHistory> {
    let Setup { spectrum, u_inc_h1 } = setup(config, &initial_mesh)?;
    let mut mesh = initial_mesh;
    let mut records = Vec::new();
    let mut last = None;
    for iteration in 0..=rounds {
        if iteration > 0 {
            mesh = mesh.refine_uniform()?;
        }
        let started = Instant::now();
        let step = solve_step(&mesh, config, &spectrum, u_inc_h1)?;
        records.push(record(iteration, &mesh, &step, started));
        last = Some(step);
    }
    let step = last.expect("at least one solve");
    Ok(RunHistory {
        records,
        config: config.clone(),
        truncation_n: spectrum.truncation_n,
        u_inc_h1,
        stop: Some(StopReason::RoundsDone),
        final_mesh: mesh,
        final_field: step.field,
        final_eta: step.report.eta,
    })
}

/// Which built-in problem to start from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Example {
    Disk,
    UShape,
}

impl Example {
    pub fn from_number(n: u32) -> Result<Self> {
        match n {
            1 => Ok(Example::Disk),
            2 => Ok(Example::UShape),
            _ => Err(Error::Config(format!("unknown example {n}, expected 1 or 2"))),
        }
    }

    pub fn config(self) -> ProblemConfig {
        match self {
            Example::Disk => ProblemConfig::example1(),
            Example::UShape => ProblemConfig::example2(),
        }
    }

    /// Initial mesh: a 64 x 4 annulus for the disk, the shipped fixture for
    /// the U shape.
    pub fn mesh(self, config: &ProblemConfig) -> Result<Mesh> {
        match self {
            Example::Disk => Mesh::annulus(EXAMPLE1_OBSTACLE_RADIUS, config.r, 64, 4),
            Example::UShape => Mesh::parse(USHAPE_MESH, ObstacleShape::Polygon, LoadOptions::default()),
        }
    }
}

/// Settings read from a `key = value` file; unset keys keep their defaults.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    pub example: Option<u32>,
    pub omega: Option<f64>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub r: Option<f64>,
    pub r_hat: Option<f64>,
    pub truncation: Option<usize>,
    pub theta: Option<f64>,
    pub tolerance: Option<f64>,
    pub truncation_tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
    pub max_dofs: Option<usize>,
    pub mesh: Option<String>,
    pub direction: Option<[f64; 2]>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ConfigFile::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::ParseError { line: i + 1, message };
            let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim().replace('-', "_").to_ascii_lowercase(), value.trim());
            let real = || value.parse::<f64>().map_err(|_| err(format!("`{key}` expects a number, got `{value}`")));
            let int = || value.parse::<usize>().map_err(|_| err(format!("`{key}` expects an integer, got `{value}`")));
            match key.as_str() {
                "example" => cfg.example = Some(int()? as u32),
                "omega" => cfg.omega = Some(real()?),
                "lambda" => cfg.lambda = Some(real()?),
                "mu" => cfg.mu = Some(real()?),
                "r" => cfg.r = Some(real()?),
                "r_hat" => cfg.r_hat = Some(real()?),
                "n" => cfg.truncation = Some(int()?),
                "theta" => cfg.theta = Some(real()?),
                "tol" | "tolerance" => cfg.tolerance = Some(real()?),
                "truncation_tol" => cfg.truncation_tolerance = Some(real()?),
                "max_iters" => cfg.max_iterations = Some(int()?),
                "max_dofs" => cfg.max_dofs = Some(int()?),
                "mesh" => cfg.mesh = Some(value.to_string()),
                "direction" => {
                    let parts: Vec<f64> = value
                        .split(|c: char| c == ',' || c.is_whitespace())
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| err(format!("`direction` expects two numbers, got `{value}`")))?;
                    if parts.len() != 2 {
                        return Err(err(format!("`direction` expects two numbers, got `{value}`")));
                    }
                    cfg.direction = Some([parts[0], parts[1]]);
                }
                _ => return Err(err(format!("unknown key `{key}`"))),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Later settings win.
    pub fn merge(self, over: ConfigFile) -> ConfigFile {
        ConfigFile {
            example: over.example.or(self.example),
            omega: over.omega.or(self.omega),
            lambda: over.lambda.or(self.lambda),
            mu: over.mu.or(self.mu),
            r: over.r.or(self.r),
            r_hat: over.r_hat.or(self.r_hat),
            truncation: over.truncation.or(self.truncation),
            theta: over.theta.or(self.theta),
            tolerance: over.tolerance.or(self.tolerance),
            truncation_tolerance: over.truncation_tolerance.or(self.truncation_tolerance),
            max_iterations: over.max_iterations.or(self.max_iterations),
            max_dofs: over.max_dofs.or(self.max_dofs),
            mesh: over.mesh.or(self.mesh),
            direction: over.direction.or(self.direction),
        }
    }

    /// The example's defaults with these settings applied.
    pub fn resolve(&self) -> Result<(Example, ProblemConfig)> {
        let example = Example::from_number(self.example.unwrap_or(1))?;
        let mut c = example.config();
        c.omega = self.omega.unwrap_or(c.omega);
        c.lambda = self.lambda.unwrap_or(c.lambda);
        c.mu = self.mu.unwrap_or(c.mu);
        c.r = self.r.unwrap_or(c.r);
        c.r_hat = self.r_hat.unwrap_or(c.r_hat);
        c.truncation = self.truncation.or(c.truncation);
        c.theta = self.theta.unwrap_or(c.theta);
        c.tolerance = self.tolerance.unwrap_or(c.tolerance);
        c.truncation_tolerance = self.truncation_tolerance.unwrap_or(c.truncation_tolerance);
        c.max_iterations = self.max_iterations.unwrap_or(c.max_iterations);
        c.max_dofs = self.max_dofs.or(c.max_dofs);
        if let Some(d) = self.direction {
            c.incident = Incident::PlaneWave { direction: d };
        }
        c.validate()?;
        Ok((example, c))
    }

    pub fn initial_mesh(&self, example: Example, config: &ProblemConfig) -> Result<Mesh> {
        match &self.mesh {
            Some(path) => {
                let shape = match example {
                    Example::Disk => ObstacleShape::Circle { radius: EXAMPLE1_OBSTACLE_RADIUS },
                    Example::UShape => ObstacleShape::Polygon,
                };
                Mesh::load(path, shape, LoadOptions::default())
            }
            None => example.mesh(config),
        }
    }
}

/// Writes `history.csv`, `mesh_final.txt`, `solution_final.csv`,
/// `eta_final.csv`, `magnitude_final.csv` and `spectrum.txt` into `dir`.
pub fn write_outputs(dir: &Path, history: &RunHistory, spectrum: Option<&DtnSpectrum>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("history.csv"), history.to_csv())?;
    history.final_mesh.save(dir.join("mesh_final.txt"))?;
    std::fs::write(dir.join("solution_final.csv"), assembly::solution_csv(&history.final_mesh, &history.final_field))?;
    std::fs::write(dir.join("eta_final.csv"), scalar_csv("eta", &history.final_eta))?;
    let mags = assembly::triangle_magnitudes(&history.final_mesh, &history.final_field);
    std::fs::write(dir.join("magnitude_final.csv"), scalar_csv("abs_u", &mags))?;
    if let Some(s) = spectrum {
        std::fs::write(dir.join("spectrum.txt"), s.table())?;
    }
    Ok(())
}

/// `triangle,<name>` lines with a header.
pub fn scalar_csv(name: &str, values: &[f64]) -> String {
    let mut out = format!("triangle,{name}\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{i},{v:.12e}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_roundtrip() {
        let text = "# disk run\nexample = 1\nomega = 6.283185307179586\nR-hat = 0.5 # inline\nN=12\nmax_iters = 4\n";
        let cfg = ConfigFile::parse(text).unwrap();
        assert_eq!(cfg.truncation, Some(12));
        assert_eq!(cfg.max_iterations, Some(4));
        let (ex, c) = cfg.resolve().unwrap();
        assert_eq!(ex, Example::Disk);
        assert_eq!(c.omega, 2.0 * std::f64::consts::PI);
        assert_eq!(c.truncation, Some(12));
    }

    #[test]
    fn config_file_errors_name_the_line() {
        match ConfigFile::parse("omega = 1\n\nbogus = 3\n") {
            Err(Error::ParseError { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(ConfigFile::parse("theta = x"), Err(Error::ParseError { line: 1, .. })));
        let bad = ConfigFile { r: Some(1.0), r_hat: Some(2.0), ..Default::default() };
        assert!(matches!(bad.resolve(), Err(Error::InvalidRadii(_))));
    }

    #[test]
    fn merge_prefers_overrides() {
        let a = ConfigFile { omega: Some(1.0), mu: Some(2.0), ..Default::default() };
        let b = ConfigFile { omega: Some(3.0), ..Default::default() };
        let m = a.merge(b);
        assert_eq!((m.omega, m.mu), (Some(3.0), Some(2.0)));
    }

    #[test]
    fn fixture_mesh_fits_example2() {
        let config = ProblemConfig::example2();
        let mesh = Example::UShape.mesh(&config).unwrap();
        check_mesh(&mesh, &config).unwrap();
        mesh.check_invariants().unwrap();
        assert_eq!(mesh.euler_characteristic(), 0);
    }

    #[test]
    fn infinite_tolerance_stops_after_one_solve() {
        let config = ProblemConfig { tolerance: f64::INFINITY, truncation: Some(8), ..ProblemConfig::example1() };
        let mesh = Mesh::annulus(0.5, 1.0, 16, 2).unwrap();
        let h = adaptive_solve(&config, mesh).unwrap();
        assert_eq!(h.records.len(), 1);
        assert_eq!(h.stop, Some(StopReason::Converged));
        assert!(h.records[0].e_h.is_some());
    }

    #[test]
    fn iteration_cap_returns_partial_history() {
        let config = ProblemConfig { tolerance: 1e-12, truncation: Some(4), max_iterations: 2, ..ProblemConfig::example1() };
        let mesh = Mesh::annulus(0.5, 1.0, 16, 1).unwrap();
        match adaptive_solve(&config, mesh) {
            Err(Error::IterationCapReached(h)) => {
                assert_eq!(h.records.len(), 2);
                assert!(h.records[1].dof > h.records[0].dof);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn uniform_rounds() {
        let config = ProblemConfig { truncation: Some(4), ..ProblemConfig::example1() };
        let mesh = Mesh::annulus(0.5, 1.0, 8, 1).unwrap();
        let zero = uniform_solve(&config, mesh.clone(), 0).unwrap();
        assert_eq!(zero.records.len(), 1);
        let two = uniform_solve(&config, mesh, 2).unwrap();
        assert_eq!(two.records.len(), 3);
        assert_eq!(two.final_mesh.triangle_count(), 256);
    }

    #[test]
    fn mismatched_outer_radius_is_rejected() {
        let config = ProblemConfig::example1();
        let mesh = Mesh::annulus(0.5, 1.5, 16, 1).unwrap();
        assert!(matches!(adaptive_solve(&config, mesh), Err(Error::InvalidRadii(_))));
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use elastic_dtn::driver::{adaptive_solve, uniform_solve, write_outputs, ConfigFile, RunHistory, StopReason};
use elastic_dtn::dtn::{build_spectrum, DtnSpectrum, Material};
use elastic_dtn::mesh::{EdgeTag, Mesh};
use elastic_dtn::verify::comparison_table;
use elastic_dtn::{Error, Result};

/// Default vertex budget for `solve` when none is configured.
const DEFAULT_MAX_DOFS: usize = 20_000;

#[derive(Parser)]
#[command(name = "elastic-dtn", version, about = "Adaptive DtN finite elements for elastic scattering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the adaptive loop and write the run artifacts.
    Solve(Common),
    /// Adaptive and uniform runs side by side.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Uniform refinement rounds.
        #[arg(long, default_value_t = 3)]
        rounds: usize,
    },
    /// Print the DtN mode matrices.
    SpectrumDump(Common),
    /// Summarize a mesh.
    MeshInfo(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// `key = value` configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=2))]
    example: Option<u32>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long = "R")]
    r: Option<f64>,
    #[arg(long = "R-hat")]
    r_hat: Option<f64>,
    /// DtN truncation order (selected from the truncation bound if omitted).
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Stop once the mesh has this many vertices.
    #[arg(long)]
    max_dofs: Option<usize>,
    #[arg(long)]
    mesh: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn settings(&self) -> Result<ConfigFile> {
        let base = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        Ok(base.merge(ConfigFile {
            example: self.example,
            omega: self.omega,
            lambda: self.lambda,
            mu: self.mu,
            r: self.r,
            r_hat: self.r_hat,
            truncation: self.n,
            theta: self.theta,
            tolerance: self.tol,
            truncation_tolerance: None,
            max_iterations: self.max_iters,
            max_dofs: self.max_dofs,
            mesh: self.mesh.clone(),
            direction: None,
        }))
    }
}

fn print_history(h: &RunHistory) {
    println!("N = {}, ||u_inc||_H1 = {:.6}", h.truncation_n, h.u_inc_h1);
    println!("{:>4} {:>8} {:>12} {:>12} {:>12}", "iter", "dof", "eps_h", "eps_N", "e_h");
    for r in &h.records {
        let e = r.e_h.map_or_else(|| "-".into(), |v| format!("{v:.6e}"));
        println!("{:>4} {:>8} {:>12.6e} {:>12.6e} {:>12}", r.iteration, r.dof, r.eps_h, r.eps_n, e);
    }
}

fn spectrum_for(h: &RunHistory) -> Result<DtnSpectrum> {
    DtnSpectrum::new(Material::from(&h.config), h.config.r, h.truncation_n)
}

fn solve(common: &Common) -> Result<()> {
    let settings = common.settings()?;
    let (example, mut config) = settings.resolve()?;
    if config.max_dofs.is_none() {
        config.max_dofs = Some(DEFAULT_MAX_DOFS);
    }
    let mesh = settings.initial_mesh(example, &config)?;
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    match adaptive_solve(&config, mesh) {
        Ok(h) => {
            print_history(&h);
            write_outputs(&out, &h, Some(&spectrum_for(&h)?))?;
            match h.stop {
                Some(StopReason::DofBudget) => println!(
                    "stopped at the DoF budget of {} before eps_h <= {}",
                    config.max_dofs.unwrap_or(0),
                    config.tolerance
                ),
                _ => println!("converged: eps_h <= {}", config.tolerance),
            }
            println!("outputs written to {}", out.display());
            Ok(())
        }
        Err(Error::IterationCapReached(h)) => {
            print_history(&h);
            write_outputs(&out, &h, Some(&spectrum_for(&h)?))?;
            println!("partial outputs written to {}", out.display());
            Err(Error::IterationCapReached(h))
        }
        Err(e) => Err(e),
    }
}

fn convergence(common: &Common, rounds: usize) -> Result<()> {
    let settings = common.settings()?;
    let (example, mut config) = settings.resolve()?;
    if config.max_dofs.is_none() {
        config.max_dofs = Some(DEFAULT_MAX_DOFS);
    }
    let mesh = settings.initial_mesh(example, &config)?;
    let adaptive = match adaptive_solve(&config, mesh.clone()) {
        Ok(h) => h,
        Err(Error::IterationCapReached(h)) => *h,
        Err(e) => return Err(e),
    };
    let uniform = uniform_solve(&config, mesh, rounds)?;
    let table = comparison_table(&adaptive, &uniform);
    print!("{table}");
    if let Some(out) = &common.out {
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join("convergence.txt"), &table)?;
        std::fs::write(out.join("history_adaptive.csv"), adaptive.to_csv())?;
        std::fs::write(out.join("history_uniform.csv"), uniform.to_csv())?;
    }
    Ok(())
}

fn spectrum_dump(common: &Common) -> Result<()> {
    let settings = common.settings()?;
    let (example, config) = settings.resolve()?;
    let u_inc_h1 = if config.truncation.is_some() {
        1.0
    } else {
        let mesh = settings.initial_mesh(example, &config)?;
        elastic_dtn::assembly::incident_h1(&config, &mesh)?
    };
    let table = build_spectrum(&config, u_inc_h1)?.table();
    print!("{table}");
    if let Some(out) = &common.out {
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join("spectrum.txt"), &table)?;
    }
    Ok(())
}

fn mesh_info(common: &Common) -> Result<()> {
    let settings = common.settings()?;
    let (example, config) = settings.resolve()?;
    let mesh: Mesh = settings.initial_mesh(example, &config)?;
    mesh.check_invariants()?;
    println!("vertices        {}", mesh.vertex_count());
    println!("triangles       {}", mesh.triangle_count());
    println!("edges           {}", mesh.edges.len());
    println!("obstacle edges  {}", mesh.edges_tagged(EdgeTag::Obstacle).count());
    println!("outer edges     {}", mesh.edges_tagged(EdgeTag::Outer).count());
    println!("V - E + F       {}", mesh.euler_characteristic());
    println!("outer radius    {}", mesh.outer_radius);
    println!("min angle (deg) {:.3}", mesh.min_angle_degrees());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(c) => solve(c),
        Command::Convergence { common, rounds } => convergence(common, *rounds),
        Command::SpectrumDump(c) => spectrum_dump(c),
        Command::MeshInfo(c) => mesh_info(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

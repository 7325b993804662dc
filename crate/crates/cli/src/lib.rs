//! Command-line front end: configuration, experiment runs and artifacts.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod oracle;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;
use tvfcgcg::cut::solve_mincut;
use tvfcgcg::fcgcg::{run, run_comparison, write_run, InsertionMode, RunOutput, RunSummary};
use tvfcgcg::mesh::{generate_square_mesh, load_field, load_mesh, save_mesh, FieldKind};
use tvfcgcg::{Error, Result};

pub use config::ExperimentConfig;

/// Exit code for configuration and input errors.
pub const EXIT_CONFIG: i32 = 1;
/// Exit code for solver failures, including runs that did not converge.
pub const EXIT_SOLVER: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "tvfcgcg",
    version,
    about = "Total-variation regularized control on triangle meshes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the problem described by a config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Solve with both insertion modes and write a paired trace.
    Compare {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Write a jittered crisscross mesh of the square.
    Mesh {
        n: usize,
        jitter: f64,
        seed: u64,
        out: PathBuf,
    },
    /// Minimize −Σ c_T + Per(E) by enumeration (tiny meshes) and compare with the graph cut.
    OracleCut { mesh: PathBuf, weights: PathBuf },
}

#[derive(Debug, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<InsertionMode>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write zero wall times so reruns give byte-identical traces.
    #[arg(long)]
    pub no_wall_time: bool,
}

fn parse_mode(s: &str) -> std::result::Result<InsertionMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Overrides {
    pub fn apply(&self, config: &mut ExperimentConfig) -> Result<()> {
        if let Some(t) = self.tol {
            config.solver.tolerance = t;
        }
        if let Some(m) = self.max_iter {
            config.solver.max_iter = m;
        }
        if let Some(m) = self.mode {
            config.solver.mode = m;
        }
        if let Some(o) = &self.out {
            config.output.directory = o.clone();
        }
        if self.no_wall_time {
            config.output.wall_time = false;
        }
        config.validate()
    }
}

/// Sizes the global thread pool from `TVFCGCG_THREADS`, if set.
pub fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("TVFCGCG_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| {
            Error::Config(format!(
                "TVFCGCG_THREADS must be a positive integer, got `{value}`"
            ))
        })?;
    // A pool may already exist (e.g. in tests); that is not an error.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

/// Runs a command; `Ok(code)` is the process exit code.
pub fn execute(command: &Command) -> Result<i32> {
    match command {
        Command::Run { config, overrides } => run_command(config, overrides),
        Command::Compare { config, overrides } => compare_command(config, overrides),
        Command::Mesh {
            n,
            jitter,
            seed,
            out,
        } => {
            let mesh = generate_square_mesh(*n, *jitter, *seed)?;
            save_mesh(&mesh, out)?;
            println!(
                "wrote {} ({} vertices, {} triangles)",
                out.display(),
                mesh.num_vertices(),
                mesh.num_triangles()
            );
            Ok(0)
        }
        Command::OracleCut { mesh, weights } => oracle_command(mesh, weights),
    }
}

fn prepare(config_path: &Path, overrides: &Overrides) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(config_path)?;
    overrides.apply(&mut config)?;
    Ok(config)
}

fn base_dir(config_path: &Path) -> PathBuf {
    config_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default()
}

fn write_config_copy(dir: &Path, config: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("config.toml");
    fs::write(&path, config.to_toml()).map_err(|e| Error::io(&path, e))
}

fn report(label: &str, out: &RunOutput, summary: &RunSummary) {
    println!(
        "{label}: {:?} after {} iterations, J = {:.12e}, j_k = {:.3e}, {} PDE solves (+{} setup), {} cuts, |A| = {}",
        out.status,
        summary.iterations,
        summary.final_objective,
        summary.final_indicator,
        summary.pde_solves,
        summary.setup_pde_solves,
        summary.cuts,
        summary.active_size
    );
}

fn run_command(config_path: &Path, overrides: &Overrides) -> Result<i32> {
    let config = prepare(config_path, overrides)?;
    let mesh = config.build_mesh()?;
    let problem = config.build_problem(mesh, &base_dir(config_path))?;
    info!(
        "{} triangles, {} vertices",
        problem.mesh().num_triangles(),
        problem.mesh().num_vertices()
    );
    let out = run(&problem, config.solver_options())?;
    let dir = &config.output.directory;
    write_config_copy(dir, &config)?;
    let summary = write_run(dir, problem.mesh(), &out, config.output.emit_fields)?;
    report("run", &out, &summary);
    println!("artifacts in {}", dir.display());
    Ok(if out.converged() { 0 } else { EXIT_SOLVER })
}

#[derive(Serialize)]
struct Comparison<'a> {
    onecut: &'a RunSummary,
    dinkelbach: &'a RunSummary,
    objective_gap: f64,
    onecut_one_cut_per_iteration: bool,
}

fn compare_command(config_path: &Path, overrides: &Overrides) -> Result<i32> {
    let config = prepare(config_path, overrides)?;
    let mesh = config.build_mesh()?;
    let problem = config.build_problem(mesh, &base_dir(config_path))?;
    let (onecut, dinkelbach) = run_comparison(&problem, config.solver_options())?;
    let dir = &config.output.directory;
    write_config_copy(dir, &config)?;
    let s1 = write_run(
        &dir.join("onecut"),
        problem.mesh(),
        &onecut,
        config.output.emit_fields,
    )?;
    let s2 = write_run(
        &dir.join("dinkelbach"),
        problem.mesh(),
        &dinkelbach,
        config.output.emit_fields,
    )?;

    let mut paired = String::from("mode,k,J,j_k,pde_solves,cuts\n");
    for (name, out) in [("onecut", &onecut), ("dinkelbach", &dinkelbach)] {
        for r in &out.trace.rows {
            paired.push_str(&format!(
                "{name},{},{},{},{},{}\n",
                r.k, r.objective, r.indicator, r.pde_solves, r.cuts
            ));
        }
    }
    let paired_path = dir.join("comparison.csv");
    fs::write(&paired_path, paired).map_err(|e| Error::io(&paired_path, e))?;
    let comparison = Comparison {
        onecut: &s1,
        dinkelbach: &s2,
        objective_gap: s2.final_objective - s1.final_objective,
        onecut_one_cut_per_iteration: onecut
            .trace
            .rows
            .iter()
            .enumerate()
            .all(|(k, r)| r.cuts == k + 1),
    };
    let json_path = dir.join("comparison.json");
    let json = serde_json::to_string_pretty(&comparison).expect("comparison serializes");
    fs::write(&json_path, json + "\n").map_err(|e| Error::io(&json_path, e))?;

    report("onecut", &onecut, &s1);
    report("dinkelbach", &dinkelbach, &s2);
    println!("artifacts in {}", dir.display());
    Ok(if onecut.converged() && dinkelbach.converged() {
        0
    } else {
        EXIT_SOLVER
    })
}

fn oracle_command(mesh_path: &Path, weights_path: &Path) -> Result<i32> {
    let mesh = load_mesh(mesh_path)?;
    let (kind, weights) = load_field(weights_path)?;
    if kind != FieldKind::P0 || weights.len() != mesh.num_triangles() {
        return Err(Error::Config(format!(
            "{}: expected a P0 field with {} values",
            weights_path.display(),
            mesh.num_triangles()
        )));
    }
    let oracle = oracle::brute_force_cut(&mesh, &weights, 1e-12)?;
    let cut = solve_mincut(&mesh, &weights)?;
    let agree =
        (oracle.energy - cut.energy).abs() <= 1e-9 && oracle.maximal_minimizer == cut.subset;
    println!("enumerated minimum energy: {:.15e}", oracle.energy);
    println!("graph cut energy:          {:.15e}", cut.energy);
    println!("minimizers: {}", oracle.minimizers);
    println!(
        "maximal minimizer: {:?}",
        oracle.maximal_minimizer.as_slice()
    );
    println!("graph cut subset:  {:?}", cut.subset.as_slice());
    println!("agree: {agree}");
    Ok(if agree { 0 } else { EXIT_SOLVER })
}

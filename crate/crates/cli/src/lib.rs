//! The `mge` driver: loads a problem file, applies command-line overrides,
//! runs a fixed-source or eigenvalue solve, and writes `convergence.csv`,
//! `flux.csv` and `manifest.json` into the output directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;

use mge_core::config::{BlockMode, DepthSetting, EigenConfig, PcQuadrature, SolverConfig};
use mge_core::material::{synth_upscatter_fixture, with_fission};
use mge_core::mesh::BoundaryCondition;
use mge_core::output::{emit_convergence_csv, write_flux_output};
use mge_core::problem::{fixture_problem, parse_problem_file, ProblemSpec};
use mge_core::solvers::record::{ConvergenceRecord, SolveStatus};
use mge_core::solvers::{
    build_context, dominance_ratio_estimate, gauss_seidel_solve, power_iteration, MultigroupSolver,
};
use mge_core::Error;

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

pub const CONVERGENCE_FILE: &str = "convergence.csv";
pub const FLUX_FILE: &str = "flux.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(name = "mge", version, about = "Multigroup discrete-ordinates solver with a multigrid-in-energy preconditioner")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a problem file.
    Run(RunArgs),
    /// Print the synthetic upscatter test problem as a problem file.
    Fixture(FixtureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Gmres,
    Gs,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct RunArgs {
    /// Problem file.
    pub problem: PathBuf,
    /// Run power iteration instead of a fixed-source solve.
    #[arg(long)]
    pub eigen: bool,
    /// Enable the multigrid-in-energy preconditioner.
    #[arg(long, value_enum)]
    pub precond: Option<Toggle>,
    /// Richardson weight.
    #[arg(long)]
    pub weight: Option<f64>,
    /// Relaxations per level.
    #[arg(long)]
    pub relax: Option<usize>,
    /// V-cycles per preconditioner application.
    #[arg(long)]
    pub vcycles: Option<usize>,
    /// V-cycle depth: `auto` or a level count.
    #[arg(long)]
    pub depth: Option<DepthSetting>,
    /// Quadrature order inside the preconditioner: `same` or an order.
    #[arg(long = "pc-sn")]
    pub pc_sn: Option<PcQuadrature>,
    /// Number of energy sets.
    #[arg(long)]
    pub sets: Option<usize>,
    /// Groups in the Krylov block: `all` or `upscatter`.
    #[arg(long)]
    pub block: Option<BlockMode>,
    /// Multigroup solver.
    #[arg(long, value_enum, default_value = "gmres")]
    pub solver: SolverKind,
    /// Relative residual tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    #[arg(long, default_value_t = 10)]
    pub groups: usize,
    #[arg(long, default_value_t = 5)]
    pub upscatter: usize,
    #[arg(long, default_value = "vacuum")]
    pub bc: BoundaryCondition,
    #[arg(long, default_value_t = 4)]
    pub sn: usize,
    /// Give the material fission data.
    #[arg(long)]
    pub fission: bool,
}

/// What the run used and produced, written next to the CSVs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub problem_file: PathBuf,
    pub mode: &'static str,
    pub solver: SolverKind,
    pub num_groups: usize,
    pub mesh_dims: [usize; 3],
    pub quadrature_order: usize,
    pub solver_config: SolverConfig,
    pub eigen_config: EigenConfig,
    pub cascade_groups: Vec<usize>,
    pub block_groups: [usize; 2],
    pub set_blocks: Vec<[usize; 2]>,
    /// Levels in each set's V-cycle, when the preconditioner is on.
    pub vcycle_depth: Option<usize>,
    pub outputs: Outputs,
    pub timings: Timings,
    pub status: SolveStatus,
    pub iterations: Iterations,
    pub k: Option<f64>,
    pub dominance_ratio: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct Outputs {
    pub convergence_csv: PathBuf,
    pub flux: PathBuf,
    pub manifest: PathBuf,
}

#[derive(Debug, Serialize)]
pub struct Timings {
    pub setup_seconds: f64,
    pub solve_seconds: f64,
}

#[derive(Debug, Default, Serialize)]
pub struct Iterations {
    /// GMRES iterations over the Krylov block (summed over outer iterations
    /// for eigenvalue runs).
    pub block_krylov: usize,
    /// Within-group Krylov iterations (cascade groups, or Gauss-Seidel).
    pub within_group_krylov: usize,
    pub total_krylov: usize,
    /// Gauss-Seidel or power-iteration outer iterations.
    pub outer: Option<usize>,
    pub within_group_solves: Option<usize>,
}

/// Applies command-line overrides on top of the file's settings.
pub fn apply_overrides(problem: &mut ProblemSpec, args: &RunArgs) {
    let s = &mut problem.solver;
    if let Some(t) = args.precond {
        s.precond_enabled = t == Toggle::On;
    }
    if let Some(w) = args.weight {
        s.weight = w;
    }
    if let Some(r) = args.relax {
        s.relaxations = r;
    }
    if let Some(v) = args.vcycles {
        s.vcycles = v;
    }
    if let Some(d) = args.depth {
        s.depth = d;
    }
    if let Some(q) = args.pc_sn {
        s.pc_quadrature = q;
    }
    if let Some(n) = args.sets {
        s.num_sets = n;
    }
    if let Some(b) = args.block {
        s.block_mode = b;
    }
    if let Some(t) = args.tol {
        s.tol = t;
    }
    if args.eigen {
        problem.eigen.enabled = true;
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NotConverged { .. }
        | Error::ReflectionNotConverged { .. }
        | Error::Breakdown { .. }
        | Error::ZeroDenominator => EXIT_NOT_CONVERGED,
        _ => EXIT_CONFIG,
    }
}

/// Parses arguments, runs, and returns the process exit code. Diagnostics go
/// to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_CONVERGED };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Fixture(f) => match fixture_text(&f) {
            Ok(text) => {
                print!("{text}");
                EXIT_CONVERGED
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_CONFIG
            }
        },
        Command::Run(r) => match run(&r) {
            Ok(manifest) => match manifest.status {
                SolveStatus::Converged => EXIT_CONVERGED,
                _ => {
                    eprintln!(
                        "solve did not converge ({:?}); results written to {}",
                        manifest.status,
                        r.out.display()
                    );
                    EXIT_NOT_CONVERGED
                }
            },
            Err(e) => {
                eprintln!("error: {e}");
                exit_code(&e)
            }
        },
    }
}

pub fn fixture_text(args: &FixtureArgs) -> mge_core::Result<String> {
    if !(1..=args.groups).contains(&args.upscatter) {
        return Err(Error::Config(format!(
            "upscatter count must be between 1 and {}",
            args.groups
        )));
    }
    let mut p = fixture_problem(args.groups, args.upscatter, args.bc, args.sn);
    if args.fission {
        p.materials = vec![with_fission(synth_upscatter_fixture(args.groups, args.upscatter))];
    }
    p.validate()?;
    Ok(p.to_problem_file())
}

/// Runs the solve described by `args` and writes every output file.
pub fn run(args: &RunArgs) -> mge_core::Result<RunManifest> {
    let setup = Instant::now();
    let text = fs::read_to_string(&args.problem).map_err(|e| {
        Error::Config(format!("cannot read problem file {}: {e}", args.problem.display()))
    })?;
    let mut problem = parse_problem_file(&text)?;
    apply_overrides(&mut problem, args);
    problem.solver.validate()?;
    if problem.eigen.enabled {
        problem.eigen.validate()?;
    }
    if args.solver == SolverKind::Gs {
        if problem.eigen.enabled {
            return Err(Error::Config("eigenvalue runs use the gmres solver".into()));
        }
        if problem.solver.precond_enabled {
            return Err(Error::Config(
                "the preconditioner applies to the gmres solver; use --precond off with --solver gs".into(),
            ));
        }
    }
    fs::create_dir_all(&args.out)?;
    let outputs = Outputs {
        convergence_csv: args.out.join(CONVERGENCE_FILE),
        flux: args.out.join(FLUX_FILE),
        manifest: args.out.join(MANIFEST_FILE),
    };

    let num_groups = problem.num_groups();
    let q = problem.source.to_moments(num_groups, problem.mesh.num_cells());
    let mut iterations = Iterations::default();
    let mut k = None;
    let mut dominance_ratio = None;
    let mut vcycle_depth = None;

    let (context, record, phi, setup_seconds, solve_seconds) = match args.solver {
        SolverKind::Gs => {
            let context = build_context(&problem, &problem.solver)?;
            let setup_seconds = setup.elapsed().as_secs_f64();
            let start = Instant::now();
            let out = gauss_seidel_solve(&context, &q, problem.solver.tol, problem.solver.max_iters)?;
            iterations.within_group_krylov = out.krylov_iterations;
            iterations.total_krylov = out.krylov_iterations;
            iterations.outer = Some(out.outer_iterations());
            iterations.within_group_solves = Some(out.within_group_solves);
            (context, out.record, out.phi, setup_seconds, start.elapsed().as_secs_f64())
        }
        SolverKind::Gmres => {
            let solver = MultigroupSolver::new(&problem, &problem.solver)?;
            vcycle_depth = solver.preconditioner.as_ref().map(|p| p.depth());
            let setup_seconds = setup.elapsed().as_secs_f64();
            let start = Instant::now();
            if problem.eigen.enabled {
                let out = power_iteration(&solver, &problem.eigen)?;
                let total: usize = out.record.outer.iter().map(|o| o.krylov_iters).sum();
                iterations.block_krylov = out.record.steps.len();
                iterations.within_group_krylov = total - iterations.block_krylov.min(total);
                iterations.total_krylov = total;
                iterations.outer = Some(out.outer_iterations());
                k = Some(out.k);
                dominance_ratio = dominance_ratio_estimate(&out.record);
                let secs = start.elapsed().as_secs_f64();
                (solver.context, out.record, out.phi, setup_seconds, secs)
            } else {
                let out = solver.solve(&q)?;
                iterations.block_krylov = out.block_iterations();
                iterations.within_group_krylov = out.cascade_iterations;
                iterations.total_krylov = out.total_krylov_iterations();
                let secs = start.elapsed().as_secs_f64();
                (solver.context, out.record, out.phi, setup_seconds, secs)
            }
        }
    };
    info!(
        "{:?} after {} block iterations ({} total Krylov)",
        record.status, iterations.block_krylov, iterations.total_krylov
    );

    write_record(&record, &outputs.convergence_csv)?;
    write_flux_output(&phi, &problem.mesh, &outputs.flux)?;

    let partition = &context.partition;
    let manifest = RunManifest {
        problem_file: args.problem.clone(),
        mode: if problem.eigen.enabled { "eigenvalue" } else { "fixed-source" },
        solver: args.solver,
        num_groups,
        mesh_dims: problem.mesh.dims(),
        quadrature_order: problem.quadrature_order,
        solver_config: problem.solver.clone(),
        eigen_config: problem.eigen.clone(),
        cascade_groups: partition.cascade_groups.clone(),
        block_groups: [partition.block_groups.start, partition.block_groups.end],
        set_blocks: partition.set_blocks.iter().map(|r| [r.start, r.end]).collect(),
        vcycle_depth,
        outputs,
        timings: Timings {
            setup_seconds,
            solve_seconds,
        },
        status: record.status,
        iterations,
        k,
        dominance_ratio,
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Output(format!("manifest: {e}")))?;
    fs::write(&manifest.outputs.manifest, json + "\n")?;
    Ok(manifest)
}

/// An all-cascade solve has no block iterations; its CSV still gets one row
/// recording the final (zero) residual so the file is never empty.
fn write_record(record: &ConvergenceRecord, path: &Path) -> mge_core::Result<()> {
    if record.steps.is_empty() && record.outer.is_empty() {
        let mut filled = record.clone();
        filled.steps.push(mge_core::solvers::record::IterationStep {
            res_norm: 0.0,
            seconds: 0.0,
        });
        return emit_convergence_csv(&filled, path);
    }
    emit_convergence_csv(record, path)
}

//! Solver drivers: the preconditioned multigroup Krylov solve, the
//! Gauss-Seidel baseline, and power iteration.

pub mod gauss_seidel;
pub mod gmres;
pub mod power;
pub mod record;

use crate::config::{PcQuadrature, SolverConfig};
use crate::error::{Error, Result};
use crate::mge::MgePreconditioner;
use crate::moments::MomentVector;
use crate::operator::{BlockMap, OperatorContext};
use crate::problem::ProblemSpec;
use crate::quadrature::build_quadrature;
use gmres::{gmres_solve, GmresOptions, LinearMap};
use record::{ConvergenceRecord, SolveStatus};

pub use gauss_seidel::{gauss_seidel_solve, GaussSeidelSolution};
pub use power::{power_iteration, EigenSolution};
pub use record::dominance_ratio_estimate;

pub fn gmres_options(config: &SolverConfig) -> GmresOptions {
    GmresOptions {
        tol: config.tol,
        max_iters: config.max_iters,
        restart: config.restart,
    }
}

/// Builds the operator context for a problem under `config`, resolving the
/// preconditioner quadrature.
pub fn build_context(problem: &ProblemSpec, config: &SolverConfig) -> Result<OperatorContext> {
    config.validate()?;
    let quadrature = build_quadrature(problem.quadrature_order)?;
    let pc_quadrature = match config.pc_quadrature {
        PcQuadrature::Same => quadrature.clone(),
        PcQuadrature::Order(n) => {
            if n != problem.quadrature_order && problem.mesh.any_reflecting() {
                return Err(Error::Config(format!(
                    "preconditioner quadrature S{n} differs from the problem's S{}; \
                     a reduced preconditioner quadrature is only supported with vacuum boundaries",
                    problem.quadrature_order
                )));
            }
            build_quadrature(n)?
        }
    };
    OperatorContext::new(
        problem.mesh.clone(),
        problem.materials.clone(),
        quadrature,
        pc_quadrature,
        config,
    )
}

#[derive(Debug, Clone)]
pub struct MultigroupSolution {
    /// Scalar flux over all groups.
    pub phi: MomentVector,
    /// History of the block GMRES solve.
    pub record: ConvergenceRecord,
    /// Within-group Krylov iterations spent on the downscatter cascade.
    pub cascade_iterations: usize,
}

impl MultigroupSolution {
    pub fn block_iterations(&self) -> usize {
        self.record.iterations()
    }

    pub fn total_krylov_iterations(&self) -> usize {
        self.block_iterations() + self.cascade_iterations
    }
}

/// Downscatter cascade followed by one (optionally MGE-preconditioned)
/// GMRES solve over the Krylov block.
#[derive(Debug, Clone)]
pub struct MultigroupSolver {
    pub context: OperatorContext,
    pub preconditioner: Option<MgePreconditioner>,
    pub config: SolverConfig,
}

impl MultigroupSolver {
    pub fn new(problem: &ProblemSpec, config: &SolverConfig) -> Result<Self> {
        let context = build_context(problem, config)?;
        let preconditioner = if config.precond_enabled && context.partition.block_len() > 0 {
            Some(MgePreconditioner::new(&context, config)?)
        } else {
            None
        };
        Ok(Self {
            context,
            preconditioner,
            config: config.clone(),
        })
    }

    /// Solves `(I - T M S) phi = T M q` for a source over all groups.
    pub fn solve(&self, q: &MomentVector) -> Result<MultigroupSolution> {
        let options = gmres_options(&self.config);
        let cascade = self.context.solve_cascade(q, &options)?;
        if self.context.partition.block_len() == 0 {
            let mut record = ConvergenceRecord::new();
            record.status = SolveStatus::Converged;
            return Ok(MultigroupSolution {
                phi: cascade.phi,
                record,
                cascade_iterations: cascade.krylov_iterations,
            });
        }
        let b = self.context.build_fixed_rhs(q, &cascade.phi)?;
        let op = BlockMap(&self.context);
        let pc = self.preconditioner.as_ref().map(|p| p as &dyn LinearMap);
        let out = gmres_solve(&op, pc, b.as_slice(), &options)?;
        let block = MomentVector::from_values(self.context.block_groups(), self.context.num_cells(), out.x)?;
        let phi = MomentVector::concat(&[cascade.phi, block]);
        Ok(MultigroupSolution {
            phi,
            record: out.record,
            cascade_iterations: cascade.krylov_iterations,
        })
    }
}

/// Fixed-source solve with the problem's own solver configuration.
pub fn solve_fixed_source(problem: &ProblemSpec) -> Result<MultigroupSolution> {
    let solver = MultigroupSolver::new(problem, &problem.solver)?;
    let q = problem
        .source
        .to_moments(problem.num_groups(), problem.mesh.num_cells());
    solver.solve(&q)
}

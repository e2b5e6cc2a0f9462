//! Multigroup Gauss-Seidel: groups are solved one at a time from highest to
//! lowest energy, with upscatter sources lagged one outer iteration.

use std::time::Instant;

use crate::error::Result;
use crate::moments::MomentVector;
use crate::operator::{scatter_columns, OperatorContext};
use crate::partition::partition_upscatter;
use crate::solvers::gmres::GmresOptions;
use crate::solvers::record::{ConvergenceRecord, IterationStep, SolveStatus};

/// Within-group solves use this fraction of the outer tolerance.
pub const INNER_TOL_FACTOR: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct GaussSeidelSolution {
    pub phi: MomentVector,
    /// One step per outer iteration; `res_norm` is the relative max-norm
    /// flux change.
    pub record: ConvergenceRecord,
    pub within_group_solves: usize,
    pub krylov_iterations: usize,
}

impl GaussSeidelSolution {
    pub fn outer_iterations(&self) -> usize {
        self.record.iterations()
    }
}

/// Runs Gauss-Seidel until the relative max-norm change of the flux between
/// outer iterations is at most `tol`. Groups without upscatter feedback are
/// solved only on the first outer iteration; problems without upscatter are
/// done after one.
pub fn gauss_seidel_solve(
    context: &OperatorContext,
    q: &MomentVector,
    tol: f64,
    max_outer: usize,
) -> Result<GaussSeidelSolution> {
    let num_groups = context.num_groups();
    let num_cells = context.num_cells();
    let upscatter_start = partition_upscatter(&context.materials);
    let inner = GmresOptions::new(INNER_TOL_FACTOR * tol, 1000);

    let mut phi = MomentVector::zeros(0..num_groups, num_cells);
    let mut record = ConvergenceRecord::new();
    let mut solves = 0;
    let mut krylov = 0;

    for outer in 0..max_outer {
        let start = Instant::now();
        let previous = phi.clone();
        let first_group = if outer == 0 { 0 } else { upscatter_start };
        for g in first_group..num_groups {
            let mut src = q.slice_groups(g..g + 1, g);
            // Higher-energy groups carry this iteration's flux, lower-energy
            // groups the previous one; the self-scatter term is left to the
            // within-group solve.
            for cols in [0..g, g + 1..num_groups] {
                if cols.is_empty() {
                    continue;
                }
                let part = phi.slice_groups(cols.clone(), cols.start);
                src.axpy(1.0, &scatter_columns(&context.materials, &context.mesh, &part, cols, g..g + 1));
            }

            let (flux, iters) = context.solve_single_group(g, &src, &inner)?;
            phi.group_mut(g).copy_from_slice(flux.as_slice());
            solves += 1;
            krylov += iters;
        }

        let scale = phi.max_abs();
        let mut diff = phi.clone();
        diff.axpy(-1.0, &previous);
        let change = if scale > 0.0 { diff.max_abs() / scale } else { 0.0 };
        record.steps.push(IterationStep {
            res_norm: change,
            seconds: start.elapsed().as_secs_f64(),
        });
        if upscatter_start >= num_groups || change <= tol {
            record.status = SolveStatus::Converged;
            break;
        }
        if !change.is_finite() {
            record.status = SolveStatus::Diverged;
            break;
        }
    }

    Ok(GaussSeidelSolution {
        phi,
        record,
        within_group_solves: solves,
        krylov_iterations: krylov,
    })
}

//! Power iteration on the energy-independent fission source `Gamma = f^T phi`.
//!
//! Each outer iteration solves `(I - T M S) y = T M chi Gamma` with the
//! multigroup solver, forms `Gamma~ = f^T y`, takes `k` as the ratio of the
//! 1-norms of the new and old sources, and renormalizes `Gamma` to unit
//! 1-norm.

use std::time::Instant;

use crate::config::EigenConfig;
use crate::error::{Error, Result};
use crate::moments::MomentVector;
use crate::solvers::record::{ConvergenceRecord, OuterStep, SolveStatus};
use crate::solvers::MultigroupSolver;

#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub k: f64,
    /// Fission source per cell, unit 1-norm.
    pub gamma: Vec<f64>,
    pub phi: MomentVector,
    pub record: ConvergenceRecord,
}

impl EigenSolution {
    pub fn outer_iterations(&self) -> usize {
        self.record.outer.len()
    }
}

fn fission_source(solver: &MultigroupSolver, phi: &MomentVector) -> Vec<f64> {
    let ctx = &solver.context;
    let mut gamma = vec![0.0; ctx.num_cells()];
    for g in 0..ctx.num_groups() {
        for (cell, (out, &flux)) in gamma.iter_mut().zip(phi.group(g)).enumerate() {
            *out += ctx.materials[ctx.mesh.material_id[cell]].nu_sigma_f[g] * flux;
        }
    }
    gamma
}

fn fission_emission(solver: &MultigroupSolver, gamma: &[f64]) -> MomentVector {
    let ctx = &solver.context;
    let mut q = MomentVector::zeros(0..ctx.num_groups(), ctx.num_cells());
    for g in 0..ctx.num_groups() {
        for (cell, (out, &src)) in q.group_mut(g).iter_mut().zip(gamma).enumerate() {
            *out = ctx.materials[ctx.mesh.material_id[cell]].chi[g] * src;
        }
    }
    q
}

pub fn power_iteration(solver: &MultigroupSolver, eigen: &EigenConfig) -> Result<EigenSolution> {
    eigen.validate()?;
    let ctx = &solver.context;
    if !ctx.materials.iter().any(|m| m.is_fissile()) {
        return Err(Error::Config(
            "eigenvalue solve requested but no material has fission".into(),
        ));
    }
    let num_cells = ctx.num_cells();
    let mut gamma = vec![1.0 / num_cells as f64; num_cells];
    let mut k = eigen.k0;
    let mut record = ConvergenceRecord::new();
    let mut phi = MomentVector::zeros(0..ctx.num_groups(), num_cells);

    for outer in 0..eigen.max_outer {
        let start = Instant::now();
        let q = fission_emission(solver, &gamma);
        let solution = solver.solve(&q)?;
        if solution.record.status != SolveStatus::Converged {
            return Err(Error::NotConverged {
                solver: "multigroup GMRES",
                detail: format!(
                    "outer iteration {outer}: {:?} after {} iterations",
                    solution.record.status,
                    solution.block_iterations()
                ),
            });
        }
        let next = fission_source(solver, &solution.phi);
        let old_norm: f64 = gamma.iter().map(|v| v.abs()).sum();
        let new_norm: f64 = next.iter().map(|v| v.abs()).sum();
        if !new_norm.is_finite() || new_norm <= 0.0 {
            record.status = SolveStatus::Diverged;
            phi = solution.phi;
            break;
        }
        let k_next = new_norm / old_norm;
        let next: Vec<f64> = next.iter().map(|v| v / new_norm).collect();

        let delta_k = (k_next - k).abs() / k_next;
        let (mut l2, mut linf) = (0.0f64, 0.0f64);
        for (a, b) in next.iter().zip(&gamma) {
            let d = (a - b).abs();
            l2 += d * d;
            linf = linf.max(d);
        }
        let l2 = l2.sqrt();

        record.outer.push(OuterStep {
            k: k_next,
            delta_k,
            l2_fission: l2,
            linf_fission: linf,
            krylov_iters: solution.total_krylov_iterations(),
            seconds: start.elapsed().as_secs_f64(),
        });
        record.steps.extend(solution.record.steps.iter().copied());
        k = k_next;
        gamma = next;
        phi = solution.phi;

        if delta_k <= eigen.k_tol && l2 <= eigen.l2_tol && linf <= eigen.linf_tol {
            record.status = SolveStatus::Converged;
            break;
        }
    }

    Ok(EigenSolution {
        k,
        gamma,
        phi,
        record,
    })
}

//! Matrix-free multigroup transport operator `I - T M S` over a block of
//! groups, its right-hand sides, and the energy-set decomposition.
//!
//! Each energy set owns a contiguous range of the block. An operator
//! application has every set multiply its own columns of `S`, combines the
//! contributions with one reduce-plus-scatter, and then sweeps only its own
//! rows.

use std::ops::Range;

use rayon::prelude::*;

use crate::config::{BlockMode, SolverConfig};
use crate::error::{Error, Result};
use crate::material::MaterialCrossSections;
use crate::mesh::CartesianMesh;
use crate::moments::MomentVector;
use crate::partition::GroupPartition;
use crate::quadrature::AngularQuadrature;
use crate::solvers::gmres::{gmres_solve, GmresOptions, LinearMap};
use crate::solvers::record::SolveStatus;
use crate::sweep::transport_sweep;

/// `out[g] = sum_{gp in cols} sigma_s[rows.start + g][gp] v[gp - cols.start]`
/// per cell. Material indices are local to the materials passed in.
pub fn scatter_columns(
    materials: &[MaterialCrossSections],
    mesh: &CartesianMesh,
    v: &MomentVector,
    cols: Range<usize>,
    rows: Range<usize>,
) -> MomentVector {
    debug_assert_eq!(v.num_groups(), cols.len());
    let mut out = MomentVector::zeros(rows.clone(), mesh.num_cells());
    for (local_row, g) in rows.enumerate() {
        let dst = out.group_mut(local_row);
        for (local_col, gp) in cols.clone().enumerate() {
            let src = v.group(local_col);
            for (cell, (d, s)) in dst.iter_mut().zip(src).enumerate() {
                let sigma = materials[mesh.material_id[cell]].sigma_s[g][gp];
                *d += sigma * s;
            }
        }
    }
    out
}

/// Scattering source `S v` restricted to the destination groups in `rows`,
/// summing over every source group spanned by `v`.
pub fn scatter_matvec(
    materials: &[MaterialCrossSections],
    mesh: &CartesianMesh,
    v: &MomentVector,
    rows: Range<usize>,
) -> MomentVector {
    scatter_columns(materials, mesh, v, 0..v.num_groups(), rows)
}

/// Sums the per-set contributions (ascending set order) and hands each set
/// the rows of its own groups.
pub fn reduce_plus_scatter(
    partials: &[MomentVector],
    set_blocks: &[Range<usize>],
) -> Result<Vec<MomentVector>> {
    let first = partials
        .first()
        .ok_or_else(|| Error::Config("reduce-plus-scatter needs at least one set".into()))?;
    let mut total = first.clone();
    for p in &partials[1..] {
        if p.len() != total.len() {
            return Err(Error::DimensionMismatch {
                expected: total.len(),
                actual: p.len(),
            });
        }
        total.axpy(1.0, p);
    }
    let covered = set_blocks.last().map_or(0, |r| r.end);
    if covered != total.num_groups() {
        return Err(Error::DimensionMismatch {
            expected: total.num_groups(),
            actual: covered,
        });
    }
    Ok(set_blocks
        .iter()
        .map(|r| total.slice_groups(r.clone(), total.groups().start + r.start))
        .collect())
}

/// `A = I - T M S` on one set of group data with one quadrature, no set
/// decomposition. Used for single-group solves and on preconditioner levels.
#[derive(Debug, Clone, Copy)]
pub struct LevelOperator<'a> {
    pub materials: &'a [MaterialCrossSections],
    pub quadrature: &'a AngularQuadrature,
    pub mesh: &'a CartesianMesh,
}

impl LevelOperator<'_> {
    pub fn num_groups(&self) -> usize {
        self.materials.first().map_or(0, |m| m.num_groups())
    }

    pub fn dim(&self) -> usize {
        self.num_groups() * self.mesh.num_cells()
    }

    /// `T M y` for a moment-space source `y`.
    pub fn sweep(&self, y: &MomentVector) -> Result<MomentVector> {
        transport_sweep(y, self.materials, self.quadrature, self.mesh)
    }

    /// `T M S v`
    pub fn sweep_scatter(&self, v: &MomentVector) -> Result<MomentVector> {
        let y = scatter_matvec(self.materials, self.mesh, v, 0..self.num_groups());
        self.sweep(&y)
    }

    /// `v - T M S v`
    pub fn apply(&self, v: &MomentVector) -> Result<MomentVector> {
        let z = self.sweep_scatter(v)?;
        let mut out = v.clone();
        out.axpy(-1.0, &z);
        Ok(out)
    }
}

impl LinearMap for LevelOperator<'_> {
    fn dim(&self) -> usize {
        LevelOperator::dim(self)
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let v = MomentVector::from_values(0..self.num_groups(), self.mesh.num_cells(), x.to_vec())?;
        Ok(LevelOperator::apply(self, &v)?.into_values())
    }
}

/// Everything the multigroup operator needs: mesh, cross sections, group
/// partition, and the problem and preconditioner quadratures.
#[derive(Debug, Clone)]
pub struct OperatorContext {
    pub mesh: CartesianMesh,
    pub materials: Vec<MaterialCrossSections>,
    pub partition: GroupPartition,
    pub quadrature: AngularQuadrature,
    pub pc_quadrature: AngularQuadrature,
    pub block_mode: BlockMode,
    /// Materials sliced to the Krylov block, with within-block scattering.
    block_materials: Vec<MaterialCrossSections>,
    /// Per set: block materials sliced to the set's own groups, for sweeping.
    set_materials: Vec<Vec<MaterialCrossSections>>,
}

impl OperatorContext {
    pub fn new(
        mesh: CartesianMesh,
        materials: Vec<MaterialCrossSections>,
        quadrature: AngularQuadrature,
        pc_quadrature: AngularQuadrature,
        config: &SolverConfig,
    ) -> Result<Self> {
        let partition = GroupPartition::new(&materials, config.block_mode, config.num_sets)?;
        let block_materials: Vec<_> = materials
            .iter()
            .map(|m| m.slice(partition.block_groups.clone()))
            .collect();
        let set_materials = partition
            .local_set_blocks()
            .into_iter()
            .map(|r| block_materials.iter().map(|m| m.slice(r.clone())).collect())
            .collect();
        Ok(Self {
            mesh,
            materials,
            partition,
            quadrature,
            pc_quadrature,
            block_mode: config.block_mode,
            block_materials,
            set_materials,
        })
    }

    pub fn num_groups(&self) -> usize {
        self.partition.num_groups
    }

    pub fn num_cells(&self) -> usize {
        self.mesh.num_cells()
    }

    pub fn block_groups(&self) -> Range<usize> {
        self.partition.block_groups.clone()
    }

    pub fn block_dim(&self) -> usize {
        self.partition.block_len() * self.num_cells()
    }

    /// Block cross sections (scattering truncated to block columns).
    pub fn block_materials(&self) -> &[MaterialCrossSections] {
        &self.block_materials
    }

    /// Operator over the whole block without set decomposition.
    pub fn block_level(&self) -> LevelOperator<'_> {
        LevelOperator {
            materials: &self.block_materials,
            quadrature: &self.quadrature,
            mesh: &self.mesh,
        }
    }

    /// `v - T M S v` over the block, computed set by set with one
    /// reduce-plus-scatter. `v` is labelled with absolute group indices.
    pub fn apply_operator(&self, v: &MomentVector) -> Result<MomentVector> {
        if v.len() != self.block_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.block_dim(),
                actual: v.len(),
            });
        }
        let sets = self.partition.local_set_blocks();
        let block = 0..self.partition.block_len();
        let partials: Vec<MomentVector> = sets
            .par_iter()
            .map(|cols| {
                let part = v.slice_groups(cols.clone(), cols.start);
                scatter_columns(&self.block_materials, &self.mesh, &part, cols.clone(), block.clone())
            })
            .collect();
        let rows = reduce_plus_scatter(&partials, &sets)?;
        let swept = rows
            .par_iter()
            .zip(&self.set_materials)
            .map(|(y, mats)| transport_sweep(y, mats, &self.quadrature, &self.mesh))
            .collect::<Result<Vec<_>>>()?;
        let z = MomentVector::concat(&swept);
        let mut out = v.clone();
        out.axpy(-1.0, &z.relabel(v.groups().start));
        Ok(out)
    }

    /// Right-hand side for the block: `T M (S_block<-cascade phi_cascade + q_block)`.
    /// `q` spans all groups; `phi_cascade` spans the cascade groups.
    pub fn build_fixed_rhs(&self, q: &MomentVector, phi_cascade: &MomentVector) -> Result<MomentVector> {
        let block = self.block_groups();
        let mut src = q.slice_groups(block.clone(), block.start);
        if !phi_cascade.is_empty() {
            let down = scatter_columns(
                &self.materials,
                &self.mesh,
                phi_cascade,
                0..phi_cascade.num_groups(),
                block.clone(),
            );
            src.axpy(1.0, &down);
        }
        self.block_level().sweep(&src)
    }

    /// Solves the downscatter-only groups in ascending order. Each group's
    /// within-group equation is solved by single-group GMRES.
    pub fn solve_cascade(&self, q: &MomentVector, options: &GmresOptions) -> Result<CascadeSolution> {
        let cascade = self.partition.cascade_groups.len();
        let mut phi = MomentVector::zeros(0..cascade, self.num_cells());
        let mut krylov_iterations = 0;
        for g in 0..cascade {
            let mut src = q.slice_groups(g..g + 1, g);
            if g > 0 {
                let solved = phi.slice_groups(0..g, 0);
                src.axpy(1.0, &scatter_columns(&self.materials, &self.mesh, &solved, 0..g, g..g + 1));
            }
            let (flux, iters) = self.solve_single_group(g, &src, options)?;
            krylov_iterations += iters;
            phi.group_mut(g).copy_from_slice(flux.as_slice());
        }
        Ok(CascadeSolution {
            phi,
            krylov_iterations,
        })
    }

    /// Solves `(I - T M S_gg) phi = T M src` for one group. Groups without
    /// self-scatter need a single sweep.
    pub fn solve_single_group(
        &self,
        g: usize,
        src: &MomentVector,
        options: &GmresOptions,
    ) -> Result<(MomentVector, usize)> {
        let mats: Vec<MaterialCrossSections> = self.materials.iter().map(|m| m.slice(g..g + 1)).collect();
        let level = LevelOperator {
            materials: &mats,
            quadrature: &self.quadrature,
            mesh: &self.mesh,
        };
        let b = level.sweep(&src.clone().relabel(0))?;
        if mats.iter().all(|m| m.sigma_s[0][0] == 0.0) {
            return Ok((b.relabel(g), 0));
        }
        let out = gmres_solve(&level, None, b.as_slice(), options)?;
        if out.record.status != SolveStatus::Converged {
            return Err(Error::NotConverged {
                solver: "within-group GMRES",
                detail: format!("group {g}: {:?} after {} iterations", out.record.status, out.iterations()),
            });
        }
        let iters = out.iterations();
        Ok((MomentVector::from_values(g..g + 1, self.num_cells(), out.x)?, iters))
    }
}

#[derive(Debug, Clone)]
pub struct CascadeSolution {
    pub phi: MomentVector,
    pub krylov_iterations: usize,
}

/// The block operator as a flat linear map for the Krylov solver.
pub struct BlockMap<'a>(pub &'a OperatorContext);

impl LinearMap for BlockMap<'_> {
    fn dim(&self) -> usize {
        self.0.block_dim()
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let v = MomentVector::from_values(self.0.block_groups(), self.0.num_cells(), x.to_vec())?;
        Ok(self.0.apply_operator(&v)?.into_values())
    }
}

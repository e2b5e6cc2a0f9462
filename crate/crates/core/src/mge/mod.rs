//! Multigrid-in-energy right preconditioner.
//!
//! Each energy set builds its own hierarchy of collapsed group structures
//! from the groups it owns and runs V-cycles on them with weighted
//! Richardson smoothing. Sets never exchange data inside the preconditioner,
//! so scattering between sets is dropped there (block Jacobi in energy); the
//! Krylov operator keeps the full coupling.

pub mod transfer;

use std::ops::Range;

use log::warn;
use rayon::prelude::*;

use crate::config::{DepthSetting, PcQuadrature, SolverConfig};
use crate::error::{Error, Result};
use crate::material::MaterialCrossSections;
use crate::mesh::CartesianMesh;
use crate::moments::MomentVector;
use crate::operator::{LevelOperator, OperatorContext};
use crate::quadrature::AngularQuadrature;
use crate::solvers::gmres::LinearMap;

pub use transfer::{
    grid_depth, multiset_grid_depth, prolong_vector, restrict_material, restrict_vector,
};

/// Collapsed cross sections for one energy set, finest level first.
#[derive(Debug, Clone, PartialEq)]
pub struct SetHierarchy {
    /// The set's groups, relative to the start of the Krylov block.
    pub groups: Range<usize>,
    /// `levels[l][material]`
    pub levels: Vec<Vec<MaterialCrossSections>>,
}

impl SetHierarchy {
    pub fn group_counts(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l[0].num_groups()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyHierarchy {
    pub depth: usize,
    pub sets: Vec<SetHierarchy>,
}

/// Depth shared by every set, after applying any user override. Overrides
/// beyond what the smallest set can reach are clamped.
pub fn resolve_depth(setting: DepthSetting, block_size: usize, set_blocks: &[Range<usize>]) -> usize {
    let sizes: Vec<usize> = set_blocks.iter().map(|r| r.len()).collect();
    let achievable = grid_depth(sizes.iter().copied().min().unwrap_or(block_size));
    match setting {
        DepthSetting::Auto => multiset_grid_depth(block_size, &sizes),
        DepthSetting::Fixed(d) => {
            if d > achievable {
                warn!("requested V-cycle depth {d} exceeds the achievable {achievable}; clamping");
            }
            d.clamp(1, achievable)
        }
    }
}

/// Builds every set's hierarchy once. `block_materials` carry the Krylov
/// block's groups; each set keeps only scattering among its own groups.
pub fn build_hierarchy(
    block_materials: &[MaterialCrossSections],
    set_blocks: &[Range<usize>],
    depth: usize,
) -> EnergyHierarchy {
    let smallest = set_blocks.iter().map(|r| r.len()).min().unwrap_or(1);
    let achievable = grid_depth(smallest);
    let depth = if depth > achievable {
        warn!("V-cycle depth {depth} exceeds the achievable {achievable}; clamping");
        achievable
    } else {
        depth.max(1)
    };
    let sets = set_blocks
        .iter()
        .map(|r| {
            let mut levels: Vec<Vec<MaterialCrossSections>> =
                vec![block_materials.iter().map(|m| m.slice(r.clone())).collect()];
            while levels.len() < depth {
                let next = levels.last().unwrap().iter().map(restrict_material).collect();
                levels.push(next);
            }
            SetHierarchy {
                groups: r.clone(),
                levels,
            }
        })
        .collect();
    EnergyHierarchy { depth, sets }
}

/// Restricts every cell's group vector onto the next coarser grid.
pub fn restrict_moments(fine: &MomentVector) -> MomentVector {
    let n = fine.num_groups();
    let m = transfer::coarse_count(n);
    let mut coarse = MomentVector::zeros(0..m, fine.num_cells());
    for g in 0..m {
        let members = transfer::fine_members(g, n);
        let scale = 1.0 / members.len() as f64;
        let dst = coarse.group_mut(g);
        for f in members {
            dst.iter_mut().zip(fine.group(f)).for_each(|(d, s)| *d += s);
        }
        dst.iter_mut().for_each(|d| *d *= scale);
    }
    coarse
}

/// Prolongs every cell's group vector onto a grid with `fine` groups.
pub fn prolong_moments(coarse: &MomentVector, fine: usize) -> MomentVector {
    let m = coarse.num_groups();
    let mut out = MomentVector::zeros(0..fine, coarse.num_cells());
    for f in 0..fine {
        let g = f / 2;
        let dst = out.group_mut(f);
        if f % 2 == 0 || g + 1 >= m {
            dst.copy_from_slice(coarse.group(g));
        } else {
            let (a, b) = (coarse.group(g), coarse.group(g + 1));
            dst.iter_mut()
                .zip(a.iter().zip(b))
                .for_each(|(d, (x, y))| *d = 0.5 * (x + y));
        }
    }
    out
}

/// One weighted Richardson step `x + w (b - A x)`.
pub fn relax_richardson(
    op: &LevelOperator<'_>,
    x: &MomentVector,
    b: &MomentVector,
    weight: f64,
) -> Result<MomentVector> {
    let mut residual = b.clone();
    residual.axpy(-1.0, &op.apply(x)?);
    let mut out = x.clone();
    out.axpy(weight, &residual);
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct MgePreconditioner {
    hierarchy: EnergyHierarchy,
    quadrature: AngularQuadrature,
    mesh: CartesianMesh,
    weight: f64,
    relaxations: usize,
    vcycles: usize,
    block_groups: Range<usize>,
}

impl MgePreconditioner {
    /// Builds the hierarchy for the context's Krylov block.
    pub fn new(context: &OperatorContext, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        if config.pc_quadrature != PcQuadrature::Same
            && context.pc_quadrature.order() != context.quadrature.order()
            && context.mesh.any_reflecting()
        {
            return Err(Error::Config(
                "a reduced preconditioner quadrature is only supported with vacuum boundaries".into(),
            ));
        }
        let sets = context.partition.local_set_blocks();
        if sets.is_empty() {
            return Err(Error::Config("the Krylov block is empty; nothing to precondition".into()));
        }
        let depth = resolve_depth(config.depth, context.partition.block_len(), &sets);
        let hierarchy = build_hierarchy(context.block_materials(), &sets, depth);
        Ok(Self {
            hierarchy,
            quadrature: context.pc_quadrature.clone(),
            mesh: context.mesh.clone(),
            weight: config.weight,
            relaxations: config.relaxations,
            vcycles: config.vcycles,
            block_groups: context.block_groups(),
        })
    }

    pub fn hierarchy(&self) -> &EnergyHierarchy {
        &self.hierarchy
    }

    pub fn depth(&self) -> usize {
        self.hierarchy.depth
    }

    fn level_op(&self, set: usize, level: usize) -> LevelOperator<'_> {
        LevelOperator {
            materials: &self.hierarchy.sets[set].levels[level],
            quadrature: &self.quadrature,
            mesh: &self.mesh,
        }
    }

    /// Weighted Richardson on level `level` of set `set`.
    pub fn relax(&self, set: usize, level: usize, x: &MomentVector, b: &MomentVector) -> Result<MomentVector> {
        relax_richardson(&self.level_op(set, level), x, b, self.weight)
    }

    fn smooth(&self, set: usize, level: usize, mut x: Option<MomentVector>, b: &MomentVector) -> Result<MomentVector> {
        for _ in 0..self.relaxations {
            x = Some(match x {
                Some(x) => self.relax(set, level, &x, b)?,
                // A * 0 = 0, so the first step from zero is w b.
                None => {
                    let mut x = b.clone();
                    x.scale(self.weight);
                    x
                }
            });
        }
        Ok(x.expect("at least one relaxation"))
    }

    /// One V-cycle from zero initial guess: relax, correct from the next
    /// coarser level, relax again. The coarsest level only relaxes.
    pub fn v_cycle(&self, set: usize, b: &MomentVector, level: usize) -> Result<MomentVector> {
        let mut x = self.smooth(set, level, None, b)?;
        if level + 1 >= self.hierarchy.depth {
            return Ok(x);
        }
        let mut residual = b.clone();
        residual.axpy(-1.0, &self.level_op(set, level).apply(&x)?);
        let coarse = self.v_cycle(set, &restrict_moments(&residual), level + 1)?;
        x.axpy(1.0, &prolong_moments(&coarse, b.num_groups()));
        self.smooth(set, level, Some(x), b)
    }

    /// `v` V-cycles on one set's slice of `u`, each applied to the current
    /// residual.
    pub fn apply_to_set(&self, set: usize, u: &MomentVector) -> Result<MomentVector> {
        let mut x = self.v_cycle(set, u, 0)?;
        for _ in 1..self.vcycles {
            let mut residual = u.clone();
            residual.axpy(-1.0, &self.level_op(set, 0).apply(&x)?);
            x.axpy(1.0, &self.v_cycle(set, &residual, 0)?);
        }
        Ok(x)
    }

    /// `G^-1 u` for a vector over the Krylov block.
    pub fn apply_preconditioner(&self, u: &MomentVector) -> Result<MomentVector> {
        let parts = self
            .hierarchy
            .sets
            .par_iter()
            .enumerate()
            .map(|(s, set)| {
                let slice = u.slice_groups(set.groups.clone(), 0);
                self.apply_to_set(s, &slice)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MomentVector::concat(&parts).relabel(u.groups().start))
    }
}

impl LinearMap for MgePreconditioner {
    fn dim(&self) -> usize {
        self.block_groups.len() * self.mesh.num_cells()
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let u = MomentVector::from_values(self.block_groups.clone(), self.mesh.num_cells(), x.to_vec())?;
        Ok(self.apply_preconditioner(&u)?.into_values())
    }
}

#[cfg(test)]
#[allow(clippy::single_range_in_vec_init)]
mod tests {
    use super::*;
    use crate::config::BlockMode;
    use crate::material::synth_upscatter_fixture;
    use crate::mesh::BoundaryCondition;
    use crate::quadrature::build_quadrature;

    fn context(materials: Vec<MaterialCrossSections>, dims: [usize; 3], width: f64, bc: BoundaryCondition, config: &SolverConfig) -> OperatorContext {
        let mesh = CartesianMesh::uniform(dims, [width; 3], [bc; 6]).unwrap();
        let q = build_quadrature(4).unwrap();
        OperatorContext::new(mesh, materials, q.clone(), q, config).unwrap()
    }

    fn all_groups(sets: usize) -> SolverConfig {
        SolverConfig {
            block_mode: BlockMode::AllGroups,
            num_sets: sets,
            precond_enabled: true,
            ..SolverConfig::default()
        }
    }

    fn ramp(groups: Range<usize>, cells: usize, seed: usize) -> MomentVector {
        let n = groups.len() * cells;
        let values = (0..n).map(|i| ((i * 37 + seed * 11) % 13) as f64 / 5.0 - 1.0).collect();
        MomentVector::from_values(groups, cells, values).unwrap()
    }

    #[test]
    fn hierarchy_group_counts() {
        let fx = vec![synth_upscatter_fixture(10, 5)];
        let one = build_hierarchy(&fx, &[0..10], resolve_depth(DepthSetting::Auto, 10, &[0..10]));
        assert_eq!(one.depth, 5);
        assert_eq!(one.sets[0].group_counts(), vec![10, 5, 3, 2, 1]);

        let sets = [0..5, 5..10];
        let two = build_hierarchy(&fx, &sets, resolve_depth(DepthSetting::Auto, 10, &sets));
        assert_eq!(two.depth, 4);
        for s in &two.sets {
            assert_eq!(s.group_counts(), vec![5, 3, 2, 1]);
        }

        let flat = build_hierarchy(&fx, &[0..10], 1);
        assert_eq!(flat.sets[0].levels, vec![vec![fx[0].clone()]]);
        // Overrides beyond the chain are clamped.
        assert_eq!(resolve_depth(DepthSetting::Fixed(9), 10, &[0..10]), 5);
        assert_eq!(resolve_depth(DepthSetting::Fixed(3), 10, &[0..10]), 3);
        assert_eq!(build_hierarchy(&fx, &[0..10], 12).depth, 5);
    }

    #[test]
    fn set_levels_drop_cross_set_scattering() {
        let fx = vec![synth_upscatter_fixture(10, 5)];
        let h = build_hierarchy(&fx, &[0..5, 5..10], 1);
        assert_eq!(h.sets[1].levels[0][0], fx[0].slice(5..10));
        assert_eq!(h.sets[1].levels[0][0].sigma_s[0][0], fx[0].sigma_s[5][5]);
    }

    #[test]
    fn restricted_scattering_ratios_stay_subcritical() {
        let fx = vec![synth_upscatter_fixture(10, 5)];
        let h = build_hierarchy(&fx, &[0..10], 5);
        for level in &h.sets[0].levels {
            let xs = &level[0];
            for g in 0..xs.num_groups() {
                assert!(xs.sigma_t[g] > 0.0 && xs.sigma_t[g].is_finite());
                assert!(xs.column_scattering(g) <= xs.sigma_t[g]);
            }
        }
    }

    #[test]
    fn relax_examples() {
        let mesh = CartesianMesh::uniform([1, 1, 1], [8.0; 3], [BoundaryCondition::Reflect; 6]).unwrap();
        let quad = build_quadrature(4).unwrap();
        let mut xs = MaterialCrossSections::zeros(1);
        xs.sigma_t[0] = 1.2;
        let mats = vec![xs.clone()];
        let op = LevelOperator { materials: &mats, quadrature: &quad, mesh: &mesh };
        let x = MomentVector::from_values(0..1, 1, vec![7.0]).unwrap();
        let b = MomentVector::from_values(0..1, 1, vec![0.5]).unwrap();
        assert_eq!(relax_richardson(&op, &x, &b, 1.0).unwrap(), b);

        let c = 0.6;
        xs.sigma_s[0][0] = c * 1.2;
        let mats = vec![xs];
        let op = LevelOperator { materials: &mats, quadrature: &quad, mesh: &mesh };
        let w = 1.4;
        let out = relax_richardson(&op, &x, &b, w).unwrap().as_slice()[0];
        let want = (1.0 - w + w * c) * 7.0 + w * 0.5;
        assert!((out - want).abs() <= 1e-10 * want.abs());

        // A fixed point stays put.
        let exact = MomentVector::from_values(0..1, 1, vec![0.5 / (1.0 - c)]).unwrap();
        let again = relax_richardson(&op, &exact, &b, w).unwrap();
        assert!((again.as_slice()[0] - exact.as_slice()[0]).abs() <= 1e-10 * exact.as_slice()[0]);
    }

    #[test]
    fn no_scattering_preconditioner_is_identity() {
        let mut xs = synth_upscatter_fixture(6, 2);
        xs.sigma_s = vec![vec![0.0; 6]; 6];
        for sets in [1, 2] {
            let ctx = context(vec![xs.clone()], [2, 2, 1], 1.0, BoundaryCondition::Vacuum, &all_groups(sets));
            let pc = MgePreconditioner::new(&ctx, &all_groups(sets)).unwrap();
            let u = ramp(0..6, 4, 1);
            assert_eq!(pc.apply_preconditioner(&u).unwrap(), u);
            let first = pc.hierarchy().sets[0].groups.clone();
            let slice = u.slice_groups(first, 0);
            assert_eq!(pc.v_cycle(0, &slice, 0).unwrap(), slice);
            let zero = MomentVector::zeros(0..6, 4);
            assert_eq!(pc.apply_preconditioner(&zero).unwrap(), zero);
        }
    }

    /// Infinite medium: T M acts as `diag(sigma_t)^-1`, so each level's
    /// operator is the dense group matrix `I - D^-1 S`.
    fn group_matrix(xs: &MaterialCrossSections) -> nalgebra::DMatrix<f64> {
        let n = xs.num_groups();
        nalgebra::DMatrix::from_fn(n, n, |g, gp| {
            let id = if g == gp { 1.0 } else { 0.0 };
            id - xs.sigma_s[g][gp] / xs.sigma_t[g]
        })
    }

    #[test]
    fn two_level_v_cycle_matches_dense_oracle() {
        use nalgebra::{DMatrix, DVector};
        let mut xs = MaterialCrossSections::zeros(2);
        xs.sigma_t = vec![1.0, 1.4];
        xs.sigma_s = vec![vec![0.5, 0.2], vec![0.3, 0.9]];
        let config = SolverConfig {
            relaxations: 2,
            weight: 0.9,
            vcycles: 2,
            ..all_groups(1)
        };
        let ctx = context(vec![xs.clone()], [1, 1, 1], 12.0, BoundaryCondition::Reflect, &config);
        let pc = MgePreconditioner::new(&ctx, &config).unwrap();
        assert_eq!(pc.depth(), 2);

        let a = group_matrix(&xs);
        let coarse = restrict_material(&xs);
        let ac = group_matrix(&coarse)[(0, 0)];
        let w = config.weight;
        let relax = |x: &DVector<f64>, b: &DVector<f64>| x + w * (b - &a * x);
        let restrict = DMatrix::from_row_slice(1, 2, &[0.5, 0.5]);
        let prolong = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let vcycle = |b: &DVector<f64>| {
            let mut x = DVector::zeros(2);
            for _ in 0..2 {
                x = relax(&x, b);
            }
            let rc = (&restrict * (b - &a * &x))[0];
            let mut xc = 0.0;
            for _ in 0..2 {
                xc += w * (rc - ac * xc);
            }
            x += &prolong * DVector::from_element(1, xc);
            for _ in 0..2 {
                x = relax(&x, b);
            }
            x
        };
        let u = DVector::from_vec(vec![1.0, -0.4]);
        let mut want = vcycle(&u);
        want = &want + vcycle(&(&u - &a * &want));

        let got = pc
            .apply_preconditioner(&MomentVector::from_values(0..2, 1, u.as_slice().to_vec()).unwrap())
            .unwrap();
        for g in 0..2 {
            assert!((got.as_slice()[g] - want[g]).abs() <= 1e-10, "{} vs {}", got.as_slice()[g], want[g]);
        }
    }

    #[test]
    fn sets_precondition_independently() {
        let fx = vec![synth_upscatter_fixture(10, 5)];
        let config = all_groups(2);
        let ctx = context(fx.clone(), [2, 2, 2], 1.0, BoundaryCondition::Vacuum, &config);
        let pc = MgePreconditioner::new(&ctx, &config).unwrap();
        let u = ramp(0..10, 8, 3);
        let got = pc.apply_preconditioner(&u).unwrap();
        assert_eq!(got, pc.apply_preconditioner(&u).unwrap(), "repeat applications are bitwise equal");

        for (s, groups) in [0..5, 5..10].into_iter().enumerate() {
            let alone = vec![fx[0].slice(groups.clone())];
            let solo_config = SolverConfig {
                depth: DepthSetting::Fixed(pc.depth()),
                ..all_groups(1)
            };
            let solo_ctx = context(alone, [2, 2, 2], 1.0, BoundaryCondition::Vacuum, &solo_config);
            let solo = MgePreconditioner::new(&solo_ctx, &solo_config).unwrap();
            let part = u.slice_groups(groups.clone(), 0);
            let want = solo.apply_preconditioner(&part).unwrap();
            assert_eq!(got.slice_groups(groups, 0), want, "set {s}");
        }
    }

    #[test]
    fn preconditioner_is_linear() {
        let config = all_groups(1);
        let ctx = context(vec![synth_upscatter_fixture(10, 5)], [3, 3, 3], 1.0, BoundaryCondition::Vacuum, &config);
        let pc = MgePreconditioner::new(&ctx, &config).unwrap();
        let u = ramp(0..10, 27, 1);
        let w = ramp(0..10, 27, 2);
        let mut combo = u.clone();
        combo.scale(2.0);
        combo.axpy(3.0, &w);
        let mut lhs = pc.apply_preconditioner(&combo).unwrap();
        lhs.axpy(-2.0, &pc.apply_preconditioner(&u).unwrap());
        lhs.axpy(-3.0, &pc.apply_preconditioner(&w).unwrap());
        assert!(lhs.norm2() <= 1e-10 * combo.norm2());
    }

    #[test]
    fn reduced_quadrature_rejected_with_reflection() {
        let config = SolverConfig {
            pc_quadrature: PcQuadrature::Order(2),
            ..all_groups(1)
        };
        let mesh = CartesianMesh::uniform([1, 1, 1], [1.0; 3], [BoundaryCondition::Reflect; 6]).unwrap();
        let ctx = OperatorContext::new(
            mesh,
            vec![synth_upscatter_fixture(4, 2)],
            build_quadrature(4).unwrap(),
            build_quadrature(2).unwrap(),
            &config,
        )
        .unwrap();
        let err = MgePreconditioner::new(&ctx, &config).unwrap_err().to_string();
        assert!(err.contains("vacuum"), "{err}");
    }

    #[test]
    fn moment_transfers_act_per_cell() {
        let fine = MomentVector::from_values(0..3, 2, vec![1.0, 10.0, 2.0, 20.0, 3.0, 30.0]).unwrap();
        let coarse = restrict_moments(&fine);
        assert_eq!(coarse.as_slice(), &[1.5, 15.0, 3.0, 30.0]);
        let back = prolong_moments(&coarse, 4);
        assert_eq!(back.as_slice(), &[1.5, 15.0, 2.25, 22.5, 3.0, 30.0, 3.0, 30.0]);
    }
}

//! Splitting the energy groups into a downscatter cascade, a coupled
//! Krylov block, and contiguous energy sets.

use std::ops::Range;

use serde::Serialize;

use crate::config::BlockMode;
use crate::error::{Error, Result};
use crate::material::MaterialCrossSections;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupPartition {
    pub num_groups: usize,
    /// Groups solved once each, in ascending index (descending energy) order.
    pub cascade_groups: Vec<usize>,
    /// Contiguous suffix of groups solved together by the Krylov solver.
    pub block_groups: Range<usize>,
    /// Set ranges in absolute group indices covering `block_groups`.
    pub set_blocks: Vec<Range<usize>>,
}

impl GroupPartition {
    pub fn new(
        materials: &[MaterialCrossSections],
        mode: BlockMode,
        num_sets: usize,
    ) -> Result<Self> {
        let num_groups = materials.first().map_or(0, |m| m.num_groups());
        let block_start = match mode {
            BlockMode::AllGroups => 0,
            BlockMode::UpscatterOnly => partition_upscatter(materials),
        };
        let block_groups = block_start..num_groups;
        let set_blocks = if block_groups.is_empty() {
            Vec::new()
        } else {
            assign_groups_to_sets(block_groups.len(), num_sets)?
                .into_iter()
                .map(|r| r.start + block_start..r.end + block_start)
                .collect()
        };
        Ok(Self {
            num_groups,
            cascade_groups: (0..block_start).collect(),
            block_groups,
            set_blocks,
        })
    }

    pub fn block_len(&self) -> usize {
        self.block_groups.len()
    }

    /// Set ranges relative to the start of the block.
    pub fn local_set_blocks(&self) -> Vec<Range<usize>> {
        let start = self.block_groups.start;
        self.set_blocks
            .iter()
            .map(|r| r.start - start..r.end - start)
            .collect()
    }
}

/// First group of the upscatter block: the smallest destination group that
/// receives scattering from a lower-energy group in any material. Equals the
/// group count when no material upscatters.
pub fn partition_upscatter(materials: &[MaterialCrossSections]) -> usize {
    let num_groups = materials.first().map_or(0, |m| m.num_groups());
    materials
        .iter()
        .filter_map(|m| m.first_upscatter_group())
        .min()
        .unwrap_or(num_groups)
}

/// Number of source groups that scatter into a higher-energy group.
pub fn count_upscatter_sources(materials: &[MaterialCrossSections]) -> usize {
    let num_groups = materials.first().map_or(0, |m| m.num_groups());
    (0..num_groups)
        .filter(|&gp| {
            materials
                .iter()
                .any(|m| (0..gp).any(|g| m.sigma_s[g][gp] != 0.0))
        })
        .count()
}

/// Splits `block_size` groups into `num_sets` contiguous ranges whose sizes
/// differ by at most one, larger sets first.
pub fn assign_groups_to_sets(block_size: usize, num_sets: usize) -> Result<Vec<Range<usize>>> {
    if num_sets == 0 {
        return Err(Error::Config("number of energy sets must be at least 1".into()));
    }
    if num_sets > block_size {
        return Err(Error::Config(format!(
            "more energy sets ({num_sets}) than groups in the Krylov block ({block_size})"
        )));
    }
    let base = block_size / num_sets;
    let extra = block_size % num_sets;
    let mut start = 0;
    Ok((0..num_sets)
        .map(|s| {
            let len = base + usize::from(s < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect())
}

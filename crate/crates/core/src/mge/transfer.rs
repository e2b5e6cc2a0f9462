//! Energy-grid coarsening: grid depth, restriction and prolongation of
//! per-group data, and cross-section restriction.
//!
//! Coarse group `g` covers fine groups `2g` and `2g + 1`. When the fine grid
//! has an odd number of groups the last (lowest-energy) fine group maps alone
//! onto the last coarse group.

use std::ops::Range;

use crate::material::MaterialCrossSections;

pub fn coarse_count(fine: usize) -> usize {
    fine.div_ceil(2)
}

/// Fine groups merged into coarse group `g` of a grid with `fine` groups.
pub fn fine_members(g: usize, fine: usize) -> Range<usize> {
    2 * g..(2 * g + 2).min(fine)
}

/// Number of grids obtained by halving `num_groups` (rounding up) until one
/// group remains: `floor(log2(G - 1)) + 2` for `G >= 2`.
pub fn grid_depth(num_groups: usize) -> usize {
    if num_groups <= 1 {
        1
    } else {
        bit_length(num_groups - 1) + 1
    }
}

fn bit_length(n: usize) -> usize {
    (usize::BITS - n.leading_zeros()) as usize
}

/// Common grid depth for energy sets: `floor(log2(num_g_min)) + 2` with
/// `num_g_min = floor(num_groups / num_sets)`, clamped to what the smallest
/// set can actually reach. A single set uses [`grid_depth`].
pub fn multiset_grid_depth(num_groups: usize, set_sizes: &[usize]) -> usize {
    let smallest = set_sizes.iter().copied().min().unwrap_or(num_groups);
    if set_sizes.len() <= 1 {
        return grid_depth(smallest);
    }
    let num_g_min = num_groups / set_sizes.len();
    let formula = if num_g_min == 0 {
        1
    } else {
        bit_length(num_g_min) + 1
    };
    formula.min(grid_depth(smallest))
}

/// Averages neighbouring fine values; with an odd count the last value is
/// copied.
pub fn restrict_vector(fine: &[f64]) -> Vec<f64> {
    let n = fine.len();
    (0..coarse_count(n))
        .map(|g| {
            let r = fine_members(g, n);
            let len = r.len() as f64;
            fine[r].iter().sum::<f64>() / len
        })
        .collect()
}

/// Injects coarse values onto the even fine groups and averages neighbours
/// for the odd ones. With an even fine count the last fine value copies the
/// last coarse value.
pub fn prolong_vector(coarse: &[f64], fine: usize) -> Vec<f64> {
    debug_assert_eq!(coarse.len(), coarse_count(fine));
    (0..fine)
        .map(|f| {
            let g = f / 2;
            if f % 2 == 0 || g + 1 >= coarse.len() {
                coarse[g]
            } else {
                0.5 * (coarse[g] + coarse[g + 1])
            }
        })
        .collect()
}

/// Restricts a material onto the next coarser energy grid.
///
/// Total and fission production cross sections are averaged like
/// [`restrict_vector`]; chi is summed so it stays normalized; each coarse
/// scattering entry is the mean of the fine entries it covers (a quarter of
/// the 2x2 block sum, half of a 2x1 or 1x2 sum, or a copy at the odd corner).
pub fn restrict_material(fine: &MaterialCrossSections) -> MaterialCrossSections {
    let n = fine.num_groups();
    let m = coarse_count(n);
    let mut coarse = MaterialCrossSections::zeros(m);
    coarse.sigma_t = restrict_vector(&fine.sigma_t);
    coarse.nu_sigma_f = restrict_vector(&fine.nu_sigma_f);
    for g in 0..m {
        coarse.chi[g] = fine.chi[fine_members(g, n)].iter().sum();
    }
    for g in 0..m {
        let rows = fine_members(g, n);
        for gp in 0..m {
            let cols = fine_members(gp, n);
            let count = (rows.len() * cols.len()) as f64;
            let sum: f64 = rows
                .clone()
                .map(|r| cols.clone().map(|c| fine.sigma_s[r][c]).sum::<f64>())
                .sum();
            coarse.sigma_s[g][gp] = sum / count;
        }
    }
    coarse
}

//! Multigroup macroscopic cross sections.
//!
//! Group 0 is the highest energy group. Scattering is stored as a dense
//! destination-by-source matrix: `sigma_s[g][gp]` is the cross section for
//! scattering from group `gp` into group `g`.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

const CHI_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialCrossSections {
    pub sigma_t: Vec<f64>,
    pub sigma_s: Vec<Vec<f64>>,
    pub nu_sigma_f: Vec<f64>,
    pub chi: Vec<f64>,
}

/// One broken invariant found by [`validate_material`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Shape(String),
    Negative { field: &'static str, group: usize, value: f64 },
    NonFinite { field: &'static str, group: usize },
    ScatteringExceedsTotal { group: usize, scattering: f64, total: f64 },
    ChiSum { sum: f64 },
    ChiWithoutFission,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape(msg) => write!(f, "{msg}"),
            Violation::Negative { field, group, value } => {
                write!(f, "{field} negative in group {group} ({value})")
            }
            Violation::NonFinite { field, group } => {
                write!(f, "{field} not finite in group {group}")
            }
            Violation::ScatteringExceedsTotal {
                group,
                scattering,
                total,
            } => write!(
                f,
                "scattering exceeds total in group {group}: c > 1 in column {group} ({scattering} > {total})"
            ),
            Violation::ChiSum { sum } => write!(f, "chi must sum to 1 (sums to {sum})"),
            Violation::ChiWithoutFission => {
                write!(f, "chi must be zero when there is no fission")
            }
        }
    }
}

impl MaterialCrossSections {
    /// All-zero material with `num_groups` groups.
    pub fn zeros(num_groups: usize) -> Self {
        Self {
            sigma_t: vec![0.0; num_groups],
            sigma_s: vec![vec![0.0; num_groups]; num_groups],
            nu_sigma_f: vec![0.0; num_groups],
            chi: vec![0.0; num_groups],
        }
    }

    pub fn num_groups(&self) -> usize {
        self.sigma_t.len()
    }

    pub fn is_fissile(&self) -> bool {
        self.nu_sigma_f.iter().any(|&v| v > 0.0)
    }

    /// Total scattering out of source group `gp` into every group.
    pub fn column_scattering(&self, gp: usize) -> f64 {
        self.sigma_s.iter().map(|row| row[gp]).sum()
    }

    /// True when some group receives scattering from a lower-energy group.
    pub fn has_upscatter(&self) -> bool {
        self.first_upscatter_group().is_some()
    }

    /// Smallest destination group `g` with a nonzero `sigma_s[g][gp]` for
    /// some `gp > g`.
    pub fn first_upscatter_group(&self) -> Option<usize> {
        self.sigma_s
            .iter()
            .enumerate()
            .find(|(g, row)| row.iter().skip(g + 1).any(|&v| v != 0.0))
            .map(|(g, _)| g)
    }

    /// Data for the groups in `range`, with scattering truncated to sources
    /// inside the range.
    pub fn slice(&self, range: Range<usize>) -> Self {
        Self {
            sigma_t: self.sigma_t[range.clone()].to_vec(),
            sigma_s: self.sigma_s[range.clone()]
                .iter()
                .map(|row| row[range.clone()].to_vec())
                .collect(),
            nu_sigma_f: self.nu_sigma_f[range.clone()].to_vec(),
            chi: self.chi[range].to_vec(),
        }
    }
}

/// Checks every cross-section invariant and reports each broken one.
pub fn validate_material(xs: &MaterialCrossSections) -> Vec<Violation> {
    let n = xs.num_groups();
    let mut found = Vec::new();
    if xs.sigma_s.len() != n || xs.sigma_s.iter().any(|row| row.len() != n) {
        found.push(Violation::Shape(format!(
            "scattering matrix must be {n}x{n}"
        )));
        return found;
    }
    if xs.nu_sigma_f.len() != n || xs.chi.len() != n {
        found.push(Violation::Shape(format!(
            "nu_sigma_f and chi must have {n} groups"
        )));
        return found;
    }

    let mut scan = |field: &'static str, values: &[f64]| {
        for (g, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                found.push(Violation::NonFinite { field, group: g });
            } else if v < 0.0 {
                found.push(Violation::Negative {
                    field,
                    group: g,
                    value: v,
                });
            }
        }
    };
    scan("sigma_t", &xs.sigma_t);
    scan("nu_sigma_f", &xs.nu_sigma_f);
    scan("chi", &xs.chi);
    for row in &xs.sigma_s {
        scan("sigma_s", row);
    }

    for gp in 0..n {
        let c = xs.column_scattering(gp);
        if c > xs.sigma_t[gp] {
            found.push(Violation::ScatteringExceedsTotal {
                group: gp,
                scattering: c,
                total: xs.sigma_t[gp],
            });
        }
    }

    let chi_sum: f64 = xs.chi.iter().sum();
    if xs.is_fissile() {
        if (chi_sum - 1.0).abs() > CHI_SUM_TOL {
            found.push(Violation::ChiSum { sum: chi_sum });
        }
    } else if xs.chi.iter().any(|&v| v != 0.0) {
        found.push(Violation::ChiWithoutFission);
    }
    found
}

/// Deterministic single-material test fixture with a downscatter band and an
/// upscatter band over the lowest `num_upscatter` groups.
///
/// Bands per source column `g`: self-scatter `0.45 sigma_t`, downscatter into
/// `g + 1` of `0.20 sigma_t`, and upscatter into `g - 1` of `0.05 sigma_t`, so
/// every column has scattering ratio at most 0.70.
pub fn synth_upscatter_fixture(num_groups: usize, num_upscatter: usize) -> MaterialCrossSections {
    assert!(
        (1..=num_groups).contains(&num_upscatter),
        "need 1 <= num_upscatter <= num_groups"
    );
    let mut xs = MaterialCrossSections::zeros(num_groups);
    for g in 0..num_groups {
        let total = 1.0 + 0.05 * g as f64;
        xs.sigma_t[g] = total;
        xs.sigma_s[g][g] = 0.45 * total;
        if g + 1 < num_groups {
            xs.sigma_s[g + 1][g] = 0.20 * total;
        }
        if g >= num_groups - num_upscatter && g >= 1 {
            xs.sigma_s[g - 1][g] = 0.05 * total;
        }
    }
    xs
}

/// Adds fission to a fixture: `nu_sigma_f[g] = 0.08 sigma_t[g]` and a fission
/// spectrum spread over the three highest groups (or fewer when the material
/// has fewer groups).
pub fn with_fission(mut xs: MaterialCrossSections) -> MaterialCrossSections {
    let n = xs.num_groups();
    for g in 0..n {
        xs.nu_sigma_f[g] = 0.08 * xs.sigma_t[g];
    }
    let spectrum: &[f64] = match n {
        1 => &[1.0],
        2 => &[0.7, 0.3],
        _ => &[0.6, 0.3, 0.1],
    };
    xs.chi = vec![0.0; n];
    xs.chi[..spectrum.len()].copy_from_slice(spectrum);
    xs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_group_fixture() {
        let xs = synth_upscatter_fixture(1, 1);
        assert_eq!(xs.sigma_t, vec![1.0]);
        assert_eq!(xs.sigma_s, vec![vec![0.45]]);
        assert!(validate_material(&xs).is_empty());
    }

    #[test]
    fn ten_group_fixture_bands() {
        let xs = synth_upscatter_fixture(10, 5);
        for gp in 0..10 {
            assert!(xs.column_scattering(gp) <= 0.70 * xs.sigma_t[gp] + 1e-15);
        }
        assert!((xs.sigma_s[4][5] - 0.0625).abs() < 1e-15);
        assert_eq!(xs.sigma_s[3][4], 0.0);
        assert_eq!(xs.first_upscatter_group(), Some(4));
        assert!(validate_material(&xs).is_empty());
        assert!(validate_material(&with_fission(xs)).is_empty());
    }

    #[test]
    fn scattering_above_total_is_reported() {
        let mut xs = MaterialCrossSections::zeros(2);
        xs.sigma_t = vec![1.0, 1.0];
        xs.sigma_s[0][0] = 0.7;
        xs.sigma_s[1][0] = 0.5;
        let v = validate_material(&xs);
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().contains("c > 1 in column 0"));
    }

    #[test]
    fn negative_chi_is_reported() {
        let mut xs = with_fission(synth_upscatter_fixture(3, 1));
        xs.chi = vec![1.2, -0.2, 0.0];
        let v = validate_material(&xs);
        assert!(v.iter().any(|v| v.to_string().contains("chi negative")));
    }

    #[test]
    fn chi_sum_checked_only_with_fission() {
        let mut xs = with_fission(synth_upscatter_fixture(3, 1));
        xs.chi = vec![0.5, 0.4, 0.0];
        let v = validate_material(&xs);
        assert!(v[0].to_string().contains("chi must sum to 1"));

        let mut xs = synth_upscatter_fixture(3, 1);
        xs.chi[0] = 0.5;
        assert_eq!(validate_material(&xs), vec![Violation::ChiWithoutFission]);
    }

    #[test]
    fn slice_truncates_scattering() {
        let xs = synth_upscatter_fixture(10, 5);
        let s = xs.slice(5..10);
        assert_eq!(s.num_groups(), 5);
        assert_eq!(s.sigma_s[0][1], xs.sigma_s[5][6]);
        assert_eq!(s.sigma_t[0], xs.sigma_t[5]);
    }
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::MomentVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockMode {
    /// Every group goes into the Krylov block.
    AllGroups,
    /// Downscatter-only groups are solved once up front; the Krylov block
    /// holds the upscatter groups.
    UpscatterOnly,
}

impl FromStr for BlockMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "all" | "all-groups" => Ok(Self::AllGroups),
            "upscatter" | "upscatter-only" => Ok(Self::UpscatterOnly),
            other => Err(format!("unknown block mode '{other}' (expected all|upscatter)")),
        }
    }
}

impl fmt::Display for BlockMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::AllGroups => "all",
            Self::UpscatterOnly => "upscatter",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthSetting {
    Auto,
    Fixed(usize),
}

impl FromStr for DepthSetting {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(Self::Auto);
        }
        match s.parse::<usize>() {
            Ok(d) if d >= 1 => Ok(Self::Fixed(d)),
            _ => Err(format!("depth must be 'auto' or an integer >= 1, got '{s}'")),
        }
    }
}

impl fmt::Display for DepthSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => f.write_str("auto"),
            Self::Fixed(d) => write!(f, "{d}"),
        }
    }
}

/// Quadrature used inside the preconditioner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PcQuadrature {
    Same,
    Order(usize),
}

impl FromStr for PcQuadrature {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "same" {
            return Ok(Self::Same);
        }
        s.parse::<usize>()
            .map(Self::Order)
            .map_err(|_| format!("preconditioner quadrature must be 'same' or an order, got '{s}'"))
    }
}

impl fmt::Display for PcQuadrature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Same => f.write_str("same"),
            Self::Order(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iters: usize,
    /// Krylov subspace size before restart; `None` never restarts.
    pub restart: Option<usize>,
    pub weight: f64,
    pub relaxations: usize,
    pub vcycles: usize,
    pub depth: DepthSetting,
    pub pc_quadrature: PcQuadrature,
    pub num_sets: usize,
    pub block_mode: BlockMode,
    pub precond_enabled: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 1000,
            restart: None,
            weight: 1.0,
            relaxations: 2,
            vcycles: 2,
            depth: DepthSetting::Auto,
            pc_quadrature: PcQuadrature::Same,
            num_sets: 1,
            block_mode: BlockMode::UpscatterOnly,
            precond_enabled: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.tol.is_nan() || self.tol <= 0.0 {
            return fail("tol must be positive");
        }
        if self.max_iters == 0 {
            return fail("max_iters must be at least 1");
        }
        if self.restart == Some(0) {
            return fail("restart must be at least 1");
        }
        if !self.weight.is_finite() || self.weight <= 0.0 {
            return fail("weight must be positive");
        }
        if self.relaxations == 0 {
            return fail("relaxations per level must be at least 1");
        }
        if self.vcycles == 0 {
            return fail("V-cycles per application must be at least 1");
        }
        if self.num_sets == 0 {
            return fail("number of energy sets must be at least 1");
        }
        if self.depth == DepthSetting::Fixed(0) {
            return fail("depth must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenConfig {
    pub enabled: bool,
    pub k_tol: f64,
    pub l2_tol: f64,
    pub linf_tol: f64,
    pub k0: f64,
    pub max_outer: usize,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            k_tol: 1e-6,
            l2_tol: 1.0,
            linf_tol: 0.01,
            k0: 1.0,
            max_outer: 500,
        }
    }
}

impl EigenConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_tol > 0.0 && self.l2_tol > 0.0 && self.linf_tol > 0.0) {
            return Err(Error::Config("eigenvalue tolerances must be positive".into()));
        }
        if self.k0.is_nan() || self.k0 <= 0.0 {
            return Err(Error::Config("k0 must be positive".into()));
        }
        if self.max_outer == 0 {
            return Err(Error::Config("max_outer must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceSpec {
    /// Isotropic source density per group, the same in every cell.
    UniformByGroup(Vec<f64>),
    /// Source density per group per cell, `q[g][cell]`.
    PerCell(Vec<Vec<f64>>),
}

impl SourceSpec {
    pub fn none(num_groups: usize) -> Self {
        Self::UniformByGroup(vec![0.0; num_groups])
    }

    pub fn validate(&self, num_groups: usize, num_cells: usize) -> Result<()> {
        let bad = |v: &f64| !(v.is_finite() && *v >= 0.0);
        match self {
            Self::UniformByGroup(q) => {
                if q.len() != num_groups {
                    return Err(Error::InvalidProblem(format!(
                        "source has {} groups, problem has {num_groups}",
                        q.len()
                    )));
                }
                if q.iter().any(bad) {
                    return Err(Error::InvalidProblem("source must be non-negative".into()));
                }
            }
            Self::PerCell(q) => {
                if q.len() != num_groups || q.iter().any(|row| row.len() != num_cells) {
                    return Err(Error::InvalidProblem(
                        "per-cell source must be groups x cells".into(),
                    ));
                }
                if q.iter().flatten().any(bad) {
                    return Err(Error::InvalidProblem("source must be non-negative".into()));
                }
            }
        }
        Ok(())
    }

    /// Source density as a moment vector over all groups.
    pub fn to_moments(&self, num_groups: usize, num_cells: usize) -> MomentVector {
        let mut q = MomentVector::zeros(0..num_groups, num_cells);
        for g in 0..num_groups {
            let dst = q.group_mut(g);
            match self {
                Self::UniformByGroup(v) => dst.fill(v[g]),
                Self::PerCell(v) => dst.copy_from_slice(&v[g]),
            }
        }
        q
    }
}

//! Iteration histories shared by the solvers and the CSV writers.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    MaxIters,
    Diverged,
}

impl SolveStatus {
    pub fn is_converged(self) -> bool {
        self == Self::Converged
    }
}

/// One Krylov (or Gauss-Seidel outer) iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationStep {
    /// Relative residual norm (GMRES) or relative flux change (Gauss-Seidel).
    pub res_norm: f64,
    pub seconds: f64,
}

/// One power-iteration outer step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OuterStep {
    pub k: f64,
    pub delta_k: f64,
    pub l2_fission: f64,
    pub linf_fission: f64,
    pub krylov_iters: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRecord {
    pub steps: Vec<IterationStep>,
    pub outer: Vec<OuterStep>,
    pub status: SolveStatus,
}

impl ConvergenceRecord {
    pub fn new() -> Self {
        Self {
            steps: Vec::new(),
            outer: Vec::new(),
            status: SolveStatus::MaxIters,
        }
    }

    pub fn iterations(&self) -> usize {
        self.steps.len()
    }

    pub fn total_krylov_iterations(&self) -> usize {
        self.outer.iter().map(|o| o.krylov_iters).sum()
    }
}

impl Default for ConvergenceRecord {
    fn default() -> Self {
        Self::new()
    }
}

/// Estimates the dominance ratio from the decay of the fission-source
/// changes over the last (up to) five outer iterations: the geometric mean of
/// successive ratios, clamped to `[0, 1)`. Needs at least three outer steps.
pub fn dominance_ratio_estimate(record: &ConvergenceRecord) -> Option<f64> {
    let changes: Vec<f64> = record.outer.iter().map(|o| o.l2_fission).collect();
    if changes.len() < 3 {
        return None;
    }
    let window = &changes[changes.len() - changes.len().min(5)..];
    let first = window[0];
    let last = window[window.len() - 1];
    if first.is_nan() || first <= 0.0 || !last.is_finite() {
        return None;
    }
    let ratio = (last / first).powf(1.0 / (window.len() - 1) as f64);
    Some(ratio.clamp(0.0, 1.0 - f64::EPSILON))
}

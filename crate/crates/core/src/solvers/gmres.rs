//! Restarted GMRES with modified Gram-Schmidt and right preconditioning.
//!
//! Solves `A G^-1 y = b` and returns `x = G^-1 y`, so the monitored residual
//! is the true residual `b - A x`.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::moments::{dot, norm2};
use crate::solvers::record::{ConvergenceRecord, IterationStep, SolveStatus};

/// Threshold on `max |<w, v_i>| / |w|` after one Gram-Schmidt pass that
/// triggers a second pass.
const REORTHOGONALIZE_TOL: f64 = 1e-8;

/// A linear map on flat vectors.
pub trait LinearMap {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    pub tol: f64,
    pub max_iters: usize,
    /// Subspace size before restart; `None` never restarts.
    pub restart: Option<usize>,
}

impl GmresOptions {
    pub fn new(tol: f64, max_iters: usize) -> Self {
        Self {
            tol,
            max_iters,
            restart: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub record: ConvergenceRecord,
}

impl GmresOutcome {
    pub fn iterations(&self) -> usize {
        self.record.iterations()
    }

    pub fn converged(&self) -> bool {
        self.record.status == SolveStatus::Converged
    }
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}

pub fn gmres_solve(
    op: &dyn LinearMap,
    preconditioner: Option<&dyn LinearMap>,
    b: &[f64],
    options: &GmresOptions,
) -> Result<GmresOutcome> {
    let n = op.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: b.len(),
        });
    }
    let precondition = |v: &[f64]| -> Result<Vec<f64>> {
        match preconditioner {
            Some(pc) => pc.apply(v),
            None => Ok(v.to_vec()),
        }
    };

    let mut record = ConvergenceRecord::new();
    let mut x = vec![0.0; n];
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        record.status = SolveStatus::Converged;
        return Ok(GmresOutcome { x, record });
    }
    let restart = options.restart.unwrap_or(options.max_iters).max(1);

    loop {
        let mut r = b.to_vec();
        if record.iterations() > 0 {
            let ax = op.apply(&x)?;
            r.iter_mut().zip(&ax).for_each(|(ri, a)| *ri -= a);
        }
        let beta = norm2(&r);
        if beta / b_norm <= options.tol {
            record.status = SolveStatus::Converged;
            return Ok(GmresOutcome { x, record });
        }
        let budget = restart.min(options.max_iters - record.iterations());

        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess: Vec<Vec<f64>> = Vec::with_capacity(budget);
        let mut rotations: Vec<(f64, f64)> = Vec::with_capacity(budget);
        let mut g = vec![beta];
        let mut status = None;

        for j in 0..budget {
            let start = Instant::now();
            let z = precondition(&basis[j])?;
            let mut w = op.apply(&z)?;

            let mut h = vec![0.0; j + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                h[i] = hij;
                w.iter_mut().zip(v).for_each(|(wk, vk)| *wk -= hij * vk);
            }
            let w_norm = norm2(&w);
            if w_norm > 0.0 {
                let loss = basis
                    .iter()
                    .map(|v| dot(&w, v).abs())
                    .fold(0.0, f64::max)
                    / w_norm;
                if loss > REORTHOGONALIZE_TOL {
                    for (i, v) in basis.iter().enumerate() {
                        let c = dot(&w, v);
                        h[i] += c;
                        w.iter_mut().zip(v).for_each(|(wk, vk)| *wk -= c * vk);
                    }
                }
            }
            let h_next = norm2(&w);
            h[j + 1] = h_next;

            for (i, &(c, s)) in rotations.iter().enumerate() {
                let (a, bb) = (h[i], h[i + 1]);
                h[i] = c * a + s * bb;
                h[i + 1] = -s * a + c * bb;
            }
            let (c, s) = givens(h[j], h[j + 1]);
            h[j] = c * h[j] + s * h[j + 1];
            h[j + 1] = 0.0;
            rotations.push((c, s));
            let gj = g[j];
            g[j] = c * gj;
            g.push(-s * gj);
            hess.push(h);

            let residual = g[j + 1].abs() / b_norm;
            record.steps.push(IterationStep {
                res_norm: residual,
                seconds: start.elapsed().as_secs_f64(),
            });

            if !residual.is_finite() {
                status = Some(SolveStatus::Diverged);
                break;
            }
            if residual <= options.tol {
                status = Some(SolveStatus::Converged);
                break;
            }
            if h_next == 0.0 || h_next <= f64::MIN_POSITIVE {
                return Err(Error::Breakdown {
                    iteration: record.iterations(),
                    residual,
                });
            }
            basis.push(w.iter().map(|v| v / h_next).collect());
        }

        // Back substitution on the triangularized Hessenberg system.
        let m = hess.len();
        let mut y = vec![0.0; m];
        for i in (0..m).rev() {
            let mut s = g[i];
            for k in i + 1..m {
                s -= hess[k][i] * y[k];
            }
            y[i] = s / hess[i][i];
        }
        let mut update = vec![0.0; n];
        for (yi, v) in y.iter().zip(&basis) {
            update.iter_mut().zip(v).for_each(|(u, vk)| *u += yi * vk);
        }
        let correction = precondition(&update)?;
        x.iter_mut().zip(&correction).for_each(|(xi, c)| *xi += c);

        match status {
            Some(s) => {
                record.status = s;
                return Ok(GmresOutcome { x, record });
            }
            None if record.iterations() >= options.max_iters => {
                record.status = SolveStatus::MaxIters;
                return Ok(GmresOutcome { x, record });
            }
            None => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Dense(Vec<Vec<f64>>);

    impl LinearMap for Dense {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
            Ok(self.0.iter().map(|row| dot(row, x)).collect())
        }
    }

    fn identity(n: usize) -> Dense {
        Dense((0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect())
    }

    fn test_matrix(n: usize) -> Dense {
        Dense(
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            if i == j {
                                2.0 + i as f64 * 0.1
                            } else {
                                0.3 / (1.0 + (i as f64 - j as f64).abs()) * if j > i { 1.0 } else { -0.5 }
                            }
                        })
                        .collect()
                })
                .collect(),
        )
    }

    fn residual(a: &Dense, x: &[f64], b: &[f64]) -> f64 {
        let ax = a.apply(x).unwrap();
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        norm2(&r) / norm2(b)
    }

    #[test]
    fn identity_converges_in_one_iteration() {
        let b = vec![1.0, -2.0, 3.0];
        let out = gmres_solve(&identity(3), None, &b, &GmresOptions::new(1e-12, 10)).unwrap();
        assert!(out.converged());
        assert_eq!(out.iterations(), 1);
        for (x, b) in out.x.iter().zip(&b) {
            assert!((x - b).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_rhs_is_trivial() {
        let out = gmres_solve(&identity(3), None, &[0.0; 3], &GmresOptions::new(1e-8, 10)).unwrap();
        assert!(out.converged());
        assert_eq!(out.iterations(), 0);
        assert_eq!(out.x, vec![0.0; 3]);
    }

    #[test]
    fn nonsymmetric_system_with_and_without_restart() {
        let a = test_matrix(12);
        let b: Vec<f64> = (0..12).map(|i| (i as f64).sin() + 1.0).collect();
        let full = gmres_solve(&a, None, &b, &GmresOptions::new(1e-10, 100)).unwrap();
        assert!(full.converged());
        assert!(residual(&a, &full.x, &b) <= 1e-10 * 1.01);
        for w in full.record.steps.windows(2) {
            assert!(w[1].res_norm <= w[0].res_norm);
        }

        let opts = GmresOptions {
            tol: 1e-10,
            max_iters: 200,
            restart: Some(3),
        };
        let restarted = gmres_solve(&a, None, &b, &opts).unwrap();
        assert!(restarted.converged());
        assert!(restarted.iterations() >= full.iterations());
        assert!(residual(&a, &restarted.x, &b) <= 1e-9);
    }

    #[test]
    fn right_preconditioning_with_exact_inverse() {
        // Diagonal matrix, preconditioned by its inverse: one iteration.
        let n = 5;
        let diag: Vec<f64> = (1..=n).map(|i| i as f64).collect();
        let a = Dense((0..n).map(|i| (0..n).map(|j| if i == j { diag[i] } else { 0.0 }).collect()).collect());
        let inv = Dense((0..n).map(|i| (0..n).map(|j| if i == j { 1.0 / diag[i] } else { 0.0 }).collect()).collect());
        let b = vec![1.0; n];
        let out = gmres_solve(&a, Some(&inv), &b, &GmresOptions::new(1e-12, 10)).unwrap();
        assert_eq!(out.iterations(), 1);
        for (x, d) in out.x.iter().zip(&diag) {
            assert!((x - 1.0 / d).abs() < 1e-14);
        }
    }

    #[test]
    fn iteration_cap_reports_max_iters() {
        let a = test_matrix(20);
        let b = vec![1.0; 20];
        let out = gmres_solve(&a, None, &b, &GmresOptions::new(1e-14, 3)).unwrap();
        assert_eq!(out.record.status, SolveStatus::MaxIters);
        assert_eq!(out.iterations(), 3);
        assert!(residual(&a, &out.x, &b) < 1.0);
    }
}

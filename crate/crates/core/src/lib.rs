//! Multigroup discrete-ordinates transport on Cartesian meshes, solved with
//! a block multigroup GMRES iteration that is right-preconditioned by
//! multigrid in energy.
//!
//! The pieces, bottom up:
//!
//! * [`problem`], [`material`], [`mesh`], [`quadrature`], [`partition`] define
//!   the problem and split the groups into a downscatter cascade, a Krylov
//!   block, and energy sets.
//! * [`sweep`] applies `T = D L^-1` with step differencing.
//! * [`operator`] is the matrix-free `I - T M S` over a group block, with the
//!   per-set reduce-plus-scatter.
//! * [`mge`] is the multigrid-in-energy preconditioner.
//! * [`solvers`] holds GMRES, the Gauss-Seidel baseline and power iteration.
//! * [`output`] writes convergence histories and fluxes.

pub mod config;
pub mod error;
pub mod material;
pub mod mesh;
pub mod mge;
pub mod moments;
pub mod operator;
pub mod output;
pub mod partition;
pub mod problem;
pub mod quadrature;
pub mod solvers;
pub mod sweep;

pub use error::{Error, Result};

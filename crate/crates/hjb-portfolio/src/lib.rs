//! Dynamic portfolio selection through the Riccati-transformed
//! Hamilton-Jacobi-Bellman equation.
//!
//! The pipeline has three mathematical stages:
//!
//! 1. **Value function** ([`alpha`]): the static mean-variance program
//!    `alpha(phi) = min_{theta} -mu^T theta + (phi/2) theta^T Sigma theta`
//!    over the simplex (exact active-set QP) or a finite decision set,
//!    together with its envelope derivative and the minimizer.
//! 2. **PDE solve** ([`pde`]): the quasilinear parabolic Cauchy problem
//!    `d_tau phi - d_x^2 alpha(phi) = -d_x(alpha(phi) phi)` by a
//!    conservative finite-volume IMEX scheme, where `phi(x, tau)` is the
//!    Riccati transform `-d_x^2 V / d_x V` of the value function and
//!    `alpha` acts as the nonlinear diffusion coefficient.
//! 3. **Reconstruction** ([`riccati`], [`policy`]): the value function `V`
//!    up to its affine gauge, and the optimal allocation field
//!    `theta(x, tau)` with diversification metrics.
//!
//! Market statistics load from CSV ([`market`]), runs are driven by a
//! versioned TOML config ([`config`]), and the single thin binary exposes the
//! `alpha`, `solve`, `policy` and `check` subcommands ([`cli`]). Everything
//! is deterministic: identical inputs produce byte-identical outputs.
//!
//! The `examples/` directory has one runnable program per capability; start
//! with `cargo run --example alpha_sweep`.

pub mod alpha;
pub mod cli;
pub mod config;
pub mod error;
pub mod grid;
pub mod market;
pub mod pde;
pub mod policy;
pub mod riccati;

pub use alpha::{
    alpha_at_zero_limit, alpha_discrete, build_alpha_table, envelope_derivative,
    solve_simplex_qp, AlphaEval, AlphaFn, AlphaTable, DirectAlpha,
};
pub use error::{Error, Result};
pub use grid::Grid1D;
pub use market::{check_assumptions, AssetStats, DecisionSet, DriftProfile, LoadOptions};
pub use pde::{
    convergence_study, solve, step, Boundary, BoundaryPins, PdeState, SolutionTrajectory,
    SolverConfig,
};
pub use policy::{diversification_report, reconstruct_policy, PolicyField, SnapshotField};
pub use riccati::{initial_condition, reconstruct_value, riccati_transform, UtilitySpec};

//! Conservative finite-volume solver for the transformed Cauchy problem
//!
//! ```text
//! d_tau phi - d_x^2 alpha(phi) = -d_x( alpha(phi) phi ),   phi(x, 0) = phi0(x)
//! ```
//!
//! on a truncated domain. Time stepping is IMEX: the nonlinear diffusion is
//! implicit with Picard-lagged secant diffusivity
//! `D_{i+1/2} = (alpha(phi_R) - alpha(phi_L)) / (phi_R - phi_L)` (exact in
//! divergence form, degrades gracefully at kinks of `alpha'`), and the
//! advective flux `alpha(phi) phi` is explicit first-order upwind by the sign
//! of the local wave speed `alpha'(phi) phi + alpha(phi)` at the face
//! average. Each implicit solve is a tridiagonal M-matrix system solved in
//! delta form, so constant states are preserved bit-exactly.

use crate::alpha::AlphaFn;
use crate::error::{Error, Result};
use crate::grid::Grid1D;

/// Secant fallback threshold: below this jump the face diffusivity uses
/// `alpha'` at the face average.
const SECANT_EPS: f64 = 1e-12;

/// Negative-diffusivity roundoff slack before the M-matrix check fails.
const DIFFUSIVITY_SLACK: f64 = -1e-9;

/// Blow-up guard factor on the sup norm relative to the initial data.
const BLOWUP_FACTOR: f64 = 1e3;

/// Cell averages of `phi` at one time level `tau = T - t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeState {
    pub tau: f64,
    pub values: Vec<f64>,
}

impl PdeState {
    pub fn new(tau: f64, values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("pde state contains non-finite values".into()));
        }
        Ok(PdeState { tau, values })
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Cell-average mass `sum phi_i dx`.
    pub fn mass(&self, grid: &Grid1D) -> f64 {
        self.values.iter().sum::<f64>() * grid.dx()
    }
}

/// Boundary treatment on the truncated domain.
///
/// The paper's far field is constant in every example, so the default pins
/// ghost values to the initial boundary cells; `ZeroFlux` closes both the
/// diffusive and advective face fluxes at the ends and conserves mass
/// exactly (the right side of the equation is a perfect x-derivative).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Dirichlet,
    ZeroFlux,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Horizon T in transformed time; `t_end = 0` is an empty march.
    pub t_end: f64,
    pub dt_initial: f64,
    /// Safety factor in (0, 1] applied to the advective CFL bound.
    pub cfl_safety: f64,
    pub boundary: Boundary,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub advection_enabled: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            t_end: 1.0,
            dt_initial: 1e-3,
            cfl_safety: 0.9,
            boundary: Boundary::Dirichlet,
            picard_tol: 1e-10,
            picard_max: 25,
            advection_enabled: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.t_end.is_finite() || self.t_end < 0.0 {
            return Err(Error::Validation(format!(
                "t_end must be >= 0, got {}",
                self.t_end
            )));
        }
        if !self.dt_initial.is_finite() || self.dt_initial <= 0.0 {
            return Err(Error::Validation("dt_initial must be positive".into()));
        }
        if !self.cfl_safety.is_finite() || self.cfl_safety <= 0.0 || self.cfl_safety > 1.0 {
            return Err(Error::Validation(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        if !self.picard_tol.is_finite() || self.picard_tol <= 0.0 {
            return Err(Error::Validation("picard_tol must be positive".into()));
        }
        if self.picard_max == 0 {
            return Err(Error::Validation("picard_max must be >= 1".into()));
        }
        Ok(())
    }
}

/// Dirichlet pin values: the initial boundary-cell averages, captured when a
/// march starts.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryPins {
    pub left: f64,
    pub right: f64,
}

impl BoundaryPins {
    pub fn from_initial(phi0: &PdeState) -> Self {
        BoundaryPins {
            left: phi0.values[0],
            right: *phi0.values.last().unwrap(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepStats {
    pub picard_iters: usize,
    pub residual: f64,
}

/// Advective CFL bound `cfl_safety * dx / max_i |alpha'(phi_i) phi_i + alpha(phi_i)|`,
/// or `None` when the speeds vanish.
pub fn cfl_bound(state: &PdeState, grid: &Grid1D, cfg: &SolverConfig, alpha: &dyn AlphaFn) -> Option<f64> {
    if !cfg.advection_enabled {
        return None;
    }
    let max_speed = state
        .values
        .iter()
        .map(|&p| (alpha.alpha_prime(p) * p + alpha.alpha(p)).abs())
        .fold(0.0, f64::max);
    if max_speed > 0.0 {
        Some(cfg.cfl_safety * grid.dx() / max_speed)
    } else {
        None
    }
}

/// One IMEX step of size `dt`.
///
/// Rejects `dt` beyond the advective CFL bound before touching the state.
/// The implicit stage iterates Picard on the face diffusivities; the
/// tridiagonal system is solved for the increment `delta = phi_new - phi_old`
/// so that vanishing fluxes yield a bit-exact stationary state.
pub fn step(
    state: &PdeState,
    grid: &Grid1D,
    cfg: &SolverConfig,
    alpha: &dyn AlphaFn,
    dt: f64,
    pins: BoundaryPins,
) -> Result<(PdeState, StepStats)> {
    let n = grid.n_cells();
    if state.values.len() != n {
        return Err(Error::Validation(format!(
            "state has {} cells, grid has {n}",
            state.values.len()
        )));
    }
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::Validation("dt must be positive".into()));
    }
    if let Some(bound) = cfl_bound(state, grid, cfg, alpha) {
        if dt > bound * (1.0 + 1e-12) {
            return Err(Error::CflViolation { dt, bound });
        }
    }
    let dx = grid.dx();
    let old = &state.values;
    let zero_flux = cfg.boundary == Boundary::ZeroFlux;

    // face neighbor values: ghost cells carry the Dirichlet pins
    let face_pair = |vals: &[f64], f: usize| -> (f64, f64) {
        let left = if f == 0 { pins.left } else { vals[f - 1] };
        let right = if f == n { pins.right } else { vals[f] };
        (left, right)
    };

    // explicit upwind advection from the old level: contribution of
    // -d_x(alpha(phi) phi) as flux differences
    let mut adv = vec![0.0; n];
    if cfg.advection_enabled {
        let mut flux = vec![0.0; n + 1];
        for (f, fv) in flux.iter_mut().enumerate() {
            if zero_flux && (f == 0 || f == n) {
                continue;
            }
            let (l, r) = face_pair(old, f);
            let mid = 0.5 * (l + r);
            let speed = alpha.alpha_prime(mid) * mid + alpha.alpha(mid);
            let up = if speed >= 0.0 { l } else { r };
            *fv = alpha.alpha(up) * up;
        }
        for i in 0..n {
            adv[i] = -(flux[i + 1] - flux[i]) / dx;
        }
    }

    let r = dt / (dx * dx);
    let mut phi_k = old.clone();
    let mut residuals = Vec::new();
    let mut diffusivity = vec![0.0; n + 1];
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];

    for iter in 1..=cfg.picard_max {
        // face diffusivities from the current iterate; alpha values at the
        // cells are shared across faces
        let mut cell_alpha = Vec::with_capacity(n + 2);
        cell_alpha.push(alpha.alpha(pins.left));
        for &p in &phi_k {
            cell_alpha.push(alpha.alpha(p));
        }
        cell_alpha.push(alpha.alpha(pins.right));
        for f in 0..=n {
            if zero_flux && (f == 0 || f == n) {
                diffusivity[f] = 0.0;
                continue;
            }
            let (l, r_val) = face_pair(&phi_k, f);
            let d = if (r_val - l).abs() < SECANT_EPS {
                alpha.alpha_prime(0.5 * (l + r_val))
            } else {
                (cell_alpha[f + 1] - cell_alpha[f]) / (r_val - l)
            };
            // alpha is nondecreasing in phi, so a genuinely negative secant
            // breaks the M-matrix property
            if d < DIFFUSIVITY_SLACK {
                return Err(Error::NotDiagonallyDominant {
                    tau: state.tau,
                    diffusivity: d,
                });
            }
            diffusivity[f] = d.max(0.0);
        }

        // rhs = dt * (L phi_old + adv); delta-form keeps constants exact
        for i in 0..n {
            let (l_old, _) = face_pair(old, i);
            let (_, r_old) = face_pair(old, i + 1);
            let mut g_left = diffusivity[i] * (old[i] - l_old);
            let mut g_right = diffusivity[i + 1] * (r_old - old[i]);
            if zero_flux {
                if i == 0 {
                    g_left = 0.0;
                }
                if i == n - 1 {
                    g_right = 0.0;
                }
            }
            rhs[i] = dt * ((g_right - g_left) / (dx * dx) + adv[i]);
            let dl = diffusivity[i];
            let dr = diffusivity[i + 1];
            diag[i] = 1.0 + r * (dl + dr);
            sub[i] = if i > 0 { -r * dl } else { 0.0 };
            sup[i] = if i < n - 1 { -r * dr } else { 0.0 };
        }

        let delta = thomas(&sub, &diag, &sup, &rhs);
        let mut next = old.clone();
        for i in 0..n {
            next[i] += delta[i];
        }
        let residual = next
            .iter()
            .zip(&phi_k)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        residuals.push(residual);
        phi_k = next;
        if residual <= cfg.picard_tol {
            return Ok((
                PdeState {
                    tau: state.tau + dt,
                    values: phi_k,
                },
                StepStats {
                    picard_iters: iter,
                    residual,
                },
            ));
        }
    }
    Err(Error::PicardNonConvergence {
        iters: cfg.picard_max,
        tol: cfg.picard_tol,
        last: *residuals.last().unwrap(),
        residuals,
    })
}

/// Thomas algorithm for a tridiagonal system; strictly diagonally dominant
/// by construction here, so no pivoting.
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / m;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Per-step diagnostics row (the `diagnostics.csv` contract).
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    pub tau: f64,
    pub dt: f64,
    pub mass: f64,
    pub min_phi: f64,
    pub max_phi: f64,
    pub picard_iters: usize,
}

/// Per-snapshot summary.
#[derive(Debug, Clone, Copy)]
pub struct SnapshotStats {
    pub tau: f64,
    pub mass: f64,
    pub rel_mass_drift: f64,
    pub min_phi: f64,
    pub max_phi: f64,
}

#[derive(Debug, Clone)]
pub struct SolutionTrajectory {
    /// States at the requested output times (nearest completed step, no
    /// interpolation in time); `snapshots[k].tau` is the actual step time.
    pub snapshots: Vec<PdeState>,
    pub snapshot_stats: Vec<SnapshotStats>,
    pub steps: Vec<StepRecord>,
    pub initial_mass: f64,
    pub max_rel_mass_drift: f64,
}

/// March from `tau = 0` to `t_end` with `dt = min(dt_initial, CFL bound)`
/// recomputed each step (the final step is clipped to land on `t_end`).
///
/// Aborts when the sup norm exceeds `1e3 ||phi0||_inf`: the continuous
/// problem keeps `phi` bounded, so growth of that size is an implementation
/// or configuration bug, not mathematics.
pub fn solve(
    phi0: &PdeState,
    grid: &Grid1D,
    cfg: &SolverConfig,
    alpha: &dyn AlphaFn,
    snapshot_times: &[f64],
) -> Result<SolutionTrajectory> {
    cfg.validate()?;
    if phi0.values.len() != grid.n_cells() {
        return Err(Error::Validation(format!(
            "phi0 has {} cells, grid has {}",
            phi0.values.len(),
            grid.n_cells()
        )));
    }
    if phi0.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("phi0 contains non-finite values".into()));
    }
    let pins = BoundaryPins::from_initial(phi0);
    let guard = BLOWUP_FACTOR * phi0.sup_norm().max(f64::MIN_POSITIVE);

    let mut targets: Vec<f64> = snapshot_times.to_vec();
    targets.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut current = PdeState {
        tau: 0.0,
        values: phi0.values.clone(),
    };
    let initial_mass = current.mass(grid);
    let mut steps: Vec<StepRecord> = Vec::new();
    let mut snapshots: Vec<PdeState> = Vec::new();
    let mut max_drift = 0.0f64;
    let mut next_target = 0usize;

    // requested times at or before tau = 0 resolve to the initial state
    while next_target < targets.len() && targets[next_target] <= 0.0 {
        snapshots.push(current.clone());
        next_target += 1;
    }

    let mut tau = 0.0f64;
    while tau < cfg.t_end - 1e-14 {
        let mut dt = cfg.dt_initial.min(cfg.t_end - tau);
        if let Some(bound) = cfl_bound(&current, grid, cfg, alpha) {
            dt = dt.min(bound);
        }
        let prev = current.clone();
        let (next, stats) = step(&current, grid, cfg, alpha, dt, pins)?;
        tau = next.tau;
        current = next;

        let norm = current.sup_norm();
        if norm.is_nan() || norm > guard {
            return Err(Error::BlowUp {
                tau,
                norm,
                limit: guard,
            });
        }
        let mass = current.mass(grid);
        if initial_mass.abs() > 0.0 {
            max_drift = max_drift.max((mass - initial_mass).abs() / initial_mass.abs());
        }
        steps.push(StepRecord {
            tau,
            dt,
            mass,
            min_phi: current.min(),
            max_phi: current.max(),
            picard_iters: stats.picard_iters,
        });

        // fulfill targets passed by this step with the nearer endpoint
        while next_target < targets.len() && targets[next_target] <= tau + 1e-14 {
            let t = targets[next_target];
            let pick_prev = (t - prev.tau).abs() <= (tau - t).abs();
            snapshots.push(if pick_prev { prev.clone() } else { current.clone() });
            next_target += 1;
        }
    }
    // targets beyond the horizon resolve to the final state
    while next_target < targets.len() {
        snapshots.push(current.clone());
        next_target += 1;
    }

    let snapshot_stats = snapshots
        .iter()
        .map(|s| {
            let mass = s.mass(grid);
            SnapshotStats {
                tau: s.tau,
                mass,
                rel_mass_drift: if initial_mass.abs() > 0.0 {
                    (mass - initial_mass).abs() / initial_mass.abs()
                } else {
                    0.0
                },
                min_phi: s.min(),
                max_phi: s.max(),
            }
        })
        .collect();

    Ok(SolutionTrajectory {
        snapshots,
        snapshot_stats,
        steps,
        initial_mass,
        max_rel_mass_drift: max_drift,
    })
}

/// One refinement level of a self-convergence study.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceLevel {
    pub n_cells: usize,
    pub dx: f64,
    pub dt: f64,
    /// sup-norm difference against the finest solution restricted to this
    /// grid; zero for the finest level itself.
    pub error_vs_finest: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub levels: Vec<ConvergenceLevel>,
    /// Rates `log2(d_l / d_{l+1})` of consecutive-level differences
    /// (unbiased, unlike rates of errors-vs-finest).
    pub pair_orders: Vec<f64>,
    /// Last pair order: the asymptotic estimate.
    pub observed_order: f64,
}

/// Halve `dx` per level from the base grid, scaling `dt` like `dx^2` when
/// advection is disabled (heat mode) and like `dx` otherwise, and compare
/// final-time solutions by cell-average restriction.
pub fn convergence_study(
    base_grid: &Grid1D,
    phi0_of: &dyn Fn(&Grid1D) -> Vec<f64>,
    cfg: &SolverConfig,
    alpha: &dyn AlphaFn,
    refinements: usize,
) -> Result<ConvergenceStudy> {
    if refinements < 3 {
        return Err(Error::Validation(
            "convergence study needs at least 3 levels".into(),
        ));
    }
    let mut solutions: Vec<Vec<f64>> = Vec::new();
    let mut levels: Vec<ConvergenceLevel> = Vec::new();
    for l in 0..refinements {
        let grid = base_grid.refined(l as u32);
        let scale = grid.dx() / base_grid.dx();
        let dt = if cfg.advection_enabled {
            cfg.dt_initial * scale
        } else {
            cfg.dt_initial * scale * scale
        };
        let level_cfg = SolverConfig {
            dt_initial: dt,
            ..cfg.clone()
        };
        let phi0 = PdeState::new(0.0, phi0_of(&grid))?;
        let traj = solve(&phi0, &grid, &level_cfg, alpha, &[cfg.t_end])?;
        solutions.push(traj.snapshots.last().unwrap().values.clone());
        levels.push(ConvergenceLevel {
            n_cells: grid.n_cells(),
            dx: grid.dx(),
            dt,
            error_vs_finest: 0.0,
        });
    }
    let finest = solutions.last().unwrap().clone();
    for l in 0..refinements - 1 {
        let factor = 1usize << (refinements - 1 - l);
        let restricted = restrict(&finest, factor);
        levels[l].error_vs_finest = sup_diff(&solutions[l], &restricted);
    }
    let mut diffs = Vec::new();
    for l in 0..refinements - 1 {
        let restricted = restrict(&solutions[l + 1], 2);
        diffs.push(sup_diff(&solutions[l], &restricted));
    }
    let pair_orders: Vec<f64> = diffs
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .collect();
    let observed_order = pair_orders.last().copied().unwrap_or(f64::NAN);
    Ok(ConvergenceStudy {
        levels,
        pair_orders,
        observed_order,
    })
}

/// Exact cell-average restriction by factors of two.
pub fn restrict(fine: &[f64], factor: usize) -> Vec<f64> {
    fine.chunks(factor)
        .map(|c| c.iter().sum::<f64>() / factor as f64)
        .collect()
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

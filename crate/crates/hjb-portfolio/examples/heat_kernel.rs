//! Verify the solver against the analytic heat kernel: with a single asset,
//! mu = 0 and sigma^2 = 2 the diffusion coefficient is alpha(phi) = phi, and
//! with advection disabled the equation is the plain heat equation.

use hjb_portfolio::alpha::build_alpha_table;
use hjb_portfolio::pde::{solve, Boundary, PdeState, SolverConfig};
use hjb_portfolio::{AssetStats, DecisionSet, Grid1D};

fn kernel(x: f64, tau: f64) -> f64 {
    let s = 0.05 + tau;
    (-x * x / (4.0 * s)).exp() / (4.0 * std::f64::consts::PI * s).sqrt()
}

fn main() -> hjb_portfolio::Result<()> {
    let synth = AssetStats::new(vec!["S".into()], vec![0.0], vec![vec![2.0]])?;
    let set = DecisionSet::simplex(1)?;
    let table = build_alpha_table(&synth, &set, 0.01, 2.0, 50)?;

    println!("{:>8} {:>12} {:>12} {:>14} {:>8}", "n_cells", "dx", "dt", "Linf error", "ratio");
    let mut previous: Option<f64> = None;
    for n_cells in [100usize, 200, 400, 800] {
        let grid = Grid1D::new(-3.0, 3.0, n_cells)?;
        let dx = grid.dx();
        let dt = dx * dx;
        let phi0 = PdeState::new(
            0.0,
            grid.centers().iter().map(|&x| kernel(x, 0.0)).collect(),
        )?;
        let cfg = SolverConfig {
            t_end: 0.1,
            dt_initial: dt,
            advection_enabled: false,
            boundary: Boundary::Dirichlet,
            ..SolverConfig::default()
        };
        let traj = solve(&phi0, &grid, &cfg, &table, &[0.1])?;
        let err = traj
            .snapshots
            .last()
            .unwrap()
            .values
            .iter()
            .zip(grid.centers())
            .map(|(&v, x)| (v - kernel(x, 0.1)).abs())
            .fold(0.0, f64::max);
        let ratio = previous.map(|p| p / err).unwrap_or(f64::NAN);
        println!("{n_cells:>8} {dx:>12.5} {dt:>12.3e} {err:>14.3e} {ratio:>8.2}");
        previous = Some(err);
    }
    println!("(halving dx with dt ~ dx^2 should quarter the error: ratio ~ 4)");
    Ok(())
}

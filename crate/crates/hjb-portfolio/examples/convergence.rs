//! Self-convergence studies: halve dx per level and compare against the
//! finest grid by cell-average restriction. Pure diffusion converges at
//! second order; the full equation is limited to first order by the upwind
//! advective flux.

use std::path::Path;

use hjb_portfolio::alpha::DirectAlpha;
use hjb_portfolio::pde::{convergence_study, Boundary, ConvergenceStudy, SolverConfig};
use hjb_portfolio::{AssetStats, DecisionSet, Grid1D};

fn print_study(label: &str, study: &ConvergenceStudy) {
    println!("{label}");
    println!("{:>8} {:>12} {:>12} {:>14}", "n_cells", "dx", "dt", "err vs finest");
    for l in &study.levels {
        println!(
            "{:>8} {:>12.5} {:>12.3e} {:>14.3e}",
            l.n_cells, l.dx, l.dt, l.error_vs_finest
        );
    }
    println!(
        "pair orders {:?}, observed order {:.2}\n",
        study
            .pair_orders
            .iter()
            .map(|o| (o * 100.0).round() / 100.0)
            .collect::<Vec<_>>(),
        study.observed_order
    );
}

fn main() -> hjb_portfolio::Result<()> {
    // heat mode: Gaussian data, dt ~ dx^2
    let synth = AssetStats::new(vec!["S".into()], vec![0.0], vec![vec![2.0]])?;
    let simplex1 = DecisionSet::simplex(1)?;
    let alpha = DirectAlpha::new(&synth, &simplex1)?;
    let base = Grid1D::new(-3.0, 3.0, 100)?;
    let cfg = SolverConfig {
        t_end: 0.1,
        dt_initial: base.dx() * base.dx(),
        advection_enabled: false,
        boundary: Boundary::Dirichlet,
        ..SolverConfig::default()
    };
    let study = convergence_study(
        &base,
        &|g: &Grid1D| {
            g.centers()
                .iter()
                .map(|&x| (-x * x / 0.2).exp() / (0.2 * std::f64::consts::PI).sqrt())
                .collect()
        },
        &cfg,
        &alpha,
        4,
    )?;
    print_study("diffusion limit (advection off, dt ~ dx^2):", &study);

    // full equation: smooth ramp between the two risk-aversion plateaus
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let stats = AssetStats::from_csv_path(&fixtures.join("two_asset.csv"), Default::default())?;
    let simplex2 = DecisionSet::simplex(2)?;
    let alpha = DirectAlpha::new(&stats, &simplex2)?;
    let base = Grid1D::new(-6.0, 6.0, 100)?;
    let cfg = SolverConfig {
        t_end: 0.5,
        dt_initial: 0.1 * base.dx(),
        boundary: Boundary::Dirichlet,
        ..SolverConfig::default()
    };
    let study = convergence_study(
        &base,
        &|g: &Grid1D| {
            // exact cell averages of 8.5 + 0.5 tanh(x)
            (0..g.n_cells())
                .map(|i| {
                    let (a, b) = (g.edge(i), g.edge(i + 1));
                    8.5 + 0.5 * (b.cosh().ln() - a.cosh().ln()) / g.dx()
                })
                .collect()
        },
        &cfg,
        &alpha,
        4,
    )?;
    print_study("full equation (upwind advection, dt ~ dx):", &study);
    Ok(())
}

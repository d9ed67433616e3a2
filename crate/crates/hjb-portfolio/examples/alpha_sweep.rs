//! Sweep the mean-variance value function across risk aversion: alpha(phi),
//! its envelope derivative and the optimal weights, on the two-asset
//! universe and on a discrete three-point decision set.

use std::path::Path;

use hjb_portfolio::alpha::{alpha_discrete, solve_simplex_qp};
use hjb_portfolio::{AssetStats, DecisionSet};

fn main() -> hjb_portfolio::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let stats = AssetStats::from_csv_path(&fixtures.join("two_asset.csv"), Default::default())?;

    println!("universe: mu = {:?}", stats.mu());
    println!("simplex decision set");
    println!("{:>8} {:>12} {:>12} {:>8} {:>8} {:>8}", "phi", "alpha", "alpha'", "theta_1", "theta_2", "support");
    let mut phi = 0.1;
    while phi <= 100.0 {
        let e = solve_simplex_qp(&stats, phi)?;
        println!(
            "{:>8.3} {:>12.6} {:>12.6} {:>8.4} {:>8.4} {:>8}",
            phi,
            e.alpha,
            e.alpha_prime,
            e.theta[0],
            e.theta[1],
            e.active_support.len()
        );
        phi *= 2.0;
    }

    // the discrete set makes alpha piecewise affine with a kink where the
    // minimizer switches (phi* = 10/3 for the two vertices)
    let set = DecisionSet::discrete(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]])?;
    println!("\ndiscrete decision set {{e1, e2, (0.5, 0.5)}}");
    println!("{:>8} {:>12} {:>12} winner", "phi", "alpha", "alpha'");
    for phi in [0.5, 2.0, 10.0 / 3.0, 4.0, 8.0, 30.0] {
        let e = alpha_discrete(&set, &stats, phi)?;
        println!(
            "{:>8.3} {:>12.6} {:>12.6} {:?}",
            phi, e.alpha, e.alpha_prime, e.theta
        );
    }
    Ok(())
}

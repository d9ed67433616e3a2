//! Allocation versus risk aversion on the 30-asset synthetic universe: the
//! higher the risk aversion phi, the more assets are held and the lower the
//! portfolio mean return.

use std::path::Path;

use hjb_portfolio::alpha::solve_simplex_qp;
use hjb_portfolio::policy::normalized_entropy;
use hjb_portfolio::AssetStats;

fn main() -> hjb_portfolio::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let stats =
        AssetStats::from_csv_path(&fixtures.join("dax30_synthetic.csv"), Default::default())?;
    println!("synthetic 30-asset universe (not real index data)\n");
    println!(
        "{:>6} {:>14} {:>14} {:>10} {:>10}",
        "phi", "mean return", "volatility", "held >1%", "entropy"
    );
    for phi in [1.0, 4.0, 6.0, 8.0] {
        let e = solve_simplex_qp(&stats, phi)?;
        let held = e.theta.iter().filter(|&&t| t > 0.01).count();
        println!(
            "{:>6.1} {:>14.5} {:>14.5} {:>10} {:>10.4}",
            phi,
            stats.mean_return(&e.theta),
            stats.variance(&e.theta).sqrt(),
            held,
            normalized_entropy(&e.theta)
        );
    }
    println!("\ntop holdings at phi = 1 and phi = 8:");
    for phi in [1.0, 8.0] {
        let e = solve_simplex_qp(&stats, phi)?;
        let mut weighted: Vec<(usize, f64)> = e.theta.iter().cloned().enumerate().collect();
        weighted.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        print!("  phi = {phi}: ");
        for (i, w) in weighted.iter().take(5) {
            print!("{} {:.1}%  ", stats.names()[*i], 100.0 * w);
        }
        println!();
    }
    Ok(())
}

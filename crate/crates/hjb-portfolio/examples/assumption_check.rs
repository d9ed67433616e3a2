//! Numerical check of the well-posedness hypotheses: the auxiliary functions
//! p(x) = max_theta |d_x mu(x, theta)| and h(x) = -max_theta mu(x, theta)
//! must have finite L2/Linf norms on the truncated domain.

use std::path::Path;

use hjb_portfolio::market::{check_assumptions, DriftProfile};
use hjb_portfolio::{AssetStats, Grid1D};

fn main() -> hjb_portfolio::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let stats = AssetStats::from_csv_path(&fixtures.join("two_asset.csv"), Default::default())?;
    let grid = Grid1D::new(-6.0, 6.0, 240)?;

    for (label, drift) in [
        ("constant drift (x-independent)", DriftProfile::Constant),
        (
            "tanh ramp: mu(x, theta) = (1 + tanh(x)) mu^T theta",
            DriftProfile::TanhRamp {
                amplitude: 1.0,
                center: 0.0,
                width: 1.0,
            },
        ),
    ] {
        let report = check_assumptions(&stats, Some(&drift), &grid);
        println!("{label}");
        println!("  p_linf  = {:.6}", report.p_linf);
        println!("  p_l2    = {:.6}", report.p_l2);
        println!("  h_linf  = {:.6}", report.h_linf);
        println!("  h_xx_l2 = {:.6}", report.h_xx_l2);
        println!("  plausible: {}", report.plausible);
        for n in &report.notes {
            println!("  note: {n}");
        }
        println!();
    }
    println!("for the ramp, p(x) = max_i mu_i * sech^2(x), so p_linf is just");
    println!("below max_i mu_i = 0.1 (no grid node sits exactly at x = 0)");
    Ok(())
}

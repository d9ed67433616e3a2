//! Shared oracles for the integration suites. Everything here is independent
//! of the library's solution paths: dense simplex enumeration for the QP,
//! the analytic heat kernel for the diffusion limit, deterministic seeded
//! sampling for "random" checks.

#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hjb_portfolio::AssetStats;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn two_asset() -> AssetStats {
    AssetStats::from_csv_path(&fixture_path("two_asset.csv"), Default::default()).unwrap()
}

pub fn dax30() -> AssetStats {
    AssetStats::from_csv_path(&fixture_path("dax30_synthetic.csv"), Default::default()).unwrap()
}

/// Deterministic SPD 3-asset universe for oracle comparisons: modest vols so
/// the grid-search resolution bound `(phi/2) lambda_max |delta|^2` stays well
/// under the acceptance tolerance.
#[allow(clippy::needless_range_loop)]
pub fn random_three_asset(seed: u64) -> AssetStats {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let vols: Vec<f64> = (0..3).map(|_| 0.08 + 0.08 * rng.gen::<f64>()).collect();
        let mut corr = vec![vec![1.0; 3]; 3];
        for i in 0..3 {
            for j in (i + 1)..3 {
                let c = -0.2 + 0.6 * rng.gen::<f64>();
                corr[i][j] = c;
                corr[j][i] = c;
            }
        }
        let sigma: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| vols[i] * vols[j] * corr[i][j]).collect())
            .collect();
        let mu: Vec<f64> = (0..3).map(|_| 0.02 + 0.10 * rng.gen::<f64>()).collect();
        if let Ok(stats) = AssetStats::new(
            vec!["P".into(), "Q".into(), "R".into()],
            mu,
            sigma,
        ) {
            return stats;
        }
    }
}

/// Dense lattice minimum of `-mu^T theta + (phi/2) theta^T Sigma theta` over
/// the simplex; brute force, independent of the active-set path.
pub struct SimplexGrid {
    /// `(mean return, variance)` per lattice point.
    terms: Vec<(f64, f64)>,
}

impl SimplexGrid {
    pub fn new(stats: &AssetStats, step: f64) -> SimplexGrid {
        let n = stats.n_assets();
        let m = (1.0 / step).round() as usize;
        let mut terms = Vec::new();
        match n {
            2 => {
                for i in 0..=m {
                    let t1 = i as f64 * step;
                    let theta = [t1, 1.0 - t1];
                    terms.push((stats.mean_return(&theta), stats.variance(&theta)));
                }
            }
            3 => {
                for i in 0..=m {
                    let t1 = i as f64 * step;
                    for j in 0..=(m - i) {
                        let t2 = j as f64 * step;
                        let theta = [t1, t2, 1.0 - t1 - t2];
                        terms.push((stats.mean_return(&theta), stats.variance(&theta)));
                    }
                }
            }
            _ => panic!("grid oracle supports n <= 3"),
        }
        SimplexGrid { terms }
    }

    pub fn min_alpha(&self, phi: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(mean, var)| -mean + 0.5 * phi * var)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Whole-line heat kernel that solves `d_tau phi = d_x^2 phi` from the
/// Gaussian `phi(x, 0) = exp(-x^2/(4 s)) / sqrt(4 pi s)`.
pub fn heat_kernel(x: f64, tau: f64, s: f64) -> f64 {
    let w = s + tau;
    (-x * x / (4.0 * w)).exp() / (4.0 * std::f64::consts::PI * w).sqrt()
}

/// `count` log-spaced values on `[lo, hi]`, inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| lo * (hi / lo).powf(k as f64 / (count - 1) as f64))
        .collect()
}

/// `count` log-uniform draws on `[lo, hi]` from a fixed seed.
pub fn log_uniform(lo: f64, hi: f64, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (lo.ln() + (hi.ln() - lo.ln()) * rng.gen::<f64>()).exp())
        .collect()
}

/// Exact cell averages of `c0 + c1 tanh(x)` (antiderivative `ln cosh`).
pub fn tanh_cell_averages(grid: &hjb_portfolio::Grid1D, c0: f64, c1: f64) -> Vec<f64> {
    let dx = grid.dx();
    (0..grid.n_cells())
        .map(|i| {
            let a = grid.edge(i);
            let b = grid.edge(i + 1);
            c0 + c1 * (b.cosh().ln() - a.cosh().ln()) / dx
        })
        .collect()
}

//! Optimal allocation field `theta(x, tau)` reconstructed from a solved
//! `phi` field, with diversification metrics.
//!
//! Every weight vector comes from a fresh exact solve at the local `phi`
//! value, never from interpolating stored minimizers: interpolated weights
//! can leave the simplex.

use crate::alpha::{alpha_at_zero_limit, alpha_discrete, solve_simplex_qp};
use crate::error::{Error, Result};
use crate::market::{in_simplex, AssetStats, DecisionSet};

/// Default "held asset" threshold for the support-size metric, matching the
/// visual granularity of allocation pie charts.
pub const DEFAULT_SUPPORT_THRESHOLD: f64 = 0.01;

/// One `phi` profile at a fixed time level, as consumed by the policy
/// reconstruction (produced by the solver or read back from snapshot CSV).
#[derive(Debug, Clone)]
pub struct SnapshotField {
    pub tau: f64,
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
}

/// Allocation and metrics at one `(x, tau)` grid point.
#[derive(Debug, Clone)]
pub struct PolicyPoint {
    pub tau: f64,
    pub x: f64,
    pub phi: f64,
    pub theta: Vec<f64>,
    /// Number of weights above the threshold.
    pub support: usize,
    /// Normalized entropy `-sum theta ln theta / ln n`, in [0, 1];
    /// zero for a single-asset universe.
    pub entropy: f64,
    /// Set when `phi <= 0` forced the zero-limit policy.
    pub lp_limit_fallback: bool,
}

#[derive(Debug, Clone)]
pub struct PolicyField {
    pub n_assets: usize,
    pub support_threshold: f64,
    pub points: Vec<PolicyPoint>,
    /// Count of grid points where `phi <= 0` was substituted.
    pub nonpositive_phi_points: usize,
}

/// Pointwise exact policy over all snapshot fields.
///
/// `phi <= 0` cells are outside the transform's admissible range; they get
/// the zero-limit policy and a warning flag instead of aborting the run.
pub fn reconstruct_policy(
    fields: &[SnapshotField],
    stats: &AssetStats,
    set: &DecisionSet,
    support_threshold: f64,
) -> Result<PolicyField> {
    if set.dim() != stats.n_assets() {
        return Err(Error::Validation(format!(
            "decision set dimension {} does not match {} assets",
            set.dim(),
            stats.n_assets()
        )));
    }
    if !support_threshold.is_finite() || !(0.0..1.0).contains(&support_threshold) {
        return Err(Error::Validation(format!(
            "support threshold must lie in [0, 1), got {support_threshold}"
        )));
    }
    let n = stats.n_assets();
    let mut points = Vec::new();
    let mut warnings = 0usize;
    for field in fields {
        if field.x.len() != field.phi.len() {
            return Err(Error::Validation(format!(
                "snapshot at tau = {} has {} x values and {} phi values",
                field.tau,
                field.x.len(),
                field.phi.len()
            )));
        }
        for (&x, &phi) in field.x.iter().zip(&field.phi) {
            let (theta, fallback) = if phi > 0.0 {
                let eval = match set {
                    DecisionSet::Simplex { .. } => solve_simplex_qp(stats, phi)?,
                    DecisionSet::Discrete { .. } => alpha_discrete(set, stats, phi)?,
                };
                (eval.theta, false)
            } else {
                warnings += 1;
                (zero_limit_theta(stats, set), true)
            };
            debug_assert!(in_simplex(&theta));
            let support = theta.iter().filter(|&&t| t > support_threshold).count();
            points.push(PolicyPoint {
                tau: field.tau,
                x,
                phi,
                entropy: normalized_entropy(&theta),
                support,
                theta,
                lp_limit_fallback: fallback,
            });
        }
    }
    Ok(PolicyField {
        n_assets: n,
        support_threshold,
        points,
        nonpositive_phi_points: warnings,
    })
}

fn zero_limit_theta(stats: &AssetStats, set: &DecisionSet) -> Vec<f64> {
    match set {
        DecisionSet::Simplex { .. } => alpha_at_zero_limit(stats).theta,
        DecisionSet::Discrete { .. } => alpha_discrete(set, stats, 0.0)
            .expect("phi = 0 is admissible for discrete sets")
            .theta,
    }
}

/// `-sum theta ln theta / ln n`, with `0 ln 0 = 0`; zero when `n = 1`.
pub fn normalized_entropy(theta: &[f64]) -> f64 {
    let n = theta.len();
    if n <= 1 {
        return 0.0;
    }
    let h: f64 = theta
        .iter()
        .filter(|&&t| t > 0.0)
        .map(|&t| -t * t.ln())
        .sum();
    h / (n as f64).ln()
}

/// Per-time summary of the diversification metrics across x.
#[derive(Debug, Clone, Copy)]
pub struct DiversificationRow {
    pub tau: f64,
    pub min_entropy: f64,
    pub mean_entropy: f64,
    pub max_entropy: f64,
    pub min_support: usize,
    pub mean_support: f64,
    pub max_support: usize,
}

pub fn diversification_report(field: &PolicyField) -> Vec<DiversificationRow> {
    let mut rows: Vec<DiversificationRow> = Vec::new();
    let mut taus: Vec<f64> = Vec::new();
    for p in &field.points {
        if !taus.contains(&p.tau) {
            taus.push(p.tau);
        }
    }
    for tau in taus {
        let group: Vec<&PolicyPoint> = field.points.iter().filter(|p| p.tau == tau).collect();
        let m = group.len() as f64;
        rows.push(DiversificationRow {
            tau,
            min_entropy: group.iter().map(|p| p.entropy).fold(f64::INFINITY, f64::min),
            mean_entropy: group.iter().map(|p| p.entropy).sum::<f64>() / m,
            max_entropy: group.iter().map(|p| p.entropy).fold(f64::NEG_INFINITY, f64::max),
            min_support: group.iter().map(|p| p.support).min().unwrap_or(0),
            mean_support: group.iter().map(|p| p.support as f64).sum::<f64>() / m,
            max_support: group.iter().map(|p| p.support).max().unwrap_or(0),
        });
    }
    rows
}

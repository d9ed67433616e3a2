//! Parametric value function of the static mean-variance problem:
//!
//! ```text
//! alpha(phi) = min over theta in the decision set of
//!              -mu^T theta + (phi/2) theta^T Sigma theta
//! ```
//!
//! `phi > 0` is the risk-aversion parameter. Over the simplex the minimizer
//! is computed exactly by a primal active-set method on the KKT system; over
//! a finite decision set by exhaustive minimum of the affine-in-phi values.
//! `alpha` is concave and nondecreasing in `phi`, and the envelope theorem
//! gives `alpha'(phi) = (1/2) theta^T Sigma theta` at the minimizer.
//!
//! All tie-breaking (entering index, leaving index, discrete minima) picks
//! the lowest index so results are identical across platforms.

use crate::error::{Error, Result};
use crate::market::{cholesky, AssetStats, DecisionSet, SIMPLEX_TOL};

/// Dual feasibility slack for the active-set termination test.
pub const DUAL_TOL: f64 = 1e-10;

/// One evaluation of the parametric problem.
#[derive(Debug, Clone)]
pub struct AlphaEval {
    pub phi: f64,
    /// Value of the minimum.
    pub alpha: f64,
    /// Envelope derivative `(1/2) theta^T Sigma theta` (a variance; >= 0).
    pub alpha_prime: f64,
    /// Minimizer; lies in the simplex.
    pub theta: Vec<f64>,
    /// Indices with strictly positive weight, ascending.
    pub active_support: Vec<usize>,
}

impl AlphaEval {
    fn from_theta(stats: &AssetStats, phi: f64, theta: Vec<f64>) -> AlphaEval {
        let var = stats.variance(&theta);
        let alpha = -stats.mean_return(&theta) + 0.5 * phi * var;
        let active_support = theta
            .iter()
            .enumerate()
            .filter(|(_, &t)| t > 0.0)
            .map(|(i, _)| i)
            .collect();
        AlphaEval {
            phi,
            alpha,
            alpha_prime: 0.5 * var,
            theta,
            active_support,
        }
    }
}

/// Exact minimizer over the simplex for `phi > 0` by primal active set.
///
/// For the current support S the equality-constrained KKT system
/// `phi Sigma_SS theta_S + lambda 1 = mu_S`, `1^T theta_S = 1` is solved by
/// Cholesky; a negative component drops the most negative index, and at a
/// feasible point the multipliers `xi_i = -mu_i + phi (Sigma theta)_i + lambda`
/// of the inactive bounds are checked against `-DUAL_TOL`, adding the most
/// violating index. Supports never repeat (the objective strictly decreases
/// for SPD Sigma), so the iteration terminates.
pub fn solve_simplex_qp(stats: &AssetStats, phi: f64) -> Result<AlphaEval> {
    if !phi.is_finite() || phi <= 0.0 {
        return Err(Error::Validation(format!(
            "simplex QP requires finite phi > 0, got {phi}"
        )));
    }
    let n = stats.n_assets();
    let mu = stats.mu();
    let max_changes = 1usize << n.min(17);
    let mut support: Vec<usize> = (0..n).collect();

    for _ in 0..max_changes {
        let (theta_s, lambda) = kkt_solve(stats, phi, &support)?;

        // primal feasibility on the support
        let mut drop_at: Option<usize> = None;
        let mut most_negative = 0.0;
        for (k, &t) in theta_s.iter().enumerate() {
            if t < most_negative {
                most_negative = t;
                drop_at = Some(k);
            }
        }
        if let Some(k) = drop_at {
            support.remove(k);
            if support.is_empty() {
                // cannot happen for SPD data: the last vertex is feasible
                return Err(Error::QpNonConvergence { changes: n, phi });
            }
            continue;
        }

        let mut theta = vec![0.0; n];
        for (k, &i) in support.iter().enumerate() {
            theta[i] = theta_s[k];
        }

        // dual feasibility off the support
        let sigma_theta = stats.sigma_times(&theta);
        let mut enter: Option<usize> = None;
        let mut worst = -DUAL_TOL;
        for i in 0..n {
            if support.contains(&i) {
                continue;
            }
            let xi = -mu[i] + phi * sigma_theta[i] + lambda;
            if xi < worst {
                worst = xi;
                enter = Some(i);
            }
        }
        match enter {
            None => return Ok(AlphaEval::from_theta(stats, phi, theta)),
            Some(i) => {
                let pos = support.partition_point(|&j| j < i);
                support.insert(pos, i);
            }
        }
    }
    Err(Error::QpNonConvergence {
        changes: max_changes,
        phi,
    })
}

/// Solve the equality-constrained KKT system on a support via block
/// elimination: with `A = phi Sigma_SS`, `theta_S = A^{-1}(mu_S - lambda 1)`
/// and `lambda = (1^T A^{-1} mu_S - 1) / (1^T A^{-1} 1)`.
fn kkt_solve(stats: &AssetStats, phi: f64, support: &[usize]) -> Result<(Vec<f64>, f64)> {
    let m = support.len();
    let sigma = stats.sigma();
    let mu = stats.mu();
    let mut a = vec![vec![0.0; m]; m];
    for (r, &i) in support.iter().enumerate() {
        for (c, &j) in support.iter().enumerate() {
            a[r][c] = phi * sigma[i][j];
        }
    }
    let l = cholesky(&a).ok_or(Error::QpNonConvergence {
        changes: 0,
        phi,
    })?;
    let mu_s: Vec<f64> = support.iter().map(|&i| mu[i]).collect();
    let ones = vec![1.0; m];
    let y = chol_solve(&l, &mu_s);
    let z = chol_solve(&l, &ones);
    let zsum: f64 = z.iter().sum();
    let ysum: f64 = y.iter().sum();
    let lambda = (ysum - 1.0) / zsum;
    let theta_s: Vec<f64> = y.iter().zip(&z).map(|(yi, zi)| yi - lambda * zi).collect();
    Ok((theta_s, lambda))
}

fn chol_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}

/// The `phi -> 0+` limit: a linear program over the simplex attained at the
/// lowest-index vertex maximizing the mean return. Kept separate from the QP
/// path because the minimizer is non-unique at `phi = 0` when `mu` has ties.
pub fn alpha_at_zero_limit(stats: &AssetStats) -> AlphaEval {
    let mu = stats.mu();
    let mut best = 0usize;
    for (i, &m) in mu.iter().enumerate() {
        if m > mu[best] {
            best = i;
        }
    }
    let mut theta = vec![0.0; stats.n_assets()];
    theta[best] = 1.0;
    AlphaEval {
        phi: 0.0,
        alpha: -mu[best],
        alpha_prime: 0.5 * stats.variance(&theta),
        theta,
        active_support: vec![best],
    }
}

/// Exhaustive minimum over a finite decision set of the affine values
/// `alpha^j(phi) = -mu^T theta_j + (phi/2) theta_j^T Sigma theta_j`,
/// ties broken by lowest list index. Valid for `phi >= 0`.
pub fn alpha_discrete(set: &DecisionSet, stats: &AssetStats, phi: f64) -> Result<AlphaEval> {
    let points = match set {
        DecisionSet::Discrete { points } => points,
        DecisionSet::Simplex { .. } => {
            return Err(Error::Validation(
                "alpha_discrete requires a discrete decision set".into(),
            ))
        }
    };
    if !phi.is_finite() || phi < 0.0 {
        return Err(Error::Validation(format!(
            "alpha_discrete requires finite phi >= 0, got {phi}"
        )));
    }
    if points[0].len() != stats.n_assets() {
        return Err(Error::Validation(format!(
            "decision set dimension {} does not match {} assets",
            points[0].len(),
            stats.n_assets()
        )));
    }
    let mut best = 0usize;
    let mut best_val = f64::INFINITY;
    for (j, p) in points.iter().enumerate() {
        let val = -stats.mean_return(p) + 0.5 * phi * stats.variance(p);
        if val < best_val {
            best_val = val;
            best = j;
        }
    }
    let theta = points[best].clone();
    let var = stats.variance(&theta);
    let active_support = theta
        .iter()
        .enumerate()
        .filter(|(_, &t)| t > 0.0)
        .map(|(i, _)| i)
        .collect();
    Ok(AlphaEval {
        phi,
        alpha: best_val,
        alpha_prime: 0.5 * var,
        theta,
        active_support,
    })
}

/// Envelope derivative `(1/2) theta^T Sigma theta` recomputed from the
/// minimizer. At a discrete-set breakpoint this is the slope of the
/// tie-broken minimizer's affine piece.
pub fn envelope_derivative(eval: &AlphaEval, stats: &AssetStats) -> f64 {
    0.5 * stats.variance(&eval.theta)
}

/// Evaluator interface used by the PDE solver: `alpha` and its
/// phi-derivative. Implementations must be pure functions of `phi`.
pub trait AlphaFn {
    fn alpha(&self, phi: f64) -> f64;
    fn alpha_prime(&self, phi: f64) -> f64;
}

/// Exact evaluator backed by a fresh solve per call.
///
/// For `phi <= 0` (outside the QP's domain; can only be reached when the
/// transported field leaves the positive range) the value is extended
/// linearly through the zero limit with the vertex slope.
pub struct DirectAlpha<'a> {
    stats: &'a AssetStats,
    set: &'a DecisionSet,
}

impl<'a> DirectAlpha<'a> {
    pub fn new(stats: &'a AssetStats, set: &'a DecisionSet) -> Result<Self> {
        if set.dim() != stats.n_assets() {
            return Err(Error::Validation(format!(
                "decision set dimension {} does not match {} assets",
                set.dim(),
                stats.n_assets()
            )));
        }
        Ok(DirectAlpha { stats, set })
    }

    fn eval(&self, phi: f64) -> (f64, f64) {
        if phi > 0.0 {
            let e = match self.set {
                DecisionSet::Simplex { .. } => solve_simplex_qp(self.stats, phi),
                DecisionSet::Discrete { .. } => alpha_discrete(self.set, self.stats, phi),
            }
            .expect("validated inputs");
            (e.alpha, e.alpha_prime)
        } else {
            let e = match self.set {
                DecisionSet::Simplex { .. } => alpha_at_zero_limit(self.stats),
                DecisionSet::Discrete { .. } => {
                    alpha_discrete(self.set, self.stats, 0.0).expect("validated inputs")
                }
            };
            (e.alpha + phi * e.alpha_prime, e.alpha_prime)
        }
    }
}

impl AlphaFn for DirectAlpha<'_> {
    fn alpha(&self, phi: f64) -> f64 {
        self.eval(phi).0
    }

    fn alpha_prime(&self, phi: f64) -> f64 {
        self.eval(phi).1
    }
}

/// Interpolation rule of a precomputed table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpRule {
    /// Cubic Hermite through the exact knot values with the exact envelope
    /// derivatives as slopes, limited (Fritsch-Carlson) so the interpolant
    /// stays monotone. Used for simplex sets.
    MonotoneCubic,
    /// Exact minimum of the stored affine pieces; reproduces the discrete
    /// alpha everywhere inside the knot range, including breakpoints.
    PiecewiseAffine,
}

impl InterpRule {
    pub fn name(self) -> &'static str {
        match self {
            InterpRule::MonotoneCubic => "monotone-cubic-hermite",
            InterpRule::PiecewiseAffine => "piecewise-affine",
        }
    }
}

/// Table evaluation result. `clamped` flags queries outside the knot range,
/// which extrapolate linearly with the boundary slope.
#[derive(Debug, Clone, Copy)]
pub struct TableValue {
    pub alpha: f64,
    pub alpha_prime: f64,
    pub clamped: bool,
}

/// Precomputed `alpha` on a geometric knot grid. Geometric spacing because
/// `alpha'` varies fastest at small `phi`.
#[derive(Debug, Clone)]
pub struct AlphaTable {
    knots: Vec<f64>,
    evals: Vec<AlphaEval>,
    /// Hermite slopes after the monotonicity limiter (simplex tables).
    slopes: Vec<f64>,
    /// `(intercept, slope)` per decision vector (discrete tables).
    pieces: Vec<(f64, f64)>,
    rule: InterpRule,
}

/// Tabulate `alpha`, `alpha'` and the minimizer on `knots` geometric knots
/// spanning `[phi_min, phi_max]`.
pub fn build_alpha_table(
    stats: &AssetStats,
    set: &DecisionSet,
    phi_min: f64,
    phi_max: f64,
    knots: usize,
) -> Result<AlphaTable> {
    if !phi_min.is_finite() || !phi_max.is_finite() || phi_min <= 0.0 || phi_max <= phi_min {
        return Err(Error::Validation(format!(
            "alpha table requires 0 < phi_min < phi_max, got [{phi_min}, {phi_max}]"
        )));
    }
    if knots < 2 {
        return Err(Error::Validation("alpha table requires at least 2 knots".into()));
    }
    if set.dim() != stats.n_assets() {
        return Err(Error::Validation(format!(
            "decision set dimension {} does not match {} assets",
            set.dim(),
            stats.n_assets()
        )));
    }
    let ratio = phi_max / phi_min;
    let kn: Vec<f64> = (0..knots)
        .map(|k| phi_min * ratio.powf(k as f64 / (knots - 1) as f64))
        .collect();

    let (evals, rule, pieces): (Vec<AlphaEval>, InterpRule, Vec<(f64, f64)>) = match set {
        DecisionSet::Simplex { .. } => {
            let evals = kn
                .iter()
                .map(|&p| solve_simplex_qp(stats, p))
                .collect::<Result<Vec<_>>>()?;
            (evals, InterpRule::MonotoneCubic, Vec::new())
        }
        DecisionSet::Discrete { points } => {
            let evals = kn
                .iter()
                .map(|&p| alpha_discrete(set, stats, p))
                .collect::<Result<Vec<_>>>()?;
            let pieces = points
                .iter()
                .map(|p| (-stats.mean_return(p), 0.5 * stats.variance(p)))
                .collect();
            (evals, InterpRule::PiecewiseAffine, pieces)
        }
    };

    // structural checks: knots strictly increasing, alpha nondecreasing and
    // discretely concave along knots
    let scale = evals
        .iter()
        .map(|e| e.alpha.abs())
        .fold(1e-30, f64::max);
    for k in 1..knots {
        if kn[k] <= kn[k - 1] {
            return Err(Error::Validation("alpha table knots are not increasing".into()));
        }
        if evals[k].alpha < evals[k - 1].alpha - 1e-10 * scale {
            return Err(Error::Validation(format!(
                "alpha not nondecreasing along knots near phi = {}",
                kn[k]
            )));
        }
    }
    for k in 1..knots - 1 {
        let left = (evals[k].alpha - evals[k - 1].alpha) / (kn[k] - kn[k - 1]);
        let right = (evals[k + 1].alpha - evals[k].alpha) / (kn[k + 1] - kn[k]);
        if right > left + 1e-8 * (1.0 + left.abs()) {
            return Err(Error::Validation(format!(
                "alpha not concave along knots near phi = {}",
                kn[k]
            )));
        }
    }

    let slopes = if rule == InterpRule::MonotoneCubic {
        limited_slopes(&kn, &evals)
    } else {
        Vec::new()
    };

    Ok(AlphaTable {
        knots: kn,
        evals,
        slopes,
        pieces,
        rule,
    })
}

/// Exact envelope derivatives, capped by the Fritsch-Carlson bound
/// `m_i <= 3 min(secant_left, secant_right)` so the Hermite interpolant of
/// monotone data cannot overshoot. The cap is inert for the shipped
/// universes; it guards extreme curvature between knots.
fn limited_slopes(knots: &[f64], evals: &[AlphaEval]) -> Vec<f64> {
    let n = knots.len();
    let secants: Vec<f64> = (0..n - 1)
        .map(|k| (evals[k + 1].alpha - evals[k].alpha) / (knots[k + 1] - knots[k]))
        .collect();
    (0..n)
        .map(|k| {
            let m = evals[k].alpha_prime.max(0.0);
            let left = if k > 0 { secants[k - 1] } else { secants[0] };
            let right = if k < n - 1 { secants[k] } else { secants[n - 2] };
            if left >= 0.0 && right >= 0.0 {
                m.min(3.0 * left.min(right))
            } else {
                m
            }
        })
        .collect()
}

impl AlphaTable {
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn evals(&self) -> &[AlphaEval] {
        &self.evals
    }

    pub fn interpolation_rule(&self) -> InterpRule {
        self.rule
    }

    pub fn phi_min(&self) -> f64 {
        self.knots[0]
    }

    pub fn phi_max(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    /// Interpolated `(alpha, alpha')` at `phi`. Outside the knot range the
    /// value extends linearly with the boundary slope and `clamped` is set.
    pub fn value(&self, phi: f64) -> TableValue {
        match self.rule {
            InterpRule::PiecewiseAffine => self.value_affine(phi),
            InterpRule::MonotoneCubic => self.value_hermite(phi),
        }
    }

    fn value_affine(&self, phi: f64) -> TableValue {
        let clamped = phi < self.phi_min() || phi > self.phi_max();
        let at = phi.clamp(self.phi_min(), self.phi_max());
        let mut alpha = f64::INFINITY;
        let mut slope = 0.0;
        for &(a, b) in &self.pieces {
            let v = a + b * at;
            if v < alpha {
                alpha = v;
                slope = b;
            }
        }
        TableValue {
            alpha: alpha + slope * (phi - at),
            alpha_prime: slope,
            clamped,
        }
    }

    fn value_hermite(&self, phi: f64) -> TableValue {
        let kn = &self.knots;
        let n = kn.len();
        if phi <= kn[0] {
            return TableValue {
                alpha: self.evals[0].alpha + self.slopes[0] * (phi - kn[0]),
                alpha_prime: self.slopes[0],
                clamped: phi < kn[0],
            };
        }
        if phi >= kn[n - 1] {
            return TableValue {
                alpha: self.evals[n - 1].alpha + self.slopes[n - 1] * (phi - kn[n - 1]),
                alpha_prime: self.slopes[n - 1],
                clamped: phi > kn[n - 1],
            };
        }
        let i = kn.partition_point(|&k| k <= phi) - 1;
        let i = i.min(n - 2);
        let h = kn[i + 1] - kn[i];
        let t = (phi - kn[i]) / h;
        let (a0, a1) = (self.evals[i].alpha, self.evals[i + 1].alpha);
        let (m0, m1) = (self.slopes[i], self.slopes[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let alpha = (2.0 * t3 - 3.0 * t2 + 1.0) * a0
            + (t3 - 2.0 * t2 + t) * h * m0
            + (-2.0 * t3 + 3.0 * t2) * a1
            + (t3 - t2) * h * m1;
        let deriv = (6.0 * t2 - 6.0 * t) * (a0 - a1) / h
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (3.0 * t2 - 2.0 * t) * m1;
        TableValue {
            alpha,
            alpha_prime: deriv,
            clamped: false,
        }
    }
}

impl AlphaFn for AlphaTable {
    fn alpha(&self, phi: f64) -> f64 {
        self.value(phi).alpha
    }

    fn alpha_prime(&self, phi: f64) -> f64 {
        self.value(phi).alpha_prime
    }
}

/// Simplex-membership check reused by tests and the policy module.
pub fn assert_eval_consistent(eval: &AlphaEval, stats: &AssetStats) -> Result<()> {
    if !crate::market::in_simplex(&eval.theta) {
        return Err(Error::Validation(format!(
            "minimizer leaves the simplex at phi = {}",
            eval.phi
        )));
    }
    if eval.alpha_prime < 0.0 {
        return Err(Error::Validation("alpha_prime negative".into()));
    }
    let recomputed = -stats.mean_return(&eval.theta) + 0.5 * eval.phi * stats.variance(&eval.theta);
    if (recomputed - eval.alpha).abs() > SIMPLEX_TOL {
        return Err(Error::Validation(format!(
            "alpha does not match its minimizer at phi = {}: {} vs {}",
            eval.phi, eval.alpha, recomputed
        )));
    }
    Ok(())
}

//! Market statistics: mean returns, covariance, decision sets, and the
//! hypothesis report for the well-posedness conditions of the transformed
//! equation.
//!
//! The asset CSV layout is `name,mu,sigma_1,...,sigma_n`, one row per asset,
//! decimal points, no thousands separators. The covariance is symmetrized as
//! `(S + S^T)/2` on ingest and must be strictly positive definite; positive
//! semidefinite inputs are rejected unless ridge regularization is explicitly
//! allowed.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid1D;

/// Relative ridge applied when a non-definite covariance is explicitly
/// permitted: `Sigma + eps I` with `eps = RIDGE_REL * trace(Sigma) / n`.
pub const RIDGE_REL: f64 = 1e-8;

/// Simplex membership slack for weight vectors.
pub const SIMPLEX_TOL: f64 = 1e-10;

/// Static market model: asset names, mean returns and covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetStats {
    names: Vec<String>,
    mu: Vec<f64>,
    sigma: Vec<Vec<f64>>,
    ridge: Option<f64>,
}

/// Loader switches. Default rejects non-SPD covariance outright.
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Permit `Sigma + eps I` when the covariance is positive semidefinite
    /// but not definite. The applied epsilon is recorded on the result and
    /// callers are expected to warn loudly.
    pub allow_ridge: bool,
}

impl AssetStats {
    pub fn new(names: Vec<String>, mu: Vec<f64>, sigma: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_options(names, mu, sigma, LoadOptions::default())
    }

    pub fn with_options(
        names: Vec<String>,
        mu: Vec<f64>,
        mut sigma: Vec<Vec<f64>>,
        opts: LoadOptions,
    ) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return Err(Error::Validation("at least one asset required".into()));
        }
        if mu.len() != n {
            return Err(Error::Validation(format!(
                "mu has {} entries for {} assets",
                mu.len(),
                n
            )));
        }
        if sigma.len() != n || sigma.iter().any(|r| r.len() != n) {
            return Err(Error::Validation(format!(
                "covariance must be {n}x{n}"
            )));
        }
        if mu.iter().any(|v| !v.is_finite())
            || sigma.iter().flatten().any(|v| !v.is_finite())
        {
            return Err(Error::Validation(
                "mu and sigma entries must be finite".into(),
            ));
        }
        symmetrize(&mut sigma);
        let mut ridge = None;
        if cholesky(&sigma).is_none() {
            if !opts.allow_ridge {
                return Err(Error::Validation(
                    "covariance is not strictly positive definite \
                     (enable ridge regularization to override)"
                        .into(),
                ));
            }
            let trace: f64 = (0..n).map(|i| sigma[i][i]).sum();
            let eps = RIDGE_REL * trace / n as f64;
            for (i, row) in sigma.iter_mut().enumerate() {
                row[i] += eps;
            }
            if cholesky(&sigma).is_none() {
                return Err(Error::Validation(
                    "covariance remains non-definite after ridge regularization".into(),
                ));
            }
            ridge = Some(eps);
        }
        Ok(AssetStats {
            names,
            mu,
            sigma,
            ridge,
        })
    }

    pub fn n_assets(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &[Vec<f64>] {
        &self.sigma
    }

    /// Ridge epsilon applied on load, if any.
    pub fn ridge_applied(&self) -> Option<f64> {
        self.ridge
    }

    /// `(Sigma theta)_i` for a full-length weight vector.
    pub fn sigma_times(&self, theta: &[f64]) -> Vec<f64> {
        self.sigma
            .iter()
            .map(|row| row.iter().zip(theta).map(|(a, t)| a * t).sum())
            .collect()
    }

    /// Quadratic form `theta^T Sigma theta`.
    pub fn variance(&self, theta: &[f64]) -> f64 {
        self.sigma_times(theta)
            .iter()
            .zip(theta)
            .map(|(s, t)| s * t)
            .sum()
    }

    /// Portfolio mean return `mu^T theta`.
    pub fn mean_return(&self, theta: &[f64]) -> f64 {
        self.mu.iter().zip(theta).map(|(m, t)| m * t).sum()
    }

    pub fn from_csv_path(path: &Path, opts: LoadOptions) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_csv(BufReader::new(file), opts)
    }

    /// Parse the documented CSV schema. Errors carry 1-based line numbers.
    pub fn from_csv<R: Read>(reader: R, opts: LoadOptions) -> Result<Self> {
        let reader = BufReader::new(reader);
        let mut lines = reader.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty file".into(),
        })?;
        let header = header.map_err(|e| Error::io("<csv>", e))?;
        let cols: Vec<&str> = header.trim_end().split(',').collect();
        if cols.len() < 3 || cols[0] != "name" || cols[1] != "mu" {
            return Err(Error::Parse {
                line: 1,
                msg: format!(
                    "expected header 'name,mu,sigma_1,...,sigma_n', got '{}'",
                    header.trim_end()
                ),
            });
        }
        let n = cols.len() - 2;
        for (j, col) in cols[2..].iter().enumerate() {
            let expect = format!("sigma_{}", j + 1);
            if *col != expect {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("expected column '{}', got '{}'", expect, col),
                });
            }
        }
        let mut names = Vec::new();
        let mut mu = Vec::new();
        let mut sigma = Vec::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::io("<csv>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim_end().split(',').collect();
            if fields.len() != n + 2 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected {} fields, found {}", n + 2, fields.len()),
                });
            }
            names.push(fields[0].to_string());
            mu.push(parse_field(fields[1], "mu", lineno)?);
            let mut row = Vec::with_capacity(n);
            for (j, f) in fields[2..].iter().enumerate() {
                row.push(parse_field(f, &format!("sigma_{}", j + 1), lineno)?);
            }
            sigma.push(row);
        }
        if names.len() != n {
            return Err(Error::Parse {
                line: names.len() + 1,
                msg: format!(
                    "header declares {} assets but file has {} rows",
                    n,
                    names.len()
                ),
            });
        }
        Self::with_options(names, mu, sigma, opts)
    }

    /// Emit the same CSV schema with shortest round-trip float formatting,
    /// so load -> serialize -> load is the identity.
    pub fn to_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.n_assets();
        let mut header = String::from("name,mu");
        for j in 1..=n {
            let _ = write!(header, ",sigma_{j}");
        }
        writeln!(w, "{header}").map_err(|e| Error::io("<csv>", e))?;
        for i in 0..n {
            let mut row = format!("{},{}", self.names[i], self.mu[i]);
            for v in &self.sigma[i] {
                let _ = write!(row, ",{v}");
            }
            writeln!(w, "{row}").map_err(|e| Error::io("<csv>", e))?;
        }
        Ok(())
    }
}

fn parse_field(s: &str, what: &str, line: usize) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse {} value '{}'", what, s.trim()),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("{} value '{}' is not finite", what, s.trim()),
        });
    }
    Ok(v)
}

#[allow(clippy::needless_range_loop)]
fn symmetrize(sigma: &mut [Vec<f64>]) {
    let n = sigma.len();
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (sigma[i][j] + sigma[j][i]);
            sigma[i][j] = m;
            sigma[j][i] = m;
        }
    }
}

/// Lower Cholesky factor, or `None` when a pivot is not strictly positive.
///
/// Pivots are compared against `n * eps * max|a_ii|` rather than zero:
/// exactly singular matrices otherwise slip through on roundoff.
#[allow(clippy::needless_range_loop)]
pub(crate) fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let scale = (0..n).map(|i| a[i][i].abs()).fold(0.0, f64::max);
    let tol = n as f64 * f64::EPSILON * scale;
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= tol {
                    return None;
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

/// Admissible portfolio weights: the full simplex or a finite subset of it.
#[derive(Debug, Clone, PartialEq)]
pub enum DecisionSet {
    Simplex { dim: usize },
    Discrete { points: Vec<Vec<f64>> },
}

impl DecisionSet {
    pub fn simplex(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("simplex dimension must be >= 1".into()));
        }
        Ok(DecisionSet::Simplex { dim })
    }

    /// Finite decision set. Every point must lie in the simplex; exact
    /// duplicates (sup-distance <= 1e-12) are dropped, keeping the first.
    pub fn discrete(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Validation("discrete decision set is empty".into()));
        }
        let dim = points[0].len();
        let mut kept: Vec<Vec<f64>> = Vec::new();
        for (j, p) in points.into_iter().enumerate() {
            if p.len() != dim {
                return Err(Error::Validation(format!(
                    "decision vector {j} has dimension {} (expected {dim})",
                    p.len()
                )));
            }
            if !in_simplex(&p) {
                return Err(Error::Validation(format!(
                    "decision vector {j} is not in the simplex"
                )));
            }
            if !kept.iter().any(|q| {
                q.iter()
                    .zip(&p)
                    .all(|(a, b)| (a - b).abs() <= 1e-12)
            }) {
                kept.push(p);
            }
        }
        Ok(DecisionSet::Discrete { points: kept })
    }

    pub fn dim(&self) -> usize {
        match self {
            DecisionSet::Simplex { dim } => *dim,
            DecisionSet::Discrete { points } => points[0].len(),
        }
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        match self {
            DecisionSet::Simplex { dim } => theta.len() == *dim && in_simplex(theta),
            DecisionSet::Discrete { points } => points.iter().any(|p| {
                p.len() == theta.len()
                    && p.iter().zip(theta).all(|(a, b)| (a - b).abs() <= SIMPLEX_TOL)
            }),
        }
    }
}

/// Componentwise nonnegative and summing to one within `SIMPLEX_TOL`.
pub fn in_simplex(theta: &[f64]) -> bool {
    theta.iter().all(|&t| t >= -SIMPLEX_TOL)
        && (theta.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOL
}

/// Multiplicative spatial profile for the drift: `mu(x, theta) = w(x) mu^T theta`.
///
/// Closed set of named profiles rather than arbitrary user code, so runs stay
/// reproducible from the config file alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriftProfile {
    Constant,
    /// `w(x) = 1 + amplitude * tanh((x - center) / width)`.
    TanhRamp {
        amplitude: f64,
        center: f64,
        width: f64,
    },
}

impl DriftProfile {
    pub fn weight(&self, x: f64) -> f64 {
        match self {
            DriftProfile::Constant => 1.0,
            DriftProfile::TanhRamp {
                amplitude,
                center,
                width,
            } => 1.0 + amplitude * ((x - center) / width).tanh(),
        }
    }

    /// d w / d x; exactly zero for the constant profile.
    pub fn weight_deriv(&self, x: f64) -> f64 {
        match self {
            DriftProfile::Constant => 0.0,
            DriftProfile::TanhRamp {
                amplitude,
                center,
                width,
            } => {
                let c = ((x - center) / width).cosh();
                amplitude / (width * c * c)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DriftProfile::Constant => Ok(()),
            DriftProfile::TanhRamp {
                amplitude,
                center,
                width,
            } => {
                if !amplitude.is_finite() || !center.is_finite() || !width.is_finite() {
                    return Err(Error::Validation("tanh ramp parameters must be finite".into()));
                }
                if *width <= 0.0 {
                    return Err(Error::Validation("tanh ramp width must be positive".into()));
                }
                Ok(())
            }
        }
    }
}

/// Numerical check of the auxiliary-function hypotheses on the truncated
/// domain: `p(x) = max_theta |d_x mu(x,theta)|` and
/// `h(x) = -max_theta mu(x,theta)`, maximized over the full simplex.
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    pub p_values: Vec<f64>,
    pub h_values: Vec<f64>,
    /// sup-norm of p on the grid nodes.
    pub p_linf: f64,
    /// discrete L2 norm `sqrt(sum p_i^2 dx)`.
    pub p_l2: f64,
    pub h_linf: f64,
    /// central-difference estimate of `||d_x^2 h||_{L2}` on interior nodes.
    pub h_xx_l2: f64,
    /// All quantities finite; the hypotheses are numerically plausible.
    pub plausible: bool,
    pub notes: Vec<String>,
}

pub fn check_assumptions(
    stats: &AssetStats,
    drift: Option<&DriftProfile>,
    grid: &Grid1D,
) -> AssumptionReport {
    let profile = drift.copied().unwrap_or(DriftProfile::Constant);
    let mu_max = stats.mu.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mu_min = stats.mu.iter().cloned().fold(f64::INFINITY, f64::min);
    // max over the simplex of |mu^T theta| is attained at a vertex
    let mu_abs_max = mu_max.abs().max(mu_min.abs());

    let centers = grid.centers();
    let p_values: Vec<f64> = centers
        .iter()
        .map(|&x| {
            let wd = profile.weight_deriv(x);
            if wd == 0.0 {
                0.0
            } else {
                wd.abs() * mu_abs_max
            }
        })
        .collect();
    let h_values: Vec<f64> = centers
        .iter()
        .map(|&x| {
            let w = profile.weight(x);
            if w >= 0.0 {
                -w * mu_max
            } else {
                -w * mu_min
            }
        })
        .collect();

    let dx = grid.dx();
    let p_linf = p_values.iter().cloned().fold(0.0, f64::max);
    let p_l2 = (p_values.iter().map(|p| p * p).sum::<f64>() * dx).sqrt();
    let h_linf = h_values.iter().map(|h| h.abs()).fold(0.0, f64::max);
    let mut hxx_sq = 0.0;
    for i in 1..h_values.len() - 1 {
        let d2 = (h_values[i + 1] - 2.0 * h_values[i] + h_values[i - 1]) / (dx * dx);
        hxx_sq += d2 * d2 * dx;
    }
    let h_xx_l2 = hxx_sq.sqrt();

    let mut notes = Vec::new();
    let finite = p_linf.is_finite() && p_l2.is_finite() && h_linf.is_finite() && h_xx_l2.is_finite();
    if !finite {
        notes.push("non-finite norm encountered".into());
    }
    if matches!(profile, DriftProfile::Constant) {
        notes.push("x-independent drift: p vanishes identically".into());
    }

    AssumptionReport {
        p_values,
        h_values,
        p_linf,
        p_l2,
        h_linf,
        h_xx_l2,
        plausible: finite,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const TWO_ASSET_CSV: &str = "name,mu,sigma_1,sigma_2\n\
A,0.1,0.04,0.0\n\
B,0.05,0.0,0.01\n";

    fn fixture() -> AssetStats {
        AssetStats::from_csv(TWO_ASSET_CSV.as_bytes(), LoadOptions::default()).unwrap()
    }

    #[test]
    fn loads_single_asset() {
        let csv = "name,mu,sigma_1\nX,0.1,0.04\n";
        let s = AssetStats::from_csv(csv.as_bytes(), LoadOptions::default()).unwrap();
        assert_eq!(s.n_assets(), 1);
        assert_eq!(s.mu(), &[0.1]);
        assert_eq!(s.sigma()[0][0], 0.04);
    }

    #[test]
    fn loads_fixture() {
        let s = fixture();
        assert_eq!(s.n_assets(), 2);
        assert_eq!(s.mu(), &[0.1, 0.05]);
        assert_eq!(s.sigma()[0], vec![0.04, 0.0]);
        assert_eq!(s.sigma()[1], vec![0.0, 0.01]);
        assert!(s.ridge_applied().is_none());
    }

    #[test]
    fn rejects_indefinite() {
        // determinant 0.04*0.01 - 0.1^2 < 0
        let csv = "name,mu,sigma_1,sigma_2\nA,0.1,0.04,0.1\nB,0.05,0.1,0.01\n";
        let err = AssetStats::from_csv(csv.as_bytes(), LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn rejects_singular_but_ridge_overrides() {
        // rank-1: [0.04, 0.02; 0.02, 0.01]
        let csv = "name,mu,sigma_1,sigma_2\nA,0.1,0.04,0.02\nB,0.05,0.02,0.01\n";
        assert!(AssetStats::from_csv(csv.as_bytes(), LoadOptions::default()).is_err());
        let s = AssetStats::from_csv(csv.as_bytes(), LoadOptions { allow_ridge: true }).unwrap();
        let eps = s.ridge_applied().unwrap();
        assert!((eps - RIDGE_REL * 0.05 / 2.0).abs() < 1e-24);
        assert!(cholesky(s.sigma()).is_some());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let csv = "name,mu,sigma_1,sigma_2\nA,0.1,0.04,0.0\nB,zzz,0.0,0.01\n";
        match AssetStats::from_csv(csv.as_bytes(), LoadOptions::default()) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("zzz"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        let csv = "name,mu,sigma_1,sigma_2\nA,0.1,0.04\n";
        match AssetStats::from_csv(csv.as_bytes(), LoadOptions::default()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_nan_entries() {
        let csv = "name,mu,sigma_1,sigma_2\nA,0.1,nan,0.0\nB,0.05,0.0,0.01\n";
        assert!(AssetStats::from_csv(csv.as_bytes(), LoadOptions::default()).is_err());
    }

    #[test]
    fn csv_round_trip_is_identity() {
        let s = fixture();
        let mut buf = Vec::new();
        s.to_csv(&mut buf).unwrap();
        let s2 = AssetStats::from_csv(buf.as_slice(), LoadOptions::default()).unwrap();
        assert_eq!(s, s2);
    }

    #[test]
    fn symmetrization_is_idempotent() {
        let mut a = vec![vec![0.04, 0.013], vec![0.011, 0.01]];
        symmetrize(&mut a);
        let once = a.clone();
        symmetrize(&mut a);
        assert_eq!(a, once);
        assert_eq!(a[0][1], 0.012);
        assert_eq!(a[1][0], 0.012);
    }

    #[test]
    fn discrete_set_validates_and_dedups() {
        let set = DecisionSet::discrete(vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![0.5, 0.5],
        ])
        .unwrap();
        match &set {
            DecisionSet::Discrete { points } => assert_eq!(points.len(), 3),
            _ => unreachable!(),
        }
        assert!(set.contains(&[0.5, 0.5]));
        assert!(!set.contains(&[0.4, 0.6]));
        assert!(DecisionSet::discrete(vec![]).is_err());
        assert!(DecisionSet::discrete(vec![vec![0.7, 0.7]]).is_err());
        assert!(DecisionSet::discrete(vec![vec![-0.1, 1.1]]).is_err());
    }

    #[test]
    fn assumptions_constant_drift() {
        let s = fixture();
        let g = Grid1D::new(-6.0, 6.0, 100).unwrap();
        let r = check_assumptions(&s, None, &g);
        assert!(r.p_values.iter().all(|&p| p == 0.0));
        assert_eq!(r.p_linf, 0.0);
        assert_eq!(r.p_l2, 0.0);
        // h == -max_i mu_i = -0.1 everywhere
        assert!(r.h_values.iter().all(|&h| h == -0.1));
        assert_eq!(r.h_linf, 0.1);
        assert_eq!(r.h_xx_l2, 0.0);
        assert!(r.plausible);
    }

    #[test]
    fn assumptions_tanh_ramp_matches_sech2() {
        let s = fixture();
        let g = Grid1D::new(-6.0, 6.0, 240).unwrap();
        let drift = DriftProfile::TanhRamp {
            amplitude: 1.0,
            center: 0.0,
            width: 1.0,
        };
        let r = check_assumptions(&s, Some(&drift), &g);
        // p(x) = 0.1 sech^2(x) at every node
        for (i, &x) in g.centers().iter().enumerate() {
            let sech2 = 1.0 / (x.cosh() * x.cosh());
            assert!((r.p_values[i] - 0.1 * sech2).abs() < 1e-15);
        }
        // grid has no node exactly at 0; sup over nodes is just below 0.1
        assert!((r.p_linf - 0.1).abs() < 1e-3);
        assert!(r.p_linf <= 0.1);
        assert!(r.plausible);
    }
}

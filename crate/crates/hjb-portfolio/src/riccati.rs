//! Riccati transform layer: utility specifications map to the transformed
//! initial condition `phi0(x) = -u''(x)/u'(x)`, and a solved `phi` field maps
//! back to the value function through
//!
//! ```text
//! d_x V(x) = exp(-int_{x_ref}^x phi(s) ds),    V(x_ref) = 0
//! ```
//!
//! The value function is determined only up to increasing affine maps, so the
//! reconstruction pins the gauge by `V(x_ref) = 0`, `d_x V(x_ref) = 1`.

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::pde::PdeState;

/// Terminal-utility specification; only its Arrow-Pratt coefficient reaches
/// the solver.
#[derive(Debug, Clone, PartialEq)]
pub enum UtilitySpec {
    /// Constant absolute risk aversion: `phi0 = a`.
    Cara { risk_aversion: f64 },
    /// Power utility on shifted wealth: `phi0(x) = gamma / (x + x_shift)`;
    /// requires `x + x_shift > 0` on the whole grid.
    Crra { gamma: f64, x_shift: f64 },
    /// Piecewise-constant risk aversion; `levels[k]` applies between
    /// `breakpoints[k-1]` and `breakpoints[k]` (first level left of the
    /// first breakpoint), so `levels` has one more entry than `breakpoints`.
    PiecewiseConstant {
        breakpoints: Vec<f64>,
        levels: Vec<f64>,
    },
    /// Precomputed cell averages on the run grid.
    Tabulated { values: Vec<f64> },
}

impl UtilitySpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            UtilitySpec::Cara { risk_aversion } => {
                if !risk_aversion.is_finite() || *risk_aversion <= 0.0 {
                    return Err(Error::Validation(format!(
                        "CARA requires a > 0, got {risk_aversion}"
                    )));
                }
            }
            UtilitySpec::Crra { gamma, .. } => {
                if !gamma.is_finite() || *gamma <= 0.0 {
                    return Err(Error::Validation(format!(
                        "CRRA requires gamma > 0, got {gamma}"
                    )));
                }
            }
            UtilitySpec::PiecewiseConstant {
                breakpoints,
                levels,
            } => {
                if levels.len() != breakpoints.len() + 1 {
                    return Err(Error::Validation(format!(
                        "piecewise-constant risk aversion needs {} levels for {} breakpoints",
                        breakpoints.len() + 1,
                        breakpoints.len()
                    )));
                }
                if levels.iter().any(|l| !l.is_finite()) {
                    return Err(Error::Validation("levels must be finite".into()));
                }
                if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Validation("breakpoints must be increasing".into()));
                }
            }
            UtilitySpec::Tabulated { values } => {
                if values.is_empty() {
                    return Err(Error::Validation("tabulated phi0 is empty".into()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Validation("tabulated phi0 must be finite".into()));
                }
            }
        }
        Ok(())
    }
}

/// Cell averages of `phi0` on the grid.
///
/// Smooth specifications are sampled at cell centers (midpoint-rule cell
/// averages, second order, consistent with the scheme); the piecewise
/// constant case integrates exactly, so a cell containing a breakpoint gets
/// the length-weighted average and breakpoints on cell faces stay sharp.
pub fn initial_condition(spec: &UtilitySpec, grid: &Grid1D) -> Result<PdeState> {
    spec.validate()?;
    let values: Vec<f64> = match spec {
        UtilitySpec::Cara { risk_aversion } => vec![*risk_aversion; grid.n_cells()],
        UtilitySpec::Crra { gamma, x_shift } => {
            if grid.x_min() + x_shift <= 0.0 {
                return Err(Error::Validation(format!(
                    "CRRA domain violation: grid extends to x + x_shift = {} <= 0",
                    grid.x_min() + x_shift
                )));
            }
            grid.centers().iter().map(|&x| gamma / (x + x_shift)).collect()
        }
        UtilitySpec::PiecewiseConstant {
            breakpoints,
            levels,
        } => (0..grid.n_cells())
            .map(|i| {
                let lo = grid.edge(i);
                let hi = grid.edge(i + 1);
                let mut acc = 0.0;
                let mut seg_lo = lo;
                for (k, &b) in breakpoints.iter().enumerate() {
                    if b <= seg_lo {
                        continue;
                    }
                    if b >= hi {
                        break;
                    }
                    acc += levels[k] * (b - seg_lo);
                    seg_lo = b;
                }
                // remaining segment [seg_lo, hi]: level right of seg_lo
                let k = breakpoints.partition_point(|&b| b <= seg_lo);
                acc += levels[k] * (hi - seg_lo);
                acc / (hi - lo)
            })
            .collect(),
        UtilitySpec::Tabulated { values } => {
            if values.len() != grid.n_cells() {
                return Err(Error::Validation(format!(
                    "tabulated phi0 has {} values, grid has {} cells",
                    values.len(),
                    grid.n_cells()
                )));
            }
            values.clone()
        }
    };
    PdeState::new(0.0, values)
}

/// Reconstructed value function on the grid, pinned to `V(x_ref) = 0`,
/// `d_x V(x_ref) = 1`.
#[derive(Debug, Clone)]
pub struct ValueReconstruction {
    pub x: Vec<f64>,
    /// `d_x V` at cell centers; strictly positive.
    pub v_prime: Vec<f64>,
    /// `V` at cell centers; strictly increasing.
    pub v: Vec<f64>,
    pub x_ref: f64,
}

/// Invert the transform by two trapezoid passes on cell centers.
///
/// Both cumulative integrals accumulate outward from the anchor cell rather
/// than from the left edge: `exp(-int phi)` spans many orders of magnitude
/// on wide domains, and left-to-right accumulation loses the increments of
/// the far side below the ulp of the running sum.
pub fn reconstruct_value(phi: &PdeState, grid: &Grid1D, x_ref: f64) -> Result<ValueReconstruction> {
    let n = grid.n_cells();
    if phi.values.len() != n {
        return Err(Error::Validation(format!(
            "phi has {} cells, grid has {n}",
            phi.values.len()
        )));
    }
    if !grid.contains(x_ref) {
        return Err(Error::Validation(format!(
            "x_ref = {x_ref} outside the grid [{}, {}]",
            grid.x_min(),
            grid.x_max()
        )));
    }
    let x = grid.centers();
    let dx = grid.dx();
    let iref = x
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 - x_ref)
                .abs()
                .partial_cmp(&(b.1 - x_ref).abs())
                .unwrap()
        })
        .map(|(i, _)| i)
        .unwrap();

    let big_i = shift_to(&cum_trapezoid(&phi.values, dx, iref), &x, &phi.values, x_ref, dx);
    let v_prime: Vec<f64> = big_i.iter().map(|&i| (-i).exp()).collect();
    if v_prime.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(Error::Validation(
            "non-finite quadrature in d_x V: phi is unbounded on the grid".into(),
        ));
    }
    let v = shift_to(&cum_trapezoid(&v_prime, dx, iref), &x, &v_prime, x_ref, dx);
    for w in v.windows(2) {
        if !w[1].is_finite() || w[1] <= w[0] {
            return Err(Error::Validation(
                "reconstructed V is not strictly increasing (dynamic range exceeds f64)".into(),
            ));
        }
    }
    Ok(ValueReconstruction {
        x,
        v_prime,
        v,
        x_ref,
    })
}

/// Cumulative trapezoid of center samples, zero at center `iref`, outward.
fn cum_trapezoid(vals: &[f64], dx: f64, iref: usize) -> Vec<f64> {
    let n = vals.len();
    let mut c = vec![0.0; n];
    for i in (iref + 1)..n {
        c[i] = c[i - 1] + 0.5 * (vals[i - 1] + vals[i]) * dx;
    }
    for i in (0..iref).rev() {
        c[i] = c[i + 1] - 0.5 * (vals[i] + vals[i + 1]) * dx;
    }
    c
}

/// Shift a cumulative array so it vanishes at `x_ref` in the linear-interp
/// sense (flat extension of the integrand beyond the end centers).
fn shift_to(c: &[f64], x: &[f64], integrand: &[f64], x_ref: f64, dx: f64) -> Vec<f64> {
    let n = c.len();
    let at = if x_ref <= x[0] {
        c[0] + integrand[0] * (x_ref - x[0])
    } else if x_ref >= x[n - 1] {
        c[n - 1] + integrand[n - 1] * (x_ref - x[n - 1])
    } else {
        let j = x.partition_point(|&xi| xi <= x_ref).min(n - 1) - 1;
        let t = (x_ref - x[j]) / dx;
        c[j] * (1.0 - t) + c[j + 1] * t
    };
    c.iter().map(|&v| v - at).collect()
}

/// Forward transform `-d_x^2 V / d_x V` by central differences on the `V`
/// grid; returns interior values (length `n - 2`). Applied to a
/// reconstruction it recovers `phi` up to discretization error wherever the
/// dynamic range of `d_x V` is representable.
pub fn riccati_transform(v: &[f64], dx: f64) -> Vec<f64> {
    let n = v.len();
    let mut out = Vec::with_capacity(n.saturating_sub(2));
    for i in 1..n - 1 {
        let d2 = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (dx * dx);
        let d1 = (v[i + 1] - v[i - 1]) / (2.0 * dx);
        out.push(-d2 / d1);
    }
    out
}

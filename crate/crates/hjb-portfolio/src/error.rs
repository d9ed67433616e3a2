//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input file. `line` is 1-based and includes the header.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Invalid data or configuration (bad covariance, bad grid, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// Active-set iteration exhausted its support budget. With a validated
    /// SPD covariance the objective strictly decreases and supports cannot
    /// repeat, so this signals corrupted inputs.
    #[error("quadratic program did not converge after {changes} support changes (phi = {phi})")]
    QpNonConvergence { changes: usize, phi: f64 },

    /// Picard linearization stalled; `residuals` holds the per-iteration
    /// sup-norm deltas for diagnosis.
    #[error("picard iteration did not reach tol {tol:e} after {iters} iterations (last residual {last:e})")]
    PicardNonConvergence {
        iters: usize,
        tol: f64,
        last: f64,
        residuals: Vec<f64>,
    },

    /// Requested time step exceeds the advective CFL bound.
    #[error("time step {dt:e} violates the advective CFL bound {bound:e}")]
    CflViolation { dt: f64, bound: f64 },

    /// Solution norm left the guarded envelope; the scheme preserves
    /// boundedness for sane inputs, so this indicates a bug or non-finite
    /// coefficient evaluations.
    #[error("solution blow-up at tau {tau}: |phi| = {norm:e} exceeds {limit:e}")]
    BlowUp { tau: f64, norm: f64, limit: f64 },

    /// Implicit diffusion matrix lost diagonal dominance (negative face
    /// diffusivity beyond roundoff): alpha is not nondecreasing in phi.
    #[error("diffusion matrix not diagonally dominant at tau {tau}: face diffusivity {diffusivity:e}")]
    NotDiagonallyDominant { tau: f64, diffusivity: f64 },

    /// Required input file is absent (distinct from malformed: exit code 4
    /// in the CLI, not 2).
    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

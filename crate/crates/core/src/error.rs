use thiserror::Error;

/// Errors raised by the bundle solver and the field simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("mode {mode} lies outside the truncation [-{truncation}, {truncation}]")]
    ModeOutOfRange { mode: i64, truncation: usize },

    #[error("Y is singular: base frequency 1 with a nonzero m = -1 coefficient")]
    SingularOperator,

    #[error("no periodic correction found after {iterations} iterations (residual {residual:e})")]
    NoSolution { iterations: usize, residual: f64 },

    #[error("step size underflow at t = {t:e} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("step budget of {0} exhausted")]
    TooManySteps(usize),

    #[error("orbit left the disc |p| <= {radius:e} at t = {t:e}; drift to infinity")]
    Escape { t: f64, radius: f64 },

    #[error("non-finite state at t = {0:e}")]
    NonFinite(f64),

    #[error("return map is non-hyperbolic: |DP - I| = {0:e} below the hyperbolicity margin")]
    Degenerate(f64),

    #[error("Newton iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NoFixedPoint { iterations: usize, residual: f64 },

    #[error("trajectory is not 2pi-periodic: |p(2pi) - p(0)| = {0:e}")]
    NotPeriodic(f64),

    #[error("trajectory does not span one period [0, 2pi]")]
    BadSpan,

    #[error("simulation blew up at step {0}")]
    BlowUp(u64),

    #[error("spiral lost: no tip at {missing} of {total} late-time samples")]
    LostSpiral { missing: usize, total: usize },

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

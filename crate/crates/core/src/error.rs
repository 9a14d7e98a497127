use thiserror::Error;

/// Failures reported by the numerical routines of this crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value encountered in {context} at t = {t}")]
    NonFinite { context: &'static str, t: f64 },

    #[error("step size underflow at t = {t} (h = {h:e}); equation is stiff or singular there")]
    StepUnderflow { t: f64, h: f64 },

    #[error("integration exceeded {steps} steps before reaching t = {t_target}")]
    TooManySteps { steps: usize, t_target: f64 },

    #[error("solution did not cross level {level} before t = {t_end} (last value {last})")]
    NoCrossing { level: f64, t_end: f64, last: f64 },

    #[error("boundary event not reached for mu = {mu}: {reason}")]
    EventNotReached { mu: f64, reason: String },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("tail of the planar integral could not be bounded below {tol:e} (bound {bound:e} at R_c = {cut:e})")]
    TailBound { tol: f64, bound: f64, cut: f64 },

    #[error("solution grows faster than logarithmically: |w|/log r = {ratio:e} at r = {r:e}")]
    UnboundedGrowth { r: f64, ratio: f64 },

    #[error("log-slope tail not converged: spread {spread:e} exceeds tolerance {tol:e}")]
    SlopeNotConverged { spread: f64, tol: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

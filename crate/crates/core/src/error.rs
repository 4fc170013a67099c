use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("conformal map degenerate: min |1+W_alpha| = {min_modulus:.3e} < delta = {delta:.3e}")]
    ConformalDegenerate { min_modulus: f64, delta: f64 },

    #[error("surface is not a graph: x(alpha) decreases near sample {index}")]
    NotAGraph { index: usize },

    #[error("holomorphic leakage {leak:.3e} exceeds tolerance {tol:.3e}")]
    HolomorphyLeak { leak: f64, tol: f64 },

    #[error("argument unwrapping failed between samples {index} and {next}")]
    BranchCut { index: usize, next: usize },

    #[error("{what} should be real but has imaginary part {value:.3e}")]
    RealityViolation { what: &'static str, value: f64 },

    #[error("{what}: two equivalent expressions differ by {value:.3e}")]
    IdentityDefect { what: &'static str, value: f64 },

    #[error("fixed-point iteration stalled after {iterations} iterations with defect {defect:.3e}")]
    NoConvergence { iterations: usize, defect: f64 },

    #[error("Newton iteration hit the limit of {iterations} iterations (residual {residual:.3e})")]
    MaxIterations { iterations: usize, residual: f64 },

    #[error("line search failed at Newton iteration {iteration} (residual {residual:.3e})")]
    LineSearchFailure { iteration: usize, residual: f64 },

    #[error("blow-up detected at t = {time:.6e}: sup norm {sup:.3e}")]
    BlowupDetected { time: f64, sup: f64 },

    #[error("time step {dt:.3e} exceeds the stability bound {max:.3e}")]
    CflViolation { dt: f64, max: f64 },

    #[error("fit unreliable: {0}")]
    FitUnreliable(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

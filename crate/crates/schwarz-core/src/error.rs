use thiserror::Error;

/// Crate-wide error type. Numerical failures carry enough context (residuals,
/// witnesses) to be reported by the CLI `verify` command.
#[derive(Debug, Error)]
pub enum Error {
    #[error("root finder did not converge: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: u32 },

    #[error("polynomial degree {got} exceeds the supported cap {cap}")]
    DegreeTooLarge { got: usize, cap: usize },

    #[error("invalid rational map: {0}")]
    InvalidRational(String),

    #[error("point is outside the map's domain of definition")]
    OutsideDomain,

    #[error("univalence violated: {count} disk preimages of a single point")]
    UnivalenceViolation { count: usize },

    #[error("invalid system definition: {0}")]
    InvalidSystem(String),

    #[error("invalid angle or symbol data: {0}")]
    InvalidAngle(String),

    #[error("laminations leaves cross: {0}")]
    CrossingLeaves(String),

    #[error("ambiguous branch selection: nearest candidates separated by {separation:.3e}")]
    AmbiguousBranch { separation: f64 },

    #[error("landing unresolved after {depth} lifting steps: residual {residual:.3e}")]
    Unresolved { depth: usize, residual: f64 },

    #[error("correspondence fiber is critical or nodal at the requested point")]
    CriticalFiber,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("render error: {0}")]
    Render(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

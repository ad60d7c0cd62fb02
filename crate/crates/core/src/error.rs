use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("boundary pieces are not contiguous: {0}")]
    NonContiguous(String),

    #[error("junction ordering violated at x2 = {at}: {detail}")]
    JunctionOrdering { at: f64, detail: String },

    #[error("boundary self-intersects near x2 = {at}")]
    SelfIntersecting { at: f64 },

    #[error("boundary is not closed: {0}")]
    NotClosed(String),

    #[error("normal undefined at corner point ({x1}, {x2})")]
    CornerPoint { x1: f64, x2: f64 },

    #[error("point ({x1}, {x2}) is not on the requested boundary part")]
    NotOnBoundary { x1: f64, x2: f64 },

    #[error("no flatness certificate: {0}")]
    NoCertificate(String),

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("point ({x1}, {x2}) lies outside the domain")]
    OutsideDomain { x1: f64, x2: f64 },

    #[error("missing boundary trace: {0}")]
    MissingTrace(String),

    #[error("linear solver failed: {reason} (residual history: {history:?})")]
    SolverFailure { reason: String, history: Vec<f64> },

    #[error("density lost positivity: min rho = {min_rho}")]
    DensityPositivity { min_rho: f64 },

    #[error("Picard iteration diverged after {iterations} iterations")]
    Divergence {
        iterations: usize,
        report: Box<crate::report::IterationReport>,
    },

    #[error("unknown manufactured case `{0}`")]
    UnknownCase(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("not Kähler at grid point {index}: smallest metric eigenvalue {eigenvalue:e}")]
    NotKahler { index: usize, eigenvalue: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("state is not critical: sup|H| = {residual:e}")]
    NotCritical { residual: f64 },

    #[error("linearized flow operator is not elliptic at grid point {index} (margin {margin:e})")]
    NotElliptic { index: usize, margin: f64 },

    #[error("step rejected: {reason}")]
    StepRejected { reason: String },

    #[error("flow diverged after {steps} steps: time step fell to {dt:e}")]
    Diverged { steps: usize, dt: f64 },

    #[error("degenerate constant c_beta = {c_beta:e}")]
    DegenerateConstant { c_beta: f64 },

    #[error("path node {node} left the Kähler cone")]
    PositivityLoss { node: usize },

    #[error("geodesic solver did not converge: gradient norm {grad_norm:e} after {iterations} iterations")]
    NoConvergence { iterations: usize, grad_norm: f64 },

    #[error("path is not a certified geodesic: residual {residual:e} exceeds {tolerance:e}")]
    NotGeodesic { residual: f64, tolerance: f64 },

    #[error("field file: {0}")]
    Format(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

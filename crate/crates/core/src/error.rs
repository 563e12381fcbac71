use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    /// An argument lies outside the set where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter set violates its documented constraints.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A curvature or regularity hypothesis does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Fields or grids that must line up do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Time stepping could not keep the solution positive.
    #[error("stability failure at node {node} (r = {r}): {reason}")]
    Stability { node: usize, r: f64, reason: String },

    /// A realized field leaves the range a theorem was invoked with.
    #[error("bound audit failed: {0}")]
    BoundAudit(String),

    /// An iterative method did not converge.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// A value does not fit in an f64.
    #[error("saturation: {0}")]
    Saturation(String),

    /// A constructed object fails its own defining properties.
    #[error("construction error: {0}")]
    Construction(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BandError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("initial frame is not orthonormal (deviation {deviation:.3e})")]
    NonOrthonormalFrame { deviation: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("energy density is singular at K = 0 with W = {w} and no regularization")]
    SingularDensity { w: f64 },

    #[error("mean curvature is undefined at K = 0")]
    SingularMeanCurvature,

    #[error("singular node(s) with |K| below guard: {0:?}")]
    SingularNodes(Vec<usize>),

    #[error("ruling undefined at node {node}: both |K| and |W| below threshold")]
    UndefinedRuling { node: usize },

    #[error("half width must be positive, got {0}")]
    DegenerateWidth(f64),

    #[error("degenerate (zero-area) triangle at face {face}")]
    DegenerateFace { face: usize },

    #[error("no sign change of the binormal moment; no candidate symmetry point")]
    SymmetryPointNotFound,

    #[error("invalid configuration key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, BandError>;

impl From<std::io::Error> for BandError {
    fn from(e: std::io::Error) -> Self {
        BandError::Io(e.to_string())
    }
}

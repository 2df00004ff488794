use thiserror::Error;

pub type Result<T> = std::result::Result<T, MagError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MagError {
    #[error("input contains no points")]
    EmptyInput,
    #[error("non-finite coordinate at row {row}, column {col}")]
    NonFiniteCoordinate { row: usize, col: usize },
    #[error("points {first} and {second} coincide")]
    DuplicatePoints { first: usize, second: usize },
    #[error("rows have inconsistent dimension: row {row} has {found}, expected {expected}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("distance matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("distance matrix asymmetric at ({i}, {j}): |d_ij - d_ji| = {diff:e}")]
    AsymmetryExceedsTolerance { i: usize, j: usize, diff: f64 },
    #[error("negative or non-finite distance at ({i}, {j})")]
    NegativeDistance { i: usize, j: usize },
    #[error("nonzero diagonal entry at ({i}, {i})")]
    NonzeroDiagonal { i: usize },
    #[error("scale must be positive and finite, got {0}")]
    NonPositiveScale(f64),
    #[error("distance must be positive and finite, got {0}")]
    NonPositiveDistance(f64),
    #[error("similarity matrix is not numerically positive definite")]
    NotPositiveDefinite,
    #[error("gradient descent diverged at iteration {iteration}")]
    Diverged { iteration: usize },
    #[error("non-finite or non-positive row sum at row {row}, iteration {iteration}")]
    NonFiniteUpdate { iteration: usize, row: usize },
    #[error("values are not sorted at index {index}")]
    UnsortedInput { index: usize },
    #[error("repeated value at index {index}")]
    DuplicateValues { index: usize },
    #[error("parameter vector needs at least two entries")]
    DegenerateParams,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("window needs at least two finite scales")]
    InsufficientWindow,
    #[error("distances ({0}, {1}, {2}) violate the triangle inequality")]
    TriangleViolation(f64, f64, f64),
    #[error("{n} points exceeds the enumeration cap of {max}")]
    TooLarge { n: usize, max: usize },
    #[error("unknown point id {0}")]
    UnknownPoint(usize),
    #[error("new point coincides with existing point {0}")]
    DuplicatePoint(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl MagError {
    /// Failures of a numerical method, as opposed to bad input.
    pub fn is_solver_error(&self) -> bool {
        matches!(
            self,
            MagError::NotPositiveDefinite | MagError::Diverged { .. } | MagError::NonFiniteUpdate { .. }
        )
    }

    /// Stable machine-readable code used in CLI error objects.
    pub fn code(&self) -> &'static str {
        match self {
            MagError::EmptyInput => "EmptyInput",
            MagError::NonFiniteCoordinate { .. } => "NonFiniteCoordinate",
            MagError::DuplicatePoints { .. } => "DuplicatePoints",
            MagError::DimensionMismatch { .. } => "DimensionMismatch",
            MagError::NotSquare { .. } => "NotSquare",
            MagError::AsymmetryExceedsTolerance { .. } => "AsymmetryExceedsTolerance",
            MagError::NegativeDistance { .. } => "NegativeDistance",
            MagError::NonzeroDiagonal { .. } => "NonzeroDiagonal",
            MagError::NonPositiveScale(_) => "NonPositiveScale",
            MagError::NonPositiveDistance(_) => "NonPositiveDistance",
            MagError::NotPositiveDefinite => "NotPositiveDefinite",
            MagError::Diverged { .. } => "Diverged",
            MagError::NonFiniteUpdate { .. } => "NonFiniteUpdate",
            MagError::UnsortedInput { .. } => "UnsortedInput",
            MagError::DuplicateValues { .. } => "DuplicateValues",
            MagError::DegenerateParams => "DegenerateParams",
            MagError::InvalidConfig(_) => "InvalidConfig",
            MagError::InsufficientWindow => "InsufficientWindow",
            MagError::TriangleViolation(..) => "TriangleViolation",
            MagError::TooLarge { .. } => "TooLarge",
            MagError::UnknownPoint(_) => "UnknownPoint",
            MagError::DuplicatePoint(_) => "DuplicatePoint",
            MagError::Parse(_) => "Parse",
            MagError::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for MagError {
    fn from(e: std::io::Error) -> Self {
        MagError::Io(e.to_string())
    }
}

impl From<csv::Error> for MagError {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            MagError::Io(e.to_string())
        } else {
            MagError::Parse(e.to_string())
        }
    }
}

impl From<serde_json::Error> for MagError {
    fn from(e: serde_json::Error) -> Self {
        MagError::Parse(e.to_string())
    }
}

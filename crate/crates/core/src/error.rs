use thiserror::Error;

use crate::geometry::Point;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("vector has non-negative Hermitian norm {0}; it does not represent an interior point")]
    NonNegativeNorm(f64),

    #[error("vector is not null: normalized Hermitian norm {0}")]
    NotNull(f64),

    #[error("zero vector")]
    ZeroVector,

    #[error("space mismatch: expected {expected}, found {found}")]
    SpaceMismatch { expected: String, found: String },

    #[error("matrix does not preserve the Hermitian form (defect {0:e})")]
    NotFormPreserving(f64),

    #[error("compact factor is not unitary (defect {0:e})")]
    NotUnitary(f64),

    #[error("cannot separate elliptic, parabolic and loxodromic behaviour: {0}")]
    Indeterminate(String),

    #[error("generator mismatch: {0}")]
    GeneratorMismatch(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("atom has no image under the sampled boundary map")]
    UnmappedAtom,

    #[error("orbit point coincides with the base point")]
    DegenerateOrbit,

    #[error("measure is the sum of two Dirac masses with equal weight")]
    ExcludedMeasure,

    #[error("barycenter solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        best: Box<Point>,
    },

    #[error("pushed-forward measure has an atom of ratio {0} >= 1/2")]
    ElementaryData(f64),

    #[error("form K is degenerate (min eigenvalue {0:e})")]
    DegenerateForms(f64),

    #[error("implicit system is singular")]
    SingularSystem,

    #[error("singular denominator")]
    SingularDenominator,

    #[error("point is not in the interior of the simplex")]
    BoundaryPoint,

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid lab configuration: {0}")]
    InvalidLabConfig(String),

    #[error("optimizer failure: best value {best_value:e}")]
    OptimizerFailure { best_value: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

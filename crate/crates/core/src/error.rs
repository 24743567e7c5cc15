use thiserror::Error;

/// Errors raised by the integrators, catalogs and analysis drivers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("tableau is not explicit: a[{row}][{col}] = {value} above the diagonal")]
    NotExplicit { row: usize, col: usize, value: String },
    #[error("unsupported stage count {0} (expected 2 or 3)")]
    StageCount(usize),
    #[error("invalid tableau parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite value at stage {stage}")]
    NonFiniteStage { stage: usize },
    #[error("non-finite f at stencil point (t = {t}, u = {u})")]
    NonFiniteStencil { t: f64, u: f64 },
    #[error("right-hand side is singular at (t = {t}, u = {u})")]
    Singular { t: f64, u: f64 },
    #[error("degenerate shape parameter: denominator {denominator:e} vs numerator {numerator:e}")]
    DegenerateShape { numerator: f64, denominator: f64 },
    #[error("step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("invalid step count list: {0}")]
    InvalidStepCounts(String),
    #[error("problem `{0}` has no exact solution")]
    NoExactSolution(String),
    #[error("invalid raster request: {0}")]
    InvalidRaster(String),
}

pub type Result<T> = std::result::Result<T, Error>;

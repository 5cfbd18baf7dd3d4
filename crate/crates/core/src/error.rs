use thiserror::Error;

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error("unknown profile family `{0}`")]
    UnknownFamily(String),
    #[error("invalid profile parameters: {0}")]
    InvalidParams(String),
    #[error("point y = {y} lies outside [0, {y_max}]")]
    OutOfDomain { y: f64, y_max: f64 },
    #[error("tolerance {0:e} outside [1e-13, 1e-6]")]
    BadTolerance(f64),
    #[error("step size underflow at y = {y} (h = {h:e}); system is too stiff")]
    StepUnderflow { y: f64, h: f64 },
    #[error("nonfinite value encountered at y = {0}")]
    NonFinite(f64),
    #[error("newton iteration failed: {0}")]
    NewtonFailure(String),
    #[error("function nearly vanishes on the contour (min/max = {ratio:e})")]
    ZeroOnContour { ratio: f64 },
    #[error("series iteration does not contract (ratio {ratio:.3})")]
    SeriesDivergence { ratio: f64 },
    #[error("no zero inside the search contour")]
    NoZero,
    #[error("c = {re}+{im}i is too close to an eigenvalue (|trace| = {trace:e})")]
    EigenvalueCollision { re: f64, im: f64, trace: f64 },
    #[error("singular basis matrix at x = {0}")]
    SingularMatrix(f64),
    #[error("mismatched inputs: {0}")]
    Mismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, StabilityError>;

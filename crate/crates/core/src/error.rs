use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),

    #[error("invalid amplitude grid: {0}")]
    InvalidGrid(String),

    /// An argument outside the domain of a closed-form expression.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge on [{lo}, {hi}] (estimate {estimate})")]
    QuadratureNonConvergence { lo: f64, hi: f64, estimate: f64 },

    #[error("first-harmonic symmetry check failed: a1 = {a1:e}, b1 = {b1:e}")]
    SymmetryViolation { a1: f64, b1: f64 },

    #[error("invalid plant: {0}")]
    InvalidPlant(String),

    #[error("G(jw) has a pole on the imaginary axis at w = {0}")]
    PoleOnAxis(f64),

    #[error("(jwI - A) is singular at w = {0}")]
    SingularMatrix(f64),

    #[error(
        "ambiguous stability at X = {amplitude}: probe below enclosed = {below_enclosed}, \
         probe above enclosed = {above_enclosed}"
    )]
    AmbiguousClassification {
        amplitude: f64,
        below_enclosed: bool,
        above_enclosed: bool,
    },

    #[error("algebraic loop: plant feedthrough D = {0} must be zero")]
    AlgebraicLoop(f64),

    #[error("invalid simulation setup: {0}")]
    InvalidSimulation(String),

    /// Malformed JSON descriptor. The message carries serde's line/column.
    #[error("descriptor: {0}")]
    Descriptor(String),
}

use thiserror::Error;

/// Errors raised by the moment, oracle, recurrence and asymptotic routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("moment index {index} outside the available range [-{halfwidth}, {halfwidth}]")]
    IndexOutOfRange { index: i64, halfwidth: usize },

    #[error("moment table is incomplete for a Toeplitz matrix of order {order} (shift {shift})")]
    SingularTable { order: usize, shift: i32 },

    #[error("Toeplitz determinant D_{0} vanishes")]
    ZeroDeterminant(usize),

    #[error("degenerate transfer step at n = {0}: alpha_(n+1) * beta_(n+1) = 1")]
    DegenerateStep(usize),

    #[error("the Psi recurrence is undefined at z = 0")]
    ZeroPoint,

    #[error("point with modulus {modulus} lies outside the domain of this operation")]
    OutsideDomain { modulus: f64 },

    #[error("cutoff K = {cutoff} is too small for index {required}")]
    CutoffTooSmall { cutoff: usize, required: usize },

    #[error("commutation identity is outside its validity range at n = {n} (K = {cutoff}); residual {residual:e}")]
    OutOfValidity { n: usize, cutoff: usize, residual: f64 },

    #[error("non-finite value encountered at step {0}")]
    NonFiniteValue(usize),

    #[error("no convergence within budget N <= {budget}: cauchy {cauchy:e}, tail bound {tail_bound:e}")]
    NoConvergence {
        budget: usize,
        cauchy: f64,
        tail_bound: f64,
    },

    #[error("parameters are not of OPUC type: beta_{0} != conj(alpha_{0})")]
    NotOpuc(usize),

    #[error("parameter sequence provides {available} terms, {requested} requested")]
    ParametersExhausted { available: usize, requested: usize },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::InvalidSpec(e.to_string())
    }
}

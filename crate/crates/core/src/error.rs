use thiserror::Error;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Domain,
    Resource,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("coefficient backends differ ({left} vs {right})")]
    BackendMismatch {
        left: &'static str,
        right: &'static str,
    },
    #[error("truncation leaves no valid coefficients (order {truncation} < leading order {leading})")]
    TruncationExhausted { leading: i32, truncation: i32 },
    #[error("invalid expansion: {0}")]
    InvalidExpansion(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("unknown observable `{0}`")]
    UnknownObservable(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("observable `{observable}` is not defined on model `{model}`")]
    ObservableMismatch { model: String, observable: String },
    #[error("no closed form for ({model}, {observable}, {kernel})")]
    NoClosedForm {
        model: String,
        observable: String,
        kernel: &'static str,
    },
    #[error("level budget of {budget} exhausted; achieved error bound {achieved:e}")]
    Budget { budget: u64, achieved: f64 },
    #[error("requested relative accuracy {requested:e} is below the achievable {achieved:e}")]
    Precision { requested: f64, achieved: f64 },
    #[error("enumeration overflow at level {level}; multiplicities exceed {bound}")]
    EnumerationOverflow { level: u64, bound: u128 },
    #[error("Re(s) = {re} is outside the convergence region Re(s) > {min}; use the continued zeta function")]
    DirectDomain { re: f64, min: f64 },
    #[error("samples are not on a geometric grid: {0}")]
    NonGeometricGrid(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("s = {s} lies within {distance:e} of the pole at {pole}")]
    PoleProximity { s: String, pole: i32, distance: f64 },
    #[error("gamma function pole at s = {0}")]
    GammaPole(i64),
    #[error("expansion is missing coefficients: {0}")]
    MissingCoefficients(String),
    #[error("zeta values required at {0:?}")]
    MissingZetaValues(Vec<i32>),
    #[error("lattice-level spectra cannot be suspended")]
    LatticeSuspension,
    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Budget { .. }
            | Error::Precision { .. }
            | Error::EnumerationOverflow { .. }
            | Error::Quadrature(_) => {
                ErrorClass::Resource
            }
            _ => ErrorClass::Domain,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

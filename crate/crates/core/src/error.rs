use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("transform argument {re} + {im}i lies outside the closed right half-plane")]
    OutsideHalfPlane { re: f64, im: f64 },

    #[error("negative variance: second moment {m2} is below squared mean {m1_sq}")]
    NegativeVariance { m2: f64, m1_sq: f64 },

    #[error("infeasible dependence derivatives: {0}")]
    InfeasibleDerivatives(String),

    #[error("dependence function has g'(0) = {0} >= 1; the stationary downtime does not exist")]
    Divergent(f64),

    #[error("unstable queue: load {load} is not below availability bound {bound}")]
    Unstable { load: f64, bound: f64 },

    #[error("{what} did not converge after {iterations} iterations (last change {last_change:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        last_change: f64,
    },

    #[error("1 - E(p) has no sign change on (0, mu): values {at_low} and {at_high}")]
    MissingSignChange { at_low: f64, at_high: f64 },

    #[error("boundary system is singular (condition estimate {condition:e})")]
    SingularSystem { condition: f64 },

    #[error("kernel evaluated at its pole p = {0} without the limit branch")]
    AtPole(f64),

    #[error("quadrature did not reach tolerance: error estimate {estimate:e} after {intervals} intervals")]
    Quadrature { estimate: f64, intervals: usize },

    #[error("increment process of {0} cannot be sampled")]
    Unsamplable(String),

    #[error("analytic path unavailable: {0}")]
    AnalyticUnavailable(String),

    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("argument {re}{im:+}i is within {distance:e} of a pole")]
    Pole { re: f64, im: f64, distance: f64 },

    #[error("argument outside supported domain: {0}")]
    OutOfDomain(String),

    #[error("{what} did not converge: {detail}")]
    NonConvergence { what: &'static str, detail: String },

    #[error("state is not positive: {0}")]
    NotPositive(String),

    #[error("map is not completely positive (minimum Choi eigenvalue {min_eigenvalue:e})")]
    NotCompletelyPositive { min_eigenvalue: f64 },

    #[error("ill-conditioned: {0}")]
    IllConditioned(String),

    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error("discretization too coarse: {0}")]
    Discretization(String),
}

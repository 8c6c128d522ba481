use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("diffusion-wave solve did not converge after {iterations} iterations (boundary mismatch {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("profile residual {residual:.3e} exceeds tolerance {tol:.3e} at xi = {xi}")]
    ResidualTooLarge { residual: f64, tol: f64, xi: f64 },

    #[error("domain too small: tail truncation error {tail:.3e} at |xi| = {l_xi} exceeds tolerance {tol:.3e}")]
    DomainTooSmall { l_xi: f64, tail: f64, tol: f64 },

    #[error("unsupported derivative order (dx = {dx}, dt = {dt})")]
    UnsupportedOrder { dx: usize, dt: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("integration failure: {0}")]
    Integration(String),

    #[error("blowup at t = {t}, x = {x}: {what}")]
    Blowup { t: f64, x: f64, what: &'static str },

    #[error("invalid initial data: {0}")]
    InvalidData(String),

    #[error("kernel domain error: {0}")]
    KernelDomain(String),

    #[error("fit error: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}

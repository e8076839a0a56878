use thiserror::Error;

/// Errors produced by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integration failed at t = {t}: {reason} (last state {state:?})")]
    IntegrationFailure {
        t: f64,
        state: Vec<f64>,
        reason: String,
    },

    #[error("trajectory blew up at t = {t_blow} before reaching t = {t_requested}")]
    BlowUp { t_blow: f64, t_requested: f64 },

    #[error("vacuum reached at t = {t}: |u|^2 = {density} at x = {x}")]
    Vacuum { t: f64, x: f64, density: f64 },

    #[error("vacuum approach at t = {t}: min |a|^2 = {min_density} below guard {guard}")]
    VacuumApproach {
        t: f64,
        min_density: f64,
        guard: f64,
    },

    #[error("non-finite values at t = {t} ({context})")]
    NonFinite { t: f64, context: String },

    #[error("stability violation at t = {t}: sup-norm jumped from {before} to {after}")]
    Stability { t: f64, before: f64, after: f64 },

    #[error("gradient blow-up at t = {t}: sup |alpha|,|beta| = {sup} exceeds {limit}")]
    GradientBlowUp { t: f64, sup: f64, limit: f64 },

    #[error("Wigner transform is not real: imaginary residue {residue} vs max |W| = {max}")]
    NotReal { residue: f64, max: f64 },

    #[error("observable support {what} [{lo}, {hi}] exceeds grid coverage [{grid_lo}, {grid_hi}]")]
    Support {
        what: &'static str,
        lo: f64,
        hi: f64,
        grid_lo: f64,
        grid_hi: f64,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

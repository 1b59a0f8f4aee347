use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid system description: {0}")]
    InvalidSystem(String),

    #[error("trace is not strictly monotone on the parameter window [{lo}, {hi}]")]
    NonMonotoneTrace { lo: f64, hi: f64 },

    #[error("trace value {tau} is not attained on the parameter window [{lo}, {hi}]")]
    OutOfWindow { tau: f64, lo: f64, hi: f64 },

    #[error("linearization at a = {a} has real eigenvalues (tau^2 - 4 delta = {discriminant})")]
    NotHopfRegion { a: f64, discriminant: f64 },

    #[error("quadrature did not reach tolerance {tol:e} within {evaluations} evaluations")]
    QuadratureFailure { tol: f64, evaluations: usize },

    #[error("orbit from r = {r} did not complete a revolution: {reason}")]
    RevolutionFailure { r: f64, reason: String },

    #[error("design matrix is ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("inconclusive fit: {0}")]
    InconclusiveFit(String),

    #[error("emerging cycles found on both sides of the critical value")]
    MixedSigns,

    #[error("no emerging family of cycles found, yet the discriminant is not negligible")]
    NoEmergingFamily,

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("step size underflow at t = {t}")]
    StepFailure { t: f64 },

    #[error("orbit left the working disk of radius {radius} at t = {t}")]
    Escape { t: f64, radius: f64 },

    #[error("no return to the section within t = {t_max}")]
    NoReturn { t_max: f64 },
}

impl Error {
    /// Stable variant name, surfaced by the command-line front end.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidSystem(_) => "InvalidSystem",
            Error::NonMonotoneTrace { .. } => "NonMonotoneTrace",
            Error::OutOfWindow { .. } => "OutOfWindow",
            Error::NotHopfRegion { .. } => "NotHopfRegion",
            Error::QuadratureFailure { .. } => "QuadratureFailure",
            Error::RevolutionFailure { .. } => "RevolutionFailure",
            Error::IllConditioned { .. } => "IllConditioned",
            Error::InconclusiveFit(_) => "InconclusiveFit",
            Error::MixedSigns => "MixedSigns",
            Error::NoEmergingFamily => "NoEmergingFamily",
            Error::DomainError(_) => "DomainError",
            Error::StepFailure { .. } => "StepFailure",
            Error::Escape { .. } => "Escape",
            Error::NoReturn { .. } => "NoReturn",
        }
    }

    /// Errors caused by the caller's input rather than by a numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::InvalidSystem(_) | Error::DomainError(_) | Error::OutOfWindow { .. })
    }
}

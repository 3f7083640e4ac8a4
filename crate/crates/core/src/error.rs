use thiserror::Error;

/// Errors raised while constructing or certifying horn spaces.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Parameters violate a structural invariant (ordering, ranges, budgets).
    #[error("configuration error: {0}")]
    Config(String),

    /// A formula was evaluated outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A constructed object failed one of its certified inequalities.
    #[error("certification failed: {message} (worst at r = {r:e}, value {value:e})")]
    Certification { message: String, r: f64, value: f64 },

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature did not converge on [{a:e}, {b:e}]: estimated error {error:e}")]
    Quadrature { a: f64, b: f64, error: f64 },

    /// A root bracket or shooting iteration failed.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// Step control of the radial integrator collapsed.
    #[error("step size underflow at x = {x:e} (h = {h:e})")]
    Stiffness { x: f64, h: f64 },

    /// The launch asymptotics disagree with the integrated solution.
    #[error("asymptotic mismatch: relative deviation {deviation:e} at r = {r:e}")]
    AsymptoticMismatch { r: f64, deviation: f64 },

    /// The indicial quadratic has no real roots.
    #[error("indicial equation has complex roots (discriminant {0:e})")]
    ComplexRoots(f64),

    /// A field with vanishing mean square cannot be normalized.
    #[error("degenerate normalization: mean square is {0:e}")]
    DegenerateNormalization(f64),

    /// Least-squares fit is rank deficient or otherwise undefined.
    #[error("fit error: {0}")]
    Fit(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable tag for the error family.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "ConfigError",
            Error::Domain(_) => "DomainError",
            Error::Certification { .. } => "CertificationError",
            Error::Quadrature { .. } => "QuadratureError",
            Error::Convergence(_) => "ConvergenceError",
            Error::Stiffness { .. } => "StiffnessError",
            Error::AsymptoticMismatch { .. } => "AsymptoticMismatchError",
            Error::ComplexRoots(_) => "ComplexRootsError",
            Error::DegenerateNormalization(_) => "DegenerateNormalization",
            Error::Fit(_) => "FitError",
            Error::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the toolkit.
///
/// Numeric payloads are stored as `f64` regardless of the scalar type in use.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("string length must be positive")]
    NonPositiveLength,
    #[error("upsilon must be non-negative (offending value {value} at x = {x})")]
    NegativeUpsilon { x: f64, value: f64 },
    #[error("position {x} is outside the admissible range")]
    PositionOutOfRange { x: f64 },
    #[error("density intervals overlap near x = {at}")]
    OverlappingDensityIntervals { at: f64 },
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("propagation tolerance not met on [{a}, {b}] (achieved {achieved:e})")]
    ToleranceNotMet { a: f64, b: f64, achieved: f64 },
    #[error("spectral parameter must be non-real")]
    NonRealRequired,
    #[error("truncation did not converge (last disk diameter {last_diameter:e})")]
    TruncationNotConverged { last_diameter: f64 },
    #[error("extrapolation of {what} is unstable (spread {spread:e})")]
    ExtrapolationUnstable { what: &'static str, spread: f64 },
    #[error("hamiltonian has H22 = 0 almost everywhere")]
    DegenerateHamiltonian,
    #[error("invalid hamiltonian: {0}")]
    InvalidHamiltonian(String),
    #[error("operation requires purely atomic coefficients")]
    NotAtomic,
    #[error("operation requires a finite length")]
    NotFiniteLength,
    #[error("spectral window must stay away from zero")]
    WindowTouchesAtomZero,
    #[error("unsupported element shape: {0}")]
    UnsupportedShape(String),
    #[error("root finding failed: {0}")]
    RootFinding(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ToleranceNotMet { .. }
                | Error::TruncationNotConverged { .. }
                | Error::ExtrapolationUnstable { .. }
                | Error::RootFinding(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

/// Every failure the numerical pipelines can report.
///
/// Variants split into two families: violated preconditions on the input
/// (see [`Error::is_precondition`]) and numerical failures that happen on
/// otherwise valid input.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Wiener norm {norm} is not below 1; the logarithmic series log(1+P) needs ||P||_W < 1")]
    NormTooLarge { norm: f64 },

    #[error("term count {terms} exceeds the cap of {cap} stored terms")]
    CapExceeded { terms: usize, cap: usize },

    #[error("coefficient overflow while moving to the line Im z = {y}")]
    Overflow { y: f64 },

    #[error("spectrum endpoint {freq} is not attained (|coefficient| <= drop_tol); zeros are not confined to a strip")]
    EndpointNotAttained { freq: f64 },

    #[error("spectrum is a single point; the series has no zeros to study")]
    DegenerateSpectrum,

    #[error("a zero lies on or too close to the contour near {re}{im:+}i (|Q| = {modulus:e})")]
    BoundaryZero { re: f64, im: f64, modulus: f64 },

    #[error("winding number {value} is not close to an integer (residual {residual})")]
    NonIntegerWinding { value: f64, residual: f64 },

    #[error("could not separate {count} zeros inside a rectangle of width {width:e}")]
    ResolutionLimit { count: usize, width: f64 },

    #[error("need at least {needed} points to build a numbering, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("|Q| = {modulus:e} at {re}{im:+}i, farther than eps from every known zero: a zero was missed")]
    ZeroEscape { re: f64, im: f64, modulus: f64 },

    #[error("a zero sits at the origin; translate the variable (x -> x + c) so that 0 is not a zero")]
    ZeroAtOrigin,

    #[error("zero set has not been numbered (run enumerate first)")]
    NotNumbered,

    #[error("quadrature did not converge at z = {re}{im:+}i (last change {change:e})")]
    QuadratureNotConverged { re: f64, im: f64, change: f64 },

    #[error("window too small: tail bound {tail:e} exceeds tolerance {tol:e}")]
    WindowTooSmall { tail: f64, tol: f64 },

    #[error("line Im z = {y} is not above the growth threshold L/2pi = {threshold}")]
    LineTooLow { y: f64, threshold: f64 },

    #[error("sum of |b/gamma| over 0 < |gamma| < 1 keeps growing under refinement ({partial})")]
    NeigDiverges { partial: f64 },

    #[error("reconstructed spectrum reaches {freq}, beyond the sanity bound {bound}")]
    SpectrumUnbounded { freq: f64, bound: f64 },

    #[error("zero sets differ: {detail}")]
    ZeroMismatch { detail: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True when the error reports a violated input assumption rather than
    /// a numerical breakdown.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::NormTooLarge { .. }
                | Error::EndpointNotAttained { .. }
                | Error::DegenerateSpectrum
                | Error::TooFewPoints { .. }
                | Error::ZeroAtOrigin
                | Error::NotNumbered
                | Error::WindowTooSmall { .. }
                | Error::LineTooLow { .. }
                | Error::InvalidInput(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

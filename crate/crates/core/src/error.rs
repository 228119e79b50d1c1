use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{re} + {im}i is not a finite point of the open upper half-plane")]
    NotInHalfPlane { re: f64, im: f64 },

    /// Imaginary part fell below the representable floor. Never clamped.
    #[error("imaginary part underflowed to {im:e}{}", generation.map(|g| format!(" at generation {g}")).unwrap_or_default())]
    BoundaryUnderflow { im: f64, generation: Option<usize> },

    #[error("degenerate denominator in Möbius step")]
    DegenerateDenominator,

    #[error("spectral parameter {lambda} lies outside the band (|λ| < {edge} required)")]
    OutOfBand { lambda: Complex64, edge: f64 },

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    #[error("indeterminate 0/0: {0}")]
    Indeterminate(&'static str),

    #[error("kernel condition violated: E_{sphere} has a nontrivial kernel")]
    KernelCondition { sphere: usize },

    #[error("size cap exceeded: {0}")]
    CapExceeded(String),

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("unit-vector normalization violated: |ω|² = {0}")]
    Normalization(f64),

    #[error("zero variance: c11 + c22 = {0} must be positive")]
    ZeroVariance(f64),

    #[error("graph: {0}")]
    Graph(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Attach a generation index to an underflow raised inside a sampler.
    pub(crate) fn at_generation(self, generation: usize) -> Self {
        match self {
            Error::BoundaryUnderflow { im, .. } => Error::BoundaryUnderflow {
                im,
                generation: Some(generation),
            },
            other => other,
        }
    }
}

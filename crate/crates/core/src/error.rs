use thiserror::Error;

/// Errors raised by the pricing library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PricingError {
    #[error("invalid valuation curve: {0}")]
    InvalidValuation(String),

    #[error("invalid price curve: {0}")]
    InvalidPriceCurve(String),

    #[error("invalid type distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid market instance: {0}")]
    InvalidInstance(String),

    #[error("size mismatch: expected {expected}, got {actual} ({what})")]
    Mismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("price curve is not non-decreasing at amount {at}")]
    NotMonotone { at: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("data grid resolution too fine: floor(eps*N/(m*L)) = 0 for eps={epsilon}, N={n_total}, m={m}, L={smoothness}")]
    ResolutionTooFine {
        epsilon: f64,
        n_total: usize,
        m: usize,
        smoothness: f64,
    },

    #[error("empty grid: {0}")]
    EmptyGrid(&'static str),

    #[error("price space has {count} curves, above the cap of {cap}")]
    CapExceeded { count: String, cap: u64 },

    #[error("instance too large for the brute-force oracle: {0}")]
    TooLarge(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl PricingError {
    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            PricingError::InvalidValuation(_) => "invalid_valuation",
            PricingError::InvalidPriceCurve(_) => "invalid_price_curve",
            PricingError::InvalidDistribution(_) => "invalid_distribution",
            PricingError::InvalidInstance(_) => "invalid_instance",
            PricingError::Mismatch { .. } => "mismatch",
            PricingError::NotMonotone { .. } => "not_monotone",
            PricingError::InvalidParameter(_) => "invalid_parameter",
            PricingError::ResolutionTooFine { .. } => "resolution_too_fine",
            PricingError::EmptyGrid(_) => "empty_grid",
            PricingError::CapExceeded { .. } => "cap_exceeded",
            PricingError::TooLarge(_) => "too_large",
            PricingError::Contract(_) => "contract",
            PricingError::Invariant(_) => "invariant",
            PricingError::Config(_) => "config",
            PricingError::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for PricingError {
    fn from(e: std::io::Error) -> Self {
        PricingError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, PricingError>;

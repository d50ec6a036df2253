use thiserror::Error;

/// Errors raised by the placement library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("demand is identically zero, throughput cannot be normalized")]
    ZeroDemand,
    #[error("point {point:?} lies outside the domain")]
    OutsideDomain { point: Vec<f64> },
    #[error("region {region} exceeds the domain")]
    RegionOutsideDomain { region: String },
    #[error("coincident positions: channel gain is singular at distance 0")]
    SingularGain,
    #[error("stations {0} and {1} share a position")]
    DuplicatePositions(usize, usize),
    #[error("total traffic is zero")]
    ZeroTraffic,
    #[error("transport map is not strictly increasing")]
    NonMonotoneMap,
    #[error("density barycenter is {0:e}, re-center the density at the origin first")]
    NotCentered(f64),
    #[error("operation requires a one-dimensional domain")]
    NotOneDimensional,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("brute force supports at most 3 stations, got {0}")]
    TooManyStations(usize),
    #[error("measure mass {got} does not match the traffic total {expected}")]
    MassMismatch { expected: f64, got: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

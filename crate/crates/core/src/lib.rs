//! Uniformly random lozenge tilings of polygons with `3k` sides.
//!
//! The crate provides exact enumeration and sampling (`oracle`, `sampler`),
//! the exact correlation kernel (`exact_kernel`), the limit shape via the
//! complex slope (`limit_shape`), and height-fluctuation moments compared
//! against the Gaussian free field (`fluctuations`).

pub mod exact_kernel;
pub mod fluctuations;
pub mod limit_shape;
pub mod linalg;
pub mod oracle;
pub mod polygon;
pub mod sampler;

pub use exact_kernel::{KernelEngine, LozengeType};
pub use polygon::{HalfInt, LimitPolygon, PolygonSpec, Violation};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid polygon: {0}")]
    InvalidPolygon(Violation),
    #[error("invalid limit polygon: {0}")]
    InvalidLimitPolygon(String),
    #[error("N = {n} is too small to scale this polygon: {reason}")]
    ScaleTooSmall { n: usize, reason: String },
    #[error("point out of range: {0}")]
    OutOfRange(String),
    #[error("enumeration exceeds cap of {cap} tilings")]
    EnumerationCap { cap: u64 },
    #[error("point ({chi}, {eta}) is not in the liquid region")]
    NotLiquid { chi: f64, eta: f64 },
    #[error("no admissible path for anchor ({x}, {n})")]
    PathConflict { x: i64, n: i64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

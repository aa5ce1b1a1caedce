use thiserror::Error;

/// Errors produced by the geometric operations of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("filling curve {coeffs:?} is not primitive (gcd = {gcd})")]
    NotPrimitive { coeffs: Vec<i64>, gcd: i64 },

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("{what} = {value} outside the allowed range {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("stencil reaches r = {reach} outside the radial domain starting at {r_lo}; use the polar chart near the horizon")]
    StencilOutsideDomain { reach: f64, r_lo: f64 },

    #[error("seam mismatch: boundary Gram matrices differ by {discrepancy:e} (tolerance {tolerance:e})")]
    SeamMismatch { discrepancy: f64, tolerance: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("invalid group presentation: {0}")]
    InvalidGroup(String),

    #[error("malformed relation word: {0}")]
    MalformedWord(String),

    #[error("filling along {sigma:?} is not admissible: {reason}")]
    NotAdmissible { sigma: Vec<i64>, reason: String },

    #[error("unknown catalog entry `{0}`")]
    UnknownCatalogEntry(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("Euler characteristic {chi} violates the sign constraint (-1)^{half_dim} chi > 0")]
    EulerSign { chi: i64, half_dim: usize },

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("chart mismatch: {0}")]
    ChartMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

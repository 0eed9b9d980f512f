//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by state construction, evolution, analysis and compilation.
#[derive(Debug, Error)]
pub enum Error {
    /// System dimensions violate `N >= 1`, `d >= 2`.
    #[error("invalid system dimensions: n_particles = {n}, n_levels = {d}")]
    InvalidDims { n: usize, d: usize },

    /// A Dicke label does not fit the given dimensions.
    #[error("invalid Dicke label {label:?} for N = {n}, d = {d}")]
    InvalidLabel {
        label: Vec<usize>,
        n: usize,
        d: usize,
    },

    /// Two values that must share dimensions do not.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    /// An amplitude vector is not normalized.
    #[error("state is not normalized: |norm - 1| = {deviation:.3e}")]
    NotNormalized { deviation: f64 },

    /// A matrix expected to be unitary is not, within tolerance.
    #[error("matrix is not unitary: max |u\u{2020}u - 1| = {deviation:.3e}")]
    NonUnitary { deviation: f64 },

    /// A matrix expected to be Hermitian is not, within tolerance.
    #[error("matrix is not Hermitian: max asymmetry = {deviation:.3e}")]
    NonHermitian { deviation: f64 },

    /// A density matrix fails trace or positivity requirements.
    #[error("density matrix is unphysical: {reason}")]
    UnphysicalDensity { reason: String },

    /// The full tensor-product space would exceed the configured cap.
    #[error("full-space size {required} exceeds cap {cap}")]
    ExpandCapExceeded { required: usize, cap: usize },

    /// An operation defined only for a specific level count was called
    /// with another.
    #[error("operation requires d = {expected}, got d = {actual}")]
    UnsupportedDimension { expected: usize, actual: usize },

    /// Too few probe samples to resolve the MQC spectrum without aliasing.
    #[error("undersampled sweep: {samples} samples < {required} required for m_max = {m_max}")]
    Undersampled {
        samples: usize,
        required: usize,
        m_max: i64,
    },

    /// Coherent components that should be orthogonal are not.
    #[error("coherent components are not mutually orthogonal: max |overlap| = {overlap:.3e}")]
    NonOrthogonalComponents { overlap: f64 },

    /// A GHZ block violates the Cauchy-Schwarz relation between a
    /// coherence magnitude and its populations.
    #[error("GHZ block violates Cauchy-Schwarz: |rho_{i}{j}| = {magnitude:.6e} > sqrt(rho_{i}{i} rho_{j}{j}) = {limit:.6e}")]
    CauchySchwarzViolation {
        i: usize,
        j: usize,
        magnitude: f64,
        limit: f64,
    },

    /// The positivity parameter exceeded 1, so no positive semidefinite
    /// completion of the block exists.
    #[error("block is not PSD-completable: positivity parameter s = {s:.6} > 1")]
    NotPsdCompletable { s: f64 },

    /// A gate refers to levels outside `[0, d)` or an invalid pair.
    #[error("invalid gate: {reason}")]
    InvalidGate { reason: String },

    /// Catch-all for out-of-domain scalar parameters.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Malformed JSON input.
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

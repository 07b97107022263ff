use thiserror::Error;

/// Errors raised anywhere in the pipeline. Contract violations name the
/// module that detected them so a failing run can be traced.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid of {given} points is too small for potential bandwidth {bandwidth}; need at least {required}")]
    GridTooSmall {
        given: usize,
        bandwidth: usize,
        required: usize,
    },
    #[error("grid size {0} is not a power of two")]
    GridNotPowerOfTwo(usize),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("window {window} needs Fourier coefficients up to index {needed}, but the grid only resolves {available}")]
    WindowExceedsGrid {
        window: usize,
        needed: usize,
        available: usize,
    },
    #[error("spectral components {m} and {n} overlap (distance {distance:e}); r = {r} violates the non-resonance condition")]
    OverlappingComponents {
        m: i64,
        n: i64,
        distance: f64,
        r: num_complex::Complex64,
    },
    #[error("delta_P = {delta_p:e} exceeds the configured cap {cap:e}; r = {r} is too close to a nonzero integer for the generic branch")]
    NearResonance {
        delta_p: f64,
        cap: f64,
        r: num_complex::Complex64,
    },
    #[error("zero denominator in Gamma at block ({m}, {n})")]
    ZeroDenominator { m: i64, n: i64 },
    #[error("I + Gamma_k Q is numerically singular (smallest singular value {0:e})")]
    SingularTransform(f64),
    #[error("B is supported in the central square P_({0}); the preliminary transform is already final")]
    TrivialPerturbation(usize),
    #[error("fixed-point iteration did not converge in {iterations} steps (last step {last_step:e}, contraction estimate {ratio:.4})")]
    NoConvergence {
        iterations: usize,
        last_step: f64,
        ratio: f64,
    },
    #[error("{module}: {what} = {value:e} exceeds threshold {threshold:e}")]
    ContractViolation {
        module: &'static str,
        what: &'static str,
        value: f64,
        threshold: f64,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("time grid too coarse: need at least {required} samples, got {actual}")]
    GridTooCoarse { required: usize, actual: usize },

    #[error("parameter {value} outside [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("operator at endpoint {lambda} is not invertible (min |eigenvalue| = {min_abs:e})")]
    EndpointNotInvertible { lambda: f64, min_abs: f64 },

    #[error("partition refinement exceeded depth {depth} near {lambda}")]
    RefinementDepth { depth: usize, lambda: f64 },

    #[error("irregular crossing at {lambda}: crossing form is degenerate (min |eigenvalue| = {min_abs:e})")]
    IrregularCrossing { lambda: f64, min_abs: f64 },

    #[error("crossings closer than the resolution near {lambda}; regularize the path")]
    CrossingsTooClose { lambda: f64 },

    #[error("crossing search exhausted its budget of {budget} evaluations")]
    CrossingSearchExhausted { budget: usize },

    #[error("path has no derivative evaluator")]
    MissingDerivative,

    #[error("shift search exhausted; tried {tried:?}")]
    RegularizationExhausted { tried: Vec<f64> },

    #[error("parity routes disagree: degree route {degree}, spectral flow route {sfl_mod_two}")]
    ParityDisagreement { degree: u8, sfl_mod_two: u8 },

    #[error("comparison ordering violated at {endpoint}: min eigenvalue {min_eigenvalue:e}")]
    ComparisonOrdering { endpoint: &'static str, min_eigenvalue: f64 },

    #[error("comparison principle failed: sfl(L) = {sfl_l} > sfl(M) = {sfl_m}")]
    ComparisonFailed { sfl_l: i64, sfl_m: i64 },

    #[error("integration did not converge: step doubling changed the monodromy by {change:e}")]
    IntegrationNotConverged { change: f64 },

    #[error("envelope did not converge under grid doubling (last change {change:e})")]
    EnvelopeNotConverged { change: f64 },

    #[error("truncation not converged: K = {k} gives {at_k}, K = {k_check} gives {at_check}")]
    NotConverged { k: usize, at_k: i64, k_check: usize, at_check: i64 },

    #[error("linearization has a {kernel_dim}-dimensional periodic kernel at endpoint {lambda}")]
    NotAdmissible { lambda: f64, kernel_dim: usize },

    #[error("spectral flow certificate failed: {0}")]
    CertificateFailed(String),

    #[error("family `{0}` has no nonlinear gradient")]
    MissingNonlinearity(String),

    #[error("Newton diverged after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("singular Jacobian on the trivial branch at {lambda}; switch branches instead of correcting")]
    SingularJacobian { lambda: f64 },

    #[error("trivial kernel at {lambda}")]
    TrivialKernel { lambda: f64 },

    #[error("branch direction is zero")]
    ZeroTangent,

    #[error("corrector failed at step {step} after reducing the step to {min_step:e}")]
    CorrectorFailed { step: usize, min_step: f64 },

    #[error("unknown builtin family `{name}`; available: {available}")]
    UnknownFamily { name: String, available: String },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),
}

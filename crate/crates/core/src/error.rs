//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by model construction, quadrature, root finding,
/// sampling and the replication engine.
#[derive(Debug, Error)]
pub enum MmeError {
    /// Requested builtin model name is not in the catalog.
    #[error("unknown builtin model `{0}`")]
    UnknownModel(String),

    /// A model or weight violates a structural requirement.
    #[error("invalid model or weight: {0}")]
    Validation(String),

    /// Adaptive quadrature hit its refinement limit before reaching the
    /// requested tolerance. Carries the best estimate and its error bound.
    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error_bound:e}, tol {tol:e}")]
    QuadratureFailure {
        estimate: f64,
        error_bound: f64,
        tol: f64,
    },

    /// Integrand returned NaN or infinity inside the window.
    #[error("non-finite integrand over [{a}, {b}]")]
    NonFiniteIntegral { a: f64, b: f64 },

    /// dm/dθ changes sign (or vanishes) on the monotonicity grid; the
    /// moment equation has no single-valued inverse.
    #[error("moment map is not monotone near theta = {theta}")]
    NonMonotoneMap { theta: f64 },

    /// |dm/dθ| below tolerance at the requested point.
    #[error("moment map is singular at theta = {theta}: |dm/dtheta| = {derivative:e}")]
    SingularMap { theta: f64, derivative: f64 },

    /// Value outside the range of the moment map.
    #[error("value {value} outside the moment range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    /// The weight is (numerically) zero almost everywhere w.r.t. the intensity.
    #[error("degenerate weight: a2 = {a2:e} is not positive")]
    DegenerateWeight { a2: f64 },

    /// Input outside a closed-form estimator's domain.
    #[error("argument outside formula domain: {0}")]
    FormulaDomain(String),

    /// Invalid argument to an operation.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Thinning proposed a point where λ exceeds the declared bound.
    #[error("intensity bound violated at t = {t}: lambda = {lambda} > bound = {bound}")]
    BoundViolation { t: f64, lambda: f64, bound: f64 },

    /// Bad experiment or grid configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Safeguarded root finder failed to converge.
    #[error("root finder did not converge after {iterations} iterations (residual {residual:e})")]
    RootFailure { iterations: usize, residual: f64 },

    /// A replication inside the Monte Carlo engine failed.
    #[error("replication {replication} failed: {source}")]
    Replication {
        replication: u32,
        #[source]
        source: Box<MmeError>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MmeError>;

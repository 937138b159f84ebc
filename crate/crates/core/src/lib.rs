//! Moment-matching estimation for inhomogeneous Poisson processes.
//!
//! Given n independent realizations of a Poisson process with intensity
//! λ(θ,t), the estimator matches the empirical weighted sum of events
//! against m(θ) = ∫ g λ dt and inverts. This crate provides:
//!
//! * a catalog of intensity models with their weight functions and
//!   numeric regularity checks ([`intensity`], [`catalog`]);
//! * adaptive quadrature, the moment map and its θ-derivatives
//!   ([`moments`]);
//! * the inverse map, its derivatives, and the ψ coefficients of the
//!   estimator's stochastic expansion ([`inverse`]);
//! * path samplers (thinning and time rescaling) and the stochastic
//!   integrals feeding the estimator ([`simulate`]);
//! * the clamped estimator and closed-form oracles ([`estimator`]);
//! * Hermite-polynomial corrections to the Gaussian law of the normalized
//!   error: predicted moments, CDF and density approximations
//!   ([`expansion`]);
//! * a deterministic, optionally data-parallel replication engine that
//!   compares all of the above against simulation ([`montecarlo`]).
//!
//! The `parallel` feature (on by default) runs replications on a rayon
//! pool; disabling it yields a dependency-free sequential build with
//! bit-identical results.

pub mod catalog;
pub mod error;
pub mod estimator;
pub mod expansion;
pub mod intensity;
pub mod inverse;
pub mod moments;
pub mod montecarlo;
pub mod normal;
pub mod simulate;

pub use catalog::{builtin_model, closed_form, ClosedForm, FunctionSpec, GaussianWeight, ModelSpec};
pub use error::{MmeError, Result};
pub use estimator::{closed_form_mme, mme_estimate, ClampSide, MmeResult};
pub use expansion::{
    edgeworth_cdf, edgeworth_cdf_clipped, edgeworth_density, expansion_coefficients, hermite,
    normalized_error, predicted_mean_bias, predicted_second_moment, second_moment_bracket,
    second_moment_limit, stochastic_expansion_eval, EdgeworthOrder, ExpansionCoefficients,
};
pub use intensity::{
    check_conditions, ConditionCheckConfig, ConditionReport, IntensityModel, ThetaInterval,
    WeightFunction, Window,
};
pub use inverse::{inverse_map, InverseDerivatives, InverseMap, PsiCoefficients};
pub use moments::{am_coefficients, integrate, moment_map, AmCoefficients, MapDirection, MomentMap};
pub use montecarlo::{
    empirical_cdf, good_set_diagnostics, ks_distance, ks_two_sample, run_experiment,
    ExperimentConfig, MonteCarloReport, XGridSpec,
};
pub use simulate::{
    sample_batch, sample_path, stochastic_integral, EventPath, PathSampler, PathSeed, SampleBatch,
    SamplingMethod,
};

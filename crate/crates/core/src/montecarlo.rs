//! Replication engine: runs N independent batches, estimates on each, and
//! compares every empirical quantity with its predicted expansion.
//!
//! Determinism contract: replication i draws all of its randomness from
//! ChaCha streams keyed by (master_seed, i, path); outcomes are collected
//! into an index-ordered vector and aggregated sequentially. The report is
//! therefore bit-identical for any worker count, including the sequential
//! build (`--no-default-features`).

use serde::{Deserialize, Serialize};

use crate::catalog::{builtin_model, ModelSpec};
use crate::error::{MmeError, Result};
use crate::estimator::{mme_estimate, ClampSide};
use crate::expansion::{
    edgeworth_cdf, expansion_coefficients, normalized_error, predicted_mean_bias,
    predicted_second_moment, second_moment_limit, EdgeworthOrder, ExpansionCoefficients,
};
use crate::inverse::inverse_map;
use crate::moments::{am_coefficients, moment_map};
use crate::normal;
use crate::simulate::{sample_batch_with_m0, PathSampler, SamplingMethod};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

fn default_seed() -> u64 {
    42
}
fn default_n() -> u32 {
    1000
}
fn default_replications() -> u32 {
    10_000
}
fn default_expansion_order() -> usize {
    3
}
fn default_quadrature_tol() -> f64 {
    1e-10
}
fn default_root_tol() -> f64 {
    1e-12
}
fn default_x_grid() -> XGridSpec {
    XGridSpec {
        min: -4.0,
        max: 4.0,
        points: 81,
    }
}

/// Evaluation grid for the empirical/approximate CDF comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XGridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl XGridSpec {
    pub fn values(&self) -> Vec<f64> {
        let step = (self.max - self.min) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.min + i as f64 * step).collect()
    }
}

/// Full description of one reproducible experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub theta0: f64,
    /// Paths per replication.
    #[serde(default = "default_n")]
    pub n: u32,
    /// Number of replications.
    #[serde(default = "default_replications", alias = "N")]
    pub replications: u32,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    /// Expansion order k for the residual-threshold diagnostics (1..=3).
    #[serde(default = "default_expansion_order")]
    pub expansion_order: usize,
    /// Radius of the locality event |θ̌ − θ₀| < δ; (β − α)/4 when unset.
    #[serde(default)]
    pub delta: Option<f64>,
    /// Run the regularity checks up front and record the outcome in the
    /// report. A failed check never aborts the run.
    #[serde(default)]
    pub verify_conditions: bool,
    #[serde(default = "default_x_grid")]
    pub x_grid: XGridSpec,
    #[serde(default = "default_quadrature_tol")]
    pub quadrature_tol: f64,
    #[serde(default = "default_root_tol")]
    pub root_tol: f64,
    #[serde(default)]
    pub method: SamplingMethod,
    /// Output directory for CLI artifacts; unused by the library.
    #[serde(default)]
    pub output_dir: Option<String>,
}

impl ExperimentConfig {
    pub fn new(model: ModelSpec, theta0: f64) -> Self {
        Self {
            model,
            theta0,
            n: default_n(),
            replications: default_replications(),
            master_seed: default_seed(),
            expansion_order: default_expansion_order(),
            delta: None,
            verify_conditions: false,
            x_grid: default_x_grid(),
            quadrature_tol: default_quadrature_tol(),
            root_tol: default_root_tol(),
            method: SamplingMethod::Thinning,
            output_dir: None,
        }
    }

    /// The benchmark preset: periodic_sine at θ₀ = π/3, n = 1000, N = 10000.
    pub fn periodic_sine_preset() -> Self {
        Self::new(ModelSpec::periodic_sine(), std::f64::consts::FRAC_PI_3)
    }

    pub fn resolved_delta(&self) -> Result<f64> {
        let (alpha, beta) = self.theta_interval()?;
        Ok(self.delta.unwrap_or((beta - alpha) / 4.0))
    }

    fn theta_interval(&self) -> Result<(f64, f64)> {
        let (model, _) = builtin_model(&self.model)?;
        let iv = model.theta_interval();
        Ok((iv.alpha(), iv.beta()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.replications == 0 {
            return Err(MmeError::Config("n and replications must be >= 1".into()));
        }
        if !(1..=3).contains(&self.expansion_order) {
            return Err(MmeError::Config(format!(
                "expansion_order must be 1..=3, got {}",
                self.expansion_order
            )));
        }
        if self.x_grid.points < 2 || self.x_grid.min >= self.x_grid.max {
            return Err(MmeError::Config("degenerate x_grid".into()));
        }
        let (alpha, beta) = self.theta_interval()?;
        let delta = self.resolved_delta()?;
        if delta <= 0.0 {
            return Err(MmeError::Config(format!("delta must be positive, got {delta}")));
        }
        if !(alpha + delta < self.theta0 && self.theta0 < beta - delta) {
            return Err(MmeError::Config(format!(
                "need alpha + delta < theta0 < beta - delta: alpha = {alpha}, beta = {beta}, delta = {delta}, theta0 = {}",
                self.theta0
            )));
        }
        Ok(())
    }
}

/// Point statistic with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSummary {
    /// E|θ̌ − θ₀| and E(θ̌ − θ₀)².
    pub abs_moment_p1: Estimate,
    pub abs_moment_p2: Estimate,
    /// n·E(θ̌ − θ₀)², the scale the predictions are stated in.
    pub second_moment_scaled: Estimate,
    pub mean_bias: Estimate,
    pub eta_moment2: Estimate,
    pub eta_moment3: Estimate,
    pub eta_moment4: Estimate,
    pub clamp_freq: Estimate,
    pub clamp_lower_freq: Estimate,
    pub clamp_upper_freq: Estimate,
    pub empty_batch_freq: Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsDistances {
    pub gaussian: f64,
    pub edgeworth1: f64,
    pub edgeworth2: f64,
}

/// Empirical frequencies of the two expansion-validity events, with the
/// thresholds that define them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoodSetDiagnostics {
    pub delta: f64,
    /// Frequency of |θ̌ − θ₀| ≥ δ.
    pub b1_violation_freq: Estimate,
    /// Frequency of |η|^{k+1} ≥ n^{1/4}(k+1)!/C_{k+1}.
    pub b2_violation_freq: Estimate,
    /// The |η| threshold implied above.
    pub b2_eta_threshold: f64,
    /// Grid estimate of sup |G^{(k+1)}| over the δ-neighbourhood.
    pub c_k_plus_1: f64,
    /// inf over the θ-grid of |dm/dθ|.
    pub kappa: f64,
    /// κ·δ, the guaranteed separation of moment values outside the δ-ball.
    pub rho_lower_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    pub second_moment_scaled: f64,
    pub second_moment_limit: f64,
    pub mean_bias: f64,
    pub eta_moment2: f64,
    pub eta_moment3: f64,
    pub eta_moment4: f64,
    /// e^{−nΛ}: chance that every path in a batch is empty.
    pub empty_batch_probability: f64,
    pub coefficients: ExpansionCoefficients,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfRow {
    pub x: f64,
    pub empirical: f64,
    pub gaussian: f64,
    pub edgeworth1: f64,
    pub edgeworth2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub schema_version: u32,
    pub model: String,
    pub theta0: f64,
    pub n: u32,
    pub replications: u32,
    pub master_seed: u64,
    pub expansion_order: usize,
    /// Outcome of the up-front regularity checks when the config asked for
    /// them; None when they were skipped. Advisory only.
    pub conditions_verified: Option<bool>,
    pub empirical: EmpiricalSummary,
    pub ks: KsDistances,
    pub good_sets: GoodSetDiagnostics,
    pub predictions: Predictions,
    /// Raw (unclipped) approximations on the x-grid.
    pub cdf_grid: Vec<CdfRow>,
}

impl MonteCarloReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// CSV of the CDF comparison, approximations clipped to [0, 1] for
    /// plotting. 17 significant digits.
    pub fn cdf_csv(&self) -> String {
        let mut out = String::from("x,empirical,gaussian,edgeworth1,edgeworth2\n");
        for row in &self.cdf_grid {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                row.x,
                row.empirical,
                row.gaussian,
                row.edgeworth1.clamp(0.0, 1.0),
                row.edgeworth2.clamp(0.0, 1.0),
            ));
        }
        out
    }
}

struct Outcome {
    dev: f64,
    err_norm: f64,
    eta: f64,
    clamp: ClampSide,
    empty: bool,
}

/// Run the experiment: N replications of (sample n paths → m̄ → θ̌),
/// aggregated into empirical moments, an empirical CDF with KS distances
/// against the Gaussian and both corrected approximations, and the
/// expansion-validity diagnostics.
pub fn run_experiment(config: &ExperimentConfig) -> Result<MonteCarloReport> {
    config.validate()?;
    let (model, weight) = builtin_model(&config.model)?;
    let conditions_verified = if config.verify_conditions {
        let check_cfg = crate::intensity::ConditionCheckConfig {
            theta0: Some(config.theta0),
            ..Default::default()
        };
        Some(crate::intensity::check_conditions(&model, &weight, 8, &check_cfg)?.verified)
    } else {
        None
    };
    let map = moment_map(&model, &weight, config.quadrature_tol)?;
    let am = am_coefficients(&map, config.theta0)?;
    let inv = inverse_map(map, config.root_tol)?;
    let psi = inv.psi(config.theta0)?;
    let coeffs = expansion_coefficients(&psi, &am)?;
    let delta = config.resolved_delta()?;
    let k = config.expansion_order;
    let c_k1 = inv.derivative_bound(config.theta0, delta, k + 1, 129)?;
    let kappa = kappa_on_grid(&inv)?;
    let m0 = inv.map().m(config.theta0)?;
    let total_mass = model.total_mass(config.theta0, config.quadrature_tol)?;
    let sampler = PathSampler::new(&model, config.theta0, config.method, config.quadrature_tol)?;
    let effective_weight = inv.map().weight().clone();

    let run_one = |i: u32| -> Result<Outcome> {
        let batch = sample_batch_with_m0(
            &sampler,
            &effective_weight,
            config.theta0,
            m0,
            config.n,
            config.master_seed,
            i,
        )
        .map_err(|e| MmeError::Replication {
            replication: i,
            source: Box::new(e),
        })?;
        let est = mme_estimate(&inv, batch.mbar).map_err(|e| MmeError::Replication {
            replication: i,
            source: Box::new(e),
        })?;
        Ok(Outcome {
            dev: est.theta_hat - config.theta0,
            err_norm: normalized_error(&coeffs, est.theta_hat, config.theta0, config.n as u64),
            eta: batch.eta,
            clamp: est.clamped,
            empty: batch.all_empty(),
        })
    };

    #[cfg(feature = "parallel")]
    let results: Vec<Result<Outcome>> = (0..config.replications)
        .into_par_iter()
        .map(run_one)
        .collect();
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<Outcome>> = (0..config.replications).map(run_one).collect();

    let mut outcomes = Vec::with_capacity(results.len());
    for r in results {
        outcomes.push(r?);
    }

    let mut report = aggregate(config, &coeffs, delta, k, c_k1, kappa, total_mass, &outcomes)?;
    report.conditions_verified = conditions_verified;
    Ok(report)
}

fn kappa_on_grid(inv: &crate::inverse::InverseMap) -> Result<f64> {
    let iv = inv.map().model().theta_interval();
    let mut kappa = f64::INFINITY;
    for theta in iv.grid(crate::moments::MONOTONE_GRID_POINTS) {
        kappa = kappa.min(inv.map().m_deriv(theta, 1)?.abs());
    }
    Ok(kappa)
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone) -> Estimate {
    let n = values.clone().count();
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = if n > 1 {
        values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    Estimate {
        value: mean,
        se: (var / n as f64).sqrt(),
    }
}

/// Frequency with an add-half (Agresti-style) standard error, strictly
/// positive even for zero counts.
fn freq_and_se(count: usize, n: usize) -> Estimate {
    let p = count as f64 / n as f64;
    let p_tilde = (count as f64 + 0.5) / (n as f64 + 1.0);
    Estimate {
        value: p,
        se: (p_tilde * (1.0 - p_tilde) / n as f64).sqrt(),
    }
}

#[allow(clippy::too_many_arguments)]
fn aggregate(
    config: &ExperimentConfig,
    coeffs: &ExpansionCoefficients,
    delta: f64,
    k: usize,
    c_k1: f64,
    kappa: f64,
    total_mass: f64,
    outcomes: &[Outcome],
) -> Result<MonteCarloReport> {
    let n_f = config.n as f64;
    let big_n = outcomes.len();

    let abs_p1 = mean_and_se(outcomes.iter().map(|o| o.dev.abs()));
    let abs_p2 = mean_and_se(outcomes.iter().map(|o| o.dev * o.dev));
    let scaled = Estimate {
        value: n_f * abs_p2.value,
        se: n_f * abs_p2.se,
    };
    let bias = mean_and_se(outcomes.iter().map(|o| o.dev));
    let eta2 = mean_and_se(outcomes.iter().map(|o| o.eta * o.eta));
    let eta3 = mean_and_se(outcomes.iter().map(|o| o.eta.powi(3)));
    let eta4 = mean_and_se(outcomes.iter().map(|o| o.eta.powi(4)));
    let clamp_lower = outcomes
        .iter()
        .filter(|o| o.clamp == ClampSide::Lower)
        .count();
    let clamp_upper = outcomes
        .iter()
        .filter(|o| o.clamp == ClampSide::Upper)
        .count();
    let clamp = freq_and_se(clamp_lower + clamp_upper, big_n);
    let empty = outcomes.iter().filter(|o| o.empty).count();
    let empty_freq = freq_and_se(empty, big_n);

    // Pooled sorted normalized errors drive both the KS distances and the
    // empirical CDF on the grid.
    let mut errors: Vec<f64> = outcomes.iter().map(|o| o.err_norm).collect();
    errors.sort_by(|a, b| a.total_cmp(b));
    let n_u64 = config.n as u64;
    let ks = KsDistances {
        gaussian: ks_distance(&errors, normal::cdf)?,
        edgeworth1: ks_distance(&errors, |x| {
            edgeworth_cdf(coeffs, x, n_u64, EdgeworthOrder::One)
        })?,
        edgeworth2: ks_distance(&errors, |x| {
            edgeworth_cdf(coeffs, x, n_u64, EdgeworthOrder::Two)
        })?,
    };

    let cdf_grid = config
        .x_grid
        .values()
        .into_iter()
        .map(|x| CdfRow {
            x,
            empirical: empirical_cdf(&errors, x),
            gaussian: normal::cdf(x),
            edgeworth1: edgeworth_cdf(coeffs, x, n_u64, EdgeworthOrder::One),
            edgeworth2: edgeworth_cdf(coeffs, x, n_u64, EdgeworthOrder::Two),
        })
        .collect();

    let devs: Vec<f64> = outcomes.iter().map(|o| o.dev).collect();
    let etas: Vec<f64> = outcomes.iter().map(|o| o.eta).collect();
    let good_sets = good_set_diagnostics(&devs, &etas, delta, k, c_k1, kappa, config.n)?;

    let eps2 = 1.0 / n_f;
    let predictions = Predictions {
        second_moment_scaled: predicted_second_moment(coeffs, n_u64),
        second_moment_limit: second_moment_limit(coeffs),
        mean_bias: predicted_mean_bias(coeffs, n_u64),
        eta_moment2: coeffs.am.a2,
        eta_moment3: coeffs.am.a3 / n_f.sqrt(),
        eta_moment4: 3.0 * coeffs.am.a2 * coeffs.am.a2 + coeffs.am.a4 * eps2,
        empty_batch_probability: (-n_f * total_mass).exp(),
        coefficients: *coeffs,
    };

    Ok(MonteCarloReport {
        schema_version: REPORT_SCHEMA_VERSION,
        model: config.model.name().to_string(),
        theta0: config.theta0,
        n: config.n,
        replications: config.replications,
        master_seed: config.master_seed,
        expansion_order: k,
        conditions_verified: None,
        empirical: EmpiricalSummary {
            abs_moment_p1: abs_p1,
            abs_moment_p2: abs_p2,
            second_moment_scaled: scaled,
            mean_bias: bias,
            eta_moment2: eta2,
            eta_moment3: eta3,
            eta_moment4: eta4,
            clamp_freq: clamp,
            clamp_lower_freq: freq_and_se(clamp_lower, big_n),
            clamp_upper_freq: freq_and_se(clamp_upper, big_n),
            empty_batch_freq: empty_freq,
        },
        ks,
        good_sets,
        predictions,
        cdf_grid,
    })
}

/// Empirical CDF of a sorted sample at x: #{s ≤ x}/N.
pub fn empirical_cdf(sorted: &[f64], x: f64) -> f64 {
    let idx = sorted.partition_point(|&s| s <= x);
    idx as f64 / sorted.len() as f64
}

/// Kolmogorov–Smirnov distance between a sorted sample and a reference CDF:
/// both one-sided gaps are checked at every sample point.
pub fn ks_distance<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> Result<f64> {
    if sorted.is_empty() {
        return Err(MmeError::Argument("KS distance needs a nonempty sample".into()));
    }
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n - f).abs());
        d = d.max((f - i as f64 / n).abs());
    }
    Ok(d)
}

/// Two-sample KS distance (tie-aware): sup over the pooled points of the
/// gap between the two empirical CDFs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(MmeError::Argument("KS distance needs nonempty samples".into()));
    }
    let mut xs = a.to_vec();
    xs.sort_by(|p, q| p.total_cmp(q));
    let mut ys = b.to_vec();
    ys.sort_by(|p, q| p.total_cmp(q));
    let mut pooled = xs.clone();
    pooled.extend_from_slice(&ys);
    pooled.sort_by(|p, q| p.total_cmp(q));
    pooled.dedup();
    let mut d = 0.0f64;
    for &x in &pooled {
        d = d.max((empirical_cdf(&xs, x) - empirical_cdf(&ys, x)).abs());
    }
    Ok(d)
}

/// Frequencies of the two expansion-validity violations from batchwise θ̌
/// and η values, plus the thresholds used.
pub fn good_set_diagnostics(
    devs: &[f64],
    etas: &[f64],
    delta: f64,
    k: usize,
    c_k_plus_1: f64,
    kappa: f64,
    n: u32,
) -> Result<GoodSetDiagnostics> {
    if devs.len() != etas.len() || devs.is_empty() {
        return Err(MmeError::Argument(
            "good-set diagnostics need matching nonempty dev/eta slices".into(),
        ));
    }
    if c_k_plus_1 < 0.0 || !c_k_plus_1.is_finite() {
        return Err(MmeError::Argument(format!(
            "C_(k+1) must be finite and nonnegative, got {c_k_plus_1}"
        )));
    }
    let big_n = devs.len();
    let b1_count = devs.iter().filter(|d| d.abs() >= delta).count();
    let factorial = (1..=(k as u64 + 1)).product::<u64>() as f64;
    // C_(k+1) = 0 means the order-(k+1) inverse derivative vanishes (affine
    // maps): the Taylor remainder is identically zero and the residual
    // threshold is infinite.
    let power_threshold = if c_k_plus_1 > 0.0 {
        (n as f64).powf(0.25) * factorial / c_k_plus_1
    } else {
        f64::INFINITY
    };
    let eta_threshold = power_threshold.powf(1.0 / (k as f64 + 1.0));
    let b2_count = etas
        .iter()
        .filter(|e| e.abs().powi(k as i32 + 1) >= power_threshold)
        .count();
    Ok(GoodSetDiagnostics {
        delta,
        b1_violation_freq: freq_and_se(b1_count, big_n),
        b2_violation_freq: freq_and_se(b2_count, big_n),
        b2_eta_threshold: eta_threshold,
        c_k_plus_1,
        kappa,
        rho_lower_bound: kappa * delta,
    })
}

//! Builtin model catalog.
//!
//! Four intensity families, each bundled with its natural weight function
//! and, where the family admits one, a closed-form moment map:
//!
//! * `amplitude` — λ(θ,t) = θ·h(t) + λ₀ on [0, τ]; m(θ) = θ∫gh + λ₀∫g.
//! * `exp_decay` — λ(θ,t) = (1+t⁴)e^{−θt²} + q(t) on a truncation [0, t_max]
//!   of the half line, with g = h′/f = 2t/(1+t⁴); m(θ) ≈ 1/θ + R. The map is
//!   decreasing in θ; the moment machinery flips it internally.
//! * `gaussian` — λ(θ,t) = a·exp(−(t−b)²/(2θ²)) on a truncation of the real
//!   line (±trunc_sigmas·β around b); weight (t−b)² gives m = θ³a√(2π),
//!   weight |t−b| gives m = 2aθ².
//! * `periodic_sine` — λ(θ,t) = 2 sin(2πt + θ) + 3 on [0, 1] with
//!   g = cos(2πt); m(θ) = sin θ.
//!
//! Truncation bounds are chosen so the dropped tail mass for the default
//! parameter ranges is below 1e-12 (exp_decay: e^{−θ t_max²} terms at
//! t_max = 10; gaussian: beyond 8 standard deviations).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{MmeError, Result};
use crate::intensity::{AnalyticMoments, IntensityModel, ThetaInterval, WeightFunction, Window};
use crate::moments::integrate;
use crate::normal::SQRT_2PI;

/// Serializable scalar function menu used for configurable model parts
/// (amplitude's h and g, exp_decay's q). Arbitrary functions remain
/// available through the library API as closures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionSpec {
    Constant { value: f64 },
    /// offset + amplitude·cos(2π·frequency·t + phase)
    Cosine {
        amplitude: f64,
        frequency: f64,
        phase: f64,
        offset: f64,
    },
    Polynomial { coeffs: Vec<f64> },
    /// scale·exp(−(t−center)²/(2·width²))
    GaussianBump { scale: f64, center: f64, width: f64 },
}

impl FunctionSpec {
    pub fn constant(value: f64) -> Self {
        FunctionSpec::Constant { value }
    }

    pub fn zero() -> Self {
        FunctionSpec::Constant { value: 0.0 }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            FunctionSpec::Constant { value } => *value,
            FunctionSpec::Cosine {
                amplitude,
                frequency,
                phase,
                offset,
            } => offset + amplitude * (2.0 * PI * frequency * t + phase).cos(),
            FunctionSpec::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
            }
            FunctionSpec::GaussianBump {
                scale,
                center,
                width,
            } => {
                let z = (t - center) / width;
                scale * (-0.5 * z * z).exp()
            }
        }
    }

    /// Upper bound on the function over the window; exact for the closed
    /// families, grid maximum with a 5% safety margin for polynomials.
    pub fn sup_bound(&self, window: &Window) -> f64 {
        match self {
            FunctionSpec::Constant { value } => *value,
            FunctionSpec::Cosine {
                amplitude, offset, ..
            } => offset + amplitude.abs(),
            FunctionSpec::GaussianBump { scale, .. } => scale.abs(),
            FunctionSpec::Polynomial { .. } => {
                let grid_max = window
                    .grid(2049)
                    .iter()
                    .map(|&t| self.eval(t))
                    .fold(f64::NEG_INFINITY, f64::max);
                grid_max.abs() * 1.05
            }
        }
    }

    fn min_on_grid(&self, window: &Window) -> f64 {
        window
            .grid(2049)
            .iter()
            .map(|&t| self.eval(t))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_weight(&self, label: impl Into<String>) -> WeightFunction {
        let spec = self.clone();
        WeightFunction::new(label, move |t| spec.eval(t))
    }
}

/// Weight choice for the gaussian family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GaussianWeight {
    /// g(t) = (t − b)², m(θ) = θ³ a √(2π)
    #[default]
    SquaredDeviation,
    /// g(t) = |t − b|, m(θ) = 2 a θ²
    AbsDeviation,
}

fn default_amplitude_lambda0() -> f64 {
    2.0
}
fn default_amplitude_tau() -> f64 {
    1.0
}
fn default_one() -> FunctionSpec {
    FunctionSpec::constant(1.0)
}
fn default_amplitude_interval() -> (f64, f64) {
    (0.5, 6.0)
}
fn default_exp_decay_q() -> FunctionSpec {
    FunctionSpec::zero()
}
fn default_exp_decay_tmax() -> f64 {
    10.0
}
fn default_exp_decay_interval() -> (f64, f64) {
    (0.5, 2.5)
}
fn default_gaussian_a() -> f64 {
    1.0
}
fn default_gaussian_b() -> f64 {
    0.0
}
fn default_trunc_sigmas() -> f64 {
    8.0
}
fn default_gaussian_interval() -> (f64, f64) {
    (0.5, 2.0)
}
fn default_sine_interval() -> (f64, f64) {
    (0.1, 1.5)
}

/// Serializable builtin selection with per-family parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ModelSpec {
    Amplitude {
        #[serde(default = "default_one")]
        h: FunctionSpec,
        #[serde(default = "default_one")]
        g: FunctionSpec,
        #[serde(default = "default_amplitude_lambda0")]
        lambda0: f64,
        #[serde(default = "default_amplitude_tau")]
        tau: f64,
        #[serde(default = "default_amplitude_interval")]
        theta_interval: (f64, f64),
    },
    ExpDecay {
        #[serde(default = "default_exp_decay_q")]
        q: FunctionSpec,
        #[serde(default = "default_exp_decay_tmax")]
        t_max: f64,
        #[serde(default = "default_exp_decay_interval")]
        theta_interval: (f64, f64),
    },
    Gaussian {
        #[serde(default = "default_gaussian_a")]
        a: f64,
        #[serde(default = "default_gaussian_b")]
        b: f64,
        #[serde(default)]
        weight: GaussianWeight,
        #[serde(default = "default_trunc_sigmas")]
        trunc_sigmas: f64,
        #[serde(default = "default_gaussian_interval")]
        theta_interval: (f64, f64),
    },
    PeriodicSine {
        #[serde(default = "default_sine_interval")]
        theta_interval: (f64, f64),
    },
}

impl ModelSpec {
    pub fn amplitude() -> Self {
        ModelSpec::Amplitude {
            h: default_one(),
            g: default_one(),
            lambda0: default_amplitude_lambda0(),
            tau: default_amplitude_tau(),
            theta_interval: default_amplitude_interval(),
        }
    }

    pub fn exp_decay() -> Self {
        ModelSpec::ExpDecay {
            q: default_exp_decay_q(),
            t_max: default_exp_decay_tmax(),
            theta_interval: default_exp_decay_interval(),
        }
    }

    pub fn gaussian() -> Self {
        ModelSpec::Gaussian {
            a: default_gaussian_a(),
            b: default_gaussian_b(),
            weight: GaussianWeight::SquaredDeviation,
            trunc_sigmas: default_trunc_sigmas(),
            theta_interval: default_gaussian_interval(),
        }
    }

    pub fn gaussian_abs() -> Self {
        ModelSpec::Gaussian {
            a: default_gaussian_a(),
            b: default_gaussian_b(),
            weight: GaussianWeight::AbsDeviation,
            trunc_sigmas: default_trunc_sigmas(),
            theta_interval: default_gaussian_interval(),
        }
    }

    pub fn periodic_sine() -> Self {
        ModelSpec::PeriodicSine {
            theta_interval: default_sine_interval(),
        }
    }

    /// Default-parameter spec for a catalog name.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "amplitude" => Ok(Self::amplitude()),
            "exp_decay" => Ok(Self::exp_decay()),
            "gaussian" => Ok(Self::gaussian()),
            "periodic_sine" => Ok(Self::periodic_sine()),
            other => Err(MmeError::UnknownModel(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Amplitude { .. } => "amplitude",
            ModelSpec::ExpDecay { .. } => "exp_decay",
            ModelSpec::Gaussian { .. } => "gaussian",
            ModelSpec::PeriodicSine { .. } => "periodic_sine",
        }
    }

    /// Reference parameter value used by presets and examples.
    pub fn default_theta0(&self) -> f64 {
        match self {
            ModelSpec::Amplitude { .. } => 3.0,
            ModelSpec::ExpDecay { .. } => 1.0,
            ModelSpec::Gaussian { .. } => 1.0,
            ModelSpec::PeriodicSine { .. } => PI / 3.0,
        }
    }

    pub fn with_theta_interval(mut self, alpha: f64, beta: f64) -> Self {
        match &mut self {
            ModelSpec::Amplitude { theta_interval, .. }
            | ModelSpec::ExpDecay { theta_interval, .. }
            | ModelSpec::Gaussian { theta_interval, .. }
            | ModelSpec::PeriodicSine { theta_interval }=> *theta_interval = (alpha, beta),
        }
        self
    }
}

/// Build a catalog model and its paired weight function. The returned model
/// has been grid-validated (λ ≥ 0, λ ≤ λ_max, finite mass).
pub fn builtin_model(spec: &ModelSpec) -> Result<(IntensityModel, WeightFunction)> {
    let (model, weight) = match spec {
        ModelSpec::Amplitude {
            h,
            g,
            lambda0,
            tau,
            theta_interval,
        } => build_amplitude(h, g, *lambda0, *tau, *theta_interval)?,
        ModelSpec::ExpDecay {
            q,
            t_max,
            theta_interval,
        } => build_exp_decay(q, *t_max, *theta_interval)?,
        ModelSpec::Gaussian {
            a,
            b,
            weight,
            trunc_sigmas,
            theta_interval,
        } => build_gaussian(*a, *b, *weight, *trunc_sigmas, *theta_interval)?,
        ModelSpec::PeriodicSine { theta_interval } => build_periodic_sine(*theta_interval)?,
    };
    model.validate(10, 101)?;
    Ok((model, weight))
}

fn build_amplitude(
    h: &FunctionSpec,
    g: &FunctionSpec,
    lambda0: f64,
    tau: f64,
    (alpha, beta): (f64, f64),
) -> Result<(IntensityModel, WeightFunction)> {
    if lambda0 <= 0.0 {
        return Err(MmeError::Validation(format!(
            "amplitude: lambda0 must be positive, got {lambda0}"
        )));
    }
    if tau <= 0.0 || !tau.is_finite() {
        return Err(MmeError::Validation(format!(
            "amplitude: tau must be positive and finite, got {tau}"
        )));
    }
    let interval = ThetaInterval::new(alpha, beta)?;
    if interval.alpha() < 0.0 {
        return Err(MmeError::Validation(
            "amplitude: parameter interval must be nonnegative".into(),
        ));
    }
    let window = Window::new(0.0, tau)?;
    if h.min_on_grid(&window) < 0.0 {
        return Err(MmeError::Validation(
            "amplitude: h must be nonnegative on the window".into(),
        ));
    }
    let h_sup = h.sup_bound(&window);
    let h_fn = h.clone();
    let weight = g.to_weight(format!("amplitude-g[{g:?}]"));

    // m(θ) = θ·∫gh + λ₀·∫g, exact once the two integrals are known.
    let h_for_int = h.clone();
    let g_for_int = g.clone();
    let h_g = integrate(
        |t| g_for_int.eval(t) * h_for_int.eval(t),
        0.0,
        tau,
        1e-12,
    )?;
    let g_for_int2 = g.clone();
    let g_w = integrate(|t| g_for_int2.eval(t), 0.0, tau, 1e-12)?;

    let analytic = AnalyticMoments::new(
        weight.label().to_string(),
        move |theta: f64| theta * h_g + lambda0 * g_w,
        move |_| h_g,
        |_| 0.0,
        |_| 0.0,
    );

    let model = IntensityModel::new(
        "amplitude",
        interval,
        window,
        move |theta: f64, t: f64| theta * h_fn.eval(t) + lambda0,
        move |theta: f64| theta * h_sup + lambda0,
    )
    .with_analytic(analytic);
    Ok((model, weight))
}

fn build_exp_decay(
    q: &FunctionSpec,
    t_max: f64,
    (alpha, beta): (f64, f64),
) -> Result<(IntensityModel, WeightFunction)> {
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(MmeError::Validation(format!(
            "exp_decay: t_max must be positive and finite, got {t_max}"
        )));
    }
    let interval = ThetaInterval::new(alpha, beta)?;
    if interval.alpha() <= 0.0 {
        return Err(MmeError::Validation(
            "exp_decay: parameter interval must be strictly positive".into(),
        ));
    }
    let window = Window::truncation(0.0, t_max)?;
    if q.min_on_grid(&window) < 0.0 {
        return Err(MmeError::Validation(
            "exp_decay: q must be nonnegative on the window".into(),
        ));
    }

    let f = |t: f64| 1.0 + t.powi(4);
    let h = |t: f64| t * t;
    // g = h'/f
    let weight = WeightFunction::new("2t/(1+t^4)", move |t: f64| 2.0 * t / (1.0 + t.powi(4)));

    // R = ∫ g q dt over the (truncated) window; with h(0) = 0 this gives
    // m(θ) = (1 − e^{−θ t_max²}) / θ + R.
    let q_for_r = q.clone();
    let r = integrate(
        |t| 2.0 * t / (1.0 + t.powi(4)) * q_for_r.eval(t),
        0.0,
        t_max,
        1e-12,
    )?;
    let cap_h = t_max * t_max;
    let analytic = AnalyticMoments::new(
        weight.label().to_string(),
        move |theta: f64| {
            let e = (-theta * cap_h).exp();
            (1.0 - e) / theta + r
        },
        move |theta: f64| {
            let e = (-theta * cap_h).exp();
            cap_h * e / theta - (1.0 - e) / (theta * theta)
        },
        move |theta: f64| {
            let e = (-theta * cap_h).exp();
            -cap_h * cap_h * e / theta - 2.0 * cap_h * e / (theta * theta)
                + 2.0 * (1.0 - e) / theta.powi(3)
        },
        move |theta: f64| {
            let e = (-theta * cap_h).exp();
            cap_h.powi(3) * e / theta + 3.0 * cap_h * cap_h * e / (theta * theta)
                + 6.0 * cap_h * e / theta.powi(3)
                - 6.0 * (1.0 - e) / theta.powi(4)
        },
    );

    let q_fn = q.clone();
    let lambda = move |theta: f64, t: f64| f(t) * (-theta * h(t)).exp() + q_fn.eval(t);

    // No tidy closed form for sup_t λ. λ is pointwise nonincreasing in θ,
    // so the bound at the nearest grid point *below* θ dominates; the 1.05
    // margin covers t-grid undersampling.
    let mut bound_grid: Vec<(f64, f64)> = Vec::new();
    for theta in interval.grid(33) {
        let sup = window
            .grid(4097)
            .iter()
            .map(|&t| lambda(theta, t))
            .fold(f64::NEG_INFINITY, f64::max);
        bound_grid.push((theta, sup * 1.05));
    }
    let lambda_max = move |theta: f64| {
        let mut bound = bound_grid[0].1;
        for &(th, s) in &bound_grid {
            if th <= theta {
                bound = s;
            } else {
                break;
            }
        }
        bound
    };
    let model = IntensityModel::new("exp_decay", interval, window, lambda, lambda_max)
        .with_analytic(analytic);
    Ok((model, weight))
}

fn build_gaussian(
    a: f64,
    b: f64,
    weight_kind: GaussianWeight,
    trunc_sigmas: f64,
    (alpha, beta): (f64, f64),
) -> Result<(IntensityModel, WeightFunction)> {
    if a <= 0.0 || !a.is_finite() {
        return Err(MmeError::Validation(format!(
            "gaussian: a must be positive and finite, got {a}"
        )));
    }
    if !b.is_finite() {
        return Err(MmeError::Validation("gaussian: b must be finite".into()));
    }
    if trunc_sigmas < 6.0 {
        return Err(MmeError::Validation(format!(
            "gaussian: trunc_sigmas must be at least 6 for a faithful truncation, got {trunc_sigmas}"
        )));
    }
    let interval = ThetaInterval::new(alpha, beta)?;
    if interval.alpha() <= 0.0 {
        return Err(MmeError::Validation(
            "gaussian: parameter interval must be strictly positive".into(),
        ));
    }
    let half = trunc_sigmas * interval.beta();
    let window = Window::truncation(b - half, b + half)?;

    let (weight, analytic) = match weight_kind {
        GaussianWeight::SquaredDeviation => {
            let w = WeightFunction::new("(t-b)^2", move |t: f64| (t - b) * (t - b));
            let an = AnalyticMoments::new(
                w.label().to_string(),
                move |theta: f64| theta.powi(3) * a * SQRT_2PI,
                move |theta: f64| 3.0 * theta * theta * a * SQRT_2PI,
                move |theta: f64| 6.0 * theta * a * SQRT_2PI,
                move |_| 6.0 * a * SQRT_2PI,
            );
            (w, an)
        }
        GaussianWeight::AbsDeviation => {
            let w = WeightFunction::new("|t-b|", move |t: f64| (t - b).abs());
            let an = AnalyticMoments::new(
                w.label().to_string(),
                move |theta: f64| 2.0 * a * theta * theta,
                move |theta: f64| 4.0 * a * theta,
                move |_| 4.0 * a,
                move |_| 0.0,
            );
            (w, an)
        }
    };

    let model = IntensityModel::new(
        "gaussian",
        interval,
        window,
        move |theta: f64, t: f64| {
            let z = (t - b) / theta;
            a * (-0.5 * z * z).exp()
        },
        move |_| a,
    )
    .with_analytic(analytic);
    Ok((model, weight))
}

fn build_periodic_sine((alpha, beta): (f64, f64)) -> Result<(IntensityModel, WeightFunction)> {
    let interval = ThetaInterval::new(alpha, beta)?;
    if interval.alpha() < 0.0 || interval.beta() >= PI / 2.0 {
        return Err(MmeError::Validation(format!(
            "periodic_sine: parameter interval must lie inside [0, pi/2), got ({alpha}, {beta})"
        )));
    }
    let window = Window::new(0.0, 1.0)?;
    let weight = WeightFunction::new("cos(2 pi t)", |t: f64| (2.0 * PI * t).cos());
    let analytic = AnalyticMoments::new(
        weight.label().to_string(),
        |theta: f64| theta.sin(),
        |theta: f64| theta.cos(),
        |theta: f64| -theta.sin(),
        |theta: f64| -theta.cos(),
    );
    let model = IntensityModel::new(
        "periodic_sine",
        interval,
        window,
        |theta: f64, t: f64| 2.0 * (2.0 * PI * t + theta).sin() + 3.0,
        |_| 5.0,
    )
    .with_analytic(analytic);
    Ok((model, weight))
}

/// Closed-form inverse data for the builtin catalog, used as an independent
/// oracle against the generic quadrature–inversion path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm {
    /// θ = (m̄ − λ₀·∫g) / ∫gh
    Amplitude { h_g: f64, g_w: f64, lambda0: f64 },
    /// θ = 1 / (m̄ − R); m̄ in the raw (decreasing-map) convention.
    ExpDecay { r: f64 },
    /// θ = (m̄ / (a√2π))^{1/3}
    GaussianG1 { a: f64 },
    /// θ = √(m̄ / (2a))
    GaussianG2 { a: f64 },
    /// θ = arcsin(m̄)
    PeriodicSine,
}

/// Closed-form estimator constants for a builtin spec.
pub fn closed_form(spec: &ModelSpec) -> Result<ClosedForm> {
    match spec {
        ModelSpec::Amplitude {
            h, g, lambda0, tau, ..
        } => {
            let h2 = h.clone();
            let g2 = g.clone();
            let h_g = integrate(|t| g2.eval(t) * h2.eval(t), 0.0, *tau, 1e-12)?;
            let g3 = g.clone();
            let g_w = integrate(|t| g3.eval(t), 0.0, *tau, 1e-12)?;
            Ok(ClosedForm::Amplitude {
                h_g,
                g_w,
                lambda0: *lambda0,
            })
        }
        ModelSpec::ExpDecay { q, t_max, .. } => {
            let q2 = q.clone();
            let r = integrate(
                |t| 2.0 * t / (1.0 + t.powi(4)) * q2.eval(t),
                0.0,
                *t_max,
                1e-12,
            )?;
            Ok(ClosedForm::ExpDecay { r })
        }
        ModelSpec::Gaussian { a, weight, .. } => Ok(match weight {
            GaussianWeight::SquaredDeviation => ClosedForm::GaussianG1 { a: *a },
            GaussianWeight::AbsDeviation => ClosedForm::GaussianG2 { a: *a },
        }),
        ModelSpec::PeriodicSine { .. } => Ok(ClosedForm::PeriodicSine),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_name_is_a_catalog_error() {
        assert!(matches!(
            ModelSpec::from_name("brownian"),
            Err(MmeError::UnknownModel(_))
        ));
    }

    #[test]
    fn nonpositive_lambda0_is_rejected() {
        let spec = ModelSpec::Amplitude {
            h: FunctionSpec::constant(1.0),
            g: FunctionSpec::constant(1.0),
            lambda0: 0.0,
            tau: 1.0,
            theta_interval: (0.5, 6.0),
        };
        assert!(matches!(
            builtin_model(&spec),
            Err(MmeError::Validation(_))
        ));
    }

    #[test]
    fn periodic_sine_point_value() {
        let (model, _) = builtin_model(&ModelSpec::periodic_sine()).unwrap();
        // λ(π/3, 0) = 2 sin(π/3) + 3 = 3 + √3
        let v = model.eval(PI / 3.0, 0.0);
        assert!((v - (3.0 + 3.0f64.sqrt())).abs() < 1e-12);
        assert_eq!(model.lambda_bound(1.0), 5.0);
    }

    #[test]
    fn periodic_sine_mass_is_three() {
        let (model, _) = builtin_model(&ModelSpec::periodic_sine()).unwrap();
        for theta in [0.2, PI / 3.0, 1.4] {
            let mass = model.total_mass(theta, 1e-11).unwrap();
            assert!((mass - 3.0).abs() < 1e-10, "mass({theta}) = {mass}");
        }
    }

    #[test]
    fn gaussian_truncated_mass_matches_sqrt_2pi() {
        let (model, _) = builtin_model(&ModelSpec::gaussian()).unwrap();
        let mass = model.total_mass(1.0, 1e-11).unwrap();
        assert!((mass - SQRT_2PI).abs() < 1e-10, "mass = {mass}");
        assert!(model.window().is_truncation());
    }

    #[test]
    fn exp_decay_analytic_derivatives_match_finite_differences() {
        let (model, weight) = builtin_model(&ModelSpec::exp_decay()).unwrap();
        let analytic = model.analytic_for(&weight).unwrap();
        let theta = 1.3;
        for order in 1..=3usize {
            let h = 1e-2f64;
            let m0 = |th: f64| analytic.eval(0, th);
            let fd = crate::moments::stencil::derivative(&m0, theta, order, h);
            let an = analytic.eval(order, theta);
            assert!(
                (fd - an).abs() <= 1e-6 * an.abs().max(1.0),
                "order {order}: fd {fd} vs analytic {an}"
            );
        }
    }

    #[test]
    fn model_spec_json_round_trip() {
        let spec = ModelSpec::gaussian_abs();
        let json = serde_json::to_string(&spec).unwrap();
        let back: ModelSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
        // Named defaults deserialize from the bare name tag.
        let short: ModelSpec = serde_json::from_str(r#"{"name":"periodic_sine"}"#).unwrap();
        assert_eq!(short, ModelSpec::periodic_sine());
    }

    #[test]
    fn closed_form_constants_for_default_amplitude() {
        let cf = closed_form(&ModelSpec::amplitude()).unwrap();
        match cf {
            ClosedForm::Amplitude { h_g, g_w, lambda0 } => {
                assert!((h_g - 1.0).abs() < 1e-12);
                assert!((g_w - 1.0).abs() < 1e-12);
                assert_eq!(lambda0, 2.0);
            }
            other => panic!("unexpected closed form {other:?}"),
        }
    }
}

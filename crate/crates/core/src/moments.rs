//! Quadrature engine and the forward moment map.
//!
//! The map m(θ) = ∫ g(t) λ(θ,t) dt is the object the whole estimator hangs
//! off: it must be strictly monotone on the parameter interval. Construction
//! verifies that on a grid and, when the supplied map is decreasing, flips
//! the sign of the weight so every downstream formula can assume an
//! increasing map (the estimator itself is invariant under the flip).
//!
//! θ-derivatives are taken under the integral sign — the integrand λ is
//! differentiated pointwise with high-order central stencils and the result
//! integrated — so quadrature noise is not amplified by 1/h^k. Models may
//! install closed forms (`AnalyticMoments`) that bypass both.

use serde::{Deserialize, Serialize};

use crate::error::{MmeError, Result};
use crate::intensity::{IntensityModel, WeightFunction};

/// Top-level panels the adaptive rule starts from. Guards against a single
/// Simpson estimate aliasing a periodic integrand on a wide window.
const INITIAL_PANELS: usize = 16;
const MAX_DEPTH: usize = 30;
/// Hard cap on integrand evaluations per `integrate` call. Noisy
/// integrands otherwise push every branch to full depth, which is
/// exponential work; past the budget the current estimates are kept and
/// the run ends in a quadrature-failure error instead of a stall.
const MAX_EVALS: u64 = 4_000_000;

/// Number of grid points used to verify strict monotonicity of m.
pub const MONOTONE_GRID_POINTS: usize = 101;

/// Tolerances bottom out at this relative level: an interval is accepted
/// once its error estimate drops below 1e-14 of its own magnitude, which is
/// all f64 can deliver for large integrals.
const REL_FLOOR: f64 = 1e-14;

/// Adaptive Simpson integration of `f` over [a, b] to absolute tolerance
/// `tol` (with a machine-precision relative floor for very large values).
///
/// Returns a quadrature-failure error carrying the best estimate and its
/// error bound if the refinement limit is hit, and a non-finite-integral
/// error if the integrand produces NaN or ±∞.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !a.is_finite() || !b.is_finite() {
        return Err(MmeError::Argument(format!(
            "integration bounds must be finite, got [{a}, {b}]"
        )));
    }
    if tol <= 0.0 {
        return Err(MmeError::Argument(format!(
            "quadrature tolerance must be positive, got {tol}"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return Err(MmeError::Argument(format!(
            "integration bounds out of order: [{a}, {b}]"
        )));
    }

    let panel_tol = tol / INITIAL_PANELS as f64;
    let width = (b - a) / INITIAL_PANELS as f64;
    let mut total = 0.0;
    let mut state = RefineState {
        unconverged_bound: 0.0,
        evals_left: MAX_EVALS,
    };
    for i in 0..INITIAL_PANELS {
        let lo = a + i as f64 * width;
        let hi = if i + 1 == INITIAL_PANELS {
            b
        } else {
            a + (i + 1) as f64 * width
        };
        let mid = 0.5 * (lo + hi);
        let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
        check_finite(flo, lo, hi)?;
        check_finite(fmid, lo, hi)?;
        check_finite(fhi, lo, hi)?;
        let whole = simpson(hi - lo, flo, fmid, fhi);
        total += refine(&f, lo, hi, flo, fmid, fhi, whole, panel_tol, MAX_DEPTH, &mut state)?;
    }
    if state.unconverged_bound > tol {
        return Err(MmeError::QuadratureFailure {
            estimate: total,
            error_bound: state.unconverged_bound,
            tol,
        });
    }
    Ok(total)
}

struct RefineState {
    unconverged_bound: f64,
    evals_left: u64,
}

fn check_finite(v: f64, a: f64, b: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(MmeError::NonFiniteIntegral { a, b })
    }
}

fn simpson(h: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

/// One adaptive step. Exhausting the depth or the evaluation budget is not
/// fatal: the local best estimate is kept and its error bound accumulated,
/// so a failed run still reports a whole-interval estimate.
#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
    state: &mut RefineState,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    check_finite(flm, a, b)?;
    check_finite(frm, a, b)?;
    let left = simpson(m - a, fa, flm, fm);
    let right = simpson(b - m, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * (tol + REL_FLOOR * (left + right).abs()) {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 || state.evals_left < 2 {
        state.unconverged_bound += delta.abs() / 15.0;
        return Ok(left + right + delta / 15.0);
    }
    state.evals_left -= 2;
    let l = refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, state)?;
    let r = refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, state)?;
    Ok(l + r)
}

/// Central finite-difference stencils applied to closures.
pub(crate) mod stencil {
    /// O(h⁴) first derivative.
    pub fn d1<F: Fn(f64) -> f64>(f: &F, x: f64, h: f64) -> f64 {
        (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
    }

    /// O(h⁴) second derivative.
    pub fn d2<F: Fn(f64) -> f64>(f: &F, x: f64, h: f64) -> f64 {
        (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h))
            / (12.0 * h * h)
    }

    /// O(h⁴) third derivative (7-point).
    pub fn d3<F: Fn(f64) -> f64>(f: &F, x: f64, h: f64) -> f64 {
        (0.125 * f(x - 3.0 * h) - f(x - 2.0 * h) + 1.625 * f(x - h) - 1.625 * f(x + h)
            + f(x + 2.0 * h)
            - 0.125 * f(x + 3.0 * h))
            / (h * h * h)
    }

    /// O(h²) fourth derivative.
    pub fn d4<F: Fn(f64) -> f64>(f: &F, x: f64, h: f64) -> f64 {
        (f(x - 2.0 * h) - 4.0 * f(x - h) + 6.0 * f(x) - 4.0 * f(x + h) + f(x + 2.0 * h))
            / h.powi(4)
    }

    /// O(h²) fifth derivative.
    pub fn d5<F: Fn(f64) -> f64>(f: &F, x: f64, h: f64) -> f64 {
        (-0.5 * f(x - 3.0 * h) + 2.0 * f(x - 2.0 * h) - 2.5 * f(x - h) + 2.5 * f(x + h)
            - 2.0 * f(x + 2.0 * h)
            + 0.5 * f(x + 3.0 * h))
            / h.powi(5)
    }

    pub fn derivative<F: Fn(f64) -> f64>(f: &F, x: f64, order: usize, h: f64) -> f64 {
        match order {
            1 => d1(f, x, h),
            2 => d2(f, x, h),
            3 => d3(f, x, h),
            4 => d4(f, x, h),
            5 => d5(f, x, h),
            _ => f64::NAN,
        }
    }

    /// Step sizes balancing truncation against rounding for a unit-scale
    /// argument; callers multiply by max(1, |x|).
    pub fn default_step(order: usize) -> f64 {
        match order {
            1 => 1e-5,
            2 => 1e-3,
            3 => 1e-2,
            4 => 2e-2,
            _ => 1e-2,
        }
    }
}

/// θ-derivative of the raw (un-normalized) moment map by differentiation
/// under the integral sign, or via the model's analytic form when one is
/// installed for this weight. Orders 1-3.
pub(crate) fn raw_m_deriv(
    model: &IntensityModel,
    weight: &WeightFunction,
    theta: f64,
    order: usize,
    tol: f64,
) -> Result<f64> {
    if let Some(analytic) = model.analytic_for(weight) {
        return Ok(analytic.eval(order, theta));
    }
    if !(1..=3).contains(&order) {
        return Err(MmeError::Argument(format!(
            "derivative order must be 1..=3, got {order}"
        )));
    }
    let h = stencil::default_step(order) * theta.abs().max(1.0);
    integrate(
        |t| {
            let f = |th: f64| model.eval(th, t);
            weight.eval(t) * stencil::derivative(&f, theta, order, h)
        },
        model.window().start(),
        model.window().end(),
        tol,
    )
}

pub(crate) fn raw_m(
    model: &IntensityModel,
    weight: &WeightFunction,
    theta: f64,
    tol: f64,
) -> Result<f64> {
    if let Some(analytic) = model.analytic_for(weight) {
        return Ok(analytic.eval(0, theta));
    }
    integrate(
        |t| weight.eval(t) * model.eval(theta, t),
        model.window().start(),
        model.window().end(),
        tol,
    )
}

/// Whether the supplied moment map was increasing or decreasing in θ.
/// Internally everything runs in the increasing convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapDirection {
    Increasing,
    Decreasing,
}

impl MapDirection {
    pub fn sign(&self) -> f64 {
        match self {
            MapDirection::Increasing => 1.0,
            MapDirection::Decreasing => -1.0,
        }
    }

    /// Convert a raw-convention moment value into the normalized
    /// (increasing-map) convention.
    pub fn normalize(&self, raw_mbar: f64) -> f64 {
        self.sign() * raw_mbar
    }
}

/// The forward moment map bound to one (model, weight) pair, normalized to
/// be increasing. `weight()` returns the effective (possibly sign-flipped)
/// weight; stochastic integrals that feed this map must use it.
#[derive(Debug, Clone)]
pub struct MomentMap {
    model: IntensityModel,
    weight: WeightFunction,
    supplied_weight: WeightFunction,
    direction: MapDirection,
    tol: f64,
}

/// Build the moment map, verifying strict monotonicity of m on a
/// 101-point θ-grid and recording the original direction.
pub fn moment_map(
    model: &IntensityModel,
    weight: &WeightFunction,
    quadrature_tol: f64,
) -> Result<MomentMap> {
    let thetas = model.theta_interval().grid(MONOTONE_GRID_POINTS);
    let mut sign = 0.0f64;
    for &theta in &thetas {
        let d = raw_m_deriv(model, weight, theta, 1, quadrature_tol)?;
        if d == 0.0 || (sign != 0.0 && d.signum() != sign) {
            return Err(MmeError::NonMonotoneMap { theta });
        }
        sign = d.signum();
    }
    let direction = if sign > 0.0 {
        MapDirection::Increasing
    } else {
        MapDirection::Decreasing
    };
    let effective = match direction {
        MapDirection::Increasing => weight.clone(),
        MapDirection::Decreasing => weight.negated(),
    };
    Ok(MomentMap {
        model: model.clone(),
        weight: effective,
        supplied_weight: weight.clone(),
        direction,
        tol: quadrature_tol,
    })
}

impl MomentMap {
    /// m(θ) in the normalized (increasing) convention.
    pub fn m(&self, theta: f64) -> Result<f64> {
        Ok(self.direction.sign() * raw_m(&self.model, &self.supplied_weight, theta, self.tol)?)
    }

    /// Order 1-3 θ-derivatives of the normalized map.
    pub fn m_deriv(&self, theta: f64, order: usize) -> Result<f64> {
        Ok(self.direction.sign()
            * raw_m_deriv(&self.model, &self.supplied_weight, theta, order, self.tol)?)
    }

    /// Normalized m(θ) forced through quadrature, ignoring analytic forms.
    pub fn m_by_quadrature(&self, theta: f64) -> Result<f64> {
        integrate(
            |t| self.weight.eval(t) * self.model.eval(theta, t),
            self.model.window().start(),
            self.model.window().end(),
            self.tol,
        )
    }

    pub fn model(&self) -> &IntensityModel {
        &self.model
    }

    /// Effective weight (sign-normalized). Stochastic integrals feeding
    /// this map must use this one, not the supplied weight.
    pub fn weight(&self) -> &WeightFunction {
        &self.weight
    }

    pub fn supplied_weight(&self) -> &WeightFunction {
        &self.supplied_weight
    }

    pub fn direction(&self) -> MapDirection {
        self.direction
    }

    pub fn quadrature_tol(&self) -> f64 {
        self.tol
    }
}

/// The weighted-intensity integrals a_m = ∫ g^m λ(θ₀,·) dt for m = 2, 3, 4,
/// plus their a₂-scaled versions â_m = a_m / a₂^{m/2}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmCoefficients {
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub ahat3: f64,
    pub ahat4: f64,
    pub theta0: f64,
}

/// Compute the a_m integrals at θ₀ with the map's effective weight.
pub fn am_coefficients(map: &MomentMap, theta0: f64) -> Result<AmCoefficients> {
    if !map.model().theta_interval().contains(theta0) {
        let iv = map.model().theta_interval();
        return Err(MmeError::Argument(format!(
            "theta0 = {theta0} outside the parameter interval ({}, {})",
            iv.alpha(),
            iv.beta()
        )));
    }
    let window = map.model().window();
    let power = |m: i32| {
        integrate(
            |t| map.weight().eval(t).powi(m) * map.model().eval(theta0, t),
            window.start(),
            window.end(),
            map.quadrature_tol(),
        )
    };
    let a2 = power(2)?;
    if a2 <= map.quadrature_tol() {
        return Err(MmeError::DegenerateWeight { a2 });
    }
    let a3 = power(3)?;
    let a4 = power(4)?;
    let a2_32 = a2 * a2.sqrt();
    Ok(AmCoefficients {
        a2,
        a3,
        a4,
        ahat3: a3 / a2_32,
        ahat4: a4 / (a2 * a2),
        theta0,
    })
}

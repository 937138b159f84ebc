//! Expansion machinery: stochastic-expansion evaluation, moment
//! predictions, Hermite polynomials, and the corrected CDF/density.
//!
//! With ξ = η/√a₂ and ε = n^{−1/2}, the normalized estimator error
//! √(n/(ψ₁²a₂))·(θ̌ − θ₀) expands as ξ + b₂ξ²ε + b₃ξ³ε² + O(ε^{5/2}),
//! where b₂ = ψ₂√a₂/ψ₁ and b₃ = ψ₃a₂/ψ₁. Its distribution function and
//! density pick up Hermite-polynomial corrections with coefficients
//!
//! ```text
//! B₁ = b₂                 B₂ = b₂â₃ + (3/2)b₂² + 3b₃
//! B₃ = â₃/6 + b₂          B₄ = â₄/24 + (7/6)b₂â₃ + b₃ + 3b₂²
//! B₆ = â₃²/72 + b₂â₃/6 + b₂²/2
//! ```
//!
//! ```text
//! f₀(x)  = f(x)·(1 + [B₁H₁ + B₃H₃]ε + [B₂H₂ + B₄H₄ + B₆H₆]ε²)
//! F₀(x)  = Φ(x) − [B₁ + B₃H₂]f(x)·ε − [B₂H₁ + B₄H₃ + B₆H₅]f(x)·ε²
//! ```
//!
//! using ∫_{−∞}^x H_m f = −H_{m−1}(x)f(x). The order-1 forms keep the ε
//! terms only. The CDF approximation may leave [0, 1] far in the tails; the
//! raw accessor preserves that (so mass/moment identities hold exactly) and
//! a clipped accessor serves plotting.

use serde::{Deserialize, Serialize};

use crate::error::{MmeError, Result};
use crate::inverse::PsiCoefficients;
use crate::moments::AmCoefficients;
use crate::normal;

/// Hermite polynomial H_m (probabilists'), any order, by the recurrence
/// H_{m+1} = x·H_m − m·H_{m−1}.
pub(crate) fn hermite_poly(m: u32, x: f64) -> f64 {
    match m {
        0 => return 1.0,
        1 => return x,
        _ => {}
    }
    let (mut prev, mut cur) = (1.0, x);
    for k in 1..m {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Hermite polynomial for the orders the expansions use: m ∈ {1,2,3,4,6}.
pub fn hermite(m: u32, x: f64) -> Result<f64> {
    if matches!(m, 1 | 2 | 3 | 4 | 6) {
        Ok(hermite_poly(m, x))
    } else {
        Err(MmeError::Argument(format!(
            "hermite order must be one of 1, 2, 3, 4, 6; got {m}"
        )))
    }
}

/// All expansion coefficients evaluated at one θ₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCoefficients {
    pub theta0: f64,
    pub psi: PsiCoefficients,
    pub am: AmCoefficients,
    pub b2: f64,
    pub b3: f64,
    #[serde(rename = "B1")]
    pub big_b1: f64,
    #[serde(rename = "B2")]
    pub big_b2: f64,
    #[serde(rename = "B3")]
    pub big_b3: f64,
    #[serde(rename = "B4")]
    pub big_b4: f64,
    #[serde(rename = "B6")]
    pub big_b6: f64,
    /// Residual bound (ψ₁√a₂)⁻¹ for the normalized expansion on the good set.
    #[serde(rename = "K")]
    pub k_bound: f64,
}

/// Assemble the coefficient set from ψ and a_m values at the same θ₀.
pub fn expansion_coefficients(
    psi: &PsiCoefficients,
    am: &AmCoefficients,
) -> Result<ExpansionCoefficients> {
    if psi.psi1 <= 0.0 {
        return Err(MmeError::Argument(format!(
            "psi1 must be positive (normalized increasing map), got {}",
            psi.psi1
        )));
    }
    if am.a2 <= 0.0 {
        return Err(MmeError::Argument(format!(
            "a2 must be positive, got {}",
            am.a2
        )));
    }
    let sqrt_a2 = am.a2.sqrt();
    let b2 = psi.psi2 * sqrt_a2 / psi.psi1;
    let b3 = psi.psi3 * am.a2 / psi.psi1;
    let big_b1 = b2;
    let big_b2 = b2 * am.ahat3 + 1.5 * b2 * b2 + 3.0 * b3;
    let big_b3 = am.ahat3 / 6.0 + b2;
    let big_b4 = am.ahat4 / 24.0 + 7.0 / 6.0 * b2 * am.ahat3 + b3 + 3.0 * b2 * b2;
    let big_b6 = am.ahat3 * am.ahat3 / 72.0 + b2 * am.ahat3 / 6.0 + 0.5 * b2 * b2;
    Ok(ExpansionCoefficients {
        theta0: psi.theta0,
        psi: *psi,
        am: *am,
        b2,
        b3,
        big_b1,
        big_b2,
        big_b3,
        big_b4,
        big_b6,
        k_bound: 1.0 / (psi.psi1 * sqrt_a2),
    })
}

/// Main term of the stochastic expansion: Σ_{l≤k} ψ_l η^l n^{−l/2}.
pub fn stochastic_expansion_eval(
    coeffs: &ExpansionCoefficients,
    eta: f64,
    n: u64,
    k: usize,
) -> Result<f64> {
    if !(1..=3).contains(&k) {
        return Err(MmeError::Argument(format!(
            "expansion order k must be 1..=3, got {k}"
        )));
    }
    let root_n = (n as f64).sqrt();
    let psis = [coeffs.psi.psi1, coeffs.psi.psi2, coeffs.psi.psi3];
    let mut term = 1.0;
    let mut acc = 0.0;
    for psi in psis.iter().take(k) {
        term *= eta / root_n;
        acc += psi * term;
    }
    Ok(acc)
}

/// The 1/n coefficient of the scaled second moment:
/// 2ψ₂a₃/(ψ₁a₂) + 3ψ₂²a₂/ψ₁² + 6ψ₃a₂/ψ₁. Identically equal to 2B₂.
pub fn second_moment_bracket(c: &ExpansionCoefficients) -> f64 {
    let (p1, p2, p3) = (c.psi.psi1, c.psi.psi2, c.psi.psi3);
    let (a2, a3) = (c.am.a2, c.am.a3);
    2.0 * p2 * a3 / (p1 * a2) + 3.0 * p2 * p2 * a2 / (p1 * p1) + 6.0 * p3 * a2 / p1
}

/// Predicted n·E(θ̌ − θ₀)²: ψ₁²a₂·(1 + bracket/n).
pub fn predicted_second_moment(c: &ExpansionCoefficients, n: u64) -> f64 {
    let limit = c.psi.psi1 * c.psi.psi1 * c.am.a2;
    limit * (1.0 + second_moment_bracket(c) / n as f64)
}

/// Limit value ψ₁²a₂ of the scaled second moment.
pub fn second_moment_limit(c: &ExpansionCoefficients) -> f64 {
    c.psi.psi1 * c.psi.psi1 * c.am.a2
}

/// Predicted E θ̌ − θ₀ to order 1/n: ψ₂a₂/n.
pub fn predicted_mean_bias(c: &ExpansionCoefficients, n: u64) -> f64 {
    c.psi.psi2 * c.am.a2 / n as f64
}

/// CDF/density correction order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeworthOrder {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

/// Corrected CDF approximation for the normalized error
/// √(n/(ψ₁²a₂))·(θ̌ − θ₀). Not clipped to [0, 1].
pub fn edgeworth_cdf(c: &ExpansionCoefficients, x: f64, n: u64, order: EdgeworthOrder) -> f64 {
    let eps = 1.0 / (n as f64).sqrt();
    let fx = normal::pdf(x);
    let mut v = normal::cdf(x) - (c.big_b1 + c.big_b3 * hermite_poly(2, x)) * fx * eps;
    if order == EdgeworthOrder::Two {
        v -= (c.big_b2 * hermite_poly(1, x)
            + c.big_b4 * hermite_poly(3, x)
            + c.big_b6 * hermite_poly(5, x))
            * fx
            * eps
            * eps;
    }
    v
}

/// `edgeworth_cdf` clamped to [0, 1] for plotting.
pub fn edgeworth_cdf_clipped(
    c: &ExpansionCoefficients,
    x: f64,
    n: u64,
    order: EdgeworthOrder,
) -> f64 {
    edgeworth_cdf(c, x, n, order).clamp(0.0, 1.0)
}

/// Corrected density approximation; may go negative far in the tails.
pub fn edgeworth_density(c: &ExpansionCoefficients, x: f64, n: u64, order: EdgeworthOrder) -> f64 {
    let eps = 1.0 / (n as f64).sqrt();
    let mut series =
        1.0 + (c.big_b1 * hermite_poly(1, x) + c.big_b3 * hermite_poly(3, x)) * eps;
    if order == EdgeworthOrder::Two {
        series += (c.big_b2 * hermite_poly(2, x)
            + c.big_b4 * hermite_poly(4, x)
            + c.big_b6 * hermite_poly(6, x))
            * eps
            * eps;
    }
    normal::pdf(x) * series
}

/// √n·(θ̂ − θ₀)/(ψ₁√a₂): the quantity the corrected CDF approximates.
pub fn normalized_error(c: &ExpansionCoefficients, theta_hat: f64, theta0: f64, n: u64) -> f64 {
    (n as f64).sqrt() * (theta_hat - theta0) / (c.psi.psi1 * c.am.a2.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{self, ModelSpec};
    use crate::inverse::inverse_map;
    use crate::moments::{am_coefficients, moment_map};
    use std::f64::consts::PI;

    pub(crate) fn sine_coefficients(theta0: f64) -> ExpansionCoefficients {
        let (model, weight) = catalog::builtin_model(&ModelSpec::periodic_sine()).unwrap();
        let map = moment_map(&model, &weight, 1e-10).unwrap();
        let am = am_coefficients(&map, theta0).unwrap();
        let inv = inverse_map(map, 1e-12).unwrap();
        let psi = inv.psi(theta0).unwrap();
        expansion_coefficients(&psi, &am).unwrap()
    }

    #[test]
    fn hermite_reference_values() {
        assert_eq!(hermite(2, 0.0).unwrap(), -1.0);
        assert_eq!(hermite(3, 1.0).unwrap(), -2.0);
        assert_eq!(hermite(6, 0.0).unwrap(), -15.0);
        assert_eq!(hermite(4, 2.0).unwrap(), 16.0 - 24.0 + 3.0);
        assert!(matches!(hermite(5, 1.0), Err(MmeError::Argument(_))));
        assert!(matches!(hermite(0, 1.0), Err(MmeError::Argument(_))));
    }

    #[test]
    fn hermite_recurrence_on_grid() {
        for m in 1..=5u32 {
            for i in 0..41 {
                let x = -4.0 + 0.2 * i as f64;
                let lhs = hermite_poly(m + 1, x);
                let rhs = x * hermite_poly(m, x) - m as f64 * hermite_poly(m - 1, x);
                assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
            }
        }
    }

    #[test]
    fn coefficient_preconditions_are_enforced() {
        let c = sine_coefficients(PI / 3.0);
        let mut bad_psi = c.psi;
        bad_psi.psi1 = -1.0;
        assert!(matches!(
            expansion_coefficients(&bad_psi, &c.am),
            Err(MmeError::Argument(_))
        ));
        let mut bad_am = c.am;
        bad_am.a2 = 0.0;
        assert!(matches!(
            expansion_coefficients(&c.psi, &bad_am),
            Err(MmeError::Argument(_))
        ));
    }

    #[test]
    fn sine_coefficient_reference_values() {
        let c = sine_coefficients(PI / 3.0);
        let sqrt2 = 2.0f64.sqrt();
        assert!((c.b2 - 1.5 * sqrt2).abs() < 1e-8, "b2 = {}", c.b2);
        assert!((c.b3 - 10.0).abs() < 1e-7, "b3 = {}", c.b3);
        assert!((c.big_b1 - 1.5 * sqrt2).abs() < 1e-8);
        assert!((c.big_b2 - 37.5).abs() < 1e-7);
        assert!((c.big_b3 - 37.0 * sqrt2 / 24.0).abs() < 1e-8);
        assert!((c.k_bound - 1.0 / 6.0f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn stochastic_expansion_plugin_values() {
        let c = sine_coefficients(PI / 3.0);
        assert_eq!(stochastic_expansion_eval(&c, 0.0, 50, 3).unwrap(), 0.0);
        let k1 = stochastic_expansion_eval(&c, 1.0, 100, 1).unwrap();
        assert!((k1 - 0.2).abs() < 1e-8);
        let k3 = stochastic_expansion_eval(&c, 1.0, 100, 3).unwrap();
        assert!((k3 - 0.24797434948).abs() < 1e-7, "k3 = {k3}");
        assert!(matches!(
            stochastic_expansion_eval(&c, 1.0, 100, 4),
            Err(MmeError::Argument(_))
        ));
    }

    #[test]
    fn second_moment_prediction_values() {
        let c = sine_coefficients(PI / 3.0);
        assert!((second_moment_limit(&c) - 6.0).abs() < 1e-7);
        assert!((second_moment_bracket(&c) - 75.0).abs() < 1e-5);
        assert!((predicted_second_moment(&c, 1000) - 6.45).abs() < 1e-6);
    }

    #[test]
    fn bracket_equals_twice_big_b2() {
        for theta0 in [0.3, 0.7, PI / 3.0, 1.2] {
            let c = sine_coefficients(theta0);
            let bracket = second_moment_bracket(&c);
            assert!(
                (bracket - 2.0 * c.big_b2).abs() <= 1e-12 * bracket.abs().max(1.0),
                "theta0 = {theta0}"
            );
        }
    }

    #[test]
    fn mean_bias_values() {
        let c3 = sine_coefficients(PI / 3.0);
        let b = predicted_mean_bias(&c3, 1000);
        assert!((b - 3.0 * 3.0f64.sqrt() / 1000.0).abs() < 1e-9);
        let c6 = sine_coefficients(PI / 6.0);
        let b6 = predicted_mean_bias(&c6, 100);
        assert!((b6 - 1.0 / (100.0 * 3.0f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn edgeworth_cdf_reference_point_and_tails() {
        let c = sine_coefficients(PI / 3.0);
        let at_zero = edgeworth_cdf(&c, 0.0, 100, EdgeworthOrder::One);
        assert!((at_zero - 0.5023507899314489).abs() < 1e-8, "{at_zero}");
        for order in [EdgeworthOrder::One, EdgeworthOrder::Two] {
            assert!((edgeworth_cdf(&c, 40.0, 100, order) - 1.0).abs() < 1e-12);
            assert!(edgeworth_cdf(&c, -40.0, 100, order).abs() < 1e-12);
        }
    }

    #[test]
    fn density_odd_corrections_vanish_at_zero() {
        let c = sine_coefficients(PI / 3.0);
        let d = edgeworth_density(&c, 0.0, 500, EdgeworthOrder::One);
        assert!((d - normal::pdf(0.0)).abs() < 1e-14);
    }

    #[test]
    fn order_two_minus_order_one_is_order_one_over_n() {
        let c = sine_coefficients(PI / 3.0);
        let n = 10_000u64;
        for i in 0..81 {
            let x = -4.0 + 0.1 * i as f64;
            let gap = (edgeworth_cdf(&c, x, n, EdgeworthOrder::Two)
                - edgeworth_cdf(&c, x, n, EdgeworthOrder::One))
            .abs();
            let bound = (c.big_b2 * hermite_poly(1, x)
                + c.big_b4 * hermite_poly(3, x)
                + c.big_b6 * hermite_poly(5, x))
            .abs()
                * normal::pdf(x)
                / n as f64;
            assert!(gap <= bound + 1e-15, "x = {x}: gap {gap} > bound {bound}");
        }
    }

    #[test]
    fn normalized_error_scaling() {
        let c = sine_coefficients(PI / 3.0);
        assert_eq!(normalized_error(&c, PI / 3.0, PI / 3.0, 100), 0.0);
        let v = normalized_error(&c, PI / 3.0 + 0.1, PI / 3.0, 100);
        assert!((v - 10.0 * 0.1 / 6.0f64.sqrt()).abs() < 1e-8);
        let w = normalized_error(&c, PI / 3.0 + 0.2, PI / 3.0, 100);
        assert!((w - 2.0 * v).abs() < 1e-12);
    }

    #[test]
    fn clipped_cdf_stays_in_unit_interval() {
        let c = sine_coefficients(PI / 3.0);
        for i in 0..161 {
            let x = -8.0 + 0.1 * i as f64;
            let v = edgeworth_cdf_clipped(&c, x, 50, EdgeworthOrder::One);
            assert!((0.0..=1.0).contains(&v));
        }
    }
}

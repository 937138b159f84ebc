//! The moment-matching estimator with boundary clamping.
//!
//! θ̌ minimizes (m(θ) − m̄)² over the closed interval: the inverse of m when
//! m̄ is in range, the nearer endpoint otherwise. Ties at the endpoints
//! resolve to the clamped branch (non-strict inequalities).

use serde::{Deserialize, Serialize};

use crate::catalog::ClosedForm;
use crate::error::{MmeError, Result};
use crate::inverse::InverseMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClampSide {
    None,
    Lower,
    Upper,
}

/// Estimate plus how it was obtained. `mbar` is in the normalized
/// (increasing-map) convention of the inverse map it was computed with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmeResult {
    pub theta_hat: f64,
    pub clamped: ClampSide,
    pub mbar: f64,
}

/// Total on real m̄ (±∞ included): clamps outside [m(α), m(β)], inverts
/// inside. Errors signal numeric failure of the root find only.
pub fn mme_estimate(inv: &InverseMap, mbar: f64) -> Result<MmeResult> {
    let (m_alpha, m_beta) = inv.range();
    let iv = inv.map().model().theta_interval();
    let (theta_hat, clamped) = if mbar <= m_alpha {
        (iv.alpha(), ClampSide::Lower)
    } else if mbar >= m_beta {
        (iv.beta(), ClampSide::Upper)
    } else {
        (inv.invert(mbar)?, ClampSide::None)
    };
    Ok(MmeResult {
        theta_hat,
        clamped,
        mbar,
    })
}

/// Closed-form estimator for the builtin catalog, unclamped. `mbar` is in
/// the raw convention of each formula (for the decreasing exp_decay map
/// that is the un-negated empirical moment).
pub fn closed_form_mme(form: &ClosedForm, mbar: f64) -> Result<f64> {
    match *form {
        ClosedForm::Amplitude { h_g, g_w, lambda0 } => {
            if h_g == 0.0 {
                return Err(MmeError::FormulaDomain(
                    "amplitude closed form needs \u{222b}gh \u{2260} 0".into(),
                ));
            }
            Ok((mbar - lambda0 * g_w) / h_g)
        }
        ClosedForm::ExpDecay { r } => {
            if mbar <= r {
                return Err(MmeError::FormulaDomain(format!(
                    "exp_decay closed form needs mbar > R = {r}, got {mbar}"
                )));
            }
            Ok(1.0 / (mbar - r))
        }
        ClosedForm::GaussianG1 { a } => {
            if mbar < 0.0 {
                return Err(MmeError::FormulaDomain(format!(
                    "gaussian (t-b)^2 closed form needs mbar >= 0, got {mbar}"
                )));
            }
            Ok((mbar / (a * crate::normal::SQRT_2PI)).cbrt())
        }
        ClosedForm::GaussianG2 { a } => {
            if mbar < 0.0 {
                return Err(MmeError::FormulaDomain(format!(
                    "gaussian |t-b| closed form needs mbar >= 0, got {mbar}"
                )));
            }
            Ok((mbar / (2.0 * a)).sqrt())
        }
        ClosedForm::PeriodicSine => {
            if !(-1.0..=1.0).contains(&mbar) {
                return Err(MmeError::FormulaDomain(format!(
                    "arcsin argument out of [-1, 1]: {mbar}"
                )));
            }
            Ok(mbar.asin())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{self, ModelSpec};
    use crate::inverse::inverse_map;
    use crate::moments::moment_map;
    use std::f64::consts::PI;

    fn sine_inverse(interval: (f64, f64)) -> InverseMap {
        let spec = ModelSpec::periodic_sine().with_theta_interval(interval.0, interval.1);
        let (model, weight) = catalog::builtin_model(&spec).unwrap();
        let map = moment_map(&model, &weight, 1e-10).unwrap();
        inverse_map(map, 1e-12).unwrap()
    }

    #[test]
    fn interior_value_inverts_exactly() {
        let inv = sine_inverse((0.1, 1.5));
        let r = mme_estimate(&inv, (PI / 3.0).sin()).unwrap();
        assert_eq!(r.clamped, ClampSide::None);
        assert!((r.theta_hat - PI / 3.0).abs() < 1e-10);
    }

    #[test]
    fn clamps_on_both_sides() {
        let inv = sine_inverse((0.2, 1.2));
        let hi = mme_estimate(&inv, 2.0).unwrap();
        assert_eq!(hi.clamped, ClampSide::Upper);
        assert_eq!(hi.theta_hat, 1.2);
        let lo = mme_estimate(&inv, -1.0).unwrap();
        assert_eq!(lo.clamped, ClampSide::Lower);
        assert_eq!(lo.theta_hat, 0.2);
    }

    #[test]
    fn boundary_ties_take_the_clamped_branch() {
        let inv = sine_inverse((0.2, 1.2));
        let (m_alpha, m_beta) = inv.range();
        assert_eq!(
            mme_estimate(&inv, m_alpha).unwrap().clamped,
            ClampSide::Lower
        );
        assert_eq!(
            mme_estimate(&inv, m_beta).unwrap().clamped,
            ClampSide::Upper
        );
    }

    #[test]
    fn infinite_surrogates_stay_in_range() {
        let inv = sine_inverse((0.2, 1.2));
        let hi = mme_estimate(&inv, f64::INFINITY).unwrap();
        let lo = mme_estimate(&inv, f64::NEG_INFINITY).unwrap();
        assert_eq!((hi.theta_hat, lo.theta_hat), (1.2, 0.2));
    }

    #[test]
    fn closed_forms_hit_reference_points() {
        let sine = catalog::closed_form(&ModelSpec::periodic_sine()).unwrap();
        assert!((closed_form_mme(&sine, 0.5).unwrap() - PI / 6.0).abs() < 1e-12);

        let amp = catalog::closed_form(&ModelSpec::amplitude()).unwrap();
        assert!((closed_form_mme(&amp, 5.0).unwrap() - 3.0).abs() < 1e-12);

        let g1 = catalog::closed_form(&ModelSpec::gaussian()).unwrap();
        assert!(
            (closed_form_mme(&g1, crate::normal::SQRT_2PI).unwrap() - 1.0).abs() < 1e-12
        );
    }

    #[test]
    fn closed_form_domain_errors() {
        let sine = catalog::closed_form(&ModelSpec::periodic_sine()).unwrap();
        assert!(matches!(
            closed_form_mme(&sine, 1.5),
            Err(MmeError::FormulaDomain(_))
        ));
        let ed = catalog::closed_form(&ModelSpec::exp_decay()).unwrap();
        assert!(matches!(
            closed_form_mme(&ed, -0.5),
            Err(MmeError::FormulaDomain(_))
        ));
        let g1 = catalog::closed_form(&ModelSpec::gaussian()).unwrap();
        assert!(matches!(
            closed_form_mme(&g1, -1e-9),
            Err(MmeError::FormulaDomain(_))
        ));
    }

    #[test]
    fn estimator_is_monotone_in_mbar() {
        let inv = sine_inverse((0.1, 1.5));
        let mut prev = f64::NEG_INFINITY;
        for i in 0..200 {
            let mbar = -1.5 + 3.0 * i as f64 / 199.0;
            let t = mme_estimate(&inv, mbar).unwrap().theta_hat;
            assert!(t >= prev - 1e-12, "non-monotone at mbar = {mbar}");
            assert!((0.1..=1.5).contains(&t));
            prev = t;
        }
    }
}

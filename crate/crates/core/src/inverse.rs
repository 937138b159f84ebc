//! The inverse of the moment map and its derivatives.
//!
//! For a strictly increasing m on (α, β) the inverse G = m⁻¹ exists on
//! ℳ = [m(α), m(β)]. Its derivatives follow from G(m(θ)) = θ:
//!
//! ```text
//! G′ = 1/ṁ,   G″ = −m̈/ṁ³,   G‴ = (3m̈² − ṁ·m⃛)/ṁ⁵
//! ```
//!
//! and ψ_l = G^(l)(m(θ₀))/l! are the coefficients of the estimator's
//! stochastic expansion. Explicit formulas stop at G‴, which caps the
//! expansion order at k = 3; the order-(k+1) derivative bound needed by the
//! residual threshold is estimated from these on a grid.

use serde::{Deserialize, Serialize};

use crate::error::{MmeError, Result};
use crate::moments::MomentMap;

/// Derivative magnitude below which the map is treated as singular.
const SINGULAR_TOL: f64 = 1e-12;
/// Bisection stops at this bracket width, then Newton polishes.
const BISECTION_WIDTH: f64 = 1e-6;
const MAX_NEWTON_ITER: usize = 60;

/// The inverse map G = m⁻¹ with its range ℳ = [m(α), m(β)].
#[derive(Debug, Clone)]
pub struct InverseMap {
    map: MomentMap,
    m_alpha: f64,
    m_beta: f64,
    root_tol: f64,
}

/// First three inverse-map derivatives at m(θ₀).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseDerivatives {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub theta0: f64,
}

/// ψ_l = G^(l)(m(θ₀)) / l! for l = 1, 2, 3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiCoefficients {
    pub psi1: f64,
    pub psi2: f64,
    pub psi3: f64,
    pub theta0: f64,
    /// Expansion order these coefficients support.
    pub k: usize,
}

/// Build the inverse map, evaluating the range endpoints.
pub fn inverse_map(map: MomentMap, root_tol: f64) -> Result<InverseMap> {
    if root_tol <= 0.0 {
        return Err(MmeError::Argument(format!(
            "root tolerance must be positive, got {root_tol}"
        )));
    }
    let iv = map.model().theta_interval();
    let m_alpha = map.m(iv.alpha())?;
    let m_beta = map.m(iv.beta())?;
    debug_assert!(m_alpha < m_beta, "normalized map must be increasing");
    Ok(InverseMap {
        map,
        m_alpha,
        m_beta,
        root_tol,
    })
}

impl InverseMap {
    pub fn map(&self) -> &MomentMap {
        &self.map
    }

    /// [m(α), m(β)]; the set of invertible moment values.
    pub fn range(&self) -> (f64, f64) {
        (self.m_alpha, self.m_beta)
    }

    pub fn root_tol(&self) -> f64 {
        self.root_tol
    }

    /// Solve m(θ) = y by bracketed bisection refined with safeguarded
    /// Newton steps. `y` must lie in the range; callers that need clamping
    /// (the estimator) handle it before calling.
    pub fn invert(&self, y: f64) -> Result<f64> {
        if !(self.m_alpha..=self.m_beta).contains(&y) {
            return Err(MmeError::OutOfRange {
                value: y,
                lo: self.m_alpha,
                hi: self.m_beta,
            });
        }
        let iv = self.map.model().theta_interval();
        let (mut lo, mut hi) = (iv.alpha(), iv.beta());
        if y == self.m_alpha {
            return Ok(lo);
        }
        if y == self.m_beta {
            return Ok(hi);
        }

        // Bisection down to a narrow bracket.
        while hi - lo > BISECTION_WIDTH {
            let mid = 0.5 * (lo + hi);
            let fm = self.map.m(mid)? - y;
            if fm == 0.0 {
                return Ok(mid);
            }
            if fm < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }

        // Newton polish, confined to the bracket.
        let tol = self.root_tol * y.abs().max(1.0);
        let mut theta = 0.5 * (lo + hi);
        let mut residual = self.map.m(theta)? - y;
        for _ in 0..MAX_NEWTON_ITER {
            if residual.abs() <= tol {
                return Ok(theta);
            }
            if residual < 0.0 {
                lo = theta;
            } else {
                hi = theta;
            }
            let slope = self.map.m_deriv(theta, 1)?;
            let mut next = if slope.abs() > SINGULAR_TOL {
                theta - residual / slope
            } else {
                f64::NAN
            };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            theta = next;
            residual = self.map.m(theta)? - y;
        }
        Err(MmeError::RootFailure {
            iterations: MAX_NEWTON_ITER,
            residual: residual.abs(),
        })
    }

    /// G′, G″, G‴ at m(θ₀) from the inverse-function formulas.
    pub fn derivatives(&self, theta0: f64) -> Result<InverseDerivatives> {
        let d1 = self.map.m_deriv(theta0, 1)?;
        if d1.abs() < SINGULAR_TOL {
            return Err(MmeError::SingularMap {
                theta: theta0,
                derivative: d1,
            });
        }
        let d2 = self.map.m_deriv(theta0, 2)?;
        let d3 = self.map.m_deriv(theta0, 3)?;
        let g1 = 1.0 / d1;
        let g2 = -d2 / d1.powi(3);
        let g3 = (3.0 * d2 * d2 - d1 * d3) / d1.powi(5);
        Ok(InverseDerivatives {
            g1,
            g2,
            g3,
            theta0,
        })
    }

    /// ψ_l = G^(l)/l!, l = 1..3.
    pub fn psi(&self, theta0: f64) -> Result<PsiCoefficients> {
        let d = self.derivatives(theta0)?;
        Ok(PsiCoefficients {
            psi1: d.g1,
            psi2: d.g2 / 2.0,
            psi3: d.g3 / 6.0,
            theta0,
            k: 3,
        })
    }

    /// Estimate sup of |G^(order)| over [m(θ₀−δ), m(θ₀+δ)] on a grid.
    /// Orders 2 and 3 use the closed formulas; order 4 differences the
    /// order-3 values in y (no explicit formula is available).
    pub fn derivative_bound(
        &self,
        theta0: f64,
        delta: f64,
        order: usize,
        grid_points: usize,
    ) -> Result<f64> {
        let iv = self.map.model().theta_interval();
        if delta <= 0.0 {
            return Err(MmeError::Argument(format!(
                "delta must be positive, got {delta}"
            )));
        }
        if theta0 - delta <= iv.alpha() || theta0 + delta >= iv.beta() {
            return Err(MmeError::Argument(format!(
                "need alpha + delta < theta0 < beta - delta, got theta0 = {theta0}, delta = {delta}"
            )));
        }
        if grid_points < 5 {
            return Err(MmeError::Config("derivative bound grid too coarse".into()));
        }
        let step = 2.0 * delta / (grid_points - 1) as f64;
        let thetas: Vec<f64> = (0..grid_points)
            .map(|i| theta0 - delta + i as f64 * step)
            .collect();
        match order {
            2 | 3 => {
                let mut sup = 0.0f64;
                for &th in &thetas {
                    let d = self.derivatives(th)?;
                    let v = if order == 2 { d.g2 } else { d.g3 };
                    sup = sup.max(v.abs());
                }
                Ok(sup)
            }
            4 => {
                let mut g3s = Vec::with_capacity(thetas.len());
                let mut ys = Vec::with_capacity(thetas.len());
                for &th in &thetas {
                    g3s.push(self.derivatives(th)?.g3);
                    ys.push(self.map.m(th)?);
                }
                let mut sup = 0.0f64;
                for i in 1..thetas.len() - 1 {
                    let dy = ys[i + 1] - ys[i - 1];
                    if dy.abs() > 0.0 {
                        sup = sup.max(((g3s[i + 1] - g3s[i - 1]) / dy).abs());
                    }
                }
                Ok(sup)
            }
            other => Err(MmeError::Argument(format!(
                "derivative bound supports orders 2..=4, got {other}"
            ))),
        }
    }
}

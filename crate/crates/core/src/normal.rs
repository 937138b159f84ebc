//! Standard normal density and distribution function.

pub const SQRT_2PI: f64 = 2.5066282746310002;

/// Density of N(0,1).
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Distribution function of N(0,1), via erfc (accurate to ~1 ulp).
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

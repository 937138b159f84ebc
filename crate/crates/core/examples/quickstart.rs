//! Minimal end-to-end use of the library: build a model, derive the
//! expansion coefficients, sample one batch, and estimate.
//!
//! ```sh
//! cargo run -p mme-core --example quickstart --release
//! ```

use mme_core::simulate::{PathSampler, SamplingMethod};
use mme_core::{
    am_coefficients, builtin_model, expansion_coefficients, inverse_map, mme_estimate,
    moment_map, predicted_second_moment, sample_batch, ModelSpec,
};

fn main() -> mme_core::Result<()> {
    let theta0 = std::f64::consts::FRAC_PI_3;
    let (model, weight) = builtin_model(&ModelSpec::periodic_sine())?;

    let map = moment_map(&model, &weight, 1e-10)?;
    let am = am_coefficients(&map, theta0)?;
    let inv = inverse_map(map, 1e-12)?;
    let psi = inv.psi(theta0)?;
    let coeffs = expansion_coefficients(&psi, &am)?;
    println!(
        "psi = ({:.4}, {:.4}, {:.4}), a2 = {:.4}",
        coeffs.psi.psi1, coeffs.psi.psi2, coeffs.psi.psi3, coeffs.am.a2
    );
    println!(
        "predicted n*E(dev^2) at n = 1000: {:.4} (limit {:.1})",
        predicted_second_moment(&coeffs, 1000),
        coeffs.psi.psi1 * coeffs.psi.psi1 * coeffs.am.a2
    );

    let sampler = PathSampler::new(&model, theta0, SamplingMethod::Thinning, 1e-10)?;
    let batch = sample_batch(&sampler, inv.map(), theta0, 1000, 42, 0)?;
    let estimate = mme_estimate(&inv, batch.mbar)?;
    println!(
        "one batch of n = 1000: mbar = {:.5}, theta_hat = {:.5} (true {theta0:.5})",
        batch.mbar, estimate.theta_hat
    );
    Ok(())
}

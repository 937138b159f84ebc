//! Path sampling and the stochastic integrals feeding the estimator.
//!
//! Two independent samplers are provided and cross-validated against each
//! other: rejection from a dominating constant rate (thinning), and time
//! rescaling through the numerically inverted cumulative intensity. Either
//! way a path is a sorted list of event times on the window.
//!
//! Randomness is fully determined by (master seed, replication, path): each
//! path owns a dedicated ChaCha8 stream, so batches can be generated on any
//! number of workers, in any order, with identical output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{MmeError, Result};
use crate::intensity::{IntensityModel, WeightFunction};
use crate::moments::{integrate, MomentMap};

/// Panels in the cached cumulative-intensity grid used by inversion.
const CUMULATIVE_PANELS: usize = 512;

/// Seed coordinates for one path. The ChaCha stream id packs
/// (replication, path), so streams never collide for n, N < 2³².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSeed {
    pub master: u64,
    pub stream: u64,
}

impl PathSeed {
    pub fn new(master: u64, replication: u32, path: u32) -> Self {
        Self {
            master,
            stream: ((replication as u64) << 32) | path as u64,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }
}

/// Sampler selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMethod {
    #[default]
    Thinning,
    Inversion,
}

/// One realization: sorted event times inside the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventPath {
    pub times: Vec<f64>,
    pub theta_used: f64,
    pub seed: PathSeed,
}

impl EventPath {
    pub fn count(&self) -> usize {
        self.times.len()
    }
}

/// Rejection sampler from the homogeneous dominating rate λ_max(θ).
#[derive(Debug, Clone)]
pub struct ThinningSampler {
    model: IntensityModel,
    theta: f64,
    rate: f64,
}

impl ThinningSampler {
    pub fn new(model: &IntensityModel, theta: f64) -> Result<Self> {
        if !model.theta_interval().contains(theta) {
            return Err(MmeError::Argument(format!(
                "theta = {theta} outside the parameter interval"
            )));
        }
        let rate = model.lambda_bound(theta);
        if !(rate.is_finite() && rate > 0.0) {
            return Err(MmeError::Validation(format!(
                "lambda_max({theta}) = {rate} is not a usable dominating rate"
            )));
        }
        Ok(Self {
            model: model.clone(),
            theta,
            rate,
        })
    }

    pub fn sample(&self, seed: PathSeed) -> Result<EventPath> {
        let mut rng = seed.rng();
        let window = self.model.window();
        let mut times = Vec::new();
        let mut t = window.start();
        loop {
            let gap: f64 = Exp1.sample(&mut rng);
            t += gap / self.rate;
            if t >= window.end() {
                break;
            }
            let lambda = self.model.eval(self.theta, t);
            if lambda > self.rate * (1.0 + 1e-12) {
                return Err(MmeError::BoundViolation {
                    t,
                    lambda,
                    bound: self.rate,
                });
            }
            let u: f64 = rng.gen();
            if u * self.rate < lambda {
                times.push(t);
            }
        }
        Ok(EventPath {
            times,
            theta_used: self.theta,
            seed,
        })
    }
}

/// Time-rescaling sampler: unit-rate arrivals are mapped through the
/// inverse of the cumulative intensity Λ(t) = ∫ λ(θ,s) ds, which is
/// inverted per event by a safeguarded Newton iteration on a cached
/// cumulative grid.
#[derive(Debug, Clone)]
pub struct InversionSampler {
    model: IntensityModel,
    theta: f64,
    grid: Vec<f64>,
    cumulative: Vec<f64>,
    tol: f64,
}

impl InversionSampler {
    pub fn new(model: &IntensityModel, theta: f64, quadrature_tol: f64) -> Result<Self> {
        if !model.theta_interval().contains(theta) {
            return Err(MmeError::Argument(format!(
                "theta = {theta} outside the parameter interval"
            )));
        }
        let window = model.window();
        let grid = window.grid(CUMULATIVE_PANELS + 1);
        let mut cumulative = Vec::with_capacity(grid.len());
        cumulative.push(0.0);
        let panel_tol = quadrature_tol / CUMULATIVE_PANELS as f64;
        let mut acc = 0.0;
        for w in grid.windows(2) {
            acc += integrate(|t| model.eval(theta, t), w[0], w[1], panel_tol)?;
            cumulative.push(acc);
        }
        Ok(Self {
            model: model.clone(),
            theta,
            grid,
            cumulative,
            tol: quadrature_tol,
        })
    }

    pub fn total_mass(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Solve Λ(t) = s for t.
    fn invert_cumulative(&self, s: f64) -> Result<f64> {
        // Panel containing s.
        let idx = match self.cumulative.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => return Ok(self.grid[i.min(self.grid.len() - 1)]),
            Err(i) => i - 1, // s > cumulative[0] = 0 here
        };
        let panel_lo = self.grid[idx];
        let panel_hi = self.grid[idx + 1];
        // Mass to accumulate past the fixed panel edge.
        let target = s - self.cumulative[idx];
        let panel_mass = self.cumulative[idx + 1] - self.cumulative[idx];
        let local_tol = (self.tol / CUMULATIVE_PANELS as f64).max(1e-14);
        let span = panel_hi - panel_lo;

        let (mut lo, mut hi) = (panel_lo, panel_hi);
        let mut t = if panel_mass > 0.0 {
            panel_lo + span * (target / panel_mass).clamp(0.0, 1.0)
        } else {
            0.5 * (lo + hi)
        };
        let mut residual = f64::NAN;
        for _ in 0..80 {
            residual =
                integrate(|u| self.model.eval(self.theta, u), panel_lo, t, local_tol)? - target;
            if residual.abs() <= local_tol.max(1e-12 * self.total_mass()) || hi - lo <= 1e-12 * span
            {
                return Ok(t);
            }
            if residual < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let slope = self.model.eval(self.theta, t);
            let mut next = if slope > 0.0 {
                t - residual / slope
            } else {
                f64::NAN
            };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            t = next;
        }
        Err(MmeError::RootFailure {
            iterations: 80,
            residual: residual.abs(),
        })
    }

    pub fn sample(&self, seed: PathSeed) -> Result<EventPath> {
        let mut rng = seed.rng();
        let total = self.total_mass();
        let mut times = Vec::new();
        let mut s = 0.0;
        loop {
            let gap: f64 = Exp1.sample(&mut rng);
            s += gap;
            if s >= total {
                break;
            }
            times.push(self.invert_cumulative(s)?);
        }
        Ok(EventPath {
            times,
            theta_used: self.theta,
            seed,
        })
    }
}

/// Either sampler behind one call surface.
#[derive(Debug, Clone)]
pub enum PathSampler {
    Thinning(ThinningSampler),
    Inversion(InversionSampler),
}

impl PathSampler {
    pub fn new(
        model: &IntensityModel,
        theta: f64,
        method: SamplingMethod,
        quadrature_tol: f64,
    ) -> Result<Self> {
        Ok(match method {
            SamplingMethod::Thinning => PathSampler::Thinning(ThinningSampler::new(model, theta)?),
            SamplingMethod::Inversion => {
                PathSampler::Inversion(InversionSampler::new(model, theta, quadrature_tol)?)
            }
        })
    }

    pub fn sample(&self, seed: PathSeed) -> Result<EventPath> {
        match self {
            PathSampler::Thinning(s) => s.sample(seed),
            PathSampler::Inversion(s) => s.sample(seed),
        }
    }
}

/// Sample one path. Convenience wrapper that builds the sampler per call;
/// batch code constructs a `PathSampler` once and reuses it.
pub fn sample_path(
    model: &IntensityModel,
    theta: f64,
    seed: PathSeed,
    method: SamplingMethod,
) -> Result<EventPath> {
    PathSampler::new(model, theta, method, 1e-10)?.sample(seed)
}

/// ∫ g dX = Σ g(tᵢ) over the event times; 0 for an empty path.
pub fn stochastic_integral(g: &WeightFunction, path: &EventPath) -> f64 {
    path.times.iter().map(|&t| g.eval(t)).sum()
}

/// n independent paths with their weighted sums, the empirical moment m̄,
/// and the normalized error η = √n (m̄ − m(θ₀)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub n: u32,
    pub mbar: f64,
    pub eta: f64,
    pub counts: Vec<u32>,
    pub integrals: Vec<f64>,
    pub theta0: f64,
}

impl SampleBatch {
    pub fn all_empty(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }
}

/// Sample a batch for the map's model at θ₀. Path j of replication `replication`
/// draws from the ChaCha stream (replication, j); the weighted sums use the
/// map's effective (sign-normalized) weight so η matches the normalized
/// convention downstream.
pub fn sample_batch(
    sampler: &PathSampler,
    map: &MomentMap,
    theta0: f64,
    n: u32,
    master_seed: u64,
    replication: u32,
) -> Result<SampleBatch> {
    let m0 = map.m(theta0)?;
    sample_batch_with_m0(sampler, map.weight(), theta0, m0, n, master_seed, replication)
}

pub(crate) fn sample_batch_with_m0(
    sampler: &PathSampler,
    weight: &WeightFunction,
    theta0: f64,
    m_theta0: f64,
    n: u32,
    master_seed: u64,
    replication: u32,
) -> Result<SampleBatch> {
    if n == 0 {
        return Err(MmeError::Argument("batch size n must be >= 1".into()));
    }
    let mut counts = Vec::with_capacity(n as usize);
    let mut integrals = Vec::with_capacity(n as usize);
    let mut sum = 0.0;
    for j in 0..n {
        let path = sampler.sample(PathSeed::new(master_seed, replication, j))?;
        let v = stochastic_integral(weight, &path);
        counts.push(path.count() as u32);
        integrals.push(v);
        sum += v;
    }
    let mbar = sum / n as f64;
    let eta = (n as f64).sqrt() * (mbar - m_theta0);
    Ok(SampleBatch {
        n,
        mbar,
        eta,
        counts,
        integrals,
        theta0,
    })
}

//! Exact Gaussian path sampling from the explicit strong solution, running
//! accumulation of the quadratic functional `int (b/sigma)^2 X^2 ds`, and the
//! standard Wiener functionals used as distributional references.
//!
//! Transitions use the exact conditional law
//! `X_{t+dt} | X_t ~ N(e^{a} X_t, V(t+dt) - e^{2a} V(t))` with
//! `a = alpha int_t^{t+dt} b`, so the sampled marginals follow the model's
//! law exactly at every grid point regardless of step size; only the
//! trapezoid rule for the quadratic functional carries discretization error.
//!
//! Randomness comes from a counter-style generator with named substreams:
//! replaying `(seed, stream)` reproduces a path bit for bit, and one stream
//! per path makes parallel sampling deterministic under any thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::closedform;

/// How a grid spaces its points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Refinement {
    Uniform,
    /// Remaining squared volatility `int_t^T sigma^2` shrinks by `ratio` per
    /// step, which equidistributes `ln B` on terminal-form models.
    GeometricTowardHorizon { ratio: f64 },
}

/// Strictly increasing sampling times starting at 0, last point short of the
/// horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
    refinement: Refinement,
}

impl TimeGrid {
    pub fn uniform(t_end: f64, steps: usize) -> Result<Self> {
        if !(t_end.is_finite() && t_end > 0.0) || steps < 1 {
            return Err(Error::InvalidGrid(format!(
                "need t_end > 0 and steps >= 1, got {t_end}, {steps}"
            )));
        }
        let points = (0..=steps).map(|i| t_end * i as f64 / steps as f64).collect();
        Ok(Self { points, refinement: Refinement::Uniform })
    }

    /// Geometric grid toward the horizon: the remaining squared volatility at
    /// the grid points decays by a constant factor from `S(T)` down to
    /// `S(T) - S(t_end)`. Requires a finite `S(T)`.
    pub fn geometric(model: &Model, t_end: f64, steps: usize) -> Result<Self> {
        let total = model.volatility().total_sq();
        if !total.is_finite() {
            return Err(Error::InvalidGrid(
                "geometric grid requires a finite cumulative squared volatility".into(),
            ));
        }
        if !(t_end > 0.0 && t_end < model.horizon()) || steps < 1 {
            return Err(Error::InvalidGrid(format!(
                "need 0 < t_end < horizon and steps >= 1, got {t_end}, {steps}"
            )));
        }
        let remaining_end = total - model.volatility().cum_sq(t_end);
        let ratio = (remaining_end / total).powf(1.0 / steps as f64);
        let mut points = Vec::with_capacity(steps + 1);
        points.push(0.0);
        for i in 1..steps {
            let remaining = total * ratio.powi(i as i32);
            points.push(model.volatility().time_at_cum(total - remaining)?);
        }
        points.push(t_end);
        for w in points.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidGrid(format!(
                    "geometric grid degenerated near t = {} (steps too many for f64 spacing)",
                    w[0]
                )));
            }
        }
        Ok(Self { points, refinement: Refinement::GeometricTowardHorizon { ratio } })
    }

    /// Geometric for terminal-form models with a finite horizon, uniform
    /// otherwise.
    pub fn auto(model: &Model, t_end: f64, steps: usize) -> Result<Self> {
        if model.is_terminal_form() {
            Self::geometric(model, t_end, steps)
        } else {
            Self::uniform(t_end, steps)
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn t_end(&self) -> f64 {
        *self.points.last().unwrap()
    }

    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn refinement(&self) -> Refinement {
        self.refinement
    }
}

/// Which substream generated a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub stream: u64,
}

/// A sampled trajectory with its running quadratic functional.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub grid: TimeGrid,
    /// `X` at the grid points; starts at 0.
    pub values: Vec<f64>,
    /// Running trapezoid of `int (b/sigma)^2 X^2 ds`; starts at 0,
    /// nondecreasing.
    pub quad: Vec<f64>,
    pub seed: SeedRecord,
}

impl PathSample {
    /// The quadratic functional at the end of the grid.
    pub fn quad_end(&self) -> f64 {
        *self.quad.last().unwrap()
    }

    pub fn x_end(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn t_end(&self) -> f64 {
        self.grid.t_end()
    }
}

/// Endpoint summary, for large path counts where full trajectories would not
/// fit in memory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathEndpoint {
    pub x: f64,
    pub quad: f64,
}

/// Per-grid precomputation for repeated sampling: exact decay factors,
/// transition standard deviations, and quadratic-functional weights.
#[derive(Debug, Clone)]
pub struct PathSampler {
    times: Vec<f64>,
    decay: Vec<f64>,
    noise_sd: Vec<f64>,
    weight: Vec<f64>,
    grid: TimeGrid,
}

impl PathSampler {
    pub fn new(model: &Model, grid: &TimeGrid) -> Result<Self> {
        if grid.t_end() >= model.horizon() {
            return Err(Error::InvalidGrid(format!(
                "grid end {} not inside the horizon {}",
                grid.t_end(),
                model.horizon()
            )));
        }
        let times = grid.points().to_vec();
        let n = times.len();
        let mut decay = Vec::with_capacity(n - 1);
        let mut noise_sd = Vec::with_capacity(n - 1);
        let mut weight = Vec::with_capacity(n);
        let mut int_prev = model.int_drift(times[0])?;
        let mut var_prev = closedform::variance(model, times[0])?;
        for i in 0..n - 1 {
            let int_next = model.int_drift(times[i + 1])?;
            let var_next = closedform::variance(model, times[i + 1])?;
            let d = (model.alpha() * (int_next - int_prev)).exp();
            let mut v = var_next - d * d * var_prev;
            if v < -1e-12 * var_next {
                return Err(Error::NegativeTransitionVariance { step: i, variance: v });
            }
            if v < 0.0 {
                v = 0.0;
            }
            decay.push(d);
            noise_sd.push(v.sqrt());
            int_prev = int_next;
            var_prev = var_next;
        }
        for &t in &times {
            let b = model.drift_coef(t)?;
            weight.push(b * b / model.volatility().sigma_sq(t));
        }
        Ok(Self { times, decay, noise_sd, weight, grid: grid.clone() })
    }

    fn rng(&self, seed: u64, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng
    }

    /// Sample a full trajectory on the grid.
    pub fn sample(&self, seed: u64, stream: u64) -> PathSample {
        let mut rng = self.rng(seed, stream);
        let n = self.times.len();
        let mut values = Vec::with_capacity(n);
        let mut quad = Vec::with_capacity(n);
        let mut x = 0.0f64;
        let mut q = 0.0f64;
        let mut f_prev = 0.0f64;
        values.push(x);
        quad.push(q);
        for i in 0..n - 1 {
            let z: f64 = rng.sample(StandardNormal);
            x = self.decay[i] * x + self.noise_sd[i] * z;
            let f = self.weight[i + 1] * x * x;
            q += 0.5 * (f_prev + f) * (self.times[i + 1] - self.times[i]);
            f_prev = f;
            values.push(x);
            quad.push(q);
        }
        PathSample { grid: self.grid.clone(), values, quad, seed: SeedRecord { seed, stream } }
    }

    /// Same recursion without storing the trajectory.
    pub fn endpoint(&self, seed: u64, stream: u64) -> PathEndpoint {
        let mut rng = self.rng(seed, stream);
        let n = self.times.len();
        let mut x = 0.0f64;
        let mut q = 0.0f64;
        let mut f_prev = 0.0f64;
        for i in 0..n - 1 {
            let z: f64 = rng.sample(StandardNormal);
            x = self.decay[i] * x + self.noise_sd[i] * z;
            let f = self.weight[i + 1] * x * x;
            q += 0.5 * (f_prev + f) * (self.times[i + 1] - self.times[i]);
            f_prev = f;
        }
        PathEndpoint { x, quad: q }
    }

    /// Endpoints for streams `0..n_paths`, in stream order. Work is split
    /// across threads; the output does not depend on the thread count.
    pub fn endpoints(&self, seed: u64, n_paths: usize) -> Vec<PathEndpoint> {
        self.endpoints_from(seed, 0, n_paths)
    }

    /// Endpoints for streams `base_stream .. base_stream + n_paths`, in
    /// stream order.
    pub fn endpoints_from(&self, seed: u64, base_stream: u64, n_paths: usize) -> Vec<PathEndpoint> {
        (0..n_paths as u64)
            .into_par_iter()
            .map(|i| self.endpoint(seed, base_stream + i))
            .collect()
    }
}

/// Convenience wrapper: one path on a fresh sampler.
pub fn sample_path(model: &Model, grid: &TimeGrid, seed: u64, stream: u64) -> Result<PathSample> {
    Ok(PathSampler::new(model, grid)?.sample(seed, stream))
}

/// Trapezoid accumulation of `int (b/sigma)^2 X^2 ds` over given values on a
/// grid; the running total at each grid point. Exposed separately so forced
/// (non-sampled) trajectories can be integrated in tests and diagnostics.
pub fn accumulate_quad(model: &Model, grid: &TimeGrid, values: &[f64]) -> Result<Vec<f64>> {
    if values.len() != grid.points().len() {
        return Err(Error::InvalidArgument(format!(
            "{} values for {} grid points",
            values.len(),
            grid.points().len()
        )));
    }
    let mut out = Vec::with_capacity(values.len());
    let mut q = 0.0;
    out.push(0.0);
    let mut f_prev = {
        let t = grid.points()[0];
        let b = model.drift_coef(t)?;
        b * b / model.volatility().sigma_sq(t) * values[0] * values[0]
    };
    for i in 1..values.len() {
        let t = grid.points()[i];
        let b = model.drift_coef(t)?;
        let f = b * b / model.volatility().sigma_sq(t) * values[i] * values[i];
        q += 0.5 * (f_prev + f) * (t - grid.points()[i - 1]);
        f_prev = f;
        out.push(q);
    }
    Ok(out)
}

/// The stochastic integral `int_0^t (b/sigma^2) X dX` evaluated through the
/// pathwise identity of the family,
///
/// ```text
/// (1/2) (b(t)/sigma(t)^2) X_t^2 + K Q_t - (1/2) int_0^t b,
/// ```
///
/// so no discretized stochastic integral is ever formed. This is the score
/// numerator of the MLE.
pub fn score_numerator_at(model: &Model, t: f64, x: f64, quad: f64) -> Result<f64> {
    let b_over_sq = model.drift_coef(t)? / model.volatility().sigma_sq(t);
    Ok(0.5 * b_over_sq * x * x + model.k() * quad - 0.5 * model.int_drift(t)?)
}

/// [`score_numerator_at`] at the end of a sampled path.
pub fn score_numerator(model: &Model, path: &PathSample) -> Result<f64> {
    score_numerator_at(model, path.t_end(), path.x_end(), path.quad_end())
}

/// `W_1`, `int_0^1 W^2 ds` (trapezoid over `steps` uniform increments) and
/// `int_0^1 W dW = (W_1^2 - 1)/2` (exact) for a standard Wiener process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WienerFunctionals {
    pub w1: f64,
    pub int_w2: f64,
    pub int_w_dw: f64,
}

pub fn sample_wiener_functionals(steps: usize, seed: u64, stream: u64) -> Result<WienerFunctionals> {
    if steps < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 steps, got {steps}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let dt = 1.0 / steps as f64;
    let sd = dt.sqrt();
    let mut w = 0.0f64;
    let mut int_w2 = 0.0f64;
    let mut w2_prev = 0.0f64;
    for _ in 0..steps {
        let z: f64 = rng.sample(StandardNormal);
        w += sd * z;
        let w2 = w * w;
        int_w2 += 0.5 * (w2_prev + w2) * dt;
        w2_prev = w2;
    }
    Ok(WienerFunctionals { w1: w, int_w2, int_w_dw: 0.5 * (w * w - 1.0) })
}

/// `n` independent Wiener functional draws on streams `base_stream..`.
pub fn wiener_reference(steps: usize, seed: u64, base_stream: u64, n: usize) -> Result<Vec<WienerFunctionals>> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| sample_wiener_functionals(steps, seed, base_stream + i))
        .collect()
}

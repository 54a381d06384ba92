//! The SDE family: volatility profiles, the drift shape solving the closure
//! condition `d/dt (b/sigma^2) = -2K (b/sigma)^2`, and validity checks.
//!
//! All types are immutable after construction and every operation is a pure
//! function of its arguments, so values can be shared freely across threads.

mod preset;
mod volatility;

pub use preset::{ModelSpec, SigmaSpec, PRESET_NAMES};
pub use volatility::VolatilityProfile;

use crate::error::{Error, Result};

/// The `(K, C)` pair defining the drift shape
/// `b(t) = sigma(t)^2 / (2 (K S(t) + C))`, `S(t) = int_0^t sigma^2`.
///
/// `C` fixes the sign of `b` (they agree at `t = 0`); `K` is the closure
/// parameter of the family. Validity against a concrete profile (the
/// denominator must not vanish before the horizon) is checked by
/// [`Model::new`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftParams {
    k: f64,
    c: f64,
}

impl DriftParams {
    pub fn new(k: f64, c: f64) -> Result<Self> {
        if !k.is_finite() || !c.is_finite() || c == 0.0 {
            return Err(Error::InvalidDrift(format!(
                "need finite K and nonzero finite C, got K = {k}, C = {c}"
            )));
        }
        Ok(Self { k, c })
    }

    /// The terminal-form member of the family: `C = -K S(T)`, so that
    /// `b(t) = sigma(t)^2 / (-2K int_t^T sigma^2)` and the Fisher information
    /// diverges as `t` approaches the horizon.
    pub fn terminal(k: f64, vol: &VolatilityProfile) -> Result<Self> {
        if k == 0.0 {
            return Err(Error::InvalidDrift("terminal form requires K != 0".into()));
        }
        let total = vol.total_sq();
        if !total.is_finite() {
            return Err(Error::InvalidDrift(
                "terminal form requires a finite cumulative squared volatility".into(),
            ));
        }
        Self::new(k, -k * total)
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

/// A fully specified model: drift multiplier `alpha`, drift shape and
/// volatility profile. The horizon `T` is the profile's.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    alpha: f64,
    drift: DriftParams,
    vol: VolatilityProfile,
}

impl Model {
    /// Validates that the drift denominator `K S(t) + C` keeps a constant sign
    /// on `[0, T)`. The denominator is affine in the increasing function `S`,
    /// so it suffices to compare its sign at `t = 0` with its limit at the
    /// horizon; the limit may be exactly zero (terminal form).
    pub fn new(alpha: f64, drift: DriftParams, vol: VolatilityProfile) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::InvalidModel(format!("alpha must be finite, got {alpha}")));
        }
        let d0 = drift.c;
        let d_end = drift.k * vol.total_sq() + drift.c;
        let crosses = if drift.k == 0.0 {
            false
        } else if d_end == 0.0 || d_end.is_nan() {
            // K*inf + C is NaN only when K = 0, excluded above; exact zero is
            // the terminal form, reached only at the open end of the interval.
            d_end.is_nan()
        } else {
            d_end.signum() != d0.signum()
        };
        if crosses {
            return Err(Error::InvalidModel(format!(
                "drift denominator K S(t) + C changes sign before the horizon \
                 (C = {}, K S(T) + C = {d_end})",
                drift.c
            )));
        }
        Ok(Self { alpha, drift, vol })
    }

    /// Terminal-form constructor: `C = -K S(T)` exactly.
    pub fn terminal(alpha: f64, k: f64, vol: VolatilityProfile) -> Result<Self> {
        let drift = DriftParams::terminal(k, &vol)?;
        Self::new(alpha, drift, vol)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Same model with a different drift multiplier.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(alpha, self.drift, self.vol.clone())
    }

    pub fn drift_params(&self) -> DriftParams {
        self.drift
    }

    pub fn volatility(&self) -> &VolatilityProfile {
        &self.vol
    }

    pub fn horizon(&self) -> f64 {
        self.vol.horizon()
    }

    pub fn k(&self) -> f64 {
        self.drift.k
    }

    pub fn c(&self) -> f64 {
        self.drift.c
    }

    /// Whether the drift is the terminal-form member `C = -K S(T)`.
    pub fn is_terminal_form(&self) -> bool {
        let total = self.vol.total_sq();
        self.drift.k != 0.0 && total.is_finite() && self.drift.k * total + self.drift.c == 0.0
    }

    pub(crate) fn check_time(&self, t: f64) -> Result<()> {
        if t >= 0.0 && t < self.horizon() {
            Ok(())
        } else {
            Err(Error::TimeOutOfRange { t, horizon: self.horizon() })
        }
    }

    /// The drift denominator `K S(t) + C`.
    pub fn denom(&self, t: f64) -> f64 {
        self.drift.k * self.vol.cum_sq(t) + self.drift.c
    }

    /// The drift coefficient `b(t) = sigma(t)^2 / (2 (K S(t) + C))`.
    pub fn drift_coef(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let d = self.denom(t);
        if d == 0.0 {
            return Err(Error::InvalidModel(format!("drift denominator vanishes at t = {t}")));
        }
        Ok(self.vol.sigma_sq(t) / (2.0 * d))
    }

    /// Log of the scale factor `exp{2 int_0^t b}` through which every closed
    /// form of the family is expressed: `(1/K) ln(1 + (K/C) S(t))` for
    /// `K != 0`, `S(t)/C` for `K = 0`.
    ///
    /// Computed via `ln_1p`, so it stays accurate for small `K S / C` and it
    /// is the preferred quantity near the horizon of terminal-form models,
    /// where the scale factor itself underflows.
    pub fn log_scale(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let s = self.vol.cum_sq(t);
        let (k, c) = (self.drift.k, self.drift.c);
        // K = 0 limit, switched exactly where the general expression would
        // lose the perturbation to rounding.
        if k.abs() < 1e-12 * (c.abs() / s.max(1.0)) {
            return Ok(s / c);
        }
        let x = k / c * s;
        if x <= -1.0 {
            return Err(Error::InvalidModel(format!(
                "nonpositive scale base 1 + (K/C) S(t) = {} at t = {t}",
                1.0 + x
            )));
        }
        Ok(x.ln_1p() / k)
    }

    /// The scale factor `exp{2 int_0^t b}` itself; `1` at `t = 0`.
    pub fn scale(&self, t: f64) -> Result<f64> {
        Ok(self.log_scale(t)?.exp())
    }

    /// `int_0^t b(s) ds`, which equals half the log scale factor.
    pub fn int_drift(&self, t: f64) -> Result<f64> {
        Ok(0.5 * self.log_scale(t)?)
    }

    /// Time with a prescribed remaining squared-volatility fraction:
    /// `int_t^T sigma^2 = delta * S(T)`. Requires a finite `S(T)`.
    pub fn time_at_remaining_fraction(&self, delta: f64) -> Result<f64> {
        let total = self.vol.total_sq();
        if !total.is_finite() {
            return Err(Error::InvalidArgument(
                "remaining-fraction time requires a finite cumulative squared volatility".into(),
            ));
        }
        if !(0.0 < delta && delta < 1.0) {
            return Err(Error::InvalidArgument(format!("delta must be in (0, 1), got {delta}")));
        }
        self.vol.time_at_cum((1.0 - delta) * total)
    }
}

/// Maximum absolute residual of the closure condition
/// `d/dt (b/sigma^2) + 2K (b/sigma)^2 = 0` over `grid`, with the derivative
/// replaced by a centered difference of width `2h`. Diagnostic only: for
/// valid models with smooth volatility the residual is `O(h^2)`.
pub fn bernoulli_residual(model: &Model, grid: &[f64], h: f64) -> Result<f64> {
    if h <= 0.0 {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    let mut worst: f64 = 0.0;
    for &t in grid {
        if t - h < 0.0 || t + h >= model.horizon() {
            return Err(Error::TimeOutOfRange { t, horizon: model.horizon() });
        }
        let f = |u: f64| -> Result<f64> { Ok(model.drift_coef(u)? / model.volatility().sigma_sq(u)) };
        let deriv = (f(t + h)? - f(t - h)?) / (2.0 * h);
        let b = model.drift_coef(t)?;
        let resid = deriv + 2.0 * model.k() * b * b / model.volatility().sigma_sq(t);
        worst = worst.max(resid.abs());
    }
    Ok(worst)
}

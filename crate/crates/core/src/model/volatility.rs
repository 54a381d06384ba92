use crate::error::{Error, Result};

/// Deterministic volatility `sigma(t) > 0` on `[0, T)` together with its
/// cumulative square `S(t) = int_0^t sigma(u)^2 du`.
///
/// Two shapes are supported: constant, with `S(t) = sigma^2 t` exact, and a
/// table of `(t, sigma^2)` knots interpolated linearly in `sigma^2`, with `S`
/// the exact integral of the interpolant (extended by its last value past the
/// final knot). Tabulated profiles make the drift only piecewise smooth;
/// [`is_smooth`](VolatilityProfile::is_smooth) lets reports flag that.
#[derive(Debug, Clone, PartialEq)]
pub struct VolatilityProfile {
    kind: Kind,
    horizon: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Constant {
        sigma_sq: f64,
    },
    Tabulated {
        /// (time, sigma^2) knots, strictly increasing times starting at 0.
        knots: Vec<(f64, f64)>,
        /// S at each knot.
        cum: Vec<f64>,
    },
}

impl VolatilityProfile {
    /// Constant volatility `sigma(t) = sigma`; the horizon may be infinite.
    pub fn constant(sigma: f64, horizon: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidProfile(format!("sigma must be positive, got {sigma}")));
        }
        check_horizon(horizon)?;
        Ok(Self { kind: Kind::Constant { sigma_sq: sigma * sigma }, horizon })
    }

    /// Piecewise-linear `sigma^2` through `knots`. Knot times must be strictly
    /// increasing and start at 0; values are `sigma^2` and must be positive.
    pub fn tabulated(knots: Vec<(f64, f64)>, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        if knots.is_empty() {
            return Err(Error::InvalidProfile("need at least one knot".into()));
        }
        if knots[0].0 != 0.0 {
            return Err(Error::InvalidProfile("first knot must be at t = 0".into()));
        }
        for w in knots.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidProfile(format!(
                    "knot times must be strictly increasing, got {} then {}",
                    w[0].0, w[1].0
                )));
            }
        }
        for &(t, v) in &knots {
            if !(v.is_finite() && v > 0.0) || !t.is_finite() {
                return Err(Error::InvalidProfile(format!(
                    "knot values must be positive and finite, got sigma^2 = {v} at t = {t}"
                )));
            }
        }
        let mut cum = Vec::with_capacity(knots.len());
        let mut acc = 0.0;
        cum.push(0.0);
        for w in knots.windows(2) {
            acc += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
            cum.push(acc);
        }
        Ok(Self { kind: Kind::Tabulated { knots, cum }, horizon })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Whether `sigma^2` is smooth on `[0, T)`. Tabulated profiles are only
    /// piecewise-C1; the drift they induce falls outside the family's
    /// smoothness assumption and gets flagged in reports.
    pub fn is_smooth(&self) -> bool {
        matches!(self.kind, Kind::Constant { .. })
    }

    /// `sigma(t)^2`.
    pub fn sigma_sq(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Constant { sigma_sq } => *sigma_sq,
            Kind::Tabulated { knots, .. } => {
                let last = knots.len() - 1;
                if t >= knots[last].0 {
                    return knots[last].1;
                }
                let i = segment_index(knots, t);
                let (t0, v0) = knots[i];
                let (t1, v1) = knots[i + 1];
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    pub fn sigma(&self, t: f64) -> f64 {
        self.sigma_sq(t).sqrt()
    }

    /// `S(t) = int_0^t sigma^2`, strictly increasing, `S(0) = 0`.
    pub fn cum_sq(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Constant { sigma_sq } => sigma_sq * t,
            Kind::Tabulated { knots, cum } => {
                let last = knots.len() - 1;
                if t >= knots[last].0 {
                    return cum[last] + knots[last].1 * (t - knots[last].0);
                }
                let i = segment_index(knots, t);
                let (t0, v0) = knots[i];
                let dt = t - t0;
                cum[i] + v0 * dt + 0.5 * (self.sigma_sq(t) - v0) * dt
            }
        }
    }

    /// `S(T)`; infinite for constant profiles with an infinite horizon.
    pub fn total_sq(&self) -> f64 {
        if self.horizon.is_infinite() {
            match self.kind {
                Kind::Constant { .. } | Kind::Tabulated { .. } => f64::INFINITY,
            }
        } else {
            self.cum_sq(self.horizon)
        }
    }

    /// Inverse of `S`: the time with `S(t) = target`. Bisection on the
    /// monotone cumulative integral; exact division for constant profiles.
    pub fn time_at_cum(&self, target: f64) -> Result<f64> {
        let total = self.total_sq();
        if !(target >= 0.0 && target < total) {
            return Err(Error::InvalidArgument(format!(
                "cumulative target {target} outside [0, {total})"
            )));
        }
        if target == 0.0 {
            return Ok(0.0);
        }
        if let Kind::Constant { sigma_sq } = self.kind {
            return Ok(target / sigma_sq);
        }
        let mut lo = 0.0f64;
        let mut hi = if self.horizon.is_finite() {
            self.horizon
        } else {
            let mut h = 1.0;
            while self.cum_sq(h) < target {
                h *= 2.0;
            }
            h
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cum_sq(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon.is_nan() || horizon <= 0.0 {
        return Err(Error::InvalidProfile(format!(
            "horizon must be positive (possibly infinite), got {horizon}"
        )));
    }
    Ok(())
}

/// Index of the segment containing `t` (requires `t <` last knot time).
fn segment_index(knots: &[(f64, f64)], t: f64) -> usize {
    match knots.binary_search_by(|&(kt, _)| kt.partial_cmp(&t).unwrap()) {
        Ok(i) => i,
        Err(i) => i.saturating_sub(1),
    }
}

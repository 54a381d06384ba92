use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DriftParams, Model, VolatilityProfile};

/// Names accepted by [`ModelSpec::build`], in the order they are documented.
pub const PRESET_NAMES: &[&str] = &["ou", "wiener", "alpha-bridge", "terminal", "custom"];

/// Serializable model description used by configs and the CLI.
///
/// ```json
/// {"preset": "alpha-bridge", "alpha": 1.0, "T": 1.0}
/// {"preset": "terminal", "alpha": 0.5, "T": 2.0, "K": -1.0,
///  "sigma": {"kind": "tabulated", "knots": [[0.0, 1.0], [2.0, 0.5]]}}
/// ```
///
/// Presets:
/// - `"ou"`: `K = 0`, `C = 1/2`, `sigma = 1` (so `b = 1`); default `T`
///   infinite. The classical Ornstein-Uhlenbeck process.
/// - `"wiener"`: `"ou"` with `alpha` forced to 0 (standard Brownian motion).
/// - `"alpha-bridge"`: terminal form with `K = 1/2`, `sigma = 1`, finite `T`
///   (default 1), i.e. `b(t) = -1/(T - t)`.
/// - `"terminal"`: terminal form with user-supplied `K != 0`, volatility and
///   finite `T`.
/// - `"custom"`: explicit `K` and `C`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub preset: String,
    #[serde(default)]
    pub alpha: f64,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<SigmaSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SigmaSpec {
    Constant { value: f64 },
    Tabulated { knots: Vec<(f64, f64)> },
}

impl ModelSpec {
    pub fn preset(name: &str, alpha: f64) -> Self {
        Self { preset: name.to_string(), alpha, horizon: None, k: None, c: None, sigma: None }
    }

    fn volatility(&self, default_horizon: f64) -> Result<VolatilityProfile> {
        let horizon = self.horizon.unwrap_or(default_horizon);
        match &self.sigma {
            None => VolatilityProfile::constant(1.0, horizon),
            Some(SigmaSpec::Constant { value }) => VolatilityProfile::constant(*value, horizon),
            Some(SigmaSpec::Tabulated { knots }) => {
                VolatilityProfile::tabulated(knots.clone(), horizon)
            }
        }
    }

    pub fn build(&self) -> Result<Model> {
        match self.preset.as_str() {
            "ou" | "wiener" => {
                let alpha = if self.preset == "wiener" { 0.0 } else { self.alpha };
                if self.k.is_some() || self.c.is_some() {
                    return Err(Error::InvalidConfig(format!(
                        "preset '{}' fixes K = 0 and C = 1/2; use 'custom' to override",
                        self.preset
                    )));
                }
                Model::new(alpha, DriftParams::new(0.0, 0.5)?, self.volatility(f64::INFINITY)?)
            }
            "alpha-bridge" => {
                if self.k.is_some() || self.c.is_some() {
                    return Err(Error::InvalidConfig(
                        "preset 'alpha-bridge' fixes K = 1/2; use 'terminal' instead".into(),
                    ));
                }
                Model::terminal(self.alpha, 0.5, self.volatility(1.0)?)
            }
            "terminal" => {
                let k = self.k.ok_or_else(|| {
                    Error::InvalidConfig("preset 'terminal' requires K".into())
                })?;
                if self.c.is_some() {
                    return Err(Error::InvalidConfig(
                        "preset 'terminal' derives C from K and the profile".into(),
                    ));
                }
                Model::terminal(self.alpha, k, self.volatility(1.0)?)
            }
            "custom" => {
                let k = self
                    .k
                    .ok_or_else(|| Error::InvalidConfig("preset 'custom' requires K".into()))?;
                let c = self
                    .c
                    .ok_or_else(|| Error::InvalidConfig("preset 'custom' requires C".into()))?;
                Model::new(self.alpha, DriftParams::new(k, c)?, self.volatility(f64::INFINITY)?)
            }
            other => Err(Error::InvalidConfig(format!(
                "unknown preset '{other}' (expected one of {PRESET_NAMES:?})"
            ))),
        }
    }
}

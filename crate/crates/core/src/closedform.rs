//! Closed forms for the family: variance, joint Laplace transform of the
//! quadratic functional and squared endpoint (two derivations), Fisher
//! information with its horizon asymptotics, and the named special cases
//! (Ornstein-Uhlenbeck / Cameron-Martin, the corrected Mansuy formula, the
//! alpha-Wiener bridge).
//!
//! Everything is a function of the model's scale factor `B(t) = exp{2 int b}`
//! and is evaluated through `ln B`, switching to log-sum-exp arithmetic when
//! the hyperbolic arguments get large (terminal-form models near the
//! horizon). Pure functions over immutable inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;

/// Arguments `(t, mu, nu)` of the joint transform
/// `E exp{-mu int_0^t (b/sigma)^2 X^2 ds - nu X_t^2}`.
///
/// `mu = 0` is admitted by continuous extension (the pure Gaussian transform
/// of `X_t^2`); the pre-simplification form [`joint_laplace_pre`] needs
/// `mu > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceQuery {
    pub t: f64,
    pub mu: f64,
    pub nu: f64,
}

impl LaplaceQuery {
    pub fn new(t: f64, mu: f64, nu: f64) -> Result<Self> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidArgument(format!("t must be finite and >= 0, got {t}")));
        }
        if !(mu >= 0.0) || !(nu >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "mu and nu must be >= 0, got mu = {mu}, nu = {nu}"
            )));
        }
        Ok(Self { t, mu, nu })
    }
}

/// Limit law of the Fisher-normalized estimation error as `t` approaches the
/// horizon of a terminal-form model, classified by `(sign(alpha - K), sign K)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LimitKind {
    /// `sign(alpha - K) = sign(K)`: standard normal limit.
    Normal,
    /// `alpha = K`: the Dickey-Fuller-type law
    /// `-sign(K)/(2 sqrt 2) (W_1^2 - 1)/int_0^1 W^2`, exact for every `t`.
    DickeyFullerType,
    /// `sign(alpha - K) = -sign(K)`: standard Cauchy limit.
    Cauchy,
}

impl std::fmt::Display for LimitKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LimitKind::Normal => write!(f, "normal"),
            LimitKind::DickeyFullerType => write!(f, "dickey-fuller"),
            LimitKind::Cauchy => write!(f, "cauchy"),
        }
    }
}

/// `expm1(w)/w`, continuous at 0.
fn expm1_over(w: f64) -> f64 {
    if w == 0.0 {
        1.0
    } else {
        w.exp_m1() / w
    }
}

/// `(expm1(w) - w)/w^2`, continuous at 0 (value 1/2). Series below 1e-4,
/// where the direct difference would lose up to half the digits.
fn expm1_minus_over_sq(w: f64) -> f64 {
    if w.abs() < 1e-4 {
        0.5 + w / 6.0 + w * w / 24.0 + w * w * w / 120.0
    } else {
        (w.exp_m1() - w) / (w * w)
    }
}

/// `ln(cosh x - kappa sinh x)`, in log-sum-exp form once `|x| > 30`.
fn log_radicand(x: f64, kappa: f64, t: f64) -> Result<f64> {
    if x.abs() <= 30.0 {
        let rad = x.cosh() - kappa * x.sinh();
        if rad <= 0.0 {
            return Err(Error::DegenerateTransform { t, radicand: rad });
        }
        Ok(rad.ln())
    } else {
        let m = x.abs();
        let bracket = 0.5 * ((1.0 - kappa) * (x - m).exp() + (1.0 + kappa) * (-x - m).exp());
        if bracket <= 0.0 {
            return Err(Error::DegenerateTransform { t, radicand: bracket });
        }
        Ok(m + bracket.ln())
    }
}

fn variance_with_alpha(model: &Model, t: f64, alpha: f64) -> Result<f64> {
    let ell = model.log_scale(t)?;
    let k = model.k();
    let c = model.c();
    let w = (alpha - k) * ell;
    if w.abs() < 30.0 {
        Ok(c * (k * ell).exp() * ell * expm1_over(w))
    } else {
        // far from the removable singularity; avoid 0 * inf products instead
        Ok(c / (alpha - k) * ((alpha * ell).exp() - (k * ell).exp()))
    }
}

/// Variance of `X_t`: `C/(alpha - K) (B^alpha - B^K)` for `alpha != K`,
/// `C B^K ln B` at `alpha = K`; equals `int_0^t sigma^2 exp{2 alpha int_u^t b} du`.
/// Zero at `t = 0`, positive after, computed through a single `expm1`-based
/// branch so it is continuous across `alpha = K`.
pub fn variance(model: &Model, t: f64) -> Result<f64> {
    variance_with_alpha(model, t, model.alpha())
}

/// The joint Laplace transform `Psi_t(alpha, mu, nu)`, in `(0, 1]`:
///
/// ```text
/// B^{(K-alpha)/4} / sqrt( cosh(R/2 ln B) - (alpha - K - 4 nu (K S + C))/R * sinh(R/2 ln B) ),
/// R = sqrt(2 mu + (alpha - K)^2).
/// ```
///
/// Decreasing in `mu` and `nu`; `mu = 0` falls back to the Gaussian transform
/// `1/sqrt(1 + 2 nu V(t))`. A nonpositive radicand (impossible for valid
/// models) raises [`Error::DegenerateTransform`] rather than returning NaN.
pub fn joint_laplace(model: &Model, q: &LaplaceQuery) -> Result<f64> {
    model.check_time(q.t)?;
    if q.mu == 0.0 {
        let v = variance(model, q.t)?;
        return Ok(1.0 / (1.0 + 2.0 * q.nu * v).sqrt());
    }
    let ell = model.log_scale(q.t)?;
    let z = model.alpha() - model.k();
    let r = (2.0 * q.mu + z * z).sqrt();
    let kappa = (z - 4.0 * q.nu * model.denom(q.t)) / r;
    let ln_rad = log_radicand(0.5 * r * ell, kappa, q.t)?;
    Ok((-0.25 * z * ell - 0.5 * ln_rad).exp())
}

/// The pre-simplification form of the same transform (the change-of-drift
/// derivation): with `A = alpha - K - sign(b) sqrt(2 mu + (alpha - K)^2)`
/// and `beta = alpha - A`,
///
/// ```text
/// sqrt( exp{-A int_0^t b} / (1 + (2 nu - A b(t)/sigma(t)^2) V(t; beta)) ).
/// ```
///
/// Requires `mu > 0`; agrees with [`joint_laplace`] to ~1e-10 relative
/// wherever both are defined, which is the library's primary algebraic
/// cross-check.
pub fn joint_laplace_pre(model: &Model, q: &LaplaceQuery) -> Result<f64> {
    model.check_time(q.t)?;
    if !(q.mu > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "pre-simplification form needs mu > 0, got {}",
            q.mu
        )));
    }
    let z = model.alpha() - model.k();
    let sign_b = model.c().signum();
    let a = z - sign_b * (2.0 * q.mu + z * z).sqrt();
    let beta = model.alpha() - a;
    let v = variance_with_alpha(model, q.t, beta)?;
    let b_over_sq = 1.0 / (2.0 * model.denom(q.t));
    let den = 1.0 + (2.0 * q.nu - a * b_over_sq) * v;
    if den <= 0.0 {
        return Err(Error::DegenerateTransform { t: q.t, radicand: den });
    }
    let ell = model.log_scale(q.t)?;
    Ok((0.5 * (-a * 0.5 * ell - den.ln())).exp())
}

/// Laplace transform of `int_0^t Z^2` for the Ornstein-Uhlenbeck process
/// `dZ = alpha Z dt + dB`, `Z_0 = 0`:
///
/// ```text
/// ( e^{-alpha t} r / (r cosh(t r) - alpha sinh(t r)) )^{1/2},  r = sqrt(alpha^2 + 2 mu).
/// ```
pub fn ou_laplace(alpha: f64, t: f64, mu: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("t must be >= 0, got {t}")));
    }
    if !(mu >= 0.0) {
        return Err(Error::InvalidArgument(format!("mu must be >= 0, got {mu}")));
    }
    if mu == 0.0 {
        return Ok(1.0);
    }
    let r = (alpha * alpha + 2.0 * mu).sqrt();
    let ln_rad = log_radicand(t * r, alpha / r, t)?;
    Ok((0.5 * (-alpha * t - ln_rad)).exp())
}

/// Corrected closed form of Mansuy's transform
/// `E exp{ -(mu/2) int_0^t B_u^2/(T-u)^2 du }` for a standard Brownian
/// motion (the published proposition has a misprint):
///
/// ```text
/// ((T-t)/T)^{(1+g)/4} / sqrt( 1 - (1+g)/(2g) (1 - (1-t/T)^g) ),  g = sqrt(4 mu + 1).
/// ```
pub fn mansuy_laplace(horizon: f64, t: f64, mu: f64) -> Result<f64> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be finite positive, got {horizon}")));
    }
    if !(t >= 0.0 && t < horizon) {
        return Err(Error::TimeOutOfRange { t, horizon });
    }
    if !(mu >= 0.0) {
        return Err(Error::InvalidArgument(format!("mu must be >= 0, got {mu}")));
    }
    let g = (4.0 * mu + 1.0).sqrt();
    let frac = 1.0 - t / horizon;
    let num = frac.powf(0.25 * (1.0 + g));
    let den = 1.0 - (1.0 + g) / (2.0 * g) * (1.0 - frac.powf(g));
    if den <= 0.0 {
        return Err(Error::DegenerateTransform { t, radicand: den });
    }
    Ok(num / den.sqrt())
}

/// Joint transform for the alpha-Wiener bridge `dX = -alpha/(T-t) X dt + dB`,
/// written directly in `(alpha, T)` as an independent specialization:
///
/// ```text
/// (1-t/T)^{(1-2 alpha)/4} / sqrt( cosh(x) + (1-2 alpha - 4 nu (T-t))/G * sinh(x) ),
/// x = G/2 ln(1-t/T),  G = sqrt(8 mu + (2 alpha - 1)^2).
/// ```
///
/// Must coincide with [`joint_laplace`] on the `alpha-bridge` preset.
pub fn bridge_laplace(alpha: f64, horizon: f64, q: &LaplaceQuery) -> Result<f64> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be finite positive, got {horizon}")));
    }
    if q.t >= horizon {
        return Err(Error::TimeOutOfRange { t: q.t, horizon });
    }
    let lnf = (-q.t / horizon).ln_1p();
    if q.mu == 0.0 {
        // Gaussian transform with the bridge variance.
        let w = (2.0 * alpha - 1.0) * lnf;
        let v = -horizon / 2.0 * lnf.exp() * 2.0 * lnf * expm1_over(w);
        return Ok(1.0 / (1.0 + 2.0 * q.nu * v).sqrt());
    }
    let g = (8.0 * q.mu + (2.0 * alpha - 1.0) * (2.0 * alpha - 1.0)).sqrt();
    let coef = (1.0 - 2.0 * alpha - 4.0 * q.nu * (horizon - q.t)) / g;
    let ln_rad = log_radicand(0.5 * g * lnf, -coef, q.t)?;
    Ok((0.25 * (1.0 - 2.0 * alpha) * lnf - 0.5 * ln_rad).exp())
}

/// Fisher information for the drift parameter contained in an observation of
/// the path up to `t`:
/// `(B^{alpha-K} - 1)/(4 (alpha-K)^2) - ln B/(4 (alpha-K))` for `alpha != K`,
/// `(ln B)^2/8` at `alpha = K`; equals `int_0^t (b/sigma)^2 Var(X_s) ds` and
/// is strictly increasing in `t`. One `expm1`-based branch covers both cases.
pub fn fisher_info(model: &Model, t: f64) -> Result<f64> {
    let ell = model.log_scale(t)?;
    let w = (model.alpha() - model.k()) * ell;
    Ok(0.25 * ell * ell * expm1_minus_over_sq(w))
}

/// Whether the Fisher information diverges as `t` approaches the horizon:
/// for `K != 0`, exactly when `S(T)` is infinite (if `C/K > 0`) or when
/// `S(T) = -C/K` (if `C/K < 0`, the terminal form); for `K = 0`, exactly when
/// `S(T)` is infinite.
pub fn fisher_diverges(model: &Model) -> bool {
    let total = model.volatility().total_sq();
    if model.k() == 0.0 {
        total.is_infinite()
    } else if model.c() / model.k() > 0.0 {
        total.is_infinite()
    } else {
        total.is_finite() && model.k() * total + model.c() == 0.0
    }
}

/// Classification of the limit law by `(sign(alpha - K), sign K)`, `K != 0`.
pub fn limit_kind(alpha: f64, k: f64) -> Result<LimitKind> {
    if k == 0.0 {
        return Err(Error::InvalidArgument("limit classification needs K != 0".into()));
    }
    Ok(if alpha == k {
        LimitKind::DickeyFullerType
    } else if (alpha - k).signum() == k.signum() {
        LimitKind::Normal
    } else {
        LimitKind::Cauchy
    })
}

/// Leading-order Fisher information near the horizon of a terminal-form
/// model, with the regime it belongs to. Writing `r(t) = int_t^T sigma^2`:
/// Cauchy regime `(S(T)/r)^{(K-alpha)/K} / (4 (K-alpha)^2)`, at `alpha = K`
/// `(ln r)^2 / (8 K^2)`, Normal regime `ln r / (4 K (K-alpha))`. The ratio
/// `fisher_info / value` tends to 1 as `t` approaches the horizon.
pub fn fisher_asymptote(model: &Model, t: f64) -> Result<(f64, LimitKind)> {
    if !model.is_terminal_form() {
        return Err(Error::NotTerminalForm);
    }
    model.check_time(t)?;
    let total = model.volatility().total_sq();
    let remaining = total - model.volatility().cum_sq(t);
    let (alpha, k) = (model.alpha(), model.k());
    let kind = limit_kind(alpha, k)?;
    let value = match kind {
        LimitKind::Cauchy => {
            (total / remaining).powf((k - alpha) / k) / (4.0 * (k - alpha) * (k - alpha))
        }
        LimitKind::DickeyFullerType => {
            let lr = remaining.ln();
            lr * lr / (8.0 * k * k)
        }
        LimitKind::Normal => remaining.ln() / (4.0 * k * (k - alpha)),
    };
    Ok((value, kind))
}

/// Horizon limit of `E exp{ -(mu/I(t)) int_0^t (b/sigma)^2 X^2 }` for
/// terminal-form models: `1/sqrt(1 + 2 mu)` (Cauchy regime),
/// `1/sqrt(cosh(2 sqrt mu))` (`alpha = K`, where it is exact for every `t`),
/// `e^{-mu}` (Normal regime).
pub fn denom_laplace_limit(model: &Model, mu: f64) -> Result<f64> {
    if !model.is_terminal_form() {
        return Err(Error::NotTerminalForm);
    }
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!("mu must be > 0, got {mu}")));
    }
    Ok(match limit_kind(model.alpha(), model.k())? {
        LimitKind::Cauchy => 1.0 / (1.0 + 2.0 * mu).sqrt(),
        LimitKind::DickeyFullerType => 1.0 / (2.0 * mu.sqrt()).cosh().sqrt(),
        LimitKind::Normal => (-mu).exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DriftParams, VolatilityProfile};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // frozen before implementation with a 40-digit evaluation of the formulas
    const CAMERON_MARTIN_T1_MU_HALF: f64 = 0.805018182194592_049;
    const OU_ALPHA_M1_T1_MU_HALF: f64 = 0.875484244396366_032;
    const INV_SQRT_COSH2: f64 = 0.515560111756213_828;
    const MANSUY_T_HALF_MU_1: f64 = 0.870428266318174_816;
    const INV_SQRT_1P5: f64 = 0.816496580927726_033;

    fn ou(alpha: f64) -> Model {
        Model::new(
            alpha,
            DriftParams::new(0.0, 0.5).unwrap(),
            VolatilityProfile::constant(1.0, f64::INFINITY).unwrap(),
        )
        .unwrap()
    }

    fn bridge(alpha: f64) -> Model {
        Model::terminal(alpha, 0.5, VolatilityProfile::constant(1.0, 1.0).unwrap()).unwrap()
    }

    fn q(t: f64, mu: f64, nu: f64) -> LaplaceQuery {
        LaplaceQuery::new(t, mu, nu).unwrap()
    }

    #[test]
    fn variance_vanishes_at_origin() {
        assert_eq!(variance(&ou(0.7), 0.0).unwrap(), 0.0);
        assert_eq!(variance(&bridge(1.0), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn wiener_bridge_variance_is_brownian_bridge() {
        // t (T - t) / T at T = 1, t = 1/2
        assert_relative_eq!(variance(&bridge(1.0), 0.5).unwrap(), 0.25, max_relative = 1e-13);
    }

    #[test]
    fn wiener_variance_is_t() {
        assert_relative_eq!(variance(&ou(0.0), 2.0).unwrap(), 2.0, max_relative = 1e-13);
    }

    #[test]
    fn variance_continuous_across_alpha_equals_k() {
        let near = bridge(0.5 + 1e-9);
        let at = bridge(0.5);
        assert_relative_eq!(
            variance(&near, 0.6).unwrap(),
            variance(&at, 0.6).unwrap(),
            max_relative = 1e-7
        );
    }

    #[test]
    fn joint_laplace_is_one_at_zero_query() {
        for m in [ou(-1.0), ou(1.0), bridge(0.0), bridge(1.0)] {
            assert_eq!(joint_laplace(&m, &q(0.7, 0.0, 0.0)).unwrap(), 1.0);
        }
    }

    #[test]
    fn cameron_martin_value() {
        let psi = joint_laplace(&ou(0.0), &q(1.0, 0.5, 0.0)).unwrap();
        assert_relative_eq!(psi, CAMERON_MARTIN_T1_MU_HALF, max_relative = 1e-14);
        assert_relative_eq!(psi, 1.0 / 1.0f64.cosh().sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn mu_zero_gives_gaussian_transform() {
        let m = bridge(1.0);
        let psi = joint_laplace(&m, &q(0.5, 0.0, 1.0)).unwrap();
        let v = variance(&m, 0.5).unwrap();
        assert_relative_eq!(psi, 1.0 / (1.0 + 2.0 * v).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(psi, INV_SQRT_1P5, max_relative = 1e-13);
    }

    #[test]
    fn ou_formula_matches_joint_on_ou_preset() {
        for alpha in [-1.0, 0.0, 1.0] {
            for t in [0.5, 1.0, 2.5] {
                for mu in [0.25, 1.0, 4.0] {
                    let a = joint_laplace(&ou(alpha), &q(t, mu, 0.0)).unwrap();
                    let b = ou_laplace(alpha, t, mu).unwrap();
                    assert_relative_eq!(a, b, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn ou_frozen_value_and_limits() {
        assert_relative_eq!(
            ou_laplace(-1.0, 1.0, 0.5).unwrap(),
            OU_ALPHA_M1_T1_MU_HALF,
            max_relative = 1e-14
        );
        assert_eq!(ou_laplace(3.0, 2.0, 0.0).unwrap(), 1.0);
        assert_relative_eq!(ou_laplace(1.0, 2.0, 1e-14).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn mansuy_matches_bridge_at_half_mu() {
        for t in [0.25, 0.5, 0.75] {
            for mu in [0.5, 1.0, 3.0] {
                let m = mansuy_laplace(1.0, t, mu).unwrap();
                let b = bridge_laplace(0.0, 1.0, &q(t, mu / 2.0, 0.0)).unwrap();
                assert_relative_eq!(m, b, max_relative = 1e-13);
            }
        }
        assert_relative_eq!(
            mansuy_laplace(1.0, 0.5, 1.0).unwrap(),
            MANSUY_T_HALF_MU_1,
            max_relative = 1e-14
        );
        assert_relative_eq!(mansuy_laplace(1.0, 0.5, 1e-14).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn bridge_formula_matches_joint_on_bridge_preset() {
        for alpha in [0.0, 0.5, 1.0] {
            let m = bridge(alpha);
            for t in [0.25, 0.5, 0.9] {
                for (mu, nu) in [(0.5, 0.0), (1.0, 1.0), (2.0, 0.25), (0.0, 1.0)] {
                    let a = joint_laplace(&m, &q(t, mu, nu)).unwrap();
                    let b = bridge_laplace(alpha, 1.0, &q(t, mu, nu)).unwrap();
                    assert_relative_eq!(a, b, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn bridge_gaussian_case_wiener_bridge() {
        let psi = bridge_laplace(1.0, 1.0, &q(0.5, 0.0, 1.0)).unwrap();
        assert_relative_eq!(psi, INV_SQRT_1P5, max_relative = 1e-13);
    }

    #[test]
    fn pre_form_agrees_with_main_form() {
        let cases: [(Model, f64); 4] =
            [(ou(0.0), 1.0), (ou(-1.0), 2.0), (bridge(0.0), 0.5), (bridge(1.0), 0.9)];
        for (m, t) in cases {
            for (mu, nu) in [(0.5, 0.0), (1.0, 1.0), (4.0, 0.5)] {
                let a = joint_laplace(&m, &q(t, mu, nu)).unwrap();
                let b = joint_laplace_pre(&m, &q(t, mu, nu)).unwrap();
                assert_relative_eq!(a, b, max_relative = 1e-11);
            }
        }
    }

    #[test]
    fn pre_form_tends_to_one_as_mu_vanishes() {
        for m in [ou(1.0), ou(-1.0), bridge(0.0), bridge(1.0)] {
            let v = joint_laplace_pre(&m, &q(0.5, 1e-12, 0.0)).unwrap();
            assert_relative_eq!(v, 1.0, epsilon = 1e-6);
        }
        assert!(joint_laplace_pre(&ou(0.0), &q(0.5, 0.0, 0.0)).is_err());
    }

    #[test]
    fn transform_decreasing_in_mu_and_nu() {
        let m = bridge(1.0);
        let mut prev = 1.0;
        for mu in [0.1, 0.5, 1.0, 2.0, 5.0] {
            let v = joint_laplace(&m, &q(0.7, mu, 0.3)).unwrap();
            assert!(v < prev, "not decreasing in mu at {mu}");
            prev = v;
        }
        let mut prev = joint_laplace(&m, &q(0.7, 1.0, 0.0)).unwrap();
        for nu in [0.2, 0.6, 1.5, 4.0] {
            let v = joint_laplace(&m, &q(0.7, 1.0, nu)).unwrap();
            assert!(v < prev, "not decreasing in nu at {nu}");
            prev = v;
        }
    }

    #[test]
    fn variance_positive_and_fisher_increasing_in_t() {
        // Fisher information increases for every member (positive integrand);
        // the variance is positive but need not be monotone (the Wiener
        // bridge's t (T - t)/T peaks mid-interval), so monotonicity is only
        // asserted where the drift keeps dV/dt = sigma^2 + 2 alpha b V
        // positive: alpha b >= 0, and the mean-reverting OU case.
        for m in [ou(0.5), ou(-1.0), bridge(1.0), bridge(0.25), bridge(0.0), bridge(-1.0)] {
            let tmax = if m.horizon().is_finite() { 0.99 } else { 4.0 };
            let mut pi = 0.0;
            for i in 1..=20 {
                let t = tmax * i as f64 / 20.0;
                assert!(variance(&m, t).unwrap() > 0.0, "variance not positive at t = {t}");
                let fi = fisher_info(&m, t).unwrap();
                assert!(fi > pi, "fisher not increasing at t = {t}");
                pi = fi;
            }
        }
        for m in [ou(0.5), ou(-1.0), ou(0.0), bridge(0.0), bridge(-1.0)] {
            let tmax = if m.horizon().is_finite() { 0.99 } else { 4.0 };
            let mut pv = 0.0;
            for i in 1..=20 {
                let t = tmax * i as f64 / 20.0;
                let v = variance(&m, t).unwrap();
                assert!(v > pv, "variance not increasing at t = {t}");
                pv = v;
            }
        }
    }

    #[test]
    fn fisher_bridge_half_at_known_point() {
        // alpha = K = 1/2, T = 1, t = 1 - 1/e: ln B = -2, I = 1/2.
        let m = bridge(0.5);
        let t = 1.0 - (-1.0f64).exp();
        assert_relative_eq!(fisher_info(&m, t).unwrap(), 0.5, max_relative = 1e-12);
        assert_relative_eq!(fisher_info(&m, 1e-9).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn fisher_continuous_across_alpha_equals_k() {
        let near = bridge(0.5 + 1e-9);
        let at = bridge(0.5);
        for t in [0.3, 0.9] {
            assert_relative_eq!(
                fisher_info(&near, t).unwrap(),
                fisher_info(&at, t).unwrap(),
                max_relative = 1e-6
            );
        }
    }

    #[test]
    fn fisher_divergence_classification() {
        assert!(fisher_diverges(&bridge(1.0))); // terminal form
        assert!(fisher_diverges(&ou(0.0))); // infinite S(T)
        let finite = Model::new(
            0.0,
            DriftParams::new(1.0, 1.0).unwrap(),
            VolatilityProfile::constant(1.0, 1.0).unwrap(),
        )
        .unwrap();
        assert!(!fisher_diverges(&finite));
    }

    #[test]
    fn limit_kind_classification() {
        assert_eq!(limit_kind(1.0, 0.5).unwrap(), LimitKind::Normal);
        assert_eq!(limit_kind(0.5, 0.5).unwrap(), LimitKind::DickeyFullerType);
        assert_eq!(limit_kind(0.0, 0.5).unwrap(), LimitKind::Cauchy);
        assert_eq!(limit_kind(-2.0, -1.0).unwrap(), LimitKind::Normal);
        assert_eq!(limit_kind(0.5, -1.0).unwrap(), LimitKind::Cauchy);
        assert!(limit_kind(1.0, 0.0).is_err());
    }

    #[test]
    fn fisher_asymptote_ratios() {
        // alpha = K on the bridge (S(T) = 1): the ratio is exactly 1.
        let m = bridge(0.5);
        let t = m.time_at_remaining_fraction((-8.0f64).exp()).unwrap();
        let (asym, kind) = fisher_asymptote(&m, t).unwrap();
        assert_eq!(kind, LimitKind::DickeyFullerType);
        let ratio = fisher_info(&m, t).unwrap() / asym;
        assert!((ratio - 1.0).abs() < 0.01, "ratio {ratio}");

        // Normal regime converges more slowly; alpha = 2 keeps it within 10%.
        let m = bridge(2.0);
        let (asym, kind) = fisher_asymptote(&m, t).unwrap();
        assert_eq!(kind, LimitKind::Normal);
        let ratio = fisher_info(&m, t).unwrap() / asym;
        assert!((ratio - 1.0).abs() < 0.10, "ratio {ratio}");

        // Cauchy regime: monotone approach to 1 along a geometric sequence.
        let m = bridge(0.0);
        let mut prev_gap = f64::INFINITY;
        for i in 2..8 {
            let t = m.time_at_remaining_fraction(10f64.powi(-i)).unwrap();
            let (asym, kind) = fisher_asymptote(&m, t).unwrap();
            assert_eq!(kind, LimitKind::Cauchy);
            let gap = (fisher_info(&m, t).unwrap() / asym - 1.0).abs();
            assert!(gap < prev_gap, "gap {gap} did not shrink at i = {i}");
            prev_gap = gap;
        }

        assert!(matches!(fisher_asymptote(&ou(1.0), 0.5), Err(Error::NotTerminalForm)));
    }

    #[test]
    fn denom_limit_values() {
        assert_relative_eq!(
            denom_laplace_limit(&bridge(1.0), 1.0).unwrap(),
            (-1.0f64).exp(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            denom_laplace_limit(&bridge(0.5), 1.0).unwrap(),
            INV_SQRT_COSH2,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            denom_laplace_limit(&bridge(0.0), 0.5).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            max_relative = 1e-15
        );
        assert!(denom_laplace_limit(&ou(0.0), 1.0).is_err());
    }

    #[test]
    fn alpha_k_denominator_law_is_t_independent() {
        // E exp{-mu Q_t / I_K(t)} = 1/sqrt(cosh(2 sqrt mu)) for every t.
        for k in [0.5, -1.0] {
            let m = Model::terminal(k, k, VolatilityProfile::constant(1.0, 1.0).unwrap()).unwrap();
            for mu in [0.3f64, 1.0, 2.5] {
                let expect = 1.0 / (2.0 * mu.sqrt()).cosh().sqrt();
                for t in [0.1, 0.5, 0.9] {
                    let i_k = fisher_info(&m, t).unwrap();
                    let v = joint_laplace(&m, &q(t, mu / i_k, 0.0)).unwrap();
                    assert_relative_eq!(v, expect, max_relative = 1e-10);
                }
            }
        }
    }

    #[test]
    fn alpha_k_joint_law_is_t_independent() {
        // E exp{-mu/(2 I_K) Q_t - nu/sqrt(2 I_K) |b|/sigma^2 X_t^2}
        //   = 1/sqrt(cosh sqrt(2 mu) + 2 nu/sqrt(2 mu) sinh sqrt(2 mu)).
        for k in [0.5, -1.0] {
            let m = Model::terminal(k, k, VolatilityProfile::constant(1.0, 1.0).unwrap()).unwrap();
            for (mu, nu) in [(1.0f64, 0.5f64), (2.0, 1.0), (0.5, 0.0)] {
                let s2mu = (2.0 * mu).sqrt();
                let expect = 1.0 / (s2mu.cosh() + 2.0 * nu / s2mu * s2mu.sinh()).sqrt();
                for t in [0.2, 0.6, 0.9] {
                    let i_k = fisher_info(&m, t).unwrap();
                    let b_abs = m.drift_coef(t).unwrap().abs() / m.volatility().sigma_sq(t);
                    let query = q(t, mu / (2.0 * i_k), nu / (2.0 * i_k).sqrt() * b_abs);
                    let v = joint_laplace(&m, &query).unwrap();
                    assert_relative_eq!(v, expect, max_relative = 1e-10);
                }
            }
        }
    }

    #[test]
    fn int_drift_squares_to_twice_fisher_at_alpha_k() {
        for k in [0.5, -1.0] {
            let m = Model::terminal(k, k, VolatilityProfile::constant(1.0, 1.0).unwrap()).unwrap();
            for t in [0.2, 0.7, 0.95] {
                let lhs = m.int_drift(t).unwrap().abs();
                let rhs = (2.0 * fisher_info(&m, t).unwrap()).sqrt();
                assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn log_space_branch_survives_horizon_approach() {
        let m = bridge(1.0);
        let t = 1.0 - 1e-9;
        let v = joint_laplace(&m, &q(t, 1.0, 0.0)).unwrap();
        assert!(v > 0.0 && v < 1.0 && v.is_finite(), "got {v}");
        let fi = fisher_info(&m, t).unwrap();
        assert!(fi.is_finite() && fi > 0.0);
    }

    proptest! {
        // Main-form vs pre-simplification form, across the whole family.
        #[test]
        fn two_derivations_agree(
            k in -1.5f64..1.5,
            c in prop::sample::select(vec![-2.0, -0.7, 0.4, 1.0]),
            alpha in -2.0f64..2.0,
            t in 0.05f64..2.0,
            mu in 0.01f64..5.0,
            nu in 0.0f64..2.0,
        ) {
            let vol = VolatilityProfile::constant(1.0, f64::INFINITY).unwrap();
            let m = Model::new(alpha, DriftParams::new(k, c).unwrap(), vol);
            prop_assume!(m.is_ok());
            let m = m.unwrap();
            prop_assume!(m.log_scale(t).is_ok());
            let query = q(t, mu, nu);
            let a = joint_laplace(&m, &query).unwrap();
            let b = joint_laplace_pre(&m, &query).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * a, "a = {a}, b = {b}");
        }

        // (alpha, K, C) -> (-alpha, -K, -C) leaves every closed form unchanged.
        #[test]
        fn sign_flip_leaves_forms_invariant(
            k in -1.5f64..1.5,
            c in prop::sample::select(vec![-1.0, 0.5, 2.0]),
            alpha in -2.0f64..2.0,
            t in 0.05f64..2.0,
            mu in 0.0f64..4.0,
            nu in 0.0f64..2.0,
        ) {
            let vol = VolatilityProfile::constant(1.0, f64::INFINITY).unwrap();
            let pos = Model::new(alpha, DriftParams::new(k, c).unwrap(), vol.clone());
            let neg = Model::new(-alpha, DriftParams::new(-k, -c).unwrap(), vol);
            prop_assume!(pos.is_ok() && neg.is_ok());
            let (pos, neg) = (pos.unwrap(), neg.unwrap());
            prop_assume!(pos.log_scale(t).is_ok());
            let query = q(t, mu, nu);
            let (a, b) = (joint_laplace(&pos, &query).unwrap(), joint_laplace(&neg, &query).unwrap());
            prop_assert!((a - b).abs() <= 1e-13 * a);
            let (va, vb) = (variance(&pos, t).unwrap(), variance(&neg, t).unwrap());
            prop_assert!((va - vb).abs() <= 1e-13 * va.abs().max(1e-300));
            let (fa, fb) = (fisher_info(&pos, t).unwrap(), fisher_info(&neg, t).unwrap());
            prop_assert!((fa - fb).abs() <= 1e-13 * fa.abs().max(1e-300));
        }
    }
}

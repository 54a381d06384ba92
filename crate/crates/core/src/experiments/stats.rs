//! Statistical utilities for the verification checks: Kolmogorov-Smirnov
//! tests with asymptotic p-values, quantiles and Monte Carlo standard errors.
//!
//! The normal CDF goes through Cody's rational approximations to erf/erfc
//! (double-precision accurate to a few ulp) rather than a library routine:
//! the distributional checks hold reference probabilities to 1e-12.

use crate::error::{Error, Result};

// Coefficients of W. J. Cody's rational Chebyshev approximations for erf on
// [0, 0.46875], erfc on (0.46875, 4] and scaled erfc beyond 4 (SPECFUN).
const ERF_A: [f64; 5] = [
    3.16112374387056560e0,
    1.13864154151050156e2,
    3.77485237685302021e2,
    3.20937758913846947e3,
    1.85777706184603153e-1,
];
const ERF_B: [f64; 4] =
    [2.36012909523441209e1, 2.44024637934444173e2, 1.28261652607737228e3, 2.84423683343917062e3];
const ERF_C: [f64; 9] = [
    5.64188496988670089e-1,
    8.88314979438837594e0,
    6.61191906371416295e1,
    2.98635138197400131e2,
    8.81952221241769090e2,
    1.71204761263407058e3,
    2.05107837782607147e3,
    1.23033935479799725e3,
    2.15311535474403846e-8,
];
const ERF_D: [f64; 8] = [
    1.57449261107098347e1,
    1.17693950891312499e2,
    5.37181101862009858e2,
    1.62138957456669019e3,
    3.29079923573345963e3,
    4.36261909014324716e3,
    3.43936767414372164e3,
    1.23033935480374942e3,
];
const ERF_P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
const ERF_Q: [f64; 5] = [
    2.56852019228982242e0,
    1.87295284992346047e0,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];
const INV_SQRT_PI: f64 = 5.6418958354775628695e-1;

/// `exp(-y^2)` split as in SPECFUN to preserve accuracy for large `y`.
fn exp_neg_sq(y: f64) -> f64 {
    let ysq = (y * 16.0).trunc() / 16.0;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp()
}

/// Complementary error function, accurate to a few ulp over the whole line.
pub fn erfc(x: f64) -> f64 {
    let y = x.abs();
    let result = if y <= 0.46875 {
        return 1.0 - erf(x);
    } else if y <= 4.0 {
        let mut num = ERF_C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + ERF_C[i]) * y;
            den = (den + ERF_D[i]) * y;
        }
        exp_neg_sq(y) * (num + ERF_C[7]) / (den + ERF_D[7])
    } else if y < 26.6 {
        let z = 1.0 / (y * y);
        let mut num = ERF_P[5] * z;
        let mut den = z;
        for i in 0..4 {
            num = (num + ERF_P[i]) * z;
            den = (den + ERF_Q[i]) * z;
        }
        let r = z * (num + ERF_P[4]) / (den + ERF_Q[4]);
        exp_neg_sq(y) * (INV_SQRT_PI - r) / y
    } else {
        0.0
    };
    if x < 0.0 {
        2.0 - result
    } else {
        result
    }
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    let y = x.abs();
    if y <= 0.46875 {
        let z = if y > 1.1e-16 { y * y } else { 0.0 };
        let mut num = ERF_A[4] * z;
        let mut den = z;
        for i in 0..3 {
            num = (num + ERF_A[i]) * z;
            den = (den + ERF_B[i]) * z;
        }
        x * (num + ERF_A[3]) / (den + ERF_B[3])
    } else if x > 0.0 {
        1.0 - erfc(x)
    } else {
        erfc(-x) - 1.0
    }
}

/// Standard normal CDF, `Phi(x) = erfc(-x/sqrt 2)/2`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard Cauchy CDF.
pub fn cauchy_cdf(x: f64) -> f64 {
    0.5 + x.atan() / std::f64::consts::PI
}

/// Survival function of the Kolmogorov distribution,
/// `Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)`, truncated when
/// terms drop below 1e-12.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 1e-8 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..100_000u32 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-12 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("samples must not contain NaN"));
    Ok(v)
}

/// effective-size correction of the asymptotic KS p-value
fn ks_p_value(n_eff: f64, d: f64) -> f64 {
    let sq = n_eff.sqrt();
    kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d)
}

/// One-sample Kolmogorov-Smirnov statistic and asymptotic p-value against a
/// continuous CDF.
pub fn ks_1samp(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
    let xs = sorted(sample)?;
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n - f).abs());
        d = d.max((f - i as f64 / n).abs());
    }
    Ok((d, ks_p_value(n, d)))
}

/// Two-sample Kolmogorov-Smirnov statistic with the asymptotic p-value at
/// effective size `m n / (m + n)`.
pub fn ks_2samp(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    let xs = sorted(a)?;
    let ys = sorted(b)?;
    let (m, n) = (xs.len(), ys.len());
    let mut i = 0usize;
    let mut j = 0usize;
    let mut d: f64 = 0.0;
    while i < m && j < n {
        let x = xs[i];
        let y = ys[j];
        if x <= y {
            i += 1;
        }
        if y <= x {
            j += 1;
        }
        d = d.max((i as f64 / m as f64 - j as f64 / n as f64).abs());
    }
    let n_eff = (m * n) as f64 / (m + n) as f64;
    Ok((d, ks_p_value(n_eff, d)))
}

/// Linearly interpolated quantile (`p` in [0, 1]) of an unsorted sample.
pub fn quantile(xs: &[f64], p: f64) -> Result<f64> {
    let v = sorted(xs)?;
    let h = p.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

pub fn median(xs: &[f64]) -> Result<f64> {
    quantile(xs, 0.5)
}

/// Sample mean and Monte Carlo standard error.
pub fn mean_se(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn normal_sample(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
    }

    #[test]
    fn null_calibration_over_twenty_seeds() {
        // p-values under the null are roughly uniform; at level 0.001 at most
        // one failure in 20 seeded runs is tolerated.
        let mut failures = 0;
        for seed in 0..20 {
            let xs = normal_sample(1000, seed);
            let (_, p) = ks_1samp(&xs, normal_cdf).unwrap();
            if p <= 0.001 {
                failures += 1;
            }
        }
        assert!(failures <= 1, "{failures} of 20 null runs rejected");
    }

    #[test]
    fn power_against_wrong_family() {
        let xs = normal_sample(1000, 42);
        let (_, p) = ks_1samp(&xs, cauchy_cdf).unwrap();
        assert!(p < 1e-6, "p = {p}");
    }

    #[test]
    fn identical_samples_give_zero_statistic() {
        let xs = normal_sample(500, 7);
        let mut ys = xs.clone();
        ys.reverse();
        let (d, p) = ks_2samp(&xs, &ys).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn two_sample_detects_shift() {
        let xs = normal_sample(2000, 1);
        let ys: Vec<f64> = normal_sample(2000, 2).iter().map(|x| x + 1.0).collect();
        let (_, p) = ks_2samp(&xs, &ys).unwrap();
        assert!(p < 1e-10);
        let zs = normal_sample(2000, 3);
        let (_, p) = ks_2samp(&xs, &zs).unwrap();
        assert!(p > 0.001, "null two-sample p = {p}");
    }

    #[test]
    fn kolmogorov_sf_endpoints() {
        assert_eq!(kolmogorov_sf(0.0), 1.0);
        assert!(kolmogorov_sf(0.3) > 0.999);
        assert!((kolmogorov_sf(1.0) - 0.26999967).abs() < 1e-6);
        assert!(kolmogorov_sf(3.0) < 1e-7);
    }

    #[test]
    fn quantiles_and_moments() {
        let xs = vec![3.0, 1.0, 2.0, 4.0];
        assert_eq!(median(&xs).unwrap(), 2.5);
        assert_eq!(quantile(&xs, 0.0).unwrap(), 1.0);
        assert_eq!(quantile(&xs, 1.0).unwrap(), 4.0);
        let (m, se) = mean_se(&xs).unwrap();
        assert_eq!(m, 2.5);
        assert!(se > 0.0);
        assert!(ks_1samp(&[], normal_cdf).is_err());
    }

    #[test]
    fn erf_and_normal_cdf_reference_values() {
        // reference values computed at 30-digit precision
        let cases = [
            (0.1, 0.1124629160182848984),
            (0.5, 0.52049987781304653768),
            (1.0, 0.84270079294971486934),
            (2.0, 0.99532226501895273416),
        ];
        for (x, v) in cases {
            assert!((erf(x) - v).abs() < 1e-15, "erf({x})");
            assert!((erf(-x) + v).abs() < 1e-15, "erf(-{x})");
            assert!((erfc(x) - (1.0 - v)).abs() < 2e-15, "erfc({x})");
        }
        assert!((erfc(3.5) - 7.4309837234141274552e-7).abs() < 1e-20);
        assert!((erfc(6.0) - 2.1519736712498913117e-17).abs() < 1e-30);
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.0) - 0.84134474606854294859).abs() < 1e-14);
        assert!((normal_cdf(-3.0) - 0.0013498980316300945267).abs() < 1e-16);
        assert!((normal_cdf(1.96) - 0.97500210485177956379).abs() < 1e-14);
        assert!((2.0 * (1.0 - normal_cdf(1.0)) - 0.31731050786291410283).abs() < 1e-14);
    }
}

//! The check family. Each verification variant implements [`Check`] and is
//! registered by name; configs select and order them at runtime.
//!
//! Stream-id layout: check `i` draws path noise from streams starting at
//! `i << 40` (one block of `2^32` per observation time), and Wiener-functional
//! reference draws live above `1 << 56`, so no two consumers share a stream.

use crate::closedform::{self, LaplaceQuery, LimitKind};
use crate::error::{Error, Result};
use crate::experiments::stats;
use crate::experiments::{CheckRecord, ExperimentConfig};
use crate::mle::{self, MleResult};
use crate::model::Model;
use crate::riccati;
use crate::simulate::{PathSampler, TimeGrid};

/// Everything a check needs to run.
pub struct CheckContext<'a> {
    pub cfg: &'a ExperimentConfig,
    pub model: &'a Model,
    pub config_hash: &'a str,
}

/// One verification strategy, selectable by name from a config.
pub trait Check: Sync {
    fn name(&self) -> &'static str;
    /// Whether the check reads the config's `t` list.
    fn needs_times(&self) -> bool {
        true
    }
    fn run(&self, ctx: &CheckContext) -> Result<Vec<CheckRecord>>;
}

/// All known checks, in canonical order.
pub fn registry() -> &'static [&'static dyn Check] {
    &[&McLaplace, &LimitLaw, &RandomNorm, &Consistency, &DenomLimit]
}

pub fn check_by_name(name: &str) -> Option<&'static dyn Check> {
    registry().iter().find(|c| c.name() == name).copied()
}

const WIENER_STREAMS: u64 = 1 << 56;

fn stream_base(check_id: u64, slot: u64) -> u64 {
    (check_id << 40) | (slot << 32)
}

impl<'a> CheckContext<'a> {
    fn record(
        &self,
        name: String,
        statistic: f64,
        reference: f64,
        tolerance: f64,
        pass: bool,
        dispersion: f64,
        p_value: Option<f64>,
        note: Option<String>,
    ) -> CheckRecord {
        CheckRecord {
            name,
            statistic,
            reference,
            tolerance,
            pass,
            dispersion,
            p_value,
            runtime_ms: 0,
            seed: self.cfg.seed,
            config_hash: self.config_hash.to_string(),
            note,
        }
    }

    /// Observation time for the near-horizon checks: derived from
    /// `near_horizon_delta` when configured, otherwise the largest `t`.
    fn horizon_time(&self) -> Result<f64> {
        if let Some(delta) = self.cfg.near_horizon_delta {
            return self.model.time_at_remaining_fraction(delta);
        }
        self.cfg
            .t
            .iter()
            .copied()
            .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.max(t))))
            .ok_or_else(|| Error::InvalidConfig("empty t list".into()))
    }

    fn require_terminal(&self, check: &str) -> Result<()> {
        if !self.model.is_terminal_form() {
            return Err(Error::InvalidConfig(format!(
                "check '{check}' needs a terminal-form model (K != 0, C = -K S(T))"
            )));
        }
        Ok(())
    }

    fn estimates_at(&self, t: f64, base: u64) -> Result<Vec<MleResult>> {
        let grid = TimeGrid::auto(self.model, t, self.cfg.steps)?;
        let sampler = PathSampler::new(self.model, &grid)?;
        sampler
            .endpoints_from(self.cfg.seed, base, self.cfg.paths)
            .iter()
            .map(|e| mle::estimate_alpha_at(self.model, t, e.x, e.quad))
            .collect()
    }

    fn wiener_reference(&self, base: u64) -> Result<Vec<crate::simulate::WienerFunctionals>> {
        crate::simulate::wiener_reference(
            self.cfg.steps,
            self.cfg.seed,
            WIENER_STREAMS | base,
            self.cfg.paths,
        )
    }
}

/// Monte Carlo vs closed form for the joint transform over the whole
/// `(t, mu, nu)` matrix, with the Riccati route triangulating every `nu = 0`
/// cell.
struct McLaplace;

impl Check for McLaplace {
    fn name(&self) -> &'static str {
        "mc-laplace"
    }

    fn run(&self, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
        let mut out = Vec::new();
        for (ti, &t) in ctx.cfg.t.iter().enumerate() {
            let grid = TimeGrid::auto(ctx.model, t, ctx.cfg.steps)?;
            let sampler = PathSampler::new(ctx.model, &grid)?;
            let ends = sampler.endpoints_from(ctx.cfg.seed, stream_base(0, ti as u64), ctx.cfg.paths);
            for &mu in &ctx.cfg.mu {
                for &nu in &ctx.cfg.nu {
                    let reference =
                        closedform::joint_laplace(ctx.model, &LaplaceQuery::new(t, mu, nu)?)?;
                    let vals: Vec<f64> =
                        ends.iter().map(|e| (-mu * e.quad - nu * e.x * e.x).exp()).collect();
                    let (mean, se) = stats::mean_se(&vals)?;
                    let z = if se > 0.0 {
                        (mean - reference) / se
                    } else if mean == reference {
                        0.0
                    } else {
                        f64::MAX
                    };
                    out.push(ctx.record(
                        format!("mc-laplace[t={t},mu={mu},nu={nu}]"),
                        mean,
                        reference,
                        3.0,
                        z.abs() <= 3.0,
                        se,
                        None,
                        Some(format!("z = {z:.3}")),
                    ));
                    if nu == 0.0 && mu > 0.0 {
                        let ric = riccati::riccati_laplace(ctx.model, t, mu, ctx.cfg.riccati_tol)?;
                        let rel = (ric - reference).abs() / reference;
                        out.push(ctx.record(
                            format!("riccati-agree[t={t},mu={mu}]"),
                            ric,
                            reference,
                            1e-6,
                            rel < 1e-6,
                            rel,
                            None,
                            None,
                        ));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Distribution of the Fisher-normalized estimation error at the largest
/// configured time, against the regime's limit law.
struct LimitLaw;

impl Check for LimitLaw {
    fn name(&self) -> &'static str {
        "limit-law"
    }

    fn run(&self, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
        ctx.require_terminal(self.name())?;
        if !closedform::fisher_diverges(ctx.model) {
            return Ok(vec![ctx.record(
                "limit-law".into(),
                0.0,
                0.0,
                0.0,
                false,
                0.0,
                None,
                Some("regime mismatch: fisher information does not diverge".into()),
            )]);
        }
        let t = ctx.horizon_time()?;
        let errs: Vec<f64> = ctx
            .estimates_at(t, stream_base(1, 0))?
            .iter()
            .map(|r| mle::fisher_normalized_error(ctx.model, r))
            .collect::<Result<_>>()?;
        let kind = closedform::limit_kind(ctx.model.alpha(), ctx.model.k())?;
        let mut out = Vec::new();
        match kind {
            LimitKind::Normal => {
                let (d, p) = stats::ks_1samp(&errs, stats::normal_cdf)?;
                out.push(ctx.record(
                    format!("limit-law-normal-ks[t={t}]"),
                    d,
                    0.0,
                    0.01,
                    p > 0.01,
                    d,
                    Some(p),
                    None,
                ));
            }
            LimitKind::DickeyFullerType => {
                let sign_k = ctx.model.k().signum();
                let reference: Vec<f64> = ctx
                    .wiener_reference(stream_base(1, 0))?
                    .iter()
                    .map(|w| -sign_k / (2.0 * 2.0f64.sqrt()) * (w.w1 * w.w1 - 1.0) / w.int_w2)
                    .collect();
                let (d, p) = stats::ks_2samp(&errs, &reference)?;
                out.push(ctx.record(
                    format!("limit-law-df-ks[t={t}]"),
                    d,
                    0.0,
                    0.01,
                    p > 0.01,
                    d,
                    Some(p),
                    None,
                ));
            }
            LimitKind::Cauchy => {
                let med = stats::median(&errs)?;
                let iqr = stats::quantile(&errs, 0.75)? - stats::quantile(&errs, 0.25)?;
                out.push(ctx.record(
                    format!("limit-law-cauchy-median[t={t}]"),
                    med,
                    0.0,
                    0.1,
                    med.abs() <= 0.1,
                    iqr,
                    None,
                    None,
                ));
                out.push(ctx.record(
                    format!("limit-law-cauchy-iqr[t={t}]"),
                    iqr,
                    2.0,
                    0.2,
                    (1.8..=2.2).contains(&iqr),
                    iqr,
                    None,
                    None,
                ));
            }
        }
        Ok(out)
    }
}

/// Randomly normalized error at `alpha = K`: the sign probability that
/// disproves the naive normal limit, plus a two-sample KS against the exact
/// Wiener-functional law. For `alpha != K` the normal limit applies instead
/// and the record says so.
struct RandomNorm;

impl Check for RandomNorm {
    fn name(&self) -> &'static str {
        "random-norm"
    }

    fn run(&self, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
        ctx.require_terminal(self.name())?;
        let t = ctx.horizon_time()?;
        let results = ctx.estimates_at(t, stream_base(2, 0))?;
        let errs: Vec<f64> = results
            .iter()
            .map(|r| mle::random_normalized_error(ctx.model, r))
            .collect::<Result<_>>()?;
        let mut out = Vec::new();
        if ctx.model.alpha() == ctx.model.k() {
            let sign_k = ctx.model.k().signum();
            let hits = errs.iter().filter(|&&u| -sign_k * u > 0.0).count();
            let p_hat = hits as f64 / errs.len() as f64;
            let reference = 2.0 * (1.0 - stats::normal_cdf(1.0));
            let se = (reference * (1.0 - reference) / errs.len() as f64).sqrt();
            out.push(ctx.record(
                format!("rao-sign-probability[t={t}]"),
                p_hat,
                reference,
                3.0 * se,
                (p_hat - reference).abs() <= 3.0 * se,
                se,
                None,
                None,
            ));
            let reference_sample: Vec<f64> = ctx
                .wiener_reference(stream_base(2, 0))?
                .iter()
                .map(|w| -sign_k * w.int_w_dw / w.int_w2.sqrt())
                .collect();
            let (d, p) = stats::ks_2samp(&errs, &reference_sample)?;
            out.push(ctx.record(
                format!("random-norm-ks[t={t}]"),
                d,
                0.0,
                0.01,
                p > 0.01,
                d,
                Some(p),
                None,
            ));
        } else {
            let (d, p) = stats::ks_1samp(&errs, stats::normal_cdf)?;
            out.push(ctx.record(
                format!("random-norm-normal-ks[t={t}]"),
                d,
                0.0,
                0.01,
                p > 0.01,
                d,
                Some(p),
                Some("regime mismatch: alpha != K, normal KS run instead".into()),
            ));
        }
        Ok(out)
    }
}

/// Median absolute estimation error along a ladder of observation times
/// approaching the horizon geometrically in remaining squared volatility:
/// must be nonincreasing (one inversion allowed) and end below 0.05.
struct Consistency;

impl Check for Consistency {
    fn name(&self) -> &'static str {
        "consistency"
    }

    fn needs_times(&self) -> bool {
        false
    }

    fn run(&self, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
        ctx.require_terminal(self.name())?;
        let alpha = ctx.model.alpha();
        let mut medians = Vec::new();
        for (j, &delta) in ctx.cfg.consistency_deltas.iter().enumerate() {
            let t = ctx.model.time_at_remaining_fraction(delta)?;
            let abs_errs: Vec<f64> = ctx
                .estimates_at(t, stream_base(3, j as u64))?
                .iter()
                .map(|r| (r.alpha_hat - alpha).abs())
                .collect();
            medians.push(stats::median(&abs_errs)?);
        }
        let inversions = medians.windows(2).filter(|w| w[1] > w[0]).count();
        let last = *medians.last().ok_or(Error::EmptySample)?;
        let pass = inversions <= 1 && last < 0.05;
        Ok(vec![ctx.record(
            format!("consistency[alpha={alpha}]"),
            last,
            0.0,
            0.05,
            pass,
            inversions as f64,
            None,
            Some(format!(
                "median |alpha_hat - alpha| along deltas {:?}: {medians:?} ({inversions} inversions)",
                ctx.cfg.consistency_deltas
            )),
        )])
    }
}

/// The law of the normalized denominator `Q_t / I(t)` near the horizon:
/// regime-matched reference distribution plus the Laplace-limit value.
struct DenomLimit;

impl Check for DenomLimit {
    fn name(&self) -> &'static str {
        "denom-limit"
    }

    fn run(&self, ctx: &CheckContext) -> Result<Vec<CheckRecord>> {
        ctx.require_terminal(self.name())?;
        let t = ctx.horizon_time()?;
        let info = closedform::fisher_info(ctx.model, t)?;
        let ratios: Vec<f64> = ctx
            .estimates_at(t, stream_base(4, 0))?
            .iter()
            .map(|r| r.quad / info)
            .collect();
        let kind = closedform::limit_kind(ctx.model.alpha(), ctx.model.k())?;
        let mut out = Vec::new();
        match kind {
            LimitKind::Cauchy => {
                let reference: Vec<f64> = ctx
                    .wiener_reference(stream_base(4, 0))?
                    .iter()
                    .map(|w| w.w1 * w.w1)
                    .collect();
                let (d, p) = stats::ks_2samp(&ratios, &reference)?;
                out.push(ctx.record(
                    format!("denom-ks-w1sq[t={t}]"),
                    d,
                    0.0,
                    0.01,
                    p > 0.01,
                    d,
                    Some(p),
                    None,
                ));
            }
            LimitKind::DickeyFullerType => {
                let reference: Vec<f64> = ctx
                    .wiener_reference(stream_base(4, 0))?
                    .iter()
                    .map(|w| 2.0 * w.int_w2)
                    .collect();
                let (d, p) = stats::ks_2samp(&ratios, &reference)?;
                out.push(ctx.record(
                    format!("denom-ks-2intw2[t={t}]"),
                    d,
                    0.0,
                    0.01,
                    p > 0.01,
                    d,
                    Some(p),
                    None,
                ));
            }
            LimitKind::Normal => {
                let frac =
                    ratios.iter().filter(|&&r| (r - 1.0).abs() < 0.1).count() as f64
                        / ratios.len() as f64;
                let sd = {
                    let (m, _) = stats::mean_se(&ratios)?;
                    (ratios.iter().map(|r| (r - m) * (r - m)).sum::<f64>()
                        / (ratios.len() as f64 - 1.0))
                        .sqrt()
                };
                out.push(ctx.record(
                    format!("denom-concentration[t={t}]"),
                    frac,
                    0.95,
                    0.05,
                    frac >= 0.95,
                    sd,
                    None,
                    None,
                ));
            }
        }
        let mu = ctx.cfg.mu.iter().copied().find(|&m| m > 0.0).unwrap_or(1.0);
        let reference = closedform::denom_laplace_limit(ctx.model, mu)?;
        let vals: Vec<f64> = ratios.iter().map(|r| (-mu * r).exp()).collect();
        let (mean, se) = stats::mean_se(&vals)?;
        let z = if se > 0.0 { (mean - reference) / se } else { 0.0 };
        out.push(ctx.record(
            format!("denom-laplace[t={t},mu={mu}]"),
            mean,
            reference,
            3.0,
            z.abs() <= 3.0,
            se,
            None,
            Some(format!("z = {z:.3}")),
        ));
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::run_report;
    use crate::model::ModelSpec;

    fn cfg(alpha: f64, checks: &[&str], t: Vec<f64>) -> ExperimentConfig {
        ExperimentConfig {
            model: ModelSpec::preset("alpha-bridge", alpha),
            t,
            mu: vec![0.0, 0.5],
            nu: vec![0.0, 1.0],
            paths: 400,
            steps: 128,
            seed: 2024,
            checks: checks.iter().map(|s| s.to_string()).collect(),
            consistency_deltas: vec![1e-1, 1e-2],
            riccati_tol: 1e-9,
        }
    }

    #[test]
    fn registry_names_are_unique_and_resolvable() {
        let names: Vec<&str> = registry().iter().map(|c| c.name()).collect();
        let mut dedup = names.clone();
        dedup.dedup();
        assert_eq!(names, dedup);
        for n in names {
            assert!(check_by_name(n).is_some());
        }
        assert!(check_by_name("bogus").is_none());
    }

    #[test]
    fn mc_laplace_small_run_passes_and_triangulates() {
        let report = run_report(&cfg(0.5, &["mc-laplace"], vec![0.5])).unwrap();
        assert!(report.all_pass(), "{}", report.to_json());
        // 4 MC cells and 1 riccati cell (mu = 0.5, nu = 0)
        assert_eq!(report.checks.iter().filter(|c| c.name.starts_with("mc-laplace")).count(), 4);
        assert_eq!(report.checks.iter().filter(|c| c.name.starts_with("riccati")).count(), 1);
        // zero query cell is exact
        let zero = report.checks.iter().find(|c| c.name.contains("mu=0,nu=0")).unwrap();
        assert_eq!(zero.statistic, 1.0);
        assert_eq!(zero.reference, 1.0);
    }

    #[test]
    fn limit_law_dispatches_by_regime() {
        let df = run_report(&cfg(0.5, &["limit-law"], vec![0.5])).unwrap();
        assert!(df.checks[0].name.starts_with("limit-law-df-ks"));

        let normal = run_report(&cfg(1.0, &["limit-law"], vec![0.5])).unwrap();
        assert!(normal.checks[0].name.starts_with("limit-law-normal-ks"));

        let cauchy = run_report(&cfg(0.0, &["limit-law"], vec![0.5])).unwrap();
        assert!(cauchy.checks[0].name.starts_with("limit-law-cauchy"));
    }

    #[test]
    fn limit_law_rejects_non_terminal_models() {
        let mut c = cfg(0.0, &["limit-law"], vec![0.5]);
        c.model = ModelSpec::preset("ou", 0.0);
        assert!(run_report(&c).is_err());
    }

    #[test]
    fn random_norm_flags_regime_mismatch() {
        let report = run_report(&cfg(1.0, &["random-norm"], vec![0.5])).unwrap();
        assert_eq!(report.checks.len(), 1);
        assert!(report.checks[0].note.as_ref().unwrap().contains("regime mismatch"));
        assert!(report.checks[0].name.starts_with("random-norm-normal-ks"));

        let exact = run_report(&cfg(0.5, &["random-norm"], vec![0.5])).unwrap();
        assert_eq!(exact.checks.len(), 2);
        assert!(exact.checks[0].name.starts_with("rao-sign-probability"));
    }

    #[test]
    fn consistency_produces_single_gated_record() {
        let report = run_report(&cfg(0.0, &["consistency"], vec![])).unwrap();
        assert_eq!(report.checks.len(), 1);
        assert!(report.checks[0].note.as_ref().unwrap().contains("median"));
    }

    #[test]
    fn denom_limit_regime_records() {
        let df = run_report(&cfg(0.5, &["denom-limit"], vec![0.5])).unwrap();
        assert!(df.checks.iter().any(|c| c.name.starts_with("denom-ks-2intw2")));
        assert!(df.checks.iter().any(|c| c.name.starts_with("denom-laplace")));
    }
}

//! Command-line front end: one-shot closed-form queries, path simulation,
//! Riccati cross-checks, estimator-distribution studies and full config-driven
//! verification reports.
//!
//! Exit codes: 0 success, 1 check failure, 2 usage/config error.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use sdelap::closedform::{self, LaplaceQuery, LimitKind};
use sdelap::experiments::{self, stats, ExperimentConfig};
use sdelap::mle;
use sdelap::model::{Model, ModelSpec, SigmaSpec};
use sdelap::riccati;
use sdelap::simulate::{self, PathSampler, TimeGrid};

#[derive(Parser)]
#[command(name = "sdelap", version, about = "Laplace transforms and drift MLE for a family of time-inhomogeneous linear SDEs", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Model selection flags shared by the one-shot subcommands.
#[derive(Args, Debug)]
struct ModelArgs {
    /// Preset: ou | wiener | alpha-bridge | terminal | custom
    #[arg(long, default_value = "ou")]
    preset: String,
    /// Drift multiplier (the estimated parameter)
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Horizon T (defaults: infinite for ou/wiener/custom, 1 for the bridges)
    #[arg(long = "T")]
    horizon: Option<f64>,
    /// Drift shape parameter K (terminal and custom presets)
    #[arg(long = "K")]
    k: Option<f64>,
    /// Drift shape parameter C (custom preset only)
    #[arg(long = "C")]
    c: Option<f64>,
    /// Constant volatility level (default 1)
    #[arg(long)]
    sigma: Option<f64>,
}

impl ModelArgs {
    fn spec(&self) -> ModelSpec {
        ModelSpec {
            preset: self.preset.clone(),
            alpha: self.alpha,
            horizon: self.horizon,
            k: self.k,
            c: self.c,
            sigma: self.sigma.map(|value| SigmaSpec::Constant { value }),
        }
    }

    fn build(&self) -> Result<Model> {
        Ok(self.spec().build()?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the closed forms (and the Riccati oracle) at one point
    Laplace {
        #[command(flatten)]
        model: ModelArgs,
        /// Evaluation time
        #[arg(long)]
        t: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long, default_value_t = 0.0)]
        nu: f64,
        /// Riccati solver tolerance
        #[arg(long, default_value_t = 1e-9)]
        riccati_tol: f64,
    },
    /// Sample paths and print per-path endpoint functionals as CSV
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        /// End of the observation window
        #[arg(long)]
        t_end: f64,
        #[arg(long, default_value_t = 1000)]
        paths: usize,
        #[arg(long, default_value_t = 512)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the closed-form transform with the Riccati oracle
    RiccatiCheck {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Distribution of the normalized estimation error over many paths
    MleDist {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 2000)]
        paths: usize,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Normalization::Fisher)]
        normalization: Normalization,
        /// Per-path CSV output (skipped if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Median estimation error along a ladder of times approaching the horizon
    Consistency {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1000)]
        paths: usize,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Remaining squared-volatility fractions of the ladder
        #[arg(long, value_delimiter = ',', default_values_t = vec![1e-1, 1e-2, 1e-3, 1e-4])]
        deltas: Vec<f64>,
    },
    /// Run a config-driven verification report
    Report {
        /// JSON experiment config
        #[arg(long)]
        config: PathBuf,
        /// Report JSON output path (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the check records as CSV into this directory
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write the parsed effective config back out (round-trip aid)
        #[arg(long)]
        emit_config: Option<PathBuf>,
        /// Re-run the checks with this many fresh seeds and count failures
        #[arg(long)]
        audit: Option<u64>,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Normalization {
    Fisher,
    Random,
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("SDELAP_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Laplace { model, t, mu, nu, riccati_tol } => {
            let m = model.build()?;
            let query = LaplaceQuery::new(t, mu, nu)?;
            let psi = closedform::joint_laplace(&m, &query)?;
            let psi_pre = if mu > 0.0 {
                serde_json::json!(closedform::joint_laplace_pre(&m, &query)?)
            } else {
                serde_json::Value::Null
            };
            let ric = if mu > 0.0 { riccati::riccati_laplace(&m, t, mu, riccati_tol)? } else { 1.0 };
            let out = serde_json::json!({
                "psi": psi,
                "psi_pre": psi_pre,
                "riccati": ric,
                "variance": closedform::variance(&m, t)?,
                "fisher": closedform::fisher_info(&m, t)?,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate { model, t_end, paths, steps, seed, out } => {
            let m = model.build()?;
            let grid = TimeGrid::auto(&m, t_end, steps)?;
            let sampler = PathSampler::new(&m, &grid)?;
            let ends = sampler.endpoints(seed, paths);
            let mut csv = String::from("path_id,x_t,q_t,ito_integral\n");
            for (i, e) in ends.iter().enumerate() {
                let ito = simulate::score_numerator_at(&m, t_end, e.x, e.quad)?;
                csv.push_str(&format!("{i},{},{},{ito}\n", e.x, e.quad));
            }
            write_or_print(out.as_deref(), &csv)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::RiccatiCheck { model, t, mu, tol } => {
            let m = model.build()?;
            let closed = closedform::joint_laplace(&m, &LaplaceQuery::new(t, mu, 0.0)?)?;
            let ric = riccati::riccati_laplace(&m, t, mu, tol)?;
            let rel = (ric - closed).abs() / closed;
            let out = serde_json::json!({"riccati": ric, "closed_form": closed, "rel_err": rel});
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::MleDist { model, t, paths, steps, seed, normalization, out } => {
            let m = model.build()?;
            let grid = TimeGrid::auto(&m, t, steps)?;
            let sampler = PathSampler::new(&m, &grid)?;
            let results: Vec<mle::MleResult> = sampler
                .endpoints(seed, paths)
                .iter()
                .map(|e| mle::estimate_alpha_at(&m, t, e.x, e.quad))
                .collect::<sdelap::Result<_>>()?;
            let errs: Vec<f64> = results
                .iter()
                .map(|r| match normalization {
                    Normalization::Fisher => mle::fisher_normalized_error(&m, r),
                    Normalization::Random => mle::random_normalized_error(&m, r),
                })
                .collect::<sdelap::Result<_>>()?;
            if let Some(path) = out {
                let mut csv = String::from("path_id,alpha_hat,q_t,statistic\n");
                for (i, (r, s)) in results.iter().zip(&errs).enumerate() {
                    csv.push_str(&format!("{i},{},{},{s}\n", r.alpha_hat, r.quad));
                }
                fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
            }
            let (ks_stat, ks_pvalue, regime) = mle_dist_test(&m, &errs, normalization, seed, steps)?;
            let summary = serde_json::json!({
                "ks_stat": ks_stat,
                "ks_pvalue": ks_pvalue,
                "regime": regime,
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(if ks_pvalue > 0.01 { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Consistency { model, paths, steps, seed, deltas } => {
            let m = model.build()?;
            let mut medians = Vec::new();
            for (j, &delta) in deltas.iter().enumerate() {
                let t = m.time_at_remaining_fraction(delta)?;
                let grid = TimeGrid::auto(&m, t, steps)?;
                let sampler = PathSampler::new(&m, &grid)?;
                let abs_errs: Vec<f64> = sampler
                    .endpoints_from(seed, (j as u64) << 32, paths)
                    .iter()
                    .map(|e| {
                        mle::estimate_alpha_at(&m, t, e.x, e.quad)
                            .map(|r| (r.alpha_hat - m.alpha()).abs())
                    })
                    .collect::<sdelap::Result<_>>()?;
                medians.push(stats::median(&abs_errs)?);
            }
            let inversions = medians.windows(2).filter(|w| w[1] > w[0]).count();
            let last = *medians.last().context("empty delta ladder")?;
            let pass = inversions <= 1 && last < 0.05;
            let out = serde_json::json!({
                "deltas": deltas,
                "medians": medians,
                "inversions": inversions,
                "final_median": last,
                "pass": pass,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Report { config, out, csv, emit_config, audit } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let cfg: ExperimentConfig =
                serde_json::from_str(&text).context("parsing experiment config")?;
            if let Some(path) = emit_config {
                fs::write(&path, serde_json::to_string_pretty(&cfg)?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            let report = experiments::run_report(&cfg)?;
            let json = report.to_json();
            write_or_print(out.as_deref(), &json)?;
            if let Some(dir) = csv {
                fs::create_dir_all(&dir)?;
                let mut table = String::from(
                    "name,statistic,reference,tolerance,pass,dispersion,p_value,runtime_ms\n",
                );
                for c in &report.checks {
                    table.push_str(&format!(
                        "{},{},{},{},{},{},{},{}\n",
                        c.name,
                        c.statistic,
                        c.reference,
                        c.tolerance,
                        c.pass,
                        c.dispersion,
                        c.p_value.map_or(String::new(), |p| p.to_string()),
                        c.runtime_ms
                    ));
                }
                fs::write(dir.join("checks.csv"), table)?;
            }
            let mut failed = !report.all_pass();
            if let Some(n) = audit {
                let audits = experiments::audit(&cfg, n)?;
                let failures = audits.iter().filter(|(_, ok)| !ok).count() as u64;
                let allowed = n.div_ceil(20);
                eprintln!(
                    "audit: {failures} of {n} fresh-seed runs failed (budget {allowed})"
                );
                failed |= failures > allowed;
            }
            for c in &report.checks {
                eprintln!("{} {}", if c.pass { "PASS" } else { "FAIL" }, c.name);
            }
            Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
        }
    }
}

fn mle_dist_test(
    model: &Model,
    errs: &[f64],
    normalization: Normalization,
    seed: u64,
    steps: usize,
) -> Result<(f64, f64, String)> {
    let kind = closedform::limit_kind(model.alpha(), model.k())?;
    let regime = kind.to_string();
    let (d, p) = match (normalization, kind) {
        (Normalization::Fisher, LimitKind::Normal) | (Normalization::Random, LimitKind::Normal) => {
            stats::ks_1samp(errs, stats::normal_cdf)?
        }
        (Normalization::Fisher, LimitKind::Cauchy) => stats::ks_1samp(errs, stats::cauchy_cdf)?,
        (Normalization::Random, LimitKind::Cauchy) => stats::ks_1samp(errs, stats::normal_cdf)?,
        (norm, LimitKind::DickeyFullerType) => {
            let sign_k = model.k().signum();
            let reference: Vec<f64> = simulate::wiener_reference(steps, seed, 1 << 57, errs.len())?
                .iter()
                .map(|w| match norm {
                    Normalization::Fisher => {
                        -sign_k / (2.0 * 2.0f64.sqrt()) * (w.w1 * w.w1 - 1.0) / w.int_w2
                    }
                    Normalization::Random => -sign_k * w.int_w_dw / w.int_w2.sqrt(),
                })
                .collect();
            stats::ks_2samp(errs, &reference)?
        }
    };
    Ok((d, p, regime))
}

fn write_or_print(path: Option<&std::path::Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => {
            fs::write(p, content).with_context(|| format!("writing {}", p.display()))?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
            if !content.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

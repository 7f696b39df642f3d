//! Command-line front end: build fixtures, run verification suites, and
//! emit machine-readable reports. Exit code 0 means every assertion of the
//! requested work passed; 1 means a check failed; 2 means the invocation
//! itself could not be carried out.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use bchaos::gamma::{
    enumerate_gamma_n, lambda_log, weight_series_envelope, weight_series_product,
    weight_series_sum, TruncationLevel,
};
use bchaos::report::{RunReport, SuiteReport, REGISTRY};
use bchaos::suites::{self, SuiteOptions, SUITE_NAMES};
use bchaos::{GeneralizedFunctional, Kernel2D, ThetaSequence};

/// Hard cap on truncation levels, overridable with the BC_MAX_LEVEL
/// environment variable.
const DEFAULT_MAX_LEVEL: u32 = 20;

#[derive(Parser)]
#[command(
    name = "bchaos",
    version,
    about = "Chaos-coefficient calculus over the Bernoulli space, with a verification harness"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Index-set computations: weight series and enumerations.
    Gamma {
        #[command(subcommand)]
        cmd: GammaCmd,
    },
    /// Probability-space suites (orthonormality, Monte Carlo).
    Space {
        #[command(subcommand)]
        cmd: SpaceCmd,
    },
    /// Spectral-measure suites (axioms, densities).
    Spectral {
        #[command(subcommand)]
        cmd: SpectralCmd,
    },
    /// Spectral integrals: build kernels and run the integral suites.
    Integral {
        #[command(subcommand)]
        cmd: IntegralCmd,
    },
    /// Run verification suites and write a report.
    Verify(VerifyArgs),
    /// Inspect reports, the property registry, and kernel matrices.
    Report {
        #[command(subcommand)]
        cmd: ReportCmd,
    },
}

#[derive(Subcommand)]
enum GammaCmd {
    /// Truncated weight series with its product form and envelope.
    Sum {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        level: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the indices of a truncation in canonical order.
    Enumerate {
        #[arg(long)]
        level: u32,
    },
}

#[derive(Subcommand)]
enum SpaceCmd {
    Verify {
        /// orthonormality | mc | all
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        level: Option<u32>,
        /// "symmetric" or a path to a JSON list of parameters in (0,1).
        #[arg(long, default_value = "symmetric")]
        theta: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        timings: bool,
    },
}

#[derive(Subcommand)]
enum SpectralCmd {
    Verify {
        /// Only the canonical measure is shipped.
        #[arg(long, default_value = "pi0")]
        measure: String,
        #[arg(long)]
        level: Option<u32>,
        #[arg(long)]
        cylinder_level: Option<u32>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        timings: bool,
    },
}

#[derive(Subcommand)]
enum IntegralCmd {
    /// Integrate a functional against the canonical measure into a kernel.
    Build {
        #[arg(long)]
        phi: PathBuf,
        #[arg(long, default_value = "pi0")]
        measure: String,
        #[arg(long)]
        level: Option<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    Verify {
        /// linearity | positivity | factorization | regularity | convergence | all
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        level: Option<u32>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        timings: bool,
    },
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name or "all".
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    level: Option<u32>,
    #[arg(long)]
    cylinder_level: Option<u32>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    samples: Option<u64>,
    /// "symmetric" or a path to a JSON list (space-level suites only).
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall-clock timings in the report (breaks byte-for-byte
    /// reproducibility of the output).
    #[arg(long)]
    timings: bool,
}

#[derive(Subcommand)]
enum ReportCmd {
    /// Human-readable summary of a report file.
    Show {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// The suite-to-property registry.
    Registry,
    /// Scaled kernel matrix as CSV (sigma_bits,tau_bits,re,im).
    MatrixCsv {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn max_level() -> u32 {
    std::env::var("BC_MAX_LEVEL")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_MAX_LEVEL)
}

fn check_level(level: Option<u32>) -> Result<()> {
    let cap = max_level();
    if let Some(n) = level {
        if n > cap {
            bail!("level {n} exceeds the cap {cap} (set BC_MAX_LEVEL to raise it)");
        }
    }
    Ok(())
}

fn parse_theta(spec: &str) -> Result<ThetaSequence> {
    if spec == "symmetric" {
        return Ok(ThetaSequence::Symmetric);
    }
    let text = fs::read_to_string(spec).with_context(|| format!("reading theta file {spec}"))?;
    let theta: ThetaSequence =
        serde_json::from_str(&text).with_context(|| format!("parsing theta file {spec}"))?;
    Ok(theta)
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn suite_json(report: &SuiteReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

/// Runs the named suites, writes one report (or a run report for several),
/// and reports whether everything passed.
fn run_and_emit(
    names: &[&str],
    opts: &SuiteOptions,
    out: Option<&Path>,
    timings: bool,
) -> Result<bool> {
    let mut reports = Vec::new();
    for name in names {
        let started = Instant::now();
        let mut report =
            suites::run_suite(name, opts).with_context(|| format!("running suite {name}"))?;
        if timings {
            report.timing_ms = Some(started.elapsed().as_secs_f64() * 1e3);
        }
        for check in &report.checks {
            let status = if check.passed { "pass" } else { "FAIL" };
            eprintln!(
                "[{status}] {}/{} residual {:.3e} (tol {:.1e})",
                report.suite, check.name, check.residual, check.tolerance
            );
        }
        reports.push(report);
    }
    let passed = reports.iter().all(|r| r.passed);
    let text = if reports.len() == 1 {
        suite_json(&reports[0])?
    } else {
        let run = RunReport::new(opts.seed.unwrap_or(0), reports);
        serde_json::to_string_pretty(&run)?
    };
    write_or_print(out, &text)?;
    Ok(passed)
}

fn expand_suite(requested: &str, allowed: &[&str]) -> Result<Vec<&'static str>> {
    if requested == "all" {
        return Ok(SUITE_NAMES
            .iter()
            .copied()
            .filter(|n| allowed.contains(n))
            .collect());
    }
    match SUITE_NAMES.iter().find(|n| **n == requested) {
        Some(n) if allowed.contains(n) => Ok(vec![*n]),
        Some(_) => bail!(
            "suite '{requested}' is not available under this verb (expected one of: {})",
            allowed.join(", ")
        ),
        None => bail!(
            "unknown suite '{requested}' (expected one of: {})",
            allowed.join(", ")
        ),
    }
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Gamma { cmd } => match cmd {
            GammaCmd::Sum { r, level, out } => {
                check_level(Some(level))?;
                let lvl = TruncationLevel::new(level)?;
                let sum = weight_series_sum(r, lvl)?;
                let product = weight_series_product(r, lvl)?;
                let envelope = weight_series_envelope(r)?;
                let payload = serde_json::json!({
                    "r": r,
                    "level": level,
                    "sum": sum,
                    "product_form": product,
                    "envelope": envelope,
                });
                write_or_print(out.as_deref(), &serde_json::to_string_pretty(&payload)?)?;
                if out.is_some() {
                    println!("sum {sum:.15} (product form {product:.15}), envelope {envelope:.15}");
                }
                Ok(sum <= envelope)
            }
            GammaCmd::Enumerate { level } => {
                check_level(Some(level))?;
                let lvl = TruncationLevel::new(level)?;
                for sigma in enumerate_gamma_n(lvl) {
                    println!(
                        "{}\t{}\tlambda={}",
                        sigma.bits(),
                        sigma,
                        lambda_log(sigma).lambda()
                    );
                }
                Ok(true)
            }
        },
        Cmd::Space { cmd } => match cmd {
            SpaceCmd::Verify {
                suite,
                seed,
                level,
                theta,
                out,
                timings,
            } => {
                check_level(level)?;
                let names = expand_suite(&suite, &["orthonormality", "mc"])?;
                let opts = SuiteOptions {
                    seed: Some(seed),
                    level,
                    theta: Some(parse_theta(&theta)?),
                    ..SuiteOptions::default()
                };
                run_and_emit(&names, &opts, out.as_deref(), timings)
            }
        },
        Cmd::Spectral { cmd } => match cmd {
            SpectralCmd::Verify {
                measure,
                level,
                cylinder_level,
                seed,
                out,
                timings,
            } => {
                if measure != "pi0" {
                    bail!("unknown spectral measure '{measure}' (only pi0 is shipped)");
                }
                check_level(level)?;
                check_level(cylinder_level)?;
                let opts = SuiteOptions {
                    seed: Some(seed),
                    level,
                    cylinder_level,
                    ..SuiteOptions::default()
                };
                run_and_emit(&["axioms", "smoothness"], &opts, out.as_deref(), timings)
            }
        },
        Cmd::Integral { cmd } => match cmd {
            IntegralCmd::Build {
                phi,
                measure,
                level,
                out,
            } => {
                if measure != "pi0" {
                    bail!("unknown spectral measure '{measure}' (only pi0 is shipped)");
                }
                check_level(level)?;
                let text = fs::read_to_string(&phi)
                    .with_context(|| format!("reading {}", phi.display()))?;
                let functional: GeneralizedFunctional = serde_json::from_str(&text)
                    .with_context(|| format!("parsing {}", phi.display()))?;
                let level = match level {
                    Some(n) => TruncationLevel::new(n)?,
                    None => functional.level(),
                };
                let mut op = bchaos::integral::spectral_integral_canonical(&functional, level)?;
                if let Some(stem) = phi.file_stem().and_then(|s| s.to_str()) {
                    op.provenance.phi = stem.to_string();
                }
                fs::write(&out, serde_json::to_string_pretty(&op.kernel)?)
                    .with_context(|| format!("writing {}", out.display()))?;
                let cert = suites::canonical_integrability(&functional, level)?;
                println!(
                    "kernel of {} against {} at level {} -> {} (integrable with C={:.6e}, p={})",
                    op.provenance.phi,
                    op.provenance.measure,
                    op.provenance.level,
                    out.display(),
                    cert.c,
                    cert.p
                );
                Ok(true)
            }
            IntegralCmd::Verify {
                suite,
                seed,
                level,
                p,
                q,
                out,
                timings,
            } => {
                check_level(level)?;
                let names = expand_suite(
                    &suite,
                    &[
                        "linearity",
                        "positivity",
                        "factorization",
                        "regularity",
                        "convergence",
                    ],
                )?;
                let opts = SuiteOptions {
                    seed: Some(seed),
                    level,
                    p,
                    q,
                    ..SuiteOptions::default()
                };
                run_and_emit(&names, &opts, out.as_deref(), timings)
            }
        },
        Cmd::Verify(args) => {
            check_level(args.level)?;
            check_level(args.cylinder_level)?;
            let names = expand_suite(&args.suite, SUITE_NAMES)?;
            let theta = args.theta.as_deref().map(parse_theta).transpose()?;
            let opts = SuiteOptions {
                seed: Some(args.seed),
                level: args.level,
                cylinder_level: args.cylinder_level,
                p: args.p,
                q: args.q,
                r: args.r,
                trials: args.trials,
                samples: args.samples,
                theta,
            };
            run_and_emit(&names, &opts, args.out.as_deref(), args.timings)
        }
        Cmd::Report { cmd } => match cmd {
            ReportCmd::Show { input } => {
                let text = fs::read_to_string(&input)
                    .with_context(|| format!("reading {}", input.display()))?;
                let reports: Vec<SuiteReport> =
                    if let Ok(run) = serde_json::from_str::<RunReport>(&text) {
                        run.suites
                    } else {
                        vec![serde_json::from_str::<SuiteReport>(&text)
                            .context("file is neither a run report nor a suite report")?]
                    };
                let mut all_passed = true;
                for r in &reports {
                    let status = if r.passed { "pass" } else { "FAIL" };
                    println!(
                        "[{status}] {:<16} {:<32} max residual {:.3e}{}",
                        r.suite,
                        r.property,
                        r.max_residual,
                        r.witness
                            .as_deref()
                            .map(|w| format!("  ({w})"))
                            .unwrap_or_default()
                    );
                    all_passed &= r.passed;
                }
                Ok(all_passed)
            }
            ReportCmd::Registry => {
                for info in REGISTRY {
                    println!(
                        "{:<16} {:<32} {}",
                        info.suite, info.property, info.statement
                    );
                }
                Ok(true)
            }
            ReportCmd::MatrixCsv { kernel, q, out } => {
                let text = fs::read_to_string(&kernel)
                    .with_context(|| format!("reading {}", kernel.display()))?;
                let k: Kernel2D = serde_json::from_str(&text)
                    .with_context(|| format!("parsing {}", kernel.display()))?;
                let m = k.scaled_matrix(q)?;
                let mut csv = String::from("sigma_bits,tau_bits,re,im\n");
                for s in 0..m.dim() {
                    for t in 0..m.dim() {
                        let v = m.get(t, s);
                        csv.push_str(&format!("{s},{t},{},{}\n", v.re, v.im));
                    }
                }
                fs::write(&out, csv).with_context(|| format!("writing {}", out.display()))?;
                println!("scaled matrix at q={q} -> {}", out.display());
                Ok(true)
            }
        },
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

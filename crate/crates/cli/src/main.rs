mod manifest;
mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use logenergy::bounds::{self, bound_report, grid_to_csv, in_validity_range, plot_grid};
use logenergy::minimizer::{energy_curve, fit_clog, linear_term, minimize_restarts, Init, MinimizeOptions};
use logenergy::quadrature::McRun;
use logenergy::wasserstein::{gz_inequality_check, triangle_comparison};
use logenergy::{pointset, TransportCheck, TriangleComparison};
use serde::Serialize;

use crate::manifest::RunManifest;

/// Environment variable holding the worker thread count.
const THREADS_ENV: &str = "LOGENERGY_THREADS";

#[derive(Parser)]
#[command(name = "logenergy", version, about = "Logarithmic energy on the sphere")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Spiral,
    Random,
}

#[derive(Subcommand)]
enum Command {
    /// Print the constants of the lower bound.
    Constants,
    /// Evaluate u + v at one eps, or maximize it.
    Bound {
        #[arg(long, conflicts_with = "maximize", required_unless_present = "maximize")]
        eps: Option<f64>,
        #[arg(long)]
        maximize: bool,
    },
    /// Check closed forms against quadrature; exits nonzero on failure.
    Verify {
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, hide = true)]
        inject_sign_flip: bool,
    },
    /// Minimize the energy of N points.
    Minimize {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
        #[arg(long, default_value_t = 100_000)]
        max_iters: usize,
        #[arg(long, value_enum, default_value = "spiral")]
        init: InitArg,
        /// Point-set file for the minimizer.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimize over a range of N and fit the linear-term constant.
    Fit {
        #[arg(long, default_value_t = 50)]
        nmin: usize,
        #[arg(long, default_value_t = 500)]
        nmax: usize,
        #[arg(long, default_value_t = 50)]
        step: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        restarts: usize,
        #[arg(long, default_value_t = 20_000)]
        max_iters: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the u, v, u + v grid as CSV.
    PlotData {
        #[arg(long, default_value_t = 0.5)]
        lo: f64,
        #[arg(long, default_value_t = 2.19)]
        hi: f64,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Transport lower bound and triangle comparison for a point set.
    Transport {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Rounds to 15 significant digits.
fn sig15(x: f64) -> f64 {
    format!("{x:.14e}").parse().unwrap_or(x)
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn json_line<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

#[derive(Serialize)]
struct ConstantsReport {
    i_sigma: f64,
    kappa: f64,
    c: f64,
    c1: f64,
    c2: f64,
    eps_max: f64,
    u2: f64,
    v2: f64,
    c_tilde: f64,
    c_bhs: f64,
    c_lauritsen: f64,
}

fn cmd_constants() -> Result<bool> {
    let k = bounds::constants();
    let report = ConstantsReport {
        i_sigma: sig15(k.i_sigma),
        kappa: sig15(k.kappa),
        c: sig15(k.c),
        c1: sig15(k.c1),
        c2: sig15(k.c2),
        eps_max: sig15(k.eps_max),
        u2: sig15(k.u2),
        v2: sig15(k.v2),
        c_tilde: sig15(k.c_tilde),
        c_bhs: sig15(k.c_bhs),
        c_lauritsen: sig15(k.c_lauritsen),
    };
    write_output(None, &json_line(&report)?)?;
    RunManifest::new("constants", None).emit(None)?;
    Ok(true)
}

fn cmd_bound(eps: Option<f64>, maximize: bool) -> Result<bool> {
    let manifest = RunManifest::new("bound", None);
    let report = match eps {
        Some(e) => {
            if !in_validity_range(e) {
                bail!("eps = {e} lies outside (0, {})", bounds::eps_max());
            }
            bound_report(e)?
        }
        None => {
            debug_assert!(maximize);
            let (eps_star, _) = bounds::maximize_linear_coefficient();
            bound_report(eps_star)?
        }
    };
    write_output(None, &json_line(&report)?)?;
    let eps_param = eps.map_or_else(|| "none".to_string(), |e| e.to_string());
    manifest
        .param("eps", eps_param)
        .param("maximize", maximize)
        .emit(None)?;
    Ok(true)
}

fn cmd_verify(samples: u64, seed: u64, flip: bool) -> Result<bool> {
    if samples < 2 {
        bail!("--samples must be at least 2");
    }
    let report = verify::run(samples, seed, flip)?;
    for c in &report.checks {
        eprintln!(
            "{} {:<40} {:>20.12e} {:>20.12e} +- {:.1e}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.reference,
            c.tolerance
        );
    }
    write_output(None, &json_line(&report)?)?;
    RunManifest::new("verify", Some(seed))
        .param("samples", samples)
        .emit(None)?;
    Ok(report.all_passed)
}

#[derive(Serialize)]
struct MinimizeReport {
    n: usize,
    energy: f64,
    linear_term: f64,
    iters: usize,
    grad_norm: f64,
    termination: logenergy::Termination,
    restarts: usize,
    seed: u64,
}

fn cmd_minimize(n: usize, opts: MinimizeOptions, out: Option<&Path>) -> Result<bool> {
    if n < 2 {
        bail!("--n must be at least 2");
    }
    let r = minimize_restarts(n, &opts)?;
    let report = MinimizeReport {
        n,
        energy: r.energy,
        linear_term: linear_term(n, r.energy),
        iters: r.iters,
        grad_norm: r.grad_norm,
        termination: r.termination,
        restarts: opts.restarts,
        seed: opts.seed,
    };
    if let Some(path) = out {
        let header = [
            format!("n = {n}"),
            format!("energy = {:e}", r.energy),
            format!("seed = {}", opts.seed),
        ];
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        pointset::save(path, &r.config, &header)?;
    }
    write_output(None, &json_line(&report)?)?;
    RunManifest::new("minimize", Some(opts.seed))
        .param("n", n)
        .param("restarts", opts.restarts)
        .param("max_iters", opts.max_iters)
        .param("init", format!("{:?}", opts.init))
        .emit(out)?;
    Ok(true)
}

#[derive(Serialize)]
struct FitPoint {
    n: usize,
    energy: f64,
    linear_term: f64,
    floor: f64,
    termination: logenergy::Termination,
}

#[derive(Serialize)]
struct FitReport {
    points: Vec<FitPoint>,
    c_log_hat: f64,
    correction_coeff: f64,
    residual_rms: f64,
    n_values: Vec<usize>,
}

fn cmd_fit(nmin: usize, nmax: usize, step: usize, opts: MinimizeOptions, out: Option<&Path>) -> Result<bool> {
    if step == 0 || nmin < 2 || nmax < nmin {
        bail!("need 2 <= nmin <= nmax and step >= 1");
    }
    let ns: Vec<usize> = (nmin..=nmax).step_by(step).collect();
    let curve = energy_curve(&ns, &opts)?;
    let fit = fit_clog(&curve.iter().map(|p| (p.n, p.energy)).collect::<Vec<_>>())?;
    let report = FitReport {
        points: curve
            .iter()
            .map(|p| FitPoint {
                n: p.n,
                energy: p.energy,
                linear_term: linear_term(p.n, p.energy),
                floor: p.floor,
                termination: p.termination,
            })
            .collect(),
        c_log_hat: fit.c_log_hat,
        correction_coeff: fit.correction_coeff,
        residual_rms: fit.residual_rms,
        n_values: fit.n_values,
    };
    write_output(out, &json_line(&report)?)?;
    if out.is_some() {
        write_output(None, &json_line(&report)?)?;
    }
    RunManifest::new("fit", Some(opts.seed))
        .param("nmin", nmin)
        .param("nmax", nmax)
        .param("step", step)
        .param("restarts", opts.restarts)
        .param("max_iters", opts.max_iters)
        .emit(out)?;
    Ok(true)
}

fn cmd_plot_data(lo: f64, hi: f64, steps: usize, out: Option<&Path>) -> Result<bool> {
    let rows = plot_grid(lo, hi, steps)?;
    write_output(out, &grid_to_csv(&rows))?;
    RunManifest::new("plot-data", None)
        .param("lo", lo)
        .param("hi", hi)
        .param("steps", steps)
        .emit(out)?;
    Ok(true)
}

#[derive(Serialize)]
struct TransportReport {
    n: usize,
    eps: f64,
    samples: u64,
    seed: u64,
    transport: TransportCheck,
    triangle: TriangleComparison,
}

fn cmd_transport(config: &Path, eps: f64, samples: u64, seed: u64, out: Option<&Path>) -> Result<bool> {
    let cfg = pointset::load(config).with_context(|| format!("reading {}", config.display()))?;
    let run = McRun::new(samples, seed);
    let transport = gz_inequality_check(&cfg, eps, &run)?;
    let triangle = triangle_comparison(&cfg, eps, &run.derive(1))?;
    if let Some(reason) = &triangle.skipped {
        eprintln!("triangle comparison skipped: {reason}");
    }
    let ok = transport.satisfied && triangle.satisfied.unwrap_or(true);
    let report = TransportReport {
        n: cfg.len(),
        eps,
        samples,
        seed,
        transport,
        triangle,
    };
    write_output(out, &json_line(&report)?)?;
    if out.is_some() {
        write_output(None, &json_line(&report)?)?;
    }
    RunManifest::new("transport", Some(seed))
        .param("config", config.display())
        .param("eps", eps)
        .param("samples", samples)
        .emit(out)?;
    Ok(ok)
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .with_context(|| format!("{THREADS_ENV}={v:?} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    init_threads()?;
    match cli.command {
        Command::Constants => cmd_constants(),
        Command::Bound { eps, maximize } => cmd_bound(eps, maximize),
        Command::Verify {
            samples,
            seed,
            inject_sign_flip,
        } => cmd_verify(samples, seed, inject_sign_flip),
        Command::Minimize {
            n,
            seed,
            restarts,
            max_iters,
            init,
            out,
        } => {
            let opts = MinimizeOptions {
                max_iters,
                grad_tol: None,
                restarts,
                seed,
                init: match init {
                    InitArg::Spiral => Init::Spiral,
                    InitArg::Random => Init::Random,
                },
            };
            cmd_minimize(n, opts, out.as_deref())
        }
        Command::Fit {
            nmin,
            nmax,
            step,
            seed,
            restarts,
            max_iters,
            out,
        } => {
            let opts = MinimizeOptions {
                max_iters,
                restarts,
                seed,
                ..Default::default()
            };
            cmd_fit(nmin, nmax, step, opts, out.as_deref())
        }
        Command::PlotData { lo, hi, steps, out } => cmd_plot_data(lo, hi, steps, out.as_deref()),
        Command::Transport {
            config,
            eps,
            samples,
            seed,
            out,
        } => cmd_transport(&config, eps, samples, seed, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

//! Command-line front end: subcommand dispatch, config plumbing, CSV/JSON
//! output with reproducibility headers.
//!
//! Exit codes: 0 success, 1 configuration/input error, 2 numerical failure,
//! 3 verification failure. Output files are byte-deterministic for a fixed
//! seed and config; wall-clock timing goes to stderr only.

use crate::config::RunConfig;
use crate::error::Error;
use crate::kernel::CovarianceKernel;
use crate::montecarlo::{self, DensityEstimate, McSettings, Side};
use crate::riccati;
use crate::sampler;
use crate::variational;
use crate::{fourier, hill};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "hill-gse", version, about = "Ground state statistics of Hill's operator with a stationary Gaussian potential")]
struct Cli {
    /// Worker threads for Monte Carlo (never affects results)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Path to a JSON run config, or "default"
    #[arg(long, default_value = "default")]
    config: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum EigMethod {
    Galerkin,
    Discriminant,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistMethod {
    Thm23,
    Direct,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Left,
    Right,
}

#[derive(Subcommand)]
enum Command {
    /// Draw potential samples and write them as CSV rows
    Sample {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Ground state eigenvalue of a potential path
    Eig {
        #[command(flatten)]
        config: ConfigArg,
        /// CSV/whitespace file with grid_size potential values
        #[arg(long)]
        potential: PathBuf,
        #[arg(long, value_enum, default_value_t = EigMethod::Galerkin)]
        method: EigMethod,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Riccati functional Φ of the mean-zero part of a potential path
    Phi {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        potential: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo density of the ground state energy on a λ grid
    Density {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, allow_hyphen_values = true)]
        lambda_min: f64,
        #[arg(long, allow_hyphen_values = true)]
        lambda_max: f64,
        #[arg(long, default_value_t = 0.5)]
        step: f64,
        #[arg(long, default_value_t = 10000)]
        n: usize,
        /// "none", "auto" (grid midpoint), or a λ value to tilt toward
        #[arg(long, default_value = "none")]
        tilt: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Distribution P(Λ₀ > λ), by the Riccati identity or direct sampling
    Dist {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long, default_value_t = 10000)]
        n: usize,
        #[arg(long, value_enum, default_value_t = DistMethod::Thm23)]
        method: DistMethod,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the Gaussian tail rate of a density CSV over a λ window
    Tailfit {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        side: SideArg,
        /// λ window as "lo:hi"
        #[arg(long, allow_hyphen_values = true)]
        window: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Euler-Lagrange minimizers and the rate curve J(q_λ)/λ²
    Variational {
        #[command(flatten)]
        config: ConfigArg,
        /// Comma-separated negative λ values
        #[arg(long, allow_hyphen_values = true)]
        lambdas: String,
        #[arg(long)]
        out: PathBuf,
        /// Directory for the minimizer paths, one CSV per λ
        #[arg(long)]
        dump_qopt: Option<PathBuf>,
    },
    /// Run the analytic property suite and print a pass/fail table
    Verify {
        #[command(flatten)]
        config: ConfigArg,
    },
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // ignore the error if a global pool already exists (e.g. in tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let started = Instant::now();
    let code = match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Io(_) | Error::InvalidInput(_) | Error::InvalidKernel(_) => 1,
                _ => 2,
            }
        }
    };
    eprintln!("wall-clock: {:.3}s", started.elapsed().as_secs_f64());
    code
}

fn load_config(arg: &ConfigArg) -> crate::Result<RunConfig> {
    let mut cfg = RunConfig::load(&arg.config)?;
    if let Ok(text) = std::env::var("HILL_GSE_SEED") {
        cfg.seed = text
            .parse()
            .map_err(|_| Error::Config(format!("HILL_GSE_SEED is not a u64: {text:?}")))?;
    }
    Ok(cfg)
}

fn settings(cfg: &RunConfig) -> McSettings {
    McSettings {
        modes: cfg.galerkin_modes,
        n_ode: cfg.ode_steps,
        seed: cfg.seed,
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn header(cfg: &RunConfig, n_samples: usize) -> String {
    let mut h = String::new();
    let _ = writeln!(h, "# hill-gse {VERSION}");
    let _ = writeln!(h, "# config: {}", cfg.canonical_json());
    let _ = writeln!(h, "# config_hash: {}", cfg.hash());
    let _ = writeln!(h, "# seed: {}", cfg.seed);
    let _ = writeln!(h, "# n_samples: {n_samples}");
    h
}

fn write_out(path: Option<&PathBuf>, text: &str) -> crate::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn read_potential(path: &PathBuf, grid_size: usize) -> crate::Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut values = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        for tok in line.split([',', ' ', '\t']).filter(|t| !t.is_empty()) {
            values.push(tok.parse::<f64>().map_err(|_| {
                Error::InvalidInput(format!("bad number {tok:?} in {}", path.display()))
            })?);
        }
    }
    if values.len() != grid_size {
        return Err(Error::InvalidInput(format!(
            "potential file {} holds {} values, config grid_size is {grid_size}",
            path.display(),
            values.len()
        )));
    }
    Ok(values)
}

fn parse_lambda_list(text: &str) -> crate::Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("bad λ value {t:?}")))
        })
        .collect()
}

fn dispatch(cmd: Command) -> crate::Result<i32> {
    match cmd {
        Command::Sample { config, n, out } => {
            let cfg = load_config(&config)?;
            let kernel = cfg.build_kernel()?;
            let mut text = header(&cfg, n);
            let cols: Vec<String> = (0..cfg.grid_size).map(|j| format!("q{j}")).collect();
            let _ = writeln!(text, "{},q0", cols.join(","));
            for i in 0..n as u64 {
                let s = sampler::sample(&kernel, &mut sampler::stream_rng(cfg.seed, i));
                let row: Vec<String> = s.values.iter().cloned().map(fmt).collect();
                let _ = writeln!(text, "{},{}", row.join(","), fmt(s.q0));
            }
            write_out(Some(&out), &text)?;
            Ok(0)
        }
        Command::Eig {
            config,
            potential,
            method,
            out,
        } => {
            let cfg = load_config(&config)?;
            let q = read_potential(&potential, cfg.grid_size)?;
            let gs = match method {
                EigMethod::Galerkin => hill::ground_state_galerkin(&q, cfg.galerkin_modes)?,
                EigMethod::Discriminant => hill::ground_state_discriminant(&q, cfg.ode_steps)?,
            };
            let body = serde_json::json!({
                "lambda0": gs.lambda0,
                "residual": gs.residual,
                "method": match gs.method {
                    hill::Method::Galerkin => "galerkin",
                    hill::Method::Discriminant => "discriminant",
                },
                "config_hash": cfg.hash(),
            });
            write_out(out.as_ref(), &format!("{}\n", serde_json::to_string_pretty(&body).unwrap()))?;
            Ok(0)
        }
        Command::Phi {
            config,
            potential,
            out,
        } => {
            let cfg = load_config(&config)?;
            let q = read_potential(&potential, cfg.grid_size)?;
            let mean = fourier::mean(&q);
            let tilde: Vec<f64> = q.iter().map(|v| v - mean).collect();
            let data = riccati::phi(&tilde, cfg.galerkin_modes)?;
            let quad = fourier::l2_norm(&data.p_tilde).powi(2);
            let body = serde_json::json!({
                "phi": data.phi,
                "lambda0_tilde": data.lambda,
                "residual": (quad - data.phi).abs(),
                "q0_subtracted": mean,
                "config_hash": cfg.hash(),
            });
            write_out(out.as_ref(), &format!("{}\n", serde_json::to_string_pretty(&body).unwrap()))?;
            Ok(0)
        }
        Command::Density {
            config,
            lambda_min,
            lambda_max,
            step,
            n,
            tilt,
            out,
        } => {
            let cfg = load_config(&config)?;
            let kernel = cfg.build_kernel()?;
            if step <= 0.0 || lambda_max < lambda_min {
                return Err(Error::InvalidInput("empty λ grid".into()));
            }
            let count = ((lambda_max - lambda_min) / step).round() as usize + 1;
            let lambdas: Vec<f64> = (0..count).map(|k| lambda_min + k as f64 * step).collect();
            let tilt_center = match tilt.as_str() {
                "none" => None,
                "auto" => Some(0.5 * (lambda_min + lambda_max)),
                other => Some(other.parse::<f64>().map_err(|_| {
                    Error::InvalidInput(format!("--tilt must be none, auto, or a number: {other:?}"))
                })?),
            };
            let tilt_spec = match tilt_center {
                Some(c) if c != 0.0 => Some(sampler::make_tilt_toward_optimal(&kernel, c)?),
                _ => None,
            };
            let est = montecarlo::estimate_density(
                &kernel,
                &lambdas,
                n,
                tilt_spec.as_ref(),
                &settings(&cfg),
            )?;
            write_out(Some(&out), &density_csv(&cfg, &est))?;
            Ok(0)
        }
        Command::Dist {
            config,
            lambda,
            n,
            method,
            out,
        } => {
            let cfg = load_config(&config)?;
            let kernel = cfg.build_kernel()?;
            let st = settings(&cfg);
            let (p, se, name) = match method {
                DistMethod::Thm23 => {
                    let (p, se) = montecarlo::estimate_distribution_thm23(&kernel, lambda, n, &st)?;
                    (p, se, "thm23")
                }
                DistMethod::Direct => {
                    let (p, se) =
                        montecarlo::estimate_distribution_direct(&kernel, lambda, n, &st)?;
                    (p, se, "direct")
                }
            };
            let body = serde_json::json!({
                "lambda": lambda,
                "p_hat": p,
                "stderr": se,
                "method": name,
                "n_samples": n,
                "seed": cfg.seed,
                "config_hash": cfg.hash(),
            });
            write_out(out.as_ref(), &format!("{}\n", serde_json::to_string_pretty(&body).unwrap()))?;
            Ok(0)
        }
        Command::Tailfit {
            config,
            input,
            side,
            window,
            out,
        } => {
            let cfg = load_config(&config)?;
            let kernel = cfg.build_kernel()?;
            let est = read_density_csv(&input)?;
            let (lo, hi) = window
                .split_once(':')
                .and_then(|(a, b)| Some((a.parse::<f64>().ok()?, b.parse::<f64>().ok()?)))
                .ok_or_else(|| Error::InvalidInput(format!("bad --window {window:?}")))?;
            let side = match side {
                SideArg::Left => Side::Left,
                SideArg::Right => Side::Right,
            };
            let fit = montecarlo::fit_tail_rate(&est, &kernel, side, (lo, hi))?;
            let body = serde_json::json!({
                "side": if fit.side == Side::Left { "left" } else { "right" },
                "rate_hat": fit.rate_hat,
                "target": fit.target,
                "rel_err": (fit.rate_hat - fit.target).abs() / fit.target,
                "window": [fit.window.0, fit.window.1],
                "n_points": fit.n_points,
            });
            write_out(out.as_ref(), &format!("{}\n", serde_json::to_string_pretty(&body).unwrap()))?;
            Ok(0)
        }
        Command::Variational {
            config,
            lambdas,
            out,
            dump_qopt,
        } => {
            let cfg = load_config(&config)?;
            let kernel = cfg.build_kernel()?;
            let lams = parse_lambda_list(&lambdas)?;
            let mut text = header(&cfg, 0);
            let _ = writeln!(text, "lambda,J_over_lambda2,target,eig_residual,iters");
            for &lam in &lams {
                let r = variational::solve_euler_lagrange(
                    &kernel,
                    lam,
                    1e-8,
                    400,
                    cfg.galerkin_modes,
                )?;
                let target = 1.0 / (2.0 * kernel.at_zero());
                let _ = writeln!(
                    text,
                    "{},{},{},{},{}",
                    fmt(lam),
                    fmt(r.j_value / (lam * lam)),
                    fmt(target),
                    fmt(r.residuals.eigenvalue),
                    r.iterations
                );
                if let Some(dir) = &dump_qopt {
                    std::fs::create_dir_all(dir)?;
                    let mut dump = header(&cfg, 0);
                    let _ = writeln!(dump, "x,q_opt");
                    for (j, v) in r.q_opt.iter().enumerate() {
                        let _ = writeln!(
                            dump,
                            "{},{}",
                            fmt(j as f64 / cfg.grid_size as f64),
                            fmt(*v)
                        );
                    }
                    std::fs::write(dir.join(format!("qopt_lambda_{lam}.csv")), dump)?;
                }
            }
            write_out(Some(&out), &text)?;
            Ok(0)
        }
        Command::Verify { config } => {
            let cfg = load_config(&config)?;
            let kernel = cfg.build_kernel()?;
            let all_pass = verify(&cfg, &kernel);
            Ok(if all_pass { 0 } else { 3 })
        }
    }
}

fn density_csv(cfg: &RunConfig, est: &DensityEstimate) -> String {
    let mut text = header(cfg, est.n_samples);
    let _ = writeln!(text, "# n_failed: {}", est.n_failed);
    let _ = writeln!(text, "lambda,f_hat,stderr,n_eff,tilt_theta");
    let theta = if est.tilt_used { 1.0 } else { 0.0 };
    let n_eff = est.n_samples - est.n_failed;
    for ((&lam, &f), &se) in est.lambdas.iter().zip(&est.f_hat).zip(&est.stderr) {
        let _ = writeln!(
            text,
            "{},{},{},{n_eff},{}",
            fmt(lam),
            fmt(f),
            fmt(se),
            fmt(theta)
        );
    }
    text
}

fn read_density_csv(path: &PathBuf) -> crate::Result<DensityEstimate> {
    let text = std::fs::read_to_string(path)?;
    let mut lambdas = Vec::new();
    let mut f_hat = Vec::new();
    let mut stderr = Vec::new();
    let mut n_eff = 0usize;
    let mut tilt_used = false;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("lambda") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 5 {
            return Err(Error::InvalidInput(format!(
                "bad density row {line:?} in {}",
                path.display()
            )));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("bad number {s:?} in {}", path.display())))
        };
        lambdas.push(parse(fields[0])?);
        f_hat.push(parse(fields[1])?);
        stderr.push(parse(fields[2])?);
        n_eff = parse(fields[3])? as usize;
        tilt_used = parse(fields[4])? != 0.0;
    }
    Ok(DensityEstimate {
        lambdas,
        f_hat,
        stderr,
        n_samples: n_eff,
        n_failed: 0,
        seed: 0,
        tilt_used,
    })
}

fn verify(cfg: &RunConfig, kernel: &CovarianceKernel) -> bool {
    let mut all = true;
    let mut report = |name: &str, pass: bool, detail: String| {
        all &= pass;
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    };
    let n = cfg.grid_size;
    let modes = cfg.galerkin_modes;

    // constant-shift identity
    {
        let q = vec![1.7; n];
        match hill::ground_state_galerkin(&q, modes) {
            Ok(gs) => {
                let dev = (gs.lambda0 - 1.7).abs();
                report("eigenvalue of constant potential", dev <= 1e-10, format!("|Λ₀ - c| = {dev:.2e}"));
            }
            Err(e) => report("eigenvalue of constant potential", false, e.to_string()),
        }
    }
    // cross-solver agreement
    {
        let mut worst = 0.0_f64;
        let mut ok = true;
        for i in 0..20 {
            let s = sampler::sample(kernel, &mut sampler::stream_rng(cfg.seed, 9000 + i));
            match (
                hill::ground_state_galerkin(&s.values, modes),
                hill::ground_state_discriminant(&s.values, cfg.ode_steps),
            ) {
                (Ok(a), Ok(b)) => {
                    let tol = 1e-8 * (1.0 + fourier::max_abs(&s.values));
                    let dev = (a.lambda0 - b.lambda0).abs();
                    worst = worst.max(dev / tol);
                    ok &= dev <= tol;
                }
                _ => ok = false,
            }
        }
        report("cross-solver agreement (20 samples)", ok, format!("worst dev/tol = {worst:.2e}"));
    }
    // Lipschitz bound on Φ
    {
        let mut ok = true;
        let mut worst = f64::NEG_INFINITY;
        for i in 0..100 {
            let a = sampler::sample(kernel, &mut sampler::stream_rng(cfg.seed, 10000 + 2 * i));
            let b = sampler::sample(kernel, &mut sampler::stream_rng(cfg.seed, 10001 + 2 * i));
            match (
                riccati::phi(&a.tilde_values, modes),
                riccati::phi(&b.tilde_values, modes),
            ) {
                (Ok(pa), Ok(pb)) => {
                    let dist = a
                        .tilde_values
                        .iter()
                        .zip(&b.tilde_values)
                        .map(|(x, y)| (x - y).abs())
                        .fold(0.0_f64, f64::max);
                    let slack = (pa.phi - pb.phi).abs() - dist;
                    worst = worst.max(slack);
                    ok &= slack <= 1e-9;
                    ok &= pa.phi >= -1e-10 && pa.phi <= fourier::max_abs(&a.tilde_values) + 1e-9;
                }
                _ => ok = false,
            }
        }
        report("Φ Lipschitz bound (100 pairs)", ok, format!("worst excess = {worst:.2e}"));
    }
    // affine slope of q₀ in λ
    {
        let s = sampler::sample(kernel, &mut sampler::stream_rng(cfg.seed, 11000));
        let mut ok = true;
        let mut worst = 0.0_f64;
        for &(sv, lam) in &[(0.5_f64, -2.0_f64), (1.0, 0.0), (0.0, 1.0)] {
            match riccati::check_lemma21(&s.tilde_values, sv, lam, 1e-3, cfg.ode_steps) {
                Ok(slope) => {
                    worst = worst.max((slope - 1.0).abs());
                    ok &= (slope - 1.0).abs() <= 1e-12;
                }
                Err(_) => ok = false,
            }
        }
        report("unit Jacobian slope in λ", ok, format!("worst |slope-1| = {worst:.2e}"));
    }
    // Jacobian positivity + constant case
    {
        let mut ok = true;
        for i in 0..20 {
            let s = sampler::sample(kernel, &mut sampler::stream_rng(cfg.seed, 12000 + i));
            let sv = 0.1 + 1.9 * (i as f64 + 0.5) / 20.0;
            match riccati::jacobian_j(&s.tilde_values, sv, cfg.ode_steps) {
                Ok(j) => ok &= j > 0.0,
                Err(_) => ok = false,
            }
        }
        let j_const = riccati::jacobian_j(&vec![0.0; n], 1.0, cfg.ode_steps);
        let const_ok = matches!(&j_const, Ok(j) if (j - 2.0).abs() < 1e-4);
        report(
            "Jacobian positivity and constant case",
            ok && const_ok,
            format!("J(1, 0) = {:?}", j_const.map(|j| (j * 1e6).round() / 1e6)),
        );
    }
    // sup-norm embedding inequality
    {
        let mut ok = true;
        let mut worst = f64::NEG_INFINITY;
        let k_sup = kernel.at_zero();
        for i in 0..50 {
            let s = sampler::sample(kernel, &mut sampler::stream_rng(cfg.seed, 13000 + i));
            match kernel.quad_form_inv(&s.values) {
                Ok(energy) => {
                    let sup = fourier::max_abs(&s.values);
                    let slack = sup * sup - k_sup * energy;
                    worst = worst.max(slack);
                    ok &= slack <= 1e-9;
                }
                Err(_) => ok = false,
            }
        }
        report("sup-norm vs energy inequality (50 paths)", ok, format!("worst excess = {worst:.2e}"));
    }
    // constant-kernel density is the exact Gaussian
    {
        let flat = CovarianceKernel::from_coeffs(&[1.0], 64);
        let ok = match flat {
            Ok(k) => match montecarlo::estimate_density(
                &k,
                &[-1.0, 0.0, 2.0],
                25,
                None,
                &McSettings::new(cfg.seed),
            ) {
                Ok(est) => est.lambdas.iter().zip(&est.f_hat).all(|(&lam, &f)| {
                    let exact = (-lam * lam / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
                    (f - exact).abs() < 1e-12
                }),
                Err(_) => false,
            },
            Err(_) => false,
        };
        report("constant-kernel density is exactly Gaussian", ok, String::new());
    }
    all
}

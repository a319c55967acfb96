//! Command-line front end for the estimator library: rate calculators,
//! one-shot simulation/estimation, MISE sweeps, scaling-law checks, packing
//! construction and the verification suite.
//!
//! Exit status: 0 when every requested check passes, 1 on configuration or
//! runtime errors and on failed checks, 2 on usage errors (from the parser).

use clap::{Args, Parser, Subcommand};
use seqinv::config::{DeltaRule, EstimatorKind, ExperimentConfig, Geometry, ModelKind};
use seqinv::error::Error;
use seqinv::estimate::Certificate;
use seqinv::harness::{
    fmt_float, run_mise_sweep, scalings_report_text, sweep_report, verify_scalings,
    write_sweep_outputs,
};
use seqinv::net::{build_packing, NetSpec};
use seqinv::rates::{rate_additive, rate_convolution};
use seqinv::sim::{sample_density, simulate_white_noise, NoiseMode, Observation};
use seqinv::suite::{run_verification_suite, SuiteLevel};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "seqinv", version, about = "Sequence-space inverse-problem estimators")]
struct Cli {
    /// Cap on worker threads (default: logical core count).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print convergence-rate exponents.
    Rates(RatesArgs),
    /// Draw one observation under the configured model.
    Simulate(SimulateArgs),
    /// Run one simulate-estimate round and print MISE and risk.
    Estimate(SimulateArgs),
    /// Run the Monte Carlo MISE sweep and write CSV/report outputs.
    Sweep(SweepArgs),
    /// Run the oracle verification suite.
    Verify(VerifyArgs),
    /// Measure entropy/operator-norm/packing scaling laws.
    Scalings(ConfigOnlyArgs),
    /// Build and verify a packing at one separation scale.
    Packing(PackingArgs),
}

#[derive(Args)]
struct RatesArgs {
    /// Smoothness s.
    #[arg(long)]
    s: Option<f64>,
    /// Degree of ill-posedness q.
    #[arg(long)]
    q: Option<f64>,
    /// Dimension d.
    #[arg(long)]
    d: Option<usize>,
    /// Additive components as "s1:q1,s2:q2,...".
    #[arg(long)]
    additive: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Sample-size parameter (default: first entry of the config's n_grid).
    #[arg(long)]
    n: Option<f64>,
    /// Base seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the observed coefficients to this CSV file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory for raw.csv, aggregate.csv and report.txt.
    #[arg(long)]
    out: PathBuf,
    /// Overwrite existing output files.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Run the larger trial counts.
    #[arg(long)]
    full: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct ConfigOnlyArgs {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct PackingArgs {
    #[arg(long)]
    config: PathBuf,
    /// Separation scale δ.
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    // Die quietly on closed pipes (`seqinv ... | head`) like standard unix
    // tools instead of panicking on the first blocked print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        // Ignore a second initialization attempt (tests may share a process).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global();
    }
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> seqinv::Result<bool> {
    match command {
        Command::Rates(args) => cmd_rates(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Verify(args) => {
            let level = if args.full {
                SuiteLevel::Full
            } else {
                SuiteLevel::Fast
            };
            let report = run_verification_suite(level, args.seed)?;
            print!("{}", report.render());
            Ok(report.all_pass)
        }
        Command::Scalings(args) => {
            let cfg = ExperimentConfig::load(&args.config)?;
            if cfg.scalings_delta_grid.is_empty() {
                return Err(Error::Config(
                    "the config needs a [scalings] section with delta_grid".into(),
                ));
            }
            let report = verify_scalings(&cfg, &cfg.scalings_delta_grid)?;
            print!("{}", scalings_report_text(&report));
            Ok(report.all_pass)
        }
        Command::Packing(args) => cmd_packing(args),
    }
}

fn cmd_rates(args: RatesArgs) -> seqinv::Result<bool> {
    let mise_exponent = match (&args.additive, args.s, args.q, args.d) {
        (Some(spec), None, None, None) => {
            let mut components = Vec::new();
            for part in spec.split(',') {
                let mut it = part.split(':');
                let s: f64 = it
                    .next()
                    .and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| Error::Config(format!("bad component {part:?}")))?;
                let q: f64 = it
                    .next()
                    .and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| Error::Config(format!("bad component {part:?}")))?;
                if it.next().is_some() {
                    return Err(Error::Config(format!("bad component {part:?}")));
                }
                components.push((s, q));
            }
            rate_additive(&components)?
        }
        (None, Some(s), q, d) => rate_convolution(s, q.unwrap_or(0.0), d.unwrap_or(1))?,
        _ => {
            return Err(Error::Config(
                "give either --s [--q --d] or --additive \"s1:q1,...\"".into(),
            ))
        }
    };
    println!("mise_exponent = {mise_exponent}");
    println!("psi_exponent = {}", mise_exponent / 2.0);
    Ok(true)
}

/// Net (or component-net union) active box and δ at the given n.
fn prepare_nets(
    cfg: &ExperimentConfig,
    n: f64,
) -> seqinv::Result<(f64, Vec<f64>, Vec<seqinv::MultiIndex>)> {
    match &cfg.geometry {
        Geometry::Ellipsoid(spec) => {
            let delta = match cfg.delta_rule {
                DeltaRule::Fixed { delta } => delta,
                DeltaRule::Optimal { kappa } => {
                    let (s, q, d) = cfg.rate_parameters()?;
                    seqinv::rates::optimal_delta(n, s, q, d, kappa)?
                }
            };
            let net = NetSpec::build(*spec, delta)?;
            Ok((delta, vec![delta], net.active().to_vec()))
        }
        Geometry::Additive(comps) => {
            let ambient = comps.iter().map(|c| c.coordinate + 1).max().unwrap();
            let mut deltas = Vec::new();
            let mut active = Vec::new();
            for c in comps {
                let dk = match cfg.delta_rule {
                    DeltaRule::Fixed { delta } => delta,
                    DeltaRule::Optimal { kappa } => {
                        seqinv::rates::optimal_delta(n, c.spec.smoothness(), c.q, 1, kappa)?
                    }
                };
                let net = NetSpec::build_component(c.spec, dk, c.coordinate, ambient)?;
                active.extend_from_slice(net.active());
                deltas.push(dk);
            }
            Ok((deltas.iter().sum(), deltas, active))
        }
    }
}

fn observe(
    cfg: &ExperimentConfig,
    n: f64,
    seed: u64,
    active: &[seqinv::MultiIndex],
) -> seqinv::Result<Observation> {
    Ok(match cfg.model {
        ModelKind::WhiteNoise => {
            let noise = if cfg.noiseless {
                NoiseMode::Zero
            } else {
                NoiseMode::Seeded
            };
            Observation::WhiteNoise(simulate_white_noise(
                &cfg.operator,
                &cfg.truth,
                n,
                active,
                seed,
                0,
                noise,
            )?)
        }
        ModelKind::Density => {
            let sample = sample_density(&cfg.operator, &cfg.truth, n as usize, seed)?;
            Observation::Density {
                sample,
                op: cfg.operator.clone(),
                theta_true: cfg.truth.clone(),
            }
        }
    })
}

fn cmd_simulate(args: SimulateArgs) -> seqinv::Result<bool> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    let n = args.n.unwrap_or(cfg.n_grid[0]);
    let (delta, _, active) = prepare_nets(&cfg, n)?;
    let obs = observe(&cfg, n, cfg.base_seed, &active)?;
    println!("model = {:?}", cfg.model);
    println!("n = {}", fmt_float(n));
    println!("delta = {}", fmt_float(delta));
    println!("active_size = {}", active.len());
    println!("seed = {}", cfg.base_seed);
    println!("rng = {}", seqinv::rng::RNG_ALGO);
    // Write the data file before the summary so it lands even when stdout
    // is a pipe the reader closes early.
    match &obs {
        Observation::WhiteNoise(wn) => {
            if let Some(path) = &args.out {
                let mut text = String::from("index,value\n");
                for (j, v) in wn.y().iter() {
                    text.push_str(&format!("{j},{}\n", fmt_float(*v)));
                }
                std::fs::write(path, text)?;
            }
            println!("y_norm = {}", fmt_float(wn.y().norm()));
            let noise = wn.y().sub(wn.theta_active());
            println!("noise_norm = {}", fmt_float(noise.norm()));
        }
        Observation::Density { sample, .. } => {
            if let Some(path) = &args.out {
                let mut text = String::from("coordinates\n");
                for p in sample.points() {
                    let coords: Vec<String> = p.iter().map(|x| fmt_float(*x)).collect();
                    text.push_str(&coords.join(";"));
                    text.push('\n');
                }
                std::fs::write(path, text)?;
            }
            println!("points = {}", sample.n());
        }
    }
    Ok(true)
}

fn cmd_estimate(args: SimulateArgs) -> seqinv::Result<bool> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    let n = args.n.unwrap_or(cfg.n_grid[0]);
    let (delta, deltas, active) = prepare_nets(&cfg, n)?;
    let obs = observe(&cfg, n, cfg.base_seed, &active)?;
    let report = match (&cfg.geometry, cfg.estimator) {
        (Geometry::Ellipsoid(spec), EstimatorKind::Net) => {
            let net = NetSpec::build(*spec, delta)?;
            seqinv::estimate::delta_net_estimate(&obs, &net)?
        }
        (Geometry::Ellipsoid(spec), EstimatorKind::Dense) => match &obs {
            Observation::WhiteNoise(wn) => {
                let eps_n = 1e-10 * (1.0 + wn.y().norm_sq());
                seqinv::estimate::dense_estimate(wn, spec, eps_n)?
            }
            _ => {
                return Err(Error::Config(
                    "dense estimation requires the white noise model".into(),
                ))
            }
        },
        (Geometry::Additive(comps), EstimatorKind::Additive) => match &obs {
            Observation::WhiteNoise(wn) => {
                seqinv::estimate::additive_estimate(wn, comps, &deltas)?
            }
            _ => {
                return Err(Error::Config(
                    "additive estimation requires the white noise model".into(),
                ))
            }
        },
        _ => {
            return Err(Error::Config(
                "estimator/geometry combination unsupported".into(),
            ))
        }
    };
    println!("n = {}", fmt_float(n));
    println!("delta = {}", fmt_float(delta));
    println!(
        "mise = {}",
        fmt_float(seqinv::estimate::mise(&report.theta_hat, &cfg.truth))
    );
    println!("risk = {}", fmt_float(report.risk_value));
    match &report.certificate {
        Certificate::ExactGridArgmin => println!("certificate = exact_grid_argmin"),
        Certificate::Kkt { residual, lambda } => {
            println!("certificate = kkt");
            println!("kkt_residual = {}", fmt_float(*residual));
            println!("kkt_lambda = {}", fmt_float(*lambda));
        }
        Certificate::PerComponent(list) => {
            println!("certificate = per_component ({} components)", list.len())
        }
    }
    Ok(true)
}

fn cmd_sweep(args: SweepArgs) -> seqinv::Result<bool> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let result = run_mise_sweep(&cfg)?;
    write_sweep_outputs(&args.out, &result, args.force)?;
    print!("{}", sweep_report(&result));
    println!("outputs written to {}", args.out.display());
    Ok(result.rows.iter().all(|r| r.bound_pass))
}

fn cmd_packing(args: PackingArgs) -> seqinv::Result<bool> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let spec = match &cfg.geometry {
        Geometry::Ellipsoid(s) => *s,
        _ => {
            return Err(Error::Config(
                "packing construction needs ellipsoid geometry".into(),
            ))
        }
    };
    let seed = args.seed.unwrap_or(cfg.scalings_packing_seed);
    let packing = build_packing(spec, args.delta, seed)?;
    let (min_d, max_d, count) = packing.verify()?;
    let membership = packing.all_in_ellipsoid();
    println!("delta = {}", fmt_float(args.delta));
    println!("shell_size = {}", packing.shell().len());
    println!("gamma = {}", fmt_float(packing.gamma()));
    println!("count = {count}");
    println!("min_distance = {}", fmt_float(min_d));
    println!("max_distance = {}", fmt_float(max_d));
    println!("membership = {membership}");
    let rho_k = packing.rho_k_white_noise(&cfg.operator)?;
    println!("rho_K_white_noise = {}", fmt_float(rho_k));
    let pass = min_d >= args.delta * (1.0 - 1e-12)
        && max_d <= 2.0 * args.delta * (1.0 + 1e-12)
        && membership;
    println!("contract = {}", if pass { "PASS" } else { "FAIL" });
    Ok(pass)
}

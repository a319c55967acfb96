//! Monte Carlo experiment driver: MISE sweeps over n, log-log slope fits,
//! and scaling-law measurements for nets and packings.
//!
//! Determinism contract: every output is a pure function of (config, seeds).
//! Replications run concurrently but each owns an independent substream and
//! results are aggregated in task order, so parallel and serial execution
//! produce identical bytes.

use crate::config::{
    DeltaRule, EstimatorKind, ExperimentConfig, Geometry, ModelKind,
};
use crate::error::{Error, Result};
use crate::estimate::{
    additive_estimate, delta_net_estimate, dense_estimate, mise,
};
use crate::net::{build_packing, NetSpec, PackingSpec};
use crate::operator::DiagonalOperator;
use crate::rates::{
    rate_additive, rate_convolution, rate_exponent_lower, rate_exponent_net, net_risk_bound,
    additive_risk_bound, BoundModel,
};
use crate::rng::{substream_seed, RNG_ALGO};
use crate::seq::CoefVec;
use crate::sim::{sample_density, simulate_white_noise, NoiseMode, Observation};
use rayon::prelude::*;
use std::fmt::Write as _;

// "density!" as a fixed stream-separation word.
const DENSITY_STREAM_TAG: u64 = u64::from_le_bytes(*b"density!");

/// One aggregated sweep row.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub n: f64,
    pub delta: f64,
    pub mise_mean: f64,
    pub mise_stderr: f64,
    pub log_card: f64,
    pub rho: f64,
    pub bound: f64,
    pub bound_pass: bool,
}

/// One raw replication record.
#[derive(Debug, Clone)]
pub struct RawRow {
    pub n: f64,
    pub replication: u64,
    pub delta: f64,
    pub mise: f64,
}

/// Numerically verified pieces of the density-model conditions: the minimum
/// net operator norm over the grid (must be ≥ 1) and finite sup-norm
/// constants for Af and Q over the net box.
#[derive(Debug, Clone, Copy)]
pub struct DensityConditions {
    pub rho_min: f64,
    pub b_inf: f64,
    pub b_prime_inf: f64,
    pub c_tau: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub raw: Vec<RawRow>,
    pub slope: f64,
    pub ci95: f64,
    pub theory_exponent: f64,
    pub density_conditions: Option<DensityConditions>,
    /// Dense-minimizer eligibility a + b/2 < 1 (with a = q/s, b = d/s),
    /// reported alongside dense runs without blocking execution.
    pub dense_eligibility: Option<(f64, bool)>,
    pub summary: String,
}

/// OLS fit of log y on log x with the standard slope-variance estimate;
/// returns (slope, 1.96·SE).
pub fn fit_loglog_slope(rows: &[(f64, f64)]) -> Result<(f64, f64)> {
    if rows.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "slope fit needs at least 3 rows, got {}",
            rows.len()
        )));
    }
    if rows.iter().any(|&(x, y)| !(x > 0.0) || !(y > 0.0)) {
        return Err(Error::InvalidParameter(
            "slope fit needs strictly positive coordinates".into(),
        ));
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - xm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let rss: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let se = (rss / (n - 2.0) / sxx).sqrt();
    Ok((slope, 1.96 * se))
}

/// The δ driven by the configured rule at sample size n.
fn delta_for(config: &ExperimentConfig, n: f64) -> Result<f64> {
    match (&config.delta_rule, &config.geometry) {
        (DeltaRule::Fixed { delta }, _) => Ok(*delta),
        (DeltaRule::Optimal { kappa }, Geometry::Ellipsoid(_)) => {
            let (s, q, d) = config.rate_parameters()?;
            crate::rates::optimal_delta(n, s, q, d, *kappa)
        }
        (DeltaRule::Optimal { kappa }, Geometry::Additive(comps)) => {
            let mut total = 0.0;
            for c in comps {
                total +=
                    crate::rates::optimal_delta(n, c.spec.smoothness(), c.q, 1, *kappa)?;
            }
            Ok(total)
        }
    }
}

fn component_deltas(config: &ExperimentConfig, n: f64) -> Result<Vec<f64>> {
    match (&config.delta_rule, &config.geometry) {
        (DeltaRule::Optimal { kappa }, Geometry::Additive(comps)) => comps
            .iter()
            .map(|c| crate::rates::optimal_delta(n, c.spec.smoothness(), c.q, 1, *kappa))
            .collect(),
        (DeltaRule::Fixed { delta }, Geometry::Additive(comps)) => {
            Ok(vec![*delta; comps.len()])
        }
        _ => Err(Error::Config("component deltas need additive geometry".into())),
    }
}

/// Theory MISE exponent for the configured problem.
pub fn theory_exponent(config: &ExperimentConfig) -> Result<f64> {
    match &config.geometry {
        Geometry::Ellipsoid(_) => {
            let (s, q, d) = config.rate_parameters()?;
            rate_convolution(s, q, d)
        }
        Geometry::Additive(comps) => {
            let pairs: Vec<(f64, f64)> = comps
                .iter()
                .map(|c| (c.spec.smoothness(), c.q))
                .collect();
            rate_additive(&pairs)
        }
    }
}

/// Sup-norm constants for the density bound: B∞ from the truth's density on
/// a dense grid, B'∞ from the worst net point, bounded coefficientwise by
/// Σ b_j^{-1}(L/a_j)·sup|φ_j| with sup|φ_j| = √2 for the cosine system.
fn density_sup_constants(
    op: &DiagonalOperator,
    truth: &CoefVec,
    net: &NetSpec,
) -> Result<(f64, f64)> {
    let grid = crate::quad::periodic_points(4096);
    let mut b_inf: f64 = 0.0;
    for &x in &grid {
        b_inf = b_inf.max(op.a_point_eval(truth, &[x])?.abs());
    }
    let mut b_prime: f64 = 0.0;
    for (i, j) in net.active().iter().enumerate() {
        let b = op.singular_value(j)?;
        let sup_phi = if j.total() == 0 { 1.0 } else { std::f64::consts::SQRT_2 };
        b_prime += net.bounds()[i] / b * sup_phi;
    }
    Ok((b_inf, b_prime))
}

/// Smallest C_τ (up to bisection) admitting the configured ξ in the density
/// branch of the bound's validity condition.
fn density_c_tau(xi: f64, b_inf: f64, b_prime_inf: f64) -> Result<f64> {
    let admissible = |c_tau: f64| {
        crate::rates::admissible_xi_lower(
            BoundModel::Density { b_inf, b_prime_inf },
            c_tau,
        )
        .map(|lo| lo <= xi)
        .unwrap_or(false)
    };
    let mut hi = 1.0;
    let mut tries = 0;
    while !admissible(hi) {
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(Error::BracketFailure(
                "no admissible C_tau for the density bound".into(),
            ));
        }
    }
    let mut lo = hi / 2.0;
    if hi == 1.0 {
        return Ok(1.0);
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if admissible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Runs the configured MISE sweep: for each n and replication, derive a
/// substream, simulate, pick δ, estimate, record MISE; aggregate and fit the
/// log-log slope against the theory exponent.
pub fn run_mise_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    let mut rows = Vec::with_capacity(config.n_grid.len());
    let mut raw = Vec::with_capacity(config.n_grid.len() * config.replications as usize);
    let mut density_conditions: Option<DensityConditions> = None;

    for &n in &config.n_grid {
        let delta = delta_for(config, n)?;
        let (mises, log_card, rho, bound) = match (&config.geometry, config.estimator) {
            (Geometry::Ellipsoid(spec), EstimatorKind::Net | EstimatorKind::Dense) => {
                let net = NetSpec::build(*spec, delta)?;
                let log_card = net.log_cardinality();
                let rho = net.operator_norm(&config.operator)?;
                let bound = match config.model {
                    ModelKind::WhiteNoise => net_risk_bound(
                        delta,
                        rho,
                        log_card,
                        n,
                        config.bound.xi,
                        config.bound.c_tau,
                        BoundModel::WhiteNoise,
                    )?,
                    ModelKind::Density => {
                        let (b_inf, b_prime_inf) =
                            density_sup_constants(&config.operator, &config.truth, &net)?;
                        let c_tau = density_c_tau(config.bound.xi, b_inf, b_prime_inf)?;
                        let cond = DensityConditions {
                            rho_min: density_conditions
                                .map_or(rho, |c| c.rho_min.min(rho)),
                            b_inf,
                            b_prime_inf,
                            c_tau,
                        };
                        density_conditions = Some(cond);
                        net_risk_bound(
                            delta,
                            rho,
                            log_card,
                            n,
                            config.bound.xi,
                            c_tau,
                            BoundModel::Density { b_inf, b_prime_inf },
                        )?
                    }
                };
                let mises = run_replications(config, n, &net)?;
                (mises, log_card, rho, bound)
            }
            (Geometry::Additive(comps), EstimatorKind::Additive) => {
                let deltas = component_deltas(config, n)?;
                let ambient = comps.iter().map(|c| c.coordinate + 1).max().unwrap();
                let mut nets = Vec::new();
                for (c, &dk) in comps.iter().zip(deltas.iter()) {
                    nets.push(NetSpec::build_component(c.spec, dk, c.coordinate, ambient)?);
                }
                let mut rhos = Vec::new();
                let mut lambdas = Vec::new();
                for net in &nets {
                    rhos.push(net.operator_norm(&config.operator)?);
                    lambdas.push(net.log_cardinality());
                }
                let delta_total: f64 = deltas.iter().sum();
                let bound = additive_risk_bound(
                    delta_total,
                    &rhos,
                    &lambdas,
                    n,
                    config.bound.c_additive,
                )?;
                let log_card: f64 = lambdas.iter().sum();
                let rho = rhos.iter().cloned().fold(0.0, f64::max);
                let mut active = Vec::new();
                for net in &nets {
                    active.extend_from_slice(net.active());
                }
                let mises = run_additive_replications(config, n, &active, comps, &deltas)?;
                (mises, log_card, rho, bound)
            }
            _ => {
                return Err(Error::Config(
                    "estimator/geometry combination unsupported".into(),
                ))
            }
        };

        let reps = mises.len() as f64;
        let mean = mises.iter().sum::<f64>() / reps;
        let var = if mises.len() > 1 {
            mises.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (reps - 1.0)
        } else {
            0.0
        };
        let stderr = (var / reps).sqrt();
        for (r, &m) in mises.iter().enumerate() {
            raw.push(RawRow {
                n,
                replication: r as u64,
                delta,
                mise: m,
            });
        }
        rows.push(SweepRow {
            n,
            delta,
            mise_mean: mean,
            mise_stderr: stderr,
            log_card,
            rho,
            bound,
            bound_pass: mean <= bound,
        });
    }

    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.n, r.mise_mean)).collect();
    let (slope, ci95) = fit_loglog_slope(&pts).unwrap_or((f64::NAN, f64::NAN));
    let theory = theory_exponent(config)?;
    let dense_eligibility = if config.estimator == EstimatorKind::Dense {
        let (s, q, d) = config.rate_parameters()?;
        let p = q / s + d as f64 / (2.0 * s);
        Some((p, p < 1.0))
    } else {
        None
    };
    let summary = format!(
        "model={:?} estimator={:?} truth={} n_grid={:?} replications={} base_seed={} rng={}",
        config.model,
        config.estimator,
        config.truth_kind,
        config.n_grid,
        config.replications,
        config.base_seed,
        RNG_ALGO,
    );
    Ok(SweepResult {
        rows,
        raw,
        slope,
        ci95,
        theory_exponent: theory,
        density_conditions,
        dense_eligibility,
        summary,
    })
}

fn run_replications(config: &ExperimentConfig, n: f64, net: &NetSpec) -> Result<Vec<f64>> {
    let spec = match &config.geometry {
        Geometry::Ellipsoid(s) => *s,
        _ => unreachable!("ellipsoid geometry checked by caller"),
    };
    (0..config.replications)
        .into_par_iter()
        .map(|rep| -> Result<f64> {
            let obs = match config.model {
                ModelKind::WhiteNoise => {
                    let noise = if config.noiseless {
                        NoiseMode::Zero
                    } else {
                        NoiseMode::Seeded
                    };
                    Observation::WhiteNoise(simulate_white_noise(
                        &config.operator,
                        &config.truth,
                        n,
                        net.active(),
                        config.base_seed,
                        rep,
                        noise,
                    )?)
                }
                ModelKind::Density => {
                    let seed =
                        substream_seed(config.base_seed, &[rep, n.to_bits(), DENSITY_STREAM_TAG]);
                    let sample =
                        sample_density(&config.operator, &config.truth, n as usize, seed)?;
                    Observation::Density {
                        sample,
                        op: config.operator.clone(),
                        theta_true: config.truth.clone(),
                    }
                }
            };
            let theta_hat = match config.estimator {
                EstimatorKind::Net => delta_net_estimate(&obs, net)?.theta_hat,
                EstimatorKind::Dense => match &obs {
                    Observation::WhiteNoise(wn) => {
                        let eps_n = 1e-10 * (1.0 + wn.y().norm_sq());
                        dense_estimate(wn, &spec, eps_n)?.theta_hat
                    }
                    _ => {
                        return Err(Error::Config(
                            "dense estimator requires the white noise model".into(),
                        ))
                    }
                },
                EstimatorKind::Additive => unreachable!("additive handled separately"),
            };
            Ok(mise(&theta_hat, &config.truth))
        })
        .collect()
}

fn run_additive_replications(
    config: &ExperimentConfig,
    n: f64,
    active: &[crate::seq::MultiIndex],
    comps: &[crate::estimate::AdditiveComponent],
    deltas: &[f64],
) -> Result<Vec<f64>> {
    (0..config.replications)
        .into_par_iter()
        .map(|rep| -> Result<f64> {
            let noise = if config.noiseless {
                NoiseMode::Zero
            } else {
                NoiseMode::Seeded
            };
            let obs = simulate_white_noise(
                &config.operator,
                &config.truth,
                n,
                active,
                config.base_seed,
                rep,
                noise,
            )?;
            let report = additive_estimate(&obs, comps, deltas)?;
            Ok(mise(&report.theta_hat, &config.truth))
        })
        .collect()
}

/// One scaling-law measurement point.
#[derive(Debug, Clone)]
pub struct ScalingPoint {
    pub delta: f64,
    pub net_level: u32,
    pub log_card: f64,
    pub rho: f64,
    pub packing_size: Option<usize>,
    pub rho_k: Option<f64>,
    pub packing_min: Option<f64>,
    pub packing_max: Option<f64>,
    pub packing_error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SlopeCheck {
    pub name: &'static str,
    pub slope: f64,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct ScalingsReport {
    pub points: Vec<ScalingPoint>,
    pub checks: Vec<SlopeCheck>,
    pub rate_upper_exponent: f64,
    pub rate_lower_exponent: f64,
    pub rates_equal: bool,
    pub all_pass: bool,
}

/// Builds nets and packings over the δ grid and fits the three scaling
/// slopes: log #F_δ against −d/s (±0.25), log ϱ(Q,F_δ) against −q/s (±0.1)
/// and log ϱ_K(A,D_δ) against +q/s (±0.1). Also evaluates the rate-equation
/// exponents from both the upper-bound side and the packing lower-bound
/// side, which coincide exactly. ϱ_K uses the white-noise branch.
pub fn verify_scalings(config: &ExperimentConfig, delta_grid: &[f64]) -> Result<ScalingsReport> {
    if delta_grid.len() < 4 {
        return Err(Error::InvalidParameter(
            "scaling verification needs at least 4 grid points".into(),
        ));
    }
    let lo = delta_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = delta_grid.iter().cloned().fold(0.0, f64::max);
    if hi / lo < 10.0 {
        return Err(Error::InvalidParameter(format!(
            "delta grid must span at least one decade, got ratio {}",
            hi / lo
        )));
    }
    let spec = match &config.geometry {
        Geometry::Ellipsoid(s) => *s,
        _ => {
            return Err(Error::Config(
                "scaling verification runs on ellipsoid geometry".into(),
            ))
        }
    };
    let (s, q, d) = config.rate_parameters()?;

    let points: Vec<ScalingPoint> = delta_grid
        .par_iter()
        .map(|&delta| -> Result<ScalingPoint> {
            let net = NetSpec::build(spec, delta)?;
            let log_card = net.log_cardinality();
            let rho = net.operator_norm(&config.operator)?;
            let mut point = ScalingPoint {
                delta,
                net_level: net.truncation_level(),
                log_card,
                rho,
                packing_size: None,
                rho_k: None,
                packing_min: None,
                packing_max: None,
                packing_error: None,
            };
            match build_packing(spec, delta, config.scalings_packing_seed) {
                Ok(p) => {
                    let (min_d, max_d, count) = p.verify()?;
                    point.packing_size = Some(count);
                    point.packing_min = Some(min_d);
                    point.packing_max = Some(max_d);
                    point.rho_k = Some(p.rho_k_white_noise(&config.operator)?);
                }
                Err(e) => point.packing_error = Some(e.to_string()),
            }
            Ok(point)
        })
        .collect::<Result<Vec<_>>>()?;

    let card_pts: Vec<(f64, f64)> = points.iter().map(|p| (p.delta, p.log_card)).collect();
    let rho_pts: Vec<(f64, f64)> = points.iter().map(|p| (p.delta, p.rho)).collect();
    let rho_k_pts: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.rho_k.map(|v| (p.delta, v)))
        .collect();

    let (card_slope, _) = fit_loglog_slope(&card_pts)?;
    let (rho_slope, _) = fit_loglog_slope(&rho_pts)?;
    let (rho_k_slope, _) = fit_loglog_slope(&rho_k_pts)?;

    let checks = vec![
        SlopeCheck {
            name: "log_cardinality",
            slope: card_slope,
            target: -(d as f64) / s,
            tolerance: 0.25,
            pass: (card_slope + d as f64 / s).abs() <= 0.25,
        },
        SlopeCheck {
            name: "operator_norm_rho",
            slope: rho_slope,
            target: -q / s,
            tolerance: 0.1,
            pass: (rho_slope + q / s).abs() <= 0.1,
        },
        SlopeCheck {
            name: "packing_norm_rho_k",
            slope: rho_k_slope,
            target: q / s,
            tolerance: 0.1,
            pass: (rho_k_slope - q / s).abs() <= 0.1,
        },
    ];

    let a = q / s;
    let b = d as f64 / s;
    let rate_upper = rate_exponent_net(a, b)?;
    let rate_lower = rate_exponent_lower(a, b)?;
    let rates_equal = rate_upper == rate_lower;
    let all_pass = checks.iter().all(|c| c.pass) && rates_equal;
    Ok(ScalingsReport {
        points,
        checks,
        rate_upper_exponent: rate_upper,
        rate_lower_exponent: rate_lower,
        rates_equal,
        all_pass,
    })
}

impl PackingSpec {
    /// Exact white-noise ϱ_K over this packing via codebook bit arithmetic:
    /// a pair differing on bit set S has ‖A(f−g)‖²/‖f−g‖² = Σ_{S}b²/|S|.
    pub fn rho_k_white_noise(&self, op: &DiagonalOperator) -> Result<f64> {
        let b_sq: Vec<f64> = self
            .shell()
            .iter()
            .map(|j| op.singular_value(j).map(|b| b * b))
            .collect::<Result<Vec<_>>>()?;
        let words = self.codebook_words();
        if words.len() < 2 {
            return Err(Error::InvalidParameter(
                "rho_K needs at least two packing points".into(),
            ));
        }
        let mut best: f64 = 0.0;
        for a in 0..words.len() {
            for b in (a + 1)..words.len() {
                let mut diff = words[a] ^ words[b];
                if diff == 0 {
                    continue;
                }
                let h = diff.count_ones() as f64;
                let mut acc = 0.0;
                while diff != 0 {
                    let bit = diff.trailing_zeros() as usize;
                    acc += b_sq[bit];
                    diff &= diff - 1;
                }
                best = best.max(acc / h);
            }
        }
        Ok((best / 2.0).sqrt())
    }
}

/// 17-significant-digit float formatting used in all harness output files.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Raw CSV: `n,replication,delta,mise`.
pub fn raw_csv(result: &SweepResult) -> String {
    let mut out = String::from("n,replication,delta,mise\n");
    for r in &result.raw {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_float(r.n),
            r.replication,
            fmt_float(r.delta),
            fmt_float(r.mise)
        );
    }
    out
}

/// Aggregate CSV: `n,mise_mean,mise_stderr,delta,bound,pass`.
pub fn aggregate_csv(result: &SweepResult) -> String {
    let mut out = String::from("n,mise_mean,mise_stderr,delta,bound,pass\n");
    for r in &result.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_float(r.n),
            fmt_float(r.mise_mean),
            fmt_float(r.mise_stderr),
            fmt_float(r.delta),
            fmt_float(r.bound),
            r.bound_pass
        );
    }
    out
}

/// Plain-text sweep report.
pub fn sweep_report(result: &SweepResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# MISE sweep report");
    let _ = writeln!(out, "{}", result.summary);
    let _ = writeln!(
        out,
        "theory_mise_exponent = {}",
        fmt_float(result.theory_exponent)
    );
    let _ = writeln!(out, "fitted_slope = {}", fmt_float(result.slope));
    let _ = writeln!(out, "fitted_ci95 = {}", fmt_float(result.ci95));
    let _ = writeln!(
        out,
        "slope_target = {}",
        fmt_float(-result.theory_exponent)
    );
    if let Some((p, eligible)) = result.dense_eligibility {
        let _ = writeln!(out, "dense_entropy_exponent_a_plus_b_half = {}", fmt_float(p));
        let _ = writeln!(out, "dense_eligible = {eligible}");
    }
    if let Some(c) = result.density_conditions {
        let _ = writeln!(out, "density_rho_min = {}", fmt_float(c.rho_min));
        let _ = writeln!(out, "density_rho_min_ok = {}", c.rho_min >= 1.0);
        let _ = writeln!(out, "density_B_inf = {}", fmt_float(c.b_inf));
        let _ = writeln!(out, "density_B_prime_inf = {}", fmt_float(c.b_prime_inf));
        let _ = writeln!(out, "density_C_tau = {}", fmt_float(c.c_tau));
    }
    let _ = writeln!(out, "rows:");
    let _ = writeln!(out, "  n  mise_mean  mise_stderr  delta  log_card  rho  bound  pass");
    for r in &result.rows {
        let _ = writeln!(
            out,
            "  {}  {}  {}  {}  {}  {}  {}  {}",
            fmt_float(r.n),
            fmt_float(r.mise_mean),
            fmt_float(r.mise_stderr),
            fmt_float(r.delta),
            fmt_float(r.log_card),
            fmt_float(r.rho),
            fmt_float(r.bound),
            r.bound_pass
        );
    }
    out
}

/// Plain-text scalings report.
pub fn scalings_report_text(report: &ScalingsReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Scaling-law report");
    let _ = writeln!(
        out,
        "  delta  M  log_card  rho  packing_size  rho_K  pack_min  pack_max"
    );
    for p in &report.points {
        let _ = writeln!(
            out,
            "  {}  {}  {}  {}  {}  {}  {}  {}{}",
            fmt_float(p.delta),
            p.net_level,
            fmt_float(p.log_card),
            fmt_float(p.rho),
            p.packing_size.map_or("-".into(), |v| v.to_string()),
            p.rho_k.map_or("-".into(), fmt_float),
            p.packing_min.map_or("-".into(), fmt_float),
            p.packing_max.map_or("-".into(), fmt_float),
            p.packing_error
                .as_ref()
                .map_or(String::new(), |e| format!("  error: {e}"))
        );
    }
    for c in &report.checks {
        let _ = writeln!(
            out,
            "{}: slope = {} target = {} tolerance = {} -> {}",
            c.name,
            fmt_float(c.slope),
            fmt_float(c.target),
            fmt_float(c.tolerance),
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    let _ = writeln!(
        out,
        "rate_upper_exponent = {}",
        fmt_float(report.rate_upper_exponent)
    );
    let _ = writeln!(
        out,
        "rate_lower_exponent = {}",
        fmt_float(report.rate_lower_exponent)
    );
    let _ = writeln!(out, "rate_exponents_equal = {}", report.rates_equal);
    let _ = writeln!(
        out,
        "overall = {}",
        if report.all_pass { "PASS" } else { "FAIL" }
    );
    out
}

/// Writes raw CSV, aggregate CSV and the report into `dir`. Existing output
/// files are never overwritten unless `force` is set.
pub fn write_sweep_outputs(
    dir: &std::path::Path,
    result: &SweepResult,
    force: bool,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, content) in [
        ("raw.csv", raw_csv(result)),
        ("aggregate.csv", aggregate_csv(result)),
        ("report.txt", sweep_report(result)),
    ] {
        let path = dir.join(name);
        if path.exists() && !force {
            return Err(Error::Config(format!(
                "{} exists; pass --force to overwrite",
                path.display()
            )));
        }
        std::fs::write(&path, content)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    trait IntoDense {
        fn into_dense(self) -> ExperimentConfig;
    }

    impl IntoDense for ExperimentConfig {
        fn into_dense(mut self) -> ExperimentConfig {
            self.estimator = crate::config::EstimatorKind::Dense;
            self.n_grid = vec![256.0, 1024.0, 4096.0, 16384.0];
            self
        }
    }

    fn base_config(extra: &str) -> ExperimentConfig {
        let text = format!(
            r#"
[model]
kind = "white_noise"

[operator]
kind = "convolution"
q = 1.0

[ellipsoid]
d = 1
s = 2.0
L = 1.0

[truth]
kind = "fixed_trig"

[experiment]
n_grid = [256, 1024, 4096]
replications = 8
base_seed = 11
delta_rule = "optimal"
estimator = "net"
{extra}
"#
        );
        ExperimentConfig::from_toml_str(&text).unwrap()
    }

    #[test]
    fn slope_fit_examples() {
        let rows: Vec<(f64, f64)> = (1..=6).map(|k| {
            let x = 2f64.powi(k);
            (x, x.powf(-0.5))
        })
        .collect();
        let (slope, ci) = fit_loglog_slope(&rows).unwrap();
        assert!((slope + 0.5).abs() < 1e-12);
        assert!(ci < 1e-10);
        assert!(fit_loglog_slope(&rows[..2]).is_err());
        assert!(fit_loglog_slope(&[(1.0, 1.0), (2.0, -1.0), (3.0, 1.0)]).is_err());

        // ±1% perturbation keeps the truth inside the confidence band.
        let noisy: Vec<(f64, f64)> = rows
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| (x, y * (1.0 + 0.01 * if i % 2 == 0 { 1.0 } else { -1.0 })))
            .collect();
        let (s2, ci2) = fit_loglog_slope(&noisy).unwrap();
        assert!((s2 + 0.5).abs() <= ci2 + 1e-9, "slope {s2} ci {ci2}");
    }

    #[test]
    fn sweep_is_deterministic() {
        let cfg = base_config("");
        let a = run_mise_sweep(&cfg).unwrap();
        let b = run_mise_sweep(&cfg).unwrap();
        assert_eq!(raw_csv(&a), raw_csv(&b));
        assert_eq!(aggregate_csv(&a), aggregate_csv(&b));
        assert_eq!(sweep_report(&a), sweep_report(&b));
    }

    #[test]
    fn noiseless_rows_are_pure_bias() {
        let cfg = base_config("noiseless = true");
        let mut cfg = cfg;
        cfg.replications = 1;
        let result = run_mise_sweep(&cfg).unwrap();
        for r in &result.rows {
            assert!(
                r.mise_mean <= r.delta * r.delta,
                "noiseless MISE {} above delta^2 {}",
                r.mise_mean,
                r.delta * r.delta
            );
        }
    }

    #[test]
    fn bound_dominates_each_row() {
        let cfg = base_config("");
        let result = run_mise_sweep(&cfg).unwrap();
        assert!(result.rows.iter().all(|r| r.bound_pass));
    }

    #[test]
    fn mise_monotone_in_n_up_to_noise() {
        let cfg = base_config("");
        let result = run_mise_sweep(&cfg).unwrap();
        for w in result.rows.windows(2) {
            let slack = 2.0 * (w[0].mise_stderr + w[1].mise_stderr);
            assert!(
                w[1].mise_mean <= w[0].mise_mean + slack,
                "MISE increased beyond noise: {} -> {}",
                w[0].mise_mean,
                w[1].mise_mean
            );
        }
    }

    #[test]
    fn dense_estimator_sweep_runs_and_reports_eligibility() {
        let cfg = base_config("").into_dense();
        let result = run_mise_sweep(&cfg).unwrap();
        // s = 2, q = 1, d = 1: a + b/2 = 0.5 + 0.25 < 1, eligible.
        let (p, eligible) = result.dense_eligibility.unwrap();
        assert!((p - 0.75).abs() < 1e-12);
        assert!(eligible);
        assert!(result.rows.iter().all(|r| r.bound_pass));
        assert!(sweep_report(&result).contains("dense_eligible = true"));
        // The dense minimizer tracks the same rate band as the net.
        assert!(
            (result.slope + result.theory_exponent).abs() < 0.25,
            "dense slope {} vs theory {}",
            result.slope,
            result.theory_exponent
        );
    }

    #[test]
    fn rho_k_fast_path_matches_brute_force() {
        let spec = crate::seq::EllipsoidSpec::new(1, 2.0, 1.0).unwrap();
        let op = DiagonalOperator::convolution_power(1, 1.0).unwrap();
        let p = build_packing(spec, 0.05, 9).unwrap();
        let fast = p.rho_k_white_noise(&op).unwrap();
        let brute = crate::operator::rho_k(
            &op,
            &p.points(),
            crate::operator::NoiseModel::WhiteNoise,
            64,
        )
        .unwrap();
        assert!((fast - brute).abs() < 1e-12, "fast {fast} brute {brute}");
    }
}
